from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from casebook import load_casebook


class _ScorerHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/healthz":
            self._reply(200, {"status": "ok", "model": self.server.model_id})
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/v1/score":
            self._reply(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        request = json.loads(self.rfile.read(length).decode("utf-8"))
        items = request.get("items", [])
        self.server.batch_sizes.append(len(items))
        if self.server.fail_next > 0:
            self.server.fail_next -= 1
            self._reply(500, {"error": "injected failure"})
            return
        scores = [self.server.score_fn(item) for item in items]
        if self.server.drop_last_score:
            scores = scores[:-1]
        self._reply(200, {"scores": scores})


class MockScorerServer:
    """Local HTTP server speaking the scoring wire protocol."""

    def __init__(self, score_fn, model_id="mock-replay"):
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _ScorerHandler)
        self._server.score_fn = score_fn
        self._server.model_id = model_id
        self._server.batch_sizes = []
        self._server.fail_next = 0
        self._server.drop_last_score = False
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    @property
    def batch_sizes(self) -> list[int]:
        return self._server.batch_sizes

    def fail_next(self, times: int) -> None:
        self._server.fail_next = times

    def drop_last_score(self, enabled: bool = True) -> None:
        self._server.drop_last_score = enabled

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def scorer_server_factory():
    servers: list[MockScorerServer] = []

    def start(score_fn, model_id="mock-replay") -> MockScorerServer:
        server = MockScorerServer(score_fn, model_id)
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.close()


@pytest.fixture
def casebook_server(scorer_server_factory):
    """Scorer server replaying the casebook's canned scores by (graph, text)."""
    table = {(row["graph"], row["text"]): row["score"] for row in load_casebook()}

    def score_fn(item: dict) -> float:
        return table[(item["graph"], item["text"])]

    return scorer_server_factory(score_fn)
