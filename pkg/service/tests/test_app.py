from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from qgqa_scorer.app import ServiceConfig, ServiceLoadError, create_app


class TestHealth:
    def test_ready(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        payload = response.json()
        assert payload["status"] == "ok"
        assert payload["model"] == "span-f1-qgqa/1"

    def test_loading_state_is_503(self):
        app = create_app(ServiceConfig())
        app.state.ready = False
        response = TestClient(app).get("/healthz")
        assert response.status_code == 503
        assert response.json()["status"] == "loading"

    def test_unknown_backend_refuses_to_start(self):
        with pytest.raises(ServiceLoadError, match="unknown scorer backend"):
            create_app(ServiceConfig(backend="bogus"))

    def test_cli_exits_nonzero_on_load_failure(self, monkeypatch):
        import qgqa_scorer.__main__ as entry

        monkeypatch.setenv("QE_BACKEND", "bogus")
        with pytest.raises(SystemExit) as exc:
            entry.main([])
        assert exc.value.code == 1


class TestScoreEndpoint:
    def test_counts_and_alignment(self, client):
        items = [
            {"graph": "(<S> Paris| <P> capital Of| <O> France)",
             "text": "Paris is the capital of France."},
            {"graph": "(<S> Paris| <P> capital Of| <O> France)",
             "text": "Berlin has museums."},
            {"graph": "(<S> Mount Fuji| <P> country| <O> Japan)",
             "text": "Mount Fuji is in Japan."},
        ]
        response = client.post("/v1/score", json={"items": items})
        assert response.status_code == 200
        scores = response.json()["scores"]
        assert len(scores) == 3
        assert scores[0] > scores[1]  # aligned beats unrelated at same graph
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_empty_items_rejected(self, client):
        response = client.post("/v1/score", json={"items": []})
        assert response.status_code == 422

    def test_batch_cap_413(self, client):
        items = [{"graph": "(<S> a| <P> b| <O> c)", "text": "c here"}] * 257
        response = client.post("/v1/score", json={"items": items})
        assert response.status_code == 413
        assert "max 256" in response.json()["detail"]

    def test_request_size_cap_413(self, client):
        big_text = "x" * (4 * 1024 * 1024 + 100)
        response = client.post(
            "/v1/score", json={"items": [{"graph": "(<S> a| <P> b| <O> c)", "text": big_text}]}
        )
        assert response.status_code == 413

    def test_malformed_body_422(self, client):
        response = client.post("/v1/score", json={"rows": []})
        assert response.status_code == 422

    def test_identical_requests_identical_scores(self, client):
        items = [
            {"graph": "(<S> Ada Lovelace| <P> field| <O> mathematics)",
             "text": "Ada Lovelace worked on early mathematics."}
        ]
        first = client.post("/v1/score", json={"items": items}).json()["scores"]
        second = client.post("/v1/score", json={"items": items}).json()["scores"]
        assert first == second
