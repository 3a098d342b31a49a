"""HTTP service speaking the graph-text consistency scoring protocol.

POST /v1/score: {"items": [{"graph": "<linearized triplets>", "text": "..."}]}
answers {"scores": [f, ...]} index-aligned, each clamped to [0, 1].
GET /healthz reports readiness and the pinned model id.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .scorer import BACKENDS

MAX_BATCH_ITEMS = 256
MAX_REQUEST_BYTES = 4 * 1024 * 1024


class ServiceLoadError(RuntimeError):
    """The configured backend cannot be constructed; refuse to start."""


@dataclass(frozen=True)
class ServiceConfig:
    backend: str = "span-f1"
    deterministic: bool = True
    device: str = "cpu"
    max_batch_items: int = MAX_BATCH_ITEMS
    max_request_bytes: int = MAX_REQUEST_BYTES

    @staticmethod
    def from_env(env: dict[str, str] | None = None) -> "ServiceConfig":
        env = os.environ if env is None else env
        return ServiceConfig(
            backend=env.get("QE_BACKEND", "span-f1"),
            deterministic=env.get("QE_DETERMINISTIC", "1") not in ("0", "false", "no"),
            device=env.get("QE_DEVICE", "cpu"),
        )


class ScoreItem(BaseModel):
    graph: str
    text: str


class ScoreRequest(BaseModel):
    items: list[ScoreItem]


class ScoreResponse(BaseModel):
    scores: list[float]


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    try:
        scorer = BACKENDS[config.backend]()
    except KeyError:
        raise ServiceLoadError(
            f"unknown scorer backend {config.backend!r}; available: {sorted(BACKENDS)}"
        ) from None

    app = FastAPI(title="qgqa-scorer")
    app.state.scorer = scorer
    app.state.config = config
    app.state.ready = True

    @app.middleware("http")
    async def reject_oversize(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > config.max_request_bytes:
            return JSONResponse(
                status_code=413,
                content={"error": f"request exceeds {config.max_request_bytes} bytes"},
            )
        return await call_next(request)

    @app.get("/healthz")
    def healthz():
        if not app.state.ready:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {
            "status": "ok",
            "model": scorer.model_id,
            "deterministic": config.deterministic,
        }

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        if not request.items:
            raise HTTPException(status_code=422, detail="items must be non-empty")
        if len(request.items) > config.max_batch_items:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.items)} exceeds max {config.max_batch_items} items",
            )
        values = scorer.score_items(
            [{"graph": item.graph, "text": item.text} for item in request.items]
        )
        clamped = [min(1.0, max(0.0, float(v))) for v in values]
        return ScoreResponse(scores=clamped)

    return app
