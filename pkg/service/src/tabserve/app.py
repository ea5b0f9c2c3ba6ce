"""FastAPI application implementing the prediction wire protocol.

Endpoints:
  GET  /health  -> {"status": "ok", "backend": "<name>"}
  POST /predict -> {"y": [...]} for {"context": {"X", "y"}, "target": {"X"}}

Error mapping: malformed shapes / width mismatch -> 400, context larger
than the configured row cap -> 413, model failure -> 500. Every error body
is {"error": "<message>"}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .backends import BackendFailure, load_backend

DEFAULT_MAX_CONTEXT_ROWS = 10000


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    max_context_rows: int = DEFAULT_MAX_CONTEXT_ROWS
    seed: int = 0
    knn_k: int = 8


def _error(status, message):
    return JSONResponse(status_code=status, content={"error": message})


def _as_matrix(obj, name):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"{name} is not a numeric matrix")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _as_vector(obj, name):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"{name} is not a numeric vector")
    if arr.ndim != 1 or len(arr) < 1:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def create_app(config: ServiceConfig | None = None, backend=None) -> FastAPI:
    if config is None:
        config = ServiceConfig()
    if backend is None:
        backend = load_backend(seed=config.seed, knn_k=config.knn_k)
    app = FastAPI(title="tabserve", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.backend = backend

    @app.get("/health")
    def health():
        return {"status": "ok", "backend": backend.name}

    @app.post("/predict")
    async def predict(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        try:
            context = body["context"]
            target = body["target"]
            ctx_X = _as_matrix(context["X"], "context.X")
            ctx_y = _as_vector(context["y"], "context.y")
            tgt_X = _as_matrix(target["X"], "target.X")
        except (KeyError, TypeError):
            return _error(400, "body must contain context.X, context.y and target.X")
        except ValueError as exc:
            return _error(400, str(exc))
        if len(ctx_y) != len(ctx_X):
            return _error(
                400, f"context has {len(ctx_X)} rows but {len(ctx_y)} labels"
            )
        if ctx_X.shape[1] != tgt_X.shape[1]:
            return _error(
                400,
                f"width mismatch: context {ctx_X.shape[1]} vs target {tgt_X.shape[1]}",
            )
        if len(ctx_X) > config.max_context_rows:
            return _error(
                413,
                f"context has {len(ctx_X)} rows, cap is {config.max_context_rows}",
            )
        try:
            preds = backend.predict(ctx_X, ctx_y, tgt_X)
        except BackendFailure as exc:
            return _error(500, str(exc))
        return {"y": [float(v) for v in preds]}

    return app
