"""In-context prediction of fine-tuned performance and transferability scoring.

Two backends: a deterministic Gaussian-kernel smoother (reference_kernel)
and a remote HTTP service speaking the /predict wire protocol. Remote
failures are hard errors, never silent fallbacks to the local backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import requests

from .errors import BackendError, EmptyContextError, EmptyPredictionError

BANDWIDTH_SAMPLE_PAIRS = 2000
UNDERFLOW_LIMIT = 1e-300


@dataclass
class PredictorConfig:
    backend: str = "reference_kernel"
    bandwidth_multiplier: float = 1.0
    knn_fallback_k: int = 32
    endpoint_url: str | None = None
    timeout_ms: int = 30000
    seed: int = 0

    def __post_init__(self):
        if self.backend not in ("reference_kernel", "remote"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint_url:
            raise ValueError("remote backend requires endpoint_url")
        if self.bandwidth_multiplier <= 0:
            raise ValueError("bandwidth_multiplier must be positive")


@dataclass
class ScoreRecord:
    model_id: str
    dataset_id: str
    task: str
    score: float
    raw_mean_prediction: float
    n_target_rows: int


def _standardize_by_context(Xc, Xt):
    mean = Xc.mean(axis=0)
    std = Xc.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (Xc - mean) / std, (Xt - mean) / std


def _median_pairwise_distance(X, seed):
    n = len(X)
    total_pairs = n * (n - 1) // 2
    if total_pairs <= 0:
        return 0.0
    if total_pairs <= BANDWIDTH_SAMPLE_PAIRS:
        ii, jj = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=BANDWIDTH_SAMPLE_PAIRS)
        jj = rng.integers(0, n - 1, size=BANDWIDTH_SAMPLE_PAIRS)
        jj = np.where(jj >= ii, jj + 1, jj)  # avoid i == j
    d = np.linalg.norm(X[ii] - X[jj], axis=1)
    return float(np.median(d))


def _kernel_predict(Xc, yc, Xt, cfg):
    Xc_s, Xt_s = _standardize_by_context(Xc, Xt)
    sigma = cfg.bandwidth_multiplier * _median_pairwise_distance(Xc_s, cfg.seed)
    preds = np.empty(len(Xt_s))
    d2 = (
        np.sum(Xt_s**2, axis=1)[:, None]
        + np.sum(Xc_s**2, axis=1)[None, :]
        - 2.0 * Xt_s @ Xc_s.T
    )
    np.maximum(d2, 0.0, out=d2)
    k = min(cfg.knn_fallback_k, len(yc))
    for i in range(len(Xt_s)):
        if sigma > 0:
            w = np.exp(-d2[i] / (2.0 * sigma * sigma))
            total = w.sum()
        else:
            total = 0.0
        if total < UNDERFLOW_LIMIT:
            nearest = np.argpartition(d2[i], k - 1)[:k] if k < len(yc) else np.arange(len(yc))
            preds[i] = yc[nearest].mean()
        else:
            preds[i] = float(np.dot(w, yc) / total)
    return preds


def remote_predict(ctx_X, ctx_y, tgt_X, endpoint, timeout_ms=30000):
    """POST the context and target tables to the prediction service."""
    body = {
        "context": {"X": np.asarray(ctx_X).tolist(), "y": np.asarray(ctx_y).tolist()},
        "target": {"X": np.asarray(tgt_X).tolist()},
    }
    url = endpoint.rstrip("/") + "/predict"
    try:
        resp = requests.post(url, json=body, timeout=timeout_ms / 1000.0)
    except requests.RequestException as exc:
        raise BackendError(f"request to {url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise BackendError(f"{url} returned HTTP {resp.status_code}: {resp.text[:500]}")
    try:
        payload = resp.json()
        preds = np.asarray(payload["y"], dtype=float)
    except (ValueError, KeyError, TypeError) as exc:
        raise BackendError(f"{url} returned a malformed body: {exc}") from exc
    if preds.ndim != 1 or len(preds) != len(tgt_X):
        raise BackendError(
            f"{url} returned {preds.shape} predictions for {len(tgt_X)} target rows"
        )
    if not np.all(np.isfinite(preds)):
        raise BackendError(f"{url} returned non-finite predictions")
    return preds


def predict_in_context(ctx, tgt, cfg=None):
    """Predict fine-tuned performance for every target row (Nadaraya-Watson
    smoother over context-standardized inputs, or the remote service)."""
    if cfg is None:
        cfg = PredictorConfig()
    Xc = ctx.X
    Xt = tgt.X
    if Xc.shape[1] != Xt.shape[1]:
        raise ValueError(
            f"context/target column mismatch: {Xc.shape[1]} vs {Xt.shape[1]}"
        )
    if cfg.backend == "reference_kernel":
        return _kernel_predict(Xc, ctx.y, Xt, cfg)
    return remote_predict(Xc, ctx.y, Xt, cfg.endpoint_url, cfg.timeout_ms)


def transferability_score(predictions, model_id, dataset_id, task, aggregate="mean"):
    """Collapse per-window predictions into one higher-is-better score."""
    predictions = np.asarray(predictions, dtype=float)
    if predictions.size == 0:
        raise EmptyPredictionError("no predictions to score")
    if not np.all(np.isfinite(predictions)):
        raise ValueError("non-finite predictions")
    if aggregate == "median":
        raw = float(np.median(predictions))
    else:
        raw = float(np.mean(predictions))
    return ScoreRecord(
        model_id=model_id,
        dataset_id=dataset_id,
        task=task,
        score=-raw,
        raw_mean_prediction=raw,
        n_target_rows=int(predictions.size),
    )
