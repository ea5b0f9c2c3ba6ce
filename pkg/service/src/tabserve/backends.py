"""Tabular regression backends.

The preferred backend is the pretrained TabPFN regressor. When the tabpfn
package is not installed, a deterministic distance-weighted k-nearest-
neighbor regressor takes its place; /health reports which one is live so
clients can tell the difference.
"""

from __future__ import annotations

import numpy as np


class BackendFailure(Exception):
    """Raised when the live model cannot produce predictions."""


class KnnBackend:
    """Distance-weighted kNN regression on column-standardized inputs.

    Deterministic, dependency-free, and stateless across requests: the
    context is fitted per call, never cached.
    """

    name = "knn_fallback"

    def __init__(self, k=8):
        self.k = k

    def predict(self, ctx_X, ctx_y, tgt_X):
        ctx_X = np.asarray(ctx_X, dtype=float)
        ctx_y = np.asarray(ctx_y, dtype=float)
        tgt_X = np.asarray(tgt_X, dtype=float)
        mean = ctx_X.mean(axis=0)
        std = ctx_X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        Xc = (ctx_X - mean) / std
        Xt = (tgt_X - mean) / std
        k = min(self.k, len(ctx_y))
        preds = np.empty(len(Xt))
        for i, t in enumerate(Xt):
            d2 = np.sum((Xc - t) ** 2, axis=1)
            nearest = np.argpartition(d2, k - 1)[:k] if k < len(d2) else np.arange(len(d2))
            w = 1.0 / (np.sqrt(d2[nearest]) + 1e-12)
            preds[i] = float(np.dot(w, ctx_y[nearest]) / w.sum())
        if not np.all(np.isfinite(preds)):
            raise BackendFailure("non-finite predictions from kNN backend")
        return preds


class TabpfnBackend:
    name = "tabpfn"

    def __init__(self, seed=0):
        from tabpfn import TabPFNRegressor  # noqa: import guarded by load_backend

        self._cls = TabPFNRegressor
        self.seed = seed

    def predict(self, ctx_X, ctx_y, tgt_X):
        try:
            model = self._cls(random_state=self.seed)
            model.fit(np.asarray(ctx_X, dtype=float), np.asarray(ctx_y, dtype=float))
            preds = np.asarray(model.predict(np.asarray(tgt_X, dtype=float)), dtype=float)
        except Exception as exc:  # surface as a 500, never a silent fallback
            raise BackendFailure(f"tabpfn inference failed: {exc}") from exc
        if not np.all(np.isfinite(preds)):
            raise BackendFailure("non-finite predictions from tabpfn")
        return preds


def load_backend(seed=0, knn_k=8):
    """TabPFN when importable, otherwise the deterministic kNN stand-in."""
    try:
        return TabpfnBackend(seed=seed)
    except ImportError:
        return KnnBackend(k=knn_k)
