"""Greedy feature selection driven by the within-cluster variance proxy.

Pipeline per evaluation: standardize -> 2-component PCA -> seeded k-means.
The proxy ("total variance") is the unweighted mean over non-empty clusters
of the population variance of the target values inside each cluster.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateEntropyError, InsufficientDataError
from .features import standardize

DEFAULT_EPSILON = 0.001


@dataclass
class PartitionConfig:
    n_clusters: int = 100
    pca_components: int = 2
    kmeans_max_iters: int = 100
    kmeans_tol: float = 1e-6
    seed: int = 0
    min_points_per_cluster_guard: int = 5

    def effective_k(self, n):
        return min(self.n_clusters, max(1, n // self.min_points_per_cluster_guard))


@dataclass
class SelectionResult:
    selected_feature_ids: list
    totalvariance_trace: list
    epsilon: float
    catalog_version: str = ""

    def to_json(self):
        return json.dumps(
            {
                "selected": self.selected_feature_ids,
                "trace": self.totalvariance_trace,
                "epsilon": self.epsilon,
                "catalog_version": self.catalog_version,
            }
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(
            selected_feature_ids=obj["selected"],
            totalvariance_trace=obj["trace"],
            epsilon=obj["epsilon"],
            catalog_version=obj.get("catalog_version", ""),
        )


def pca2(X):
    """Project onto the top-2 eigenvectors of the sample covariance.

    Sign convention: the largest-magnitude entry of each eigenvector is
    positive. Rank-0 input yields an all-zero projection with a warning.
    """
    X = np.asarray(X, dtype=float)
    n, f = X.shape
    if n < 2:
        raise InsufficientDataError("pca2 needs n >= 2")
    Xc = X - X.mean(axis=0)
    if not np.any(Xc):
        warnings.warn("pca2: rank-0 input, returning zeros", RuntimeWarning)
        return np.zeros((n, 2))
    cov = (Xc.T @ Xc) / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][: min(2, f)]
    proj = np.zeros((n, 2))
    for out_col, j in enumerate(order):
        v = eigvecs[:, j]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        proj[:, out_col] = Xc @ v
    return proj


def _kmeans_pp_init(points, k, rng):
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = points[rng.integers(n)]
        else:
            probs = d2 / total
            centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _kmeans(points, k, cfg):
    rng = np.random.default_rng(cfg.seed)
    centers = _kmeans_pp_init(points, k, rng)
    for _ in range(cfg.kmeans_max_iters):
        d2 = (
            np.sum(points**2, axis=1)[:, None]
            + np.sum(centers**2, axis=1)[None, :]
            - 2.0 * points @ centers.T
        )
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=k)
        sums = np.empty((k, points.shape[1]))
        for dim in range(points.shape[1]):
            sums[:, dim] = np.bincount(labels, weights=points[:, dim], minlength=k)
        new_centers = centers.copy()
        nonempty = counts > 0
        new_centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not np.all(nonempty):
            # empty cluster: re-seed to the point farthest from its center
            farthest = int(np.argmax(np.min(d2, axis=1)))
            new_centers[~nonempty] = points[farthest]
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if shift < cfg.kmeans_tol:
            break
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        + np.sum(centers**2, axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    return np.argmin(d2, axis=1)


def partition_equivalence_classes(X, cfg=None):
    """Cluster rows into equivalence classes: standardize -> pca2 -> k-means."""
    if cfg is None:
        cfg = PartitionConfig()
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 1:
        raise InsufficientDataError("empty matrix")
    k = cfg.effective_k(n)
    if k <= 1 or n == 1:
        return np.zeros(n, dtype=int)
    Xs, _ = standardize(X)
    proj = pca2(Xs) if n >= 2 else np.zeros((n, 2))
    return _kmeans(proj, k, cfg)


def total_variance(X_sel, y, cfg=None, labels=None):
    """Mean over non-empty clusters of the population variance of y within each.

    labels overrides the clustering (used by oracle tests)."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise InsufficientDataError("total_variance needs n >= 2")
    if labels is None:
        labels = partition_equivalence_classes(X_sel, cfg)
    variances = []
    for lab in np.unique(labels):
        vals = y[labels == lab]
        variances.append(float(np.var(vals)))
    return float(np.mean(variances))


def weighted_total_variance(y, labels):
    """Size-weighted variant sum_k (n_k/n) Var(y|k); law-of-total-variance oracle."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    total = 0.0
    for lab in np.unique(labels):
        vals = y[labels == lab]
        total += len(vals) / n * float(np.var(vals))
    return total


def greedy_select(X_all, y, feature_ids=None, epsilon=DEFAULT_EPSILON, cfg=None,
                  max_features=None, catalog_version=""):
    """Forward selection minimizing the cluster-variance proxy at each step.

    Stops when the best improvement is below epsilon or max_features is
    reached. Ties break toward the lowest feature index.
    """
    if cfg is None:
        cfg = PartitionConfig()
    X_all = np.asarray(X_all, dtype=float)
    n, f = X_all.shape
    if f < 1 or n < 2:
        raise InsufficientDataError("greedy_select needs F >= 1 and n >= 2")
    if feature_ids is None:
        feature_ids = [f"f{i}" for i in range(f)]
    selected: list[int] = []
    trace: list[float] = []
    tv_curr = np.inf
    while True:
        if max_features is not None and len(selected) >= max_features:
            break
        best_tv = np.inf
        best_idx = None
        for j in range(f):
            if j in selected:
                continue
            tv = total_variance(X_all[:, selected + [j]], y, cfg)
            if tv < best_tv - 1e-15:
                best_tv = tv
                best_idx = j
        if best_idx is None:
            break
        improvement = tv_curr - best_tv
        if not (improvement >= epsilon):
            break
        selected.append(best_idx)
        trace.append(best_tv)
        tv_curr = best_tv
    return SelectionResult(
        selected_feature_ids=[feature_ids[j] for j in selected],
        totalvariance_trace=trace,
        epsilon=epsilon,
        catalog_version=catalog_version,
    )


def information_content(X_subset, X_full, k=3, seed=0):
    """Ratio of joint entropies of standardized subset vs full feature set."""
    from .entropy import kl_entropy

    X_full = np.asarray(X_full, dtype=float)
    if X_full.shape[0] < 50:
        raise InsufficientDataError("information_content needs n >= 50")
    X_subset = np.asarray(X_subset, dtype=float)
    if X_subset.ndim != 2 or X_subset.shape[1] == 0:
        return 0.0
    if X_subset.shape[1] > X_full.shape[1]:
        raise ValueError("subset has more columns than the full set")
    full_s, _ = standardize(X_full)
    h_full = kl_entropy(full_s, k=k, seed=seed)
    if h_full <= 0:
        raise DegenerateEntropyError(f"joint entropy of full set is {h_full}")
    sub_s, _ = standardize(X_subset)
    return kl_entropy(sub_s, k=k, seed=seed) / h_full
