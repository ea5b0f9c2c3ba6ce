"""kNN differential entropy estimation and per-model entropy profiles.

The estimator is the Kozachenko-Leonenko form with Euclidean distances and
natural log. Defaults (k=3, nats) are configuration, not dogma; both are
exposed on every entry point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .errors import InsufficientSamplesError

DEFAULT_K = 3
DEFAULT_TOKEN_CAP = 10000
PROFILE_LEN = 6

# Above this sample count the kd-tree path is used; it is validated against
# the brute-force path in the test suite before being trusted here.
_KDTREE_THRESHOLD = 512


@dataclass
class EntropyProfile:
    model_id: str
    scope_id: str
    raw: np.ndarray
    subsampled: np.ndarray
    estimator_k: int
    token_cap: int


def _unit_ball_log_volume(d):
    return (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0 + 1.0)


def _jitter_duplicates(points, seed):
    """Seeded jitter applied only when duplicate rows exist."""
    unique = np.unique(points, axis=0)
    if len(unique) == len(points):
        return points
    rng = np.random.default_rng(seed)
    scale = 1e-10 * (points.std(axis=0) + 1e-30)
    return points + rng.standard_normal(points.shape) * scale


def _knn_distances_brute(points, k):
    n = len(points)
    dists = np.empty(n)
    chunk = max(1, int(2e7) // max(1, n))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        block = points[lo:hi]
        d2 = (
            np.sum(block**2, axis=1)[:, None]
            + np.sum(points**2, axis=1)[None, :]
            - 2.0 * block @ points.T
        )
        np.maximum(d2, 0.0, out=d2)
        part = np.partition(d2, k, axis=1)[:, : k + 1]
        part.sort(axis=1)
        dists[lo:hi] = np.sqrt(part[:, k])  # index k skips the self distance
    return dists


def _knn_distances_kdtree(points, k):
    tree = cKDTree(points)
    d, _ = tree.query(points, k=k + 1)
    return d[:, k]


def kl_entropy(points, k=DEFAULT_K, seed=0, method="auto"):
    """Differential entropy estimate in nats from the k-th neighbor distances.

    H = psi(N) - psi(k) + ln V_d + (d/N) * sum_i ln eps_i, with eps_i the
    Euclidean distance from point i to its k-th nearest neighbor (self
    excluded) and V_d the d-dimensional unit-ball volume. Duplicate points
    are de-conflicted by seeded jitter of magnitude 1e-10 * column std.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] == 1 and points.shape[0] == 1:
        points = points.reshape(-1, 1)
    n, d = points.shape
    if n <= k:
        raise InsufficientSamplesError(f"need more than k={k} points, got {n}")
    if not np.all(np.isfinite(points)):
        raise ValueError("kl_entropy: non-finite input")
    points = _jitter_duplicates(points, seed)
    if method == "auto":
        method = "kdtree" if n >= _KDTREE_THRESHOLD else "brute"
    if method == "brute":
        eps = _knn_distances_brute(points, k)
    elif method == "kdtree":
        eps = _knn_distances_kdtree(points, k)
    else:
        raise ValueError(f"unknown method {method!r}")
    eps = np.maximum(eps, 1e-300)
    return float(
        digamma(n) - digamma(k) + _unit_ball_log_volume(d) + (d / n) * np.sum(np.log(eps))
    )


def _cap_tokens(layer, token_cap, rng):
    if layer.shape[0] <= token_cap:
        return layer
    idx = rng.choice(layer.shape[0], size=token_cap, replace=False)
    idx.sort()
    return layer[idx]


def entropy_profile(emb, token_cap=DEFAULT_TOKEN_CAP, k=DEFAULT_K, seed=0):
    """Per-layer entropy of token embeddings, capped at token_cap tokens/layer."""
    raw = []
    for i, layer in enumerate(emb.layers):
        rng = np.random.default_rng((seed, i))
        capped = _cap_tokens(np.asarray(layer, dtype=float), token_cap, rng)
        if capped.shape[0] <= k:
            raise InsufficientSamplesError(
                f"layer {i}: {capped.shape[0]} tokens <= k={k}", layer=i
            )
        raw.append(kl_entropy(capped, k=k, seed=seed))
    raw = np.asarray(raw)
    return EntropyProfile(
        model_id=emb.model_id,
        scope_id=emb.scope_id,
        raw=raw,
        subsampled=subsample_profile(raw),
        estimator_k=k,
        token_cap=token_cap,
    )


def subsample_profile(raw):
    """Reduce a length-N profile to length 6, keeping first and last layers."""
    raw = np.asarray(raw, dtype=float)
    n = len(raw)
    if n < 1:
        raise ValueError("empty profile")
    positions = np.arange(PROFILE_LEN) * (n - 1) / (PROFILE_LEN - 1)
    if n >= PROFILE_LEN:
        idx = np.rint(positions).astype(int)
        return raw[idx]
    return np.interp(positions, np.arange(n), raw)


PROFILE_CSV_HEADER = "model_id,scope_id,h1,h2,h3,h4,h5,h6,raw_len,k,token_cap"


def save_profiles(profiles, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PROFILE_CSV_HEADER + "\n")
        for p in profiles:
            vals = ",".join(repr(float(v)) for v in p.subsampled)
            fh.write(
                f"{p.model_id},{p.scope_id},{vals},{len(p.raw)},{p.estimator_k},{p.token_cap}\n"
            )


def load_profiles(path):
    from .errors import FormatError

    profiles = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != PROFILE_CSV_HEADER:
            raise FormatError(f"{path}: bad profile header")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            sub = np.array([float(v) for v in parts[2:8]])
            profiles.append(
                EntropyProfile(
                    model_id=parts[0],
                    scope_id=parts[1],
                    raw=sub.copy(),
                    subsampled=sub,
                    estimator_k=int(parts[9]),
                    token_cap=int(parts[10]),
                )
            )
    return profiles
