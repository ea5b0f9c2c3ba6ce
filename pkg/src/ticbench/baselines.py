"""Comparison transferability estimators: LogME, LFC, RegScore, a linear
meta-learner, and the zero-shot proxy.

LogME/LFC/RegScore operate on final-layer token embeddings aligned to the
forecast horizon; per-window values are averaged into one score per
(model, dataset, task). All emitted scores are higher-is-better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabelError, EmptyPredictionError, SingularSystemError
from .icl import ScoreRecord

PRECISION_CAP = 1e10


@dataclass
class EmbeddingLabelPair:
    window_id: str
    features: np.ndarray  # T x d final-layer tokens at horizon positions
    labels: np.ndarray  # length T horizon actuals

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 2:
            raise ValueError("features must be T x d with T >= 2")
        if len(self.labels) != self.features.shape[0]:
            raise ValueError(
                f"{self.window_id}: {self.features.shape[0]} feature rows vs "
                f"{len(self.labels)} labels"
            )


@dataclass
class MetaLearnerModel:
    weights: np.ndarray
    intercept: float
    input_mean: np.ndarray
    input_std: np.ndarray
    ridge_lambda: float
    training_row_count: int


def logme_evidence(F, y, alpha, beta):
    """Per-instance log marginal evidence of the linear model at (alpha, beta)."""
    n, d = F.shape
    A = alpha * np.eye(d) + beta * (F.T @ F)
    m = beta * np.linalg.solve(A, F.T @ y)
    resid = y - F @ m
    sign, logdet = np.linalg.slogdet(A)
    return (
        n / 2.0 * np.log(beta)
        + d / 2.0 * np.log(alpha)
        - n / 2.0 * np.log(2.0 * np.pi)
        - beta / 2.0 * float(resid @ resid)
        - alpha / 2.0 * float(m @ m)
        - 0.5 * logdet
    )


def logme(F, y, tol=1e-3, max_iters=100):
    """Per-sample maximum log evidence of a Bayesian linear model on (F, y).

    Alternating evidence maximization over the prior and noise precisions,
    both capped at 1e10 so the perfect-fit limit stays finite. Labels are
    centered first. Higher is better.
    """
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = F.shape
    if n < 2:
        raise ValueError("logme needs n >= 2")
    if float(np.var(y)) <= 0:
        raise DegenerateLabelError("labels have zero variance")
    y = y - y.mean()
    u, s, vt = np.linalg.svd(F, full_matrices=False)
    s2 = s**2
    z = u.T @ y  # projections onto left singular vectors
    y2 = float(y @ y)
    alpha, beta = 1.0, 1.0
    evidence = -np.inf
    for _ in range(max_iters):
        gamma = float(np.sum(beta * s2 / (alpha + beta * s2)))
        # posterior mean in the singular basis
        coef = beta * s * z / (alpha + beta * s2)
        m2 = float(np.sum(coef**2))
        resid2 = y2 - 2.0 * float(np.sum(coef * s * z)) + float(np.sum(coef**2 * s2))
        resid2 = max(resid2, 0.0)
        alpha = min(PRECISION_CAP, gamma / m2 if m2 > 0 else PRECISION_CAP)
        beta = min(PRECISION_CAP, (n - gamma) / resid2 if resid2 > 0 else PRECISION_CAP)
        new_evidence = logme_evidence(F, y, alpha, beta) / n
        if abs(new_evidence - evidence) < tol:
            evidence = new_evidence
            break
        evidence = new_evidence
    return float(evidence)


def lfc(F, y):
    """Centered-kernel alignment between the feature Gram matrix and the
    label outer product; 0 when either norm degenerates."""
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("lfc needs n >= 2")
    K = F @ F.T
    H = np.eye(n) - np.ones((n, n)) / n
    Kc = H @ K @ H
    yc = y - y.mean()
    Yc = np.outer(yc, yc)
    nk = float(np.linalg.norm(Kc))
    ny = float(np.linalg.norm(Yc))
    if nk < 1e-12 or ny < 1e-12:
        return 0.0
    return float(np.sum(Kc * Yc) / (nk * ny))


def regscore(F, y):
    """Minus the training MSE of a lightly ridge-regularized linear fit."""
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = F.shape
    if n < 2:
        raise ValueError("regscore needs n >= 2")
    lam = 1e-6 * float(np.trace(F.T @ F)) / d
    Fc = F - F.mean(axis=0)
    yc = y - y.mean()
    A = Fc.T @ Fc + lam * np.eye(d)
    try:
        w = np.linalg.solve(A, Fc.T @ yc)
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(Fc, yc, rcond=None)[0]
    resid = yc - Fc @ w
    return float(-np.mean(resid**2))


def baseline_score(method, pairs, model_id, dataset_id, task):
    """Average a per-window metric baseline into one ScoreRecord."""
    fns = {"logme": logme, "lfc": lfc, "regscore": regscore}
    fn = fns[method]
    values = []
    for pair in pairs:
        try:
            values.append(fn(pair.features, pair.labels))
        except DegenerateLabelError:
            continue
    if not values:
        raise EmptyPredictionError(f"{method}: no scorable windows")
    raw = float(np.mean(values))
    return ScoreRecord(
        model_id=model_id,
        dataset_id=dataset_id,
        task=task,
        score=raw,
        raw_mean_prediction=raw,
        n_target_rows=len(values),
    )


def meta_fit(ctx, ridge_lambda=1e-3):
    """Closed-form ridge regression of labels on standardized inputs."""
    X = ctx.X
    y = ctx.y
    n, d = X.shape
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Xs = (X - mean) / std
    A = Xs.T @ Xs + ridge_lambda * np.eye(d)
    if ridge_lambda <= 0 and np.linalg.matrix_rank(A) < d:
        raise SingularSystemError("normal equations are singular with lambda = 0")
    yc = y - y.mean()
    w = np.linalg.solve(A, Xs.T @ yc)
    intercept = float(y.mean())
    return MetaLearnerModel(
        weights=w,
        intercept=intercept,
        input_mean=mean,
        input_std=std,
        ridge_lambda=ridge_lambda,
        training_row_count=n,
    )


def meta_predict(model, tgt):
    Xs = (tgt.X - model.input_mean) / model.input_std
    return Xs @ model.weights + model.intercept


def zero_shot_score(records, model_id=None, dataset_id=None, task=None):
    """Minus the mean zero-shot MASE over the given records."""
    records = list(records)
    if not records:
        raise EmptyPredictionError("no records for zero-shot scoring")
    raw = float(np.mean([r.zero_shot_mase for r in records]))
    first = records[0]
    return ScoreRecord(
        model_id=model_id or first.model_id,
        dataset_id=dataset_id or first.dataset_id,
        task=task or first.task,
        score=-raw,
        raw_mean_prediction=raw,
        n_target_rows=len(records),
    )
