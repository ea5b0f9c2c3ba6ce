"""MASE, rank correlations, and ranking-report assembly.

Both correlation statistics return NaN when undefined (zero rank variance,
all pairs tied); callers treat NaN cells as skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScaleError, InsufficientDataError


def mase(forecast, actual, insample, m=1):
    """Mean absolute scaled error against the m-step seasonal-naive baseline."""
    forecast = np.asarray(forecast, dtype=float)
    actual = np.asarray(actual, dtype=float)
    insample = np.asarray(insample, dtype=float)
    if forecast.shape != actual.shape or forecast.size < 1:
        raise ValueError("forecast and actual must be non-empty and same length")
    if insample.size < m + 1:
        raise ValueError(f"insample needs at least {m + 1} points")
    numerator = float(np.mean(np.abs(actual - forecast)))
    denominator = float(np.mean(np.abs(insample[m:] - insample[:-m])))
    if denominator <= 0:
        raise DegenerateScaleError("constant in-sample series: naive error is zero")
    return numerator / denominator


def _rank_average_ties(x):
    """Ranks starting at 1, ties sharing the average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(a, b):
    """Spearman rho with average ranks for ties; NaN if either input is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b) or len(a) < 2:
        raise InsufficientDataError("spearman needs two equal-length vectors, n >= 2")
    ra = _rank_average_ties(a)
    rb = _rank_average_ties(b)
    sa = ra.std()
    sb = rb.std()
    if sa <= 0 or sb <= 0:
        return float("nan")
    return float(np.mean((ra - ra.mean()) * (rb - rb.mean())) / (sa * sb))


def weighted_kendall(scores, truth, weights="hyperbolic"):
    """Top-weighted Kendall correlation between scores and ground truth.

    Pair weight w_ij = 1/(r_i+1) + 1/(r_j+1) with r the zero-based rank of
    the ground-truth value in descending (best-first) order; ``uniform``
    gives the classic tau. Pairs tied in either vector are excluded; NaN
    when every pair is tied.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=float)
    n = len(scores)
    if len(truth) != n or n < 2:
        raise InsufficientDataError("weighted_kendall needs two equal-length vectors, n >= 2")
    # zero-based descending ranks of the truth (rank 0 = best); ties share
    # the average rank so weights stay symmetric under permutation
    r = _rank_average_ties(-truth) - 1.0
    num = 0.0
    den = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            ds = scores[i] - scores[j]
            dt = truth[i] - truth[j]
            if ds == 0 or dt == 0:
                continue
            if weights == "uniform":
                w = 1.0
            else:
                w = 1.0 / (r[i] + 1.0) + 1.0 / (r[j] + 1.0)
            den += w
            if ds * dt < 0:
                num += w
    if den <= 0:
        return float("nan")
    return 1.0 - 2.0 * num / den


@dataclass
class RankingCell:
    dataset_id: str
    task: str
    method: str
    tau_w: float
    spearman: float
    n_models: int


@dataclass
class RankingReport:
    cells: list = field(default_factory=list)

    def add(self, cell):
        self.cells.append(cell)

    def mean_tau(self, method=None, task=None):
        vals = [
            c.tau_w
            for c in self.cells
            if (method is None or c.method == method)
            and (task is None or c.task == task)
            and np.isfinite(c.tau_w)
        ]
        return float(np.mean(vals)) if vals else float("nan")

    def mean_spearman(self, method=None, task=None):
        vals = [
            c.spearman
            for c in self.cells
            if (method is None or c.method == method)
            and (task is None or c.task == task)
            and np.isfinite(c.spearman)
        ]
        return float(np.mean(vals)) if vals else float("nan")

    def to_json_obj(self):
        methods = sorted({c.method for c in self.cells})
        tasks = sorted({c.task for c in self.cells})
        return {
            "cells": [
                {
                    "dataset": c.dataset_id,
                    "task": c.task,
                    "method": c.method,
                    "tau_w": c.tau_w,
                    "spearman": c.spearman,
                    "n_models": c.n_models,
                }
                for c in self.cells
            ],
            "means": {
                m: {t: self.mean_tau(method=m, task=t) for t in tasks} for m in methods
            },
        }


def evaluate_ranking(score_records, truth_records, method="timetic", weights="hyperbolic"):
    """Correlate estimated scores with ground-truth goodness per (dataset, task).

    score_records: list of ScoreRecord. truth_records: PerformanceRecords
    with fine-tuned MASE; truth goodness is minus the per-model mean.
    Cells with fewer than two models are skipped with a warning flag.
    """
    import warnings

    truth_map = {}
    for rec in truth_records:
        if rec.finetuned_mase is None:
            continue
        truth_map.setdefault((rec.dataset_id, rec.task), {}).setdefault(
            rec.model_id, []
        ).append(rec.finetuned_mase)

    by_cell = {}
    for sr in score_records:
        by_cell.setdefault((sr.dataset_id, sr.task), {})[sr.model_id] = sr.score

    report = RankingReport()
    for (dataset_id, task), model_scores in sorted(by_cell.items()):
        truths = truth_map.get((dataset_id, task), {})
        models = sorted(m for m in model_scores if m in truths)
        if len(models) < 2:
            warnings.warn(
                f"cell ({dataset_id}, {task}) has {len(models)} models; skipped",
                RuntimeWarning,
            )
            continue
        scores = np.array([model_scores[m] for m in models])
        goodness = np.array([-float(np.mean(truths[m])) for m in models])
        report.add(
            RankingCell(
                dataset_id=dataset_id,
                task=task,
                method=method,
                tau_w=weighted_kendall(scores, goodness, weights=weights),
                spearman=spearman(scores, goodness),
                n_models=len(models),
            )
        )
    return report
