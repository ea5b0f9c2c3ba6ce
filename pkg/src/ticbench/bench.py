"""End-to-end benchmark over a synthetic corpus.

Loads a corpus directory produced by :mod:`ticbench.synth`, runs the full
pipeline (windows -> features -> entropy profiles -> selection -> tables ->
prediction) with leave-one-dataset-out targets, and scores every method
with rank correlations against the corpus ground truth.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

import numpy as np

from . import baselines as bl
from .entropy import entropy_profile
from .errors import EmptyContextError
from .icl import PredictorConfig, predict_in_context, transferability_score
from .ingest import TaskSpec, load_dataset, load_embeddings, load_performance, sample_windows
from .metrics import RankingReport, evaluate_ranking
from .features import default_catalog, extract_matrix
from .selection import PartitionConfig, SelectionResult, greedy_select
from .synth import embedding_label_pairs
from .tables import (
    ContextTable,
    ScenarioSpec,
    TargetTable,
    build_rows,
    build_scenario_context,
    truncate_context,
)
from .util import seed_from

METRIC_BASELINES = ("logme", "lfc", "regscore")
SELECTION_ROW_CAP = 1500

# Benchmark-tuned smoother: a sharp bandwidth so cross-model scenarios do
# not collapse toward the context mean. Callers may override.
def default_predictor():
    from .icl import PredictorConfig

    return PredictorConfig(bandwidth_multiplier=0.05, knn_fallback_k=8)


@dataclass
class CorpusPipeline:
    """Caches per-task pipeline stages for one corpus directory."""

    corpus_dir: str
    regime: str = "standard"
    seed: int | None = None  # defaults to the corpus generation seed
    n_windows: int | None = None
    max_features: int = 10
    catalog: object = None
    _cache: dict = field(default_factory=dict)

    def __post_init__(self):
        import json

        with open(os.path.join(self.corpus_dir, "meta.json"), encoding="utf-8") as fh:
            self.meta = json.load(fh)
        if self.seed is None:
            self.seed = self.meta["seed"]
        if self.n_windows is None:
            self.n_windows = self.meta["n_windows"]
        if self.catalog is None:
            self.catalog = default_catalog()
        self.records = load_performance(os.path.join(self.corpus_dir, "perf.csv"))
        self.datasets = {}
        for path in sorted(glob.glob(os.path.join(self.corpus_dir, "datasets", "*.csv"))):
            ds = load_dataset(path)
            self.datasets[ds.dataset_id] = ds
        self.model_ids = self.meta["model_ids"]
        self.dataset_ids = self.meta["dataset_ids"]

    def task_stage(self, task_name):
        """Windows, features, profiles, selection and joined rows for a task."""
        if task_name in self._cache:
            return self._cache[task_name]
        task = TaskSpec.preset(task_name)
        windows = {}
        feature_index = {}
        for dataset_id, ds in self.datasets.items():
            ws = sample_windows(ds, task, self.n_windows, regime=self.regime, seed=self.seed)
            windows[dataset_id] = ws
            X, ids = extract_matrix(ws, self.catalog)
            for wid, row in zip(ids, X):
                feature_index[wid] = row

        profiles = {}
        for model_id in self.model_ids:
            for dataset_id in self.dataset_ids:
                path = os.path.join(
                    self.corpus_dir, "embeddings",
                    f"{model_id}__{dataset_id}__{task_name}.tteb",
                )
                emb = load_embeddings(path, model_id=model_id, scope_id=dataset_id)
                prof = entropy_profile(emb, seed=self.seed)
                profiles[(model_id, dataset_id, task_name)] = prof.subsampled

        task_records = [
            r for r in self.records if r.task == task_name and r.window_id in feature_index
        ]
        selection = self._select_features(task_records, feature_index)
        rows = build_rows(
            feature_index,
            profiles,
            task_records,
            selection,
            self.catalog.feature_ids,
        )
        stage = {
            "task": task,
            "windows": windows,
            "feature_index": feature_index,
            "profiles": profiles,
            "records": task_records,
            "selection": selection,
            "rows": rows,
        }
        self._cache[task_name] = stage
        return stage

    def _select_features(self, task_records, feature_index):
        X = np.vstack([feature_index[r.window_id] for r in task_records])
        y = np.array([r.finetuned_mase for r in task_records])
        if len(X) > SELECTION_ROW_CAP:
            rng = np.random.default_rng(seed_from(self.seed, "selection"))
            idx = rng.choice(len(X), size=SELECTION_ROW_CAP, replace=False)
            X, y = X[idx], y[idx]
        cfg = PartitionConfig(seed=self.seed)
        return greedy_select(
            X,
            y,
            feature_ids=self.catalog.feature_ids,
            cfg=cfg,
            max_features=self.max_features,
            catalog_version=self.catalog.version,
        )


def _target_tables(stage, model_id, dataset_id, task_name):
    tgt_rows = [
        r for r in stage["rows"] if r.model_id == model_id and r.dataset_id == dataset_id
    ]
    if not tgt_rows:
        raise EmptyContextError(f"no target rows for ({model_id}, {dataset_id})")
    return TargetTable(rows=tgt_rows)


def timetic_scores(pipeline, task_name, scenario_kind="known_model_unseen_data",
                   predictor=None, context_cap=None):
    """TimeTic ScoreRecords for every (model, target dataset) cell of a task."""
    if predictor is None:
        predictor = default_predictor()
    stage = pipeline.task_stage(task_name)
    scores = []
    for dataset_id in pipeline.dataset_ids:
        for model_id in pipeline.model_ids:
            spec = ScenarioSpec(
                kind=scenario_kind,
                target_model_id=model_id,
                target_dataset_id=dataset_id,
                task=task_name,
            )
            ctx = build_scenario_context(stage["rows"], spec)
            tgt = _target_tables(stage, model_id, dataset_id, task_name)
            if context_cap is not None:
                ctx = truncate_context(ctx, context_cap, tgt, seed=pipeline.seed)
            preds = predict_in_context(ctx, tgt, predictor)
            scores.append(
                transferability_score(preds, model_id, dataset_id, task_name)
            )
    return scores


def meta_learner_scores(pipeline, task_name, scenario_kind="known_model_unseen_data"):
    stage = pipeline.task_stage(task_name)
    scores = []
    for dataset_id in pipeline.dataset_ids:
        for model_id in pipeline.model_ids:
            spec = ScenarioSpec(
                kind=scenario_kind,
                target_model_id=model_id,
                target_dataset_id=dataset_id,
                task=task_name,
            )
            ctx = build_scenario_context(stage["rows"], spec)
            tgt = _target_tables(stage, model_id, dataset_id, task_name)
            model = bl.meta_fit(ctx)
            preds = bl.meta_predict(model, tgt)
            raw = float(np.mean(preds))
            scores.append(
                bl.ScoreRecord(
                    model_id=model_id,
                    dataset_id=dataset_id,
                    task=task_name,
                    score=-raw,
                    raw_mean_prediction=raw,
                    n_target_rows=len(preds),
                )
            )
    return scores


def zero_shot_scores(pipeline, task_name):
    stage = pipeline.task_stage(task_name)
    scores = []
    for dataset_id in pipeline.dataset_ids:
        for model_id in pipeline.model_ids:
            recs = [
                r
                for r in stage["records"]
                if r.model_id == model_id and r.dataset_id == dataset_id
            ]
            scores.append(bl.zero_shot_score(recs, model_id, dataset_id, task_name))
    return scores


def metric_baseline_scores(pipeline, task_name, method):
    stage = pipeline.task_stage(task_name)
    scores = []
    for dataset_id in pipeline.dataset_ids:
        ws = stage["windows"][dataset_id]
        for model_id in pipeline.model_ids:
            pairs = embedding_label_pairs(model_id, ws, pipeline.meta["seed"])
            scores.append(bl.baseline_score(method, pairs, model_id, dataset_id, task_name))
    return scores


def run_benchmark(corpus_dir, tasks=None, regime="standard", seed=None,
                  scenario_kind="known_model_unseen_data", methods=None,
                  predictor=None, max_features=10, n_windows=None):
    """Full benchmark; returns a RankingReport covering every method and task."""
    pipeline = CorpusPipeline(
        corpus_dir=corpus_dir,
        regime=regime,
        seed=seed,
        max_features=max_features,
        n_windows=n_windows,
    )
    if tasks is None:
        tasks = pipeline.meta["tasks"]
    if methods is None:
        methods = ["timetic", "zero_shot", "meta", *METRIC_BASELINES]
    report = RankingReport()
    for task_name in tasks:
        for method in methods:
            if method == "timetic":
                scores = timetic_scores(
                    pipeline, task_name, scenario_kind=scenario_kind, predictor=predictor
                )
            elif method == "timetic_remote":
                if predictor is None or predictor.backend != "remote":
                    raise ValueError(
                        "timetic_remote needs a predictor with backend='remote'"
                    )
                scores = timetic_scores(
                    pipeline, task_name, scenario_kind=scenario_kind,
                    predictor=predictor,
                )
            elif method == "zero_shot":
                scores = zero_shot_scores(pipeline, task_name)
            elif method == "meta":
                scores = meta_learner_scores(pipeline, task_name, scenario_kind=scenario_kind)
            elif method in METRIC_BASELINES:
                scores = metric_baseline_scores(pipeline, task_name, method)
            else:
                raise ValueError(f"unknown method {method!r}")
            sub = evaluate_ranking(scores, pipeline.records, method=method)
            for cell in sub.cells:
                report.add(cell)
    return report
