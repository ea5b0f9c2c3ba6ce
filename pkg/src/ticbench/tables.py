"""Context/target characteristic tables and generalization-scenario filters."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyContextError, FormatError, JoinError
from .features import standardize

SCENARIO_KINDS = (
    "known_model_unseen_data",
    "unknown_model_seen_data",
    "unknown_model_unseen_data",
)

SCENARIO_ALIASES = {"i": SCENARIO_KINDS[0], "ii": SCENARIO_KINDS[1], "iii": SCENARIO_KINDS[2]}


@dataclass
class CharacteristicRow:
    model_id: str
    dataset_id: str
    task: str
    window_id: str
    data_features: np.ndarray
    entropy_features: np.ndarray
    zero_shot_mase: float
    finetuned_mase: float | None = None

    def inputs(self):
        """Fixed column order: data features, entropy features, zero-shot."""
        return np.concatenate(
            [self.data_features, self.entropy_features, [self.zero_shot_mase]]
        )


@dataclass
class ContextTable:
    rows: list

    def __post_init__(self):
        if not self.rows:
            raise EmptyContextError("context table has no rows")
        if any(r.finetuned_mase is None for r in self.rows):
            raise ValueError("context rows must all be labeled")

    @property
    def X(self):
        return np.vstack([r.inputs() for r in self.rows])

    @property
    def y(self):
        return np.array([r.finetuned_mase for r in self.rows], dtype=float)


@dataclass
class TargetTable:
    rows: list

    def __post_init__(self):
        if not self.rows:
            raise EmptyContextError("target table has no rows")

    @property
    def X(self):
        return np.vstack([r.inputs() for r in self.rows])


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    target_model_id: str
    target_dataset_id: str
    task: str

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")


def build_rows(feature_index, profiles, records, selection, feature_ids):
    """Inner-join features, entropy profiles and performance records.

    feature_index: dict window_id -> full feature vector (catalog order).
    profiles: dict (model_id, dataset_id, task) -> length-6 entropy vector.
    selection: SelectionResult whose ids are projected out of the full vector.
    """
    col_idx = []
    for fid in selection.selected_feature_ids:
        if fid not in feature_ids:
            raise JoinError(f"selected feature {fid!r} not in catalog", offenders=[fid])
        col_idx.append(feature_ids.index(fid))
    offenders = []
    rows = []
    for rec in records:
        fv = feature_index.get(rec.window_id)
        prof = profiles.get((rec.model_id, rec.dataset_id, rec.task))
        if fv is None or prof is None:
            offenders.append(rec.key)
            continue
        rows.append(
            CharacteristicRow(
                model_id=rec.model_id,
                dataset_id=rec.dataset_id,
                task=rec.task,
                window_id=rec.window_id,
                data_features=np.asarray(fv, dtype=float)[col_idx],
                entropy_features=np.asarray(prof, dtype=float),
                zero_shot_mase=rec.zero_shot_mase,
                finetuned_mase=rec.finetuned_mase,
            )
        )
    if offenders:
        raise JoinError(
            f"{len(offenders)} records lack a feature vector or profile",
            offenders=offenders[:10],
        )
    rows.sort(key=lambda r: (r.model_id, r.dataset_id, r.window_id))
    return rows


def build_scenario_context(all_rows, spec):
    """Filter fully labeled rows per the generalization scenario.

    known_model_unseen_data: same model, other datasets.
    unknown_model_seen_data: other models, same dataset.
    unknown_model_unseen_data: other models, other datasets.
    Target-cell rows never appear in any scenario.
    """
    m, d = spec.target_model_id, spec.target_dataset_id
    if spec.kind == "known_model_unseen_data":
        keep = lambda r: r.model_id == m and r.dataset_id != d
    elif spec.kind == "unknown_model_seen_data":
        keep = lambda r: r.dataset_id == d and r.model_id != m
    else:
        keep = lambda r: r.model_id != m and r.dataset_id != d
    rows = [r for r in all_rows if r.task == spec.task and keep(r)]
    if not rows:
        raise EmptyContextError(f"scenario {spec.kind} produced no context rows")
    return ContextTable(rows=rows)


def truncate_context(ctx, max_rows, target, seed=0):
    """Keep the max_rows context rows nearest the target's mean feature vector.

    Distances use data features standardized by context statistics; ties
    break by original row order.
    """
    if max_rows < 1:
        raise ValueError("max_rows must be positive")
    if len(ctx.rows) <= max_rows:
        return ctx
    ctx_feats = np.vstack([r.data_features for r in ctx.rows])
    feats_s, stats = standardize(ctx_feats)
    tgt_feats = np.vstack([r.data_features for r in target.rows])
    tgt_center = ((tgt_feats - stats.mean) / stats.std).mean(axis=0)
    dist = np.linalg.norm(feats_s - tgt_center, axis=1)
    order = np.argsort(dist, kind="stable")[:max_rows]
    order.sort()
    return ContextTable(rows=[ctx.rows[i] for i in order])


def _table_header(n_features):
    return (
        ["model_id", "dataset_id", "task", "window_id"]
        + [f"f{i+1}" for i in range(n_features)]
        + [f"h{i+1}" for i in range(6)]
        + ["zero_shot", "finetuned"]
    )


def serialize_table(rows, path):
    if not rows:
        raise EmptyContextError("refusing to serialize an empty table")
    n_features = len(rows[0].data_features)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_table_header(n_features))
        for r in rows:
            ft = "" if r.finetuned_mase is None else repr(float(r.finetuned_mase))
            writer.writerow(
                [r.model_id, r.dataset_id, r.task, r.window_id]
                + [repr(float(v)) for v in r.data_features]
                + [repr(float(v)) for v in r.entropy_features]
                + [repr(float(r.zero_shot_mase)), ft]
            )


def deserialize_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyContextError(f"{path}: empty table file")
        n_features = sum(1 for h in header if h.startswith("f") and h[1:].isdigit())
        if header != _table_header(n_features):
            raise FormatError(f"{path}: unexpected table header")
        rows = []
        for line in reader:
            if not line:
                continue
            feats = np.array([float(v) for v in line[4 : 4 + n_features]])
            ent = np.array([float(v) for v in line[4 + n_features : 4 + n_features + 6]])
            zs = float(line[4 + n_features + 6])
            ft_raw = line[4 + n_features + 7]
            rows.append(
                CharacteristicRow(
                    model_id=line[0],
                    dataset_id=line[1],
                    task=line[2],
                    window_id=line[3],
                    data_features=feats,
                    entropy_features=ent,
                    zero_shot_mase=zs,
                    finetuned_mase=float(ft_raw) if ft_raw.strip() != "" else None,
                )
            )
    if not rows:
        raise EmptyContextError(f"{path}: table has no rows")
    return rows
