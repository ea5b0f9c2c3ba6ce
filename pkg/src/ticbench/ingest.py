"""Dataset, embedding and performance-record loading plus window sampling.

File formats
------------
Time-series CSV: UTF-8, header ``series_id[,timestamp],value``.
TTEB embeddings: little-endian binary; magic ``TTEB``; u32 version=1;
u32 n_layers; per layer u32 T, u32 d, then T*d float32 row-major.
Performance CSV: header
``model_id,dataset_id,task,window_id,zero_shot_mase,finetuned_mase``
(the last column may be empty).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateRecordError,
    EmptySampleError,
    FormatError,
    ParseError,
    RangeError,
)

TTEB_MAGIC = b"TTEB"
TTEB_VERSION = 1

TASK_PRESETS = {
    "short": (256, 64),
    "medium": (1024, 256),
    "long": (2048, 512),
}


@dataclass(frozen=True)
class TaskSpec:
    name: str
    context_len: int
    horizon: int

    def __post_init__(self):
        if self.context_len < 1 or self.horizon < 1:
            raise ValueError("context_len and horizon must be positive")

    @classmethod
    def preset(cls, name):
        if name not in TASK_PRESETS:
            raise ValueError(f"unknown task preset {name!r}")
        ctx, hor = TASK_PRESETS[name]
        return cls(name=name, context_len=ctx, horizon=hor)


@dataclass
class SeriesDataset:
    dataset_id: str
    series: list  # list of (series_id, np.ndarray values)
    frequency_label: str = ""

    def __post_init__(self):
        seen = set()
        for sid, values in self.series:
            if sid in seen:
                raise FormatError(f"duplicate series_id {sid!r}")
            seen.add(sid)
            if len(values) < 1:
                raise FormatError(f"series {sid!r} is empty")


@dataclass(frozen=True)
class Window:
    window_id: str
    series_id: str
    start: int
    context: np.ndarray
    horizon_actuals: np.ndarray

    @staticmethod
    def make_id(dataset_id, series_id, start, task_name):
        return f"{dataset_id}/{series_id}/{start}/{task_name}"


@dataclass
class LayerEmbeddings:
    model_id: str
    scope_id: str
    layers: list  # ordered list of (T_i, d_i) float arrays

    def __post_init__(self):
        if not self.layers:
            raise FormatError("LayerEmbeddings needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.ndim != 2 or layer.shape[0] < 2 or layer.shape[1] < 1:
                raise FormatError(f"layer {i} has invalid shape {layer.shape}")
            if not np.all(np.isfinite(layer)):
                raise FormatError(f"layer {i} contains non-finite entries")


@dataclass(frozen=True)
class PerformanceRecord:
    model_id: str
    dataset_id: str
    task: str
    window_id: str
    zero_shot_mase: float
    finetuned_mase: float | None = None

    @property
    def key(self):
        return (self.model_id, self.dataset_id, self.task, self.window_id)


def load_dataset(path, dataset_id=None, frequency_label=""):
    """Load a time-series CSV into a SeriesDataset, preserving row order."""
    groups: dict[str, list] = {}
    order: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header == ["series_id", "value"]:
            value_col = 1
        elif header == ["series_id", "timestamp", "value"]:
            value_col = 2
        else:
            raise FormatError(
                f"{path}: expected header series_id[,timestamp],value, got {header}"
            )
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {rownum} has {len(row)} fields", row=rownum)
            sid = row[0]
            try:
                value = float(row[value_col])
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric value {row[value_col]!r} on row {rownum}",
                    row=rownum,
                )
            if not np.isfinite(value):
                raise ParseError(f"{path}: non-finite value on row {rownum}", row=rownum)
            if sid not in groups:
                groups[sid] = []
                order.append(sid)
            groups[sid].append(value)
    if not order:
        raise FormatError(f"{path}: no data rows")
    if dataset_id is None:
        import os

        dataset_id = os.path.splitext(os.path.basename(str(path)))[0]
    series = [(sid, np.asarray(groups[sid], dtype=float)) for sid in order]
    return SeriesDataset(dataset_id=dataset_id, series=series, frequency_label=frequency_label)


def save_dataset(ds, path):
    """Write a SeriesDataset back to the two-column CSV format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "value"])
        for sid, values in ds.series:
            for v in values:
                writer.writerow([sid, repr(float(v))])


def _series_candidate_starts(length, task, n):
    """Up to n uniformly strided start indices for one series."""
    span = task.context_len + task.horizon
    if length < span:
        return []
    max_start = length - span
    if n <= 1 or max_start == 0:
        return [0]
    stride = max_start // (n - 1)
    if stride == 0:
        starts = list(range(0, max_start + 1))[:n]
    else:
        starts = [j * stride for j in range(n)]
    return sorted(set(s for s in starts if s <= max_start))


def sample_windows(ds, task, n, regime="standard", seed=0):
    """Sample forecast windows deterministically.

    standard: uniform stride per eligible series, round-robin across series,
    capped at n windows total. fewshot: seeded uniform subsample of exactly
    min(100, available) windows from the standard candidate set.
    """
    if n < 1:
        raise ValueError("n must be positive")
    per_series = []
    for sid, values in ds.series:
        starts = _series_candidate_starts(len(values), task, n)
        if starts:
            per_series.append((sid, values, starts))
    if not per_series:
        raise EmptySampleError(
            f"{ds.dataset_id}: no series long enough for task {task.name} "
            f"({task.context_len}+{task.horizon})"
        )

    # Round-robin merge of the per-series candidate lists.
    candidates = []
    seen_ids = set()
    idx = 0
    while True:
        advanced = False
        for sid, values, starts in per_series:
            if idx < len(starts):
                advanced = True
                start = starts[idx]
                wid = Window.make_id(ds.dataset_id, sid, start, task.name)
                if wid in seen_ids:
                    continue
                seen_ids.add(wid)
                candidates.append((sid, values, start, wid))
        if not advanced:
            break
        idx += 1

    if regime == "standard":
        chosen = candidates[:n]
    elif regime == "fewshot":
        take = min(100, len(candidates))
        rng = np.random.default_rng(seed)
        picked = sorted(rng.choice(len(candidates), size=take, replace=False).tolist())
        chosen = [candidates[i] for i in picked]
    else:
        raise ValueError(f"unknown regime {regime!r}")

    windows = []
    for sid, values, start, wid in chosen:
        ctx = values[start : start + task.context_len]
        hor = values[start + task.context_len : start + task.context_len + task.horizon]
        windows.append(
            Window(
                window_id=wid,
                series_id=sid,
                start=start,
                context=np.asarray(ctx, dtype=float),
                horizon_actuals=np.asarray(hor, dtype=float),
            )
        )
    return windows


def save_embeddings(emb, path):
    """Serialize LayerEmbeddings to the TTEB binary format."""
    with open(path, "wb") as fh:
        fh.write(TTEB_MAGIC)
        fh.write(struct.pack("<II", TTEB_VERSION, len(emb.layers)))
        for layer in emb.layers:
            arr = np.ascontiguousarray(layer, dtype="<f4")
            t, d = arr.shape
            fh.write(struct.pack("<II", t, d))
            fh.write(arr.tobytes())


def load_embeddings(path, model_id="", scope_id=""):
    """Deserialize a TTEB file, validating dimensions against the header."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != TTEB_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header at byte {len(data)}")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != TTEB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = 12
    layers = []
    for i in range(n_layers):
        if offset + 8 > len(data):
            raise FormatError(f"{path}: truncated layer header at byte {offset}")
        t, d = struct.unpack_from("<II", data, offset)
        offset += 8
        nbytes = t * d * 4
        if offset + nbytes > len(data):
            raise FormatError(f"{path}: truncated payload for layer {i} at byte {offset}")
        arr = np.frombuffer(data, dtype="<f4", count=t * d, offset=offset).reshape(t, d)
        layers.append(arr.astype(np.float32))
        offset += nbytes
    return LayerEmbeddings(model_id=model_id, scope_id=scope_id, layers=layers)


PERF_HEADER = ["model_id", "dataset_id", "task", "window_id", "zero_shot_mase", "finetuned_mase"]


def load_performance(path):
    """Load performance records; empty finetuned_mase means no label."""
    records = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file")
        if [h.strip() for h in header] != PERF_HEADER:
            raise FormatError(f"{path}: expected header {','.join(PERF_HEADER)}")
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(f"{path}: row {rownum} has {len(row)} fields", row=rownum)
            model_id, dataset_id, task, window_id, zs_raw, ft_raw = row
            try:
                zs = float(zs_raw)
                ft = float(ft_raw) if ft_raw.strip() != "" else None
            except ValueError:
                raise ParseError(f"{path}: bad MASE value on row {rownum}", row=rownum)
            if not np.isfinite(zs) or zs < 0:
                raise RangeError(f"{path}: zero_shot_mase {zs} out of range on row {rownum}")
            if ft is not None and (not np.isfinite(ft) or ft < 0):
                raise RangeError(f"{path}: finetuned_mase {ft} out of range on row {rownum}")
            rec = PerformanceRecord(model_id, dataset_id, task, window_id, zs, ft)
            if rec.key in seen:
                raise DuplicateRecordError(f"{path}: duplicate record key {rec.key}")
            seen.add(rec.key)
            records.append(rec)
    return records


def save_performance(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PERF_HEADER)
        for r in records:
            ft = "" if r.finetuned_mase is None else repr(float(r.finetuned_mase))
            writer.writerow(
                [r.model_id, r.dataset_id, r.task, r.window_id, repr(float(r.zero_shot_mase)), ft]
            )
