"""Command-line pipeline: one subcommand per stage plus synth and benchmark.

Outputs are written atomically (temp file + rename). Every stage writes a
``<output>.run.json`` sidecar carrying the hash of its resolved
configuration; JSON outputs also embed the hash inline. Exit codes:
2 for validation failures, 1 for runtime failures.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile

import click
import numpy as np

from . import bench, synth
from .entropy import entropy_profile, save_profiles
from .errors import TicbenchError
from .features import default_catalog, extract_matrix, load_feature_matrix, save_feature_matrix
from .icl import PredictorConfig, predict_in_context, transferability_score
from .ingest import TaskSpec, load_dataset, load_embeddings, load_performance, sample_windows
from .metrics import evaluate_ranking
from .selection import PartitionConfig, SelectionResult, greedy_select
from .tables import (
    SCENARIO_ALIASES,
    ScenarioSpec,
    TargetTable,
    build_rows,
    build_scenario_context,
    deserialize_table,
    serialize_table,
)


def _config_hash(params):
    blob = json.dumps(params, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _atomic_write_text(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_sidecar(path, params):
    _atomic_write_text(
        path + ".run.json",
        json.dumps({"config": params, "config_hash": _config_hash(params)}, sort_keys=True),
    )


def _fail(exc, code):
    click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
    sys.exit(code)


def _guard(fn, *args, **kwargs):
    from .errors import FormatError, ParseError

    validation = (FormatError, ParseError, ValueError, FileNotFoundError, KeyError)
    try:
        return fn(*args, **kwargs)
    except validation as exc:
        _fail(exc, 2)
    except TicbenchError as exc:
        _fail(exc, 1)


@click.group()
def main():
    """Transferability-estimation benchmark toolkit."""


@main.command("extract")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--task", type=click.Choice(["short", "medium", "long"]), required=True)
@click.option("--n-windows", default=100, show_default=True)
@click.option("--regime", type=click.Choice(["standard", "fewshot"]), default="standard")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_extract(dataset_path, task, n_windows, regime, seed, out):
    """Sample windows from a dataset and write the feature matrix CSV."""
    params = dict(stage="extract", dataset=dataset_path, task=task,
                  n_windows=n_windows, regime=regime, seed=seed)

    def run():
        ds = load_dataset(dataset_path)
        windows = sample_windows(ds, TaskSpec.preset(task), n_windows, regime, seed)
        catalog = default_catalog()
        X, ids = extract_matrix(windows, catalog)
        tmp = out + ".part"
        save_feature_matrix(tmp, X, ids, catalog)
        os.replace(tmp, out)
        _write_sidecar(out, params)
        click.echo(f"wrote {len(ids)} feature rows to {out}")

    _guard(run)


@main.command("select")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--perf", "perf_path", required=True, type=click.Path(exists=True))
@click.option("--epsilon", default=0.001, show_default=True)
@click.option("--k-clusters", default=100, show_default=True)
@click.option("--max-features", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_select(features_path, perf_path, epsilon, k_clusters, max_features, seed, out):
    """Greedy feature selection against fine-tuned performance labels."""
    params = dict(stage="select", features=features_path, perf=perf_path,
                  epsilon=epsilon, k_clusters=k_clusters,
                  max_features=max_features, seed=seed)

    def run():
        X, ids, feature_ids, version = load_feature_matrix(features_path)
        records = [r for r in load_performance(perf_path) if r.finetuned_mase is not None]
        index = {wid: i for i, wid in enumerate(ids)}
        rows = [(index[r.window_id], r.finetuned_mase) for r in records
                if r.window_id in index]
        if not rows:
            raise ValueError("no performance records match the feature matrix")
        sel_idx = [i for i, _ in rows]
        y = np.array([ft for _, ft in rows])
        cfg = PartitionConfig(n_clusters=k_clusters, seed=seed)
        result = greedy_select(X[sel_idx], y, feature_ids=feature_ids, epsilon=epsilon,
                               cfg=cfg, max_features=max_features, catalog_version=version)
        obj = json.loads(result.to_json())
        obj["config_hash"] = _config_hash(params)
        _atomic_write_text(out, json.dumps(obj, indent=2))
        _write_sidecar(out, params)
        click.echo(f"selected {len(result.selected_feature_ids)} features -> {out}")

    _guard(run)


@main.command("profile")
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True))
@click.option("--model-id", required=True)
@click.option("--scope-id", required=True)
@click.option("--token-cap", default=10000, show_default=True)
@click.option("--k", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_profile(emb_path, model_id, scope_id, token_cap, k, seed, out):
    """Compute the layer-entropy profile of one embedding dump."""
    params = dict(stage="profile", embeddings=emb_path, model_id=model_id,
                  scope_id=scope_id, token_cap=token_cap, k=k, seed=seed)

    def run():
        emb = load_embeddings(emb_path, model_id=model_id, scope_id=scope_id)
        prof = entropy_profile(emb, token_cap=token_cap, k=k, seed=seed)
        tmp = out + ".part"
        save_profiles([prof], tmp)
        os.replace(tmp, out)
        _write_sidecar(out, params)
        click.echo(f"profile ({len(prof.raw)} layers -> 6) -> {out}")

    _guard(run)


@main.command("tables")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--profiles", "profiles_path", required=True, type=click.Path(exists=True))
@click.option("--perf", "perf_path", required=True, type=click.Path(exists=True))
@click.option("--selection", "selection_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def cmd_tables(features_path, profiles_path, perf_path, selection_path, out):
    """Join features, profiles and performance into a characteristic table."""
    params = dict(stage="tables", features=features_path, profiles=profiles_path,
                  perf=perf_path, selection=selection_path)

    def run():
        from .entropy import load_profiles

        X, ids, feature_ids, _ = load_feature_matrix(features_path)
        feature_index = {wid: row for wid, row in zip(ids, X)}
        profs = load_profiles(profiles_path)
        profiles = {}
        for p in profs:
            dataset_id, _, task = p.scope_id.partition("@")
            profiles[(p.model_id, dataset_id, task)] = p.subsampled
        records = load_performance(perf_path)
        with open(selection_path, encoding="utf-8") as fh:
            selection = SelectionResult.from_json(fh.read())
        rows = build_rows(feature_index, profiles, records, selection, feature_ids)
        tmp = out + ".part"
        serialize_table(rows, tmp)
        os.replace(tmp, out)
        _write_sidecar(out, params)
        click.echo(f"wrote {len(rows)} table rows to {out}")

    _guard(run)


@main.command("estimate")
@click.option("--table", "table_path", required=True, type=click.Path(exists=True))
@click.option("--scenario", type=click.Choice(["i", "ii", "iii"]), default="i")
@click.option("--target-model", required=True)
@click.option("--target-dataset", required=True)
@click.option("--task", required=True)
@click.option("--backend", type=click.Choice(["reference_kernel", "remote"]),
              default="reference_kernel")
@click.option("--endpoint", envvar="TICBENCH_ENDPOINT", default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_estimate(table_path, scenario, target_model, target_dataset, task,
                 backend, endpoint, seed, out):
    """Predict fine-tuned performance for a target cell and emit its score."""
    params = dict(stage="estimate", table=table_path, scenario=scenario,
                  target_model=target_model, target_dataset=target_dataset,
                  task=task, backend=backend, endpoint=endpoint, seed=seed)

    def run():
        rows = deserialize_table(table_path)
        spec = ScenarioSpec(
            kind=SCENARIO_ALIASES[scenario],
            target_model_id=target_model,
            target_dataset_id=target_dataset,
            task=task,
        )
        ctx = build_scenario_context(
            [r for r in rows if r.finetuned_mase is not None], spec
        )
        tgt_rows = [
            r for r in rows
            if r.model_id == target_model and r.dataset_id == target_dataset
            and r.task == task
        ]
        tgt = TargetTable(rows=tgt_rows)
        cfg = PredictorConfig(backend=backend, endpoint_url=endpoint, seed=seed)
        preds = predict_in_context(ctx, tgt, cfg)
        sr = transferability_score(preds, target_model, target_dataset, task)
        lines = ["method,model_id,dataset_id,task,score",
                 f"timetic,{sr.model_id},{sr.dataset_id},{sr.task},{sr.score!r}"]
        _atomic_write_text(out, "\n".join(lines) + "\n")
        _write_sidecar(out, params)
        click.echo(f"score {sr.score:.6f} -> {out}")

    _guard(run)


@main.command("baseline")
@click.option("--perf", "perf_path", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["zero_shot"]), default="zero_shot")
@click.option("--out", required=True, type=click.Path())
def cmd_baseline(perf_path, method, out):
    """Zero-shot baseline scores per (model, dataset, task)."""
    from .baselines import zero_shot_score

    params = dict(stage="baseline", perf=perf_path, method=method)

    def run():
        records = load_performance(perf_path)
        cells = {}
        for r in records:
            cells.setdefault((r.model_id, r.dataset_id, r.task), []).append(r)
        lines = ["method,model_id,dataset_id,task,score"]
        for key in sorted(cells):
            sr = zero_shot_score(cells[key])
            lines.append(f"{method},{sr.model_id},{sr.dataset_id},{sr.task},{sr.score!r}")
        _atomic_write_text(out, "\n".join(lines) + "\n")
        _write_sidecar(out, params)
        click.echo(f"wrote {len(lines) - 1} baseline scores to {out}")

    _guard(run)


@main.command("evaluate")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--perf", "perf_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def cmd_evaluate(scores_path, perf_path, out):
    """Rank-correlate scores against ground truth, per (dataset, task)."""
    from .icl import ScoreRecord

    params = dict(stage="evaluate", scores=scores_path, perf=perf_path)

    def run():
        records = load_performance(perf_path)
        score_records = []
        with open(scores_path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "method,model_id,dataset_id,task,score":
                raise ValueError(f"{scores_path}: bad scores header")
            for line in fh:
                if not line.strip():
                    continue
                method, model_id, dataset_id, task, score = line.strip().split(",")
                score_records.append(
                    (method, ScoreRecord(model_id, dataset_id, task,
                                         float(score), -float(score), 1))
                )
        methods = sorted({m for m, _ in score_records})
        obj = {"cells": [], "means": {}, "config_hash": _config_hash(params)}
        from .metrics import RankingReport

        for method in methods:
            srs = [s for m, s in score_records if m == method]
            report = evaluate_ranking(srs, records, method=method)
            ro = report.to_json_obj()
            obj["cells"].extend(ro["cells"])
            obj["means"][method] = ro["means"].get(method, {})
        _atomic_write_text(out, json.dumps(obj, indent=2))
        _write_sidecar(out, params)
        click.echo(f"wrote ranking report to {out}")

    _guard(run)


@main.command("synth")
@click.option("--seed", default=1, show_default=True)
@click.option("--n-models", default=6, show_default=True)
@click.option("--n-datasets", default=5, show_default=True)
@click.option("--noise", default=0.05, show_default=True)
@click.option("--n-windows", default=100, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_synth(seed, n_models, n_datasets, noise, n_windows, out):
    """Generate a synthetic benchmark corpus on disk."""
    params = dict(stage="synth", seed=seed, n_models=n_models,
                  n_datasets=n_datasets, noise=noise, n_windows=n_windows)

    def run():
        meta = synth.generate_corpus(out, seed=seed, n_models=n_models,
                                     n_datasets=n_datasets, noise=noise,
                                     n_windows=n_windows)
        _write_sidecar(os.path.join(out, "meta.json"), params)
        click.echo(f"corpus with {meta['n_models']} models x "
                   f"{meta['n_datasets']} datasets -> {out}")

    _guard(run)


@main.command("benchmark")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--regime", type=click.Choice(["standard", "fewshot"]), default="standard")
@click.option("--scenario", type=click.Choice(["i", "ii", "iii"]), default="i")
@click.option("--task", "tasks", multiple=True,
              type=click.Choice(["short", "medium", "long"]))
@click.option("--backend", type=click.Choice(["reference_kernel", "remote"]),
              default="reference_kernel")
@click.option("--endpoint", envvar="TICBENCH_ENDPOINT", default=None)
@click.option("--max-features", default=10, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--out", required=True, type=click.Path())
def cmd_benchmark(corpus_dir, regime, scenario, tasks, backend, endpoint,
                  max_features, seed, out):
    """Leave-one-dataset-out benchmark of all methods on a corpus."""
    params = dict(stage="benchmark", corpus=corpus_dir, regime=regime,
                  scenario=scenario, tasks=list(tasks) or None, backend=backend,
                  endpoint=endpoint, max_features=max_features, seed=seed)

    def run():
        methods = ["timetic", "zero_shot", "meta", "logme", "lfc", "regscore"]
        predictor = None
        remote_status = "skipped"
        if backend == "remote":
            if not endpoint:
                raise ValueError("remote backend requires --endpoint or TICBENCH_ENDPOINT")
            predictor = PredictorConfig(backend="remote", endpoint_url=endpoint)
            remote_status = "used"
        report = bench.run_benchmark(
            corpus_dir,
            tasks=list(tasks) or None,
            regime=regime,
            seed=seed,
            scenario_kind=SCENARIO_ALIASES[scenario],
            methods=methods,
            predictor=predictor,
            max_features=max_features,
        )
        obj = report.to_json_obj()
        obj["remote_backend"] = remote_status
        obj["config_hash"] = _config_hash(params)
        _atomic_write_text(out, json.dumps(obj, indent=2))
        _write_sidecar(out, params)
        for method in methods:
            click.echo(f"{method}: mean tau_w = {report.mean_tau(method=method):.4f}")
        click.echo(f"report -> {out}")

    _guard(run)


if __name__ == "__main__":
    main()
