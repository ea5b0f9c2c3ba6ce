import numpy as np
import pytest

from ticbench.bench import (
    CorpusPipeline,
    default_predictor,
    metric_baseline_scores,
    meta_learner_scores,
    run_benchmark,
    timetic_scores,
    zero_shot_scores,
)
from ticbench.synth import generate_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    generate_corpus(out, seed=7, n_models=3, n_datasets=2, noise=0.05,
                    n_windows=8, tasks=("short",))
    return str(out)


@pytest.fixture(scope="module")
def pipeline(corpus):
    return CorpusPipeline(corpus_dir=corpus, n_windows=8)


class TestPipeline:
    def test_seed_defaults_to_corpus_seed(self, pipeline):
        assert pipeline.seed == 7

    def test_stage_joins_all_records(self, pipeline):
        stage = pipeline.task_stage("short")
        # every sampled standard window has a performance record
        assert stage["records"]
        assert all(r.window_id in stage["feature_index"] for r in stage["records"])
        assert len(stage["rows"]) == len(stage["records"])

    def test_stage_cached(self, pipeline):
        assert pipeline.task_stage("short") is pipeline.task_stage("short")

    def test_selection_nonempty(self, pipeline):
        sel = pipeline.task_stage("short")["selection"]
        assert 1 <= len(sel.selected_feature_ids) <= pipeline.max_features

    def test_profiles_cover_grid(self, pipeline):
        stage = pipeline.task_stage("short")
        assert set(stage["profiles"]) == {
            (m, d, "short") for m in pipeline.model_ids for d in pipeline.dataset_ids
        }


class TestScores:
    def test_timetic_scores_grid(self, pipeline):
        scores = timetic_scores(pipeline, "short")
        assert len(scores) == 3 * 2
        assert all(np.isfinite(s.score) for s in scores)

    def test_timetic_deterministic(self, pipeline):
        a = timetic_scores(pipeline, "short")
        b = timetic_scores(pipeline, "short")
        assert [s.score for s in a] == [s.score for s in b]

    def test_context_cap_changes_context(self, pipeline):
        full = timetic_scores(pipeline, "short")
        capped = timetic_scores(pipeline, "short", context_cap=5)
        assert len(capped) == len(full)
        assert all(np.isfinite(s.score) for s in capped)

    def test_zero_shot_scores(self, pipeline):
        scores = zero_shot_scores(pipeline, "short")
        assert len(scores) == 6
        assert all(s.score < 0 for s in scores)  # minus mean positive MASE

    def test_meta_scores(self, pipeline):
        scores = meta_learner_scores(pipeline, "short")
        assert len(scores) == 6

    def test_metric_baselines(self, pipeline):
        for method in ("logme", "lfc", "regscore"):
            scores = metric_baseline_scores(pipeline, "short", method)
            assert len(scores) == 6
            assert all(np.isfinite(s.score) for s in scores)

    def test_default_predictor_shape(self):
        cfg = default_predictor()
        assert cfg.backend == "reference_kernel"
        assert cfg.bandwidth_multiplier < 1.0


class TestRunBenchmark:
    def test_report_covers_methods_and_datasets(self, corpus):
        report = run_benchmark(corpus, tasks=["short"], n_windows=8,
                               methods=["timetic", "zero_shot"])
        methods = {c.method for c in report.cells}
        assert methods == {"timetic", "zero_shot"}
        datasets = {c.dataset_id for c in report.cells}
        assert datasets == {"ds_0", "ds_1"}
        for c in report.cells:
            assert c.n_models == 3
            assert -1.0 <= c.tau_w <= 1.0

    def test_unknown_method_rejected(self, corpus):
        with pytest.raises(ValueError):
            run_benchmark(corpus, tasks=["short"], n_windows=8, methods=["bogus"])
