import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ticbench.errors import BackendError, EmptyPredictionError
from ticbench.icl import (
    PredictorConfig,
    predict_in_context,
    remote_predict,
    transferability_score,
)
from ticbench.tables import CharacteristicRow, ContextTable, TargetTable


def table_pair(Xc, yc, Xt):
    def rows(X, y=None):
        out = []
        for i, feats in enumerate(X):
            out.append(
                CharacteristicRow(
                    model_id="m", dataset_id="d", task="short", window_id=f"w{i}",
                    data_features=np.asarray(feats, dtype=float),
                    entropy_features=np.zeros(6),
                    zero_shot_mase=0.0,
                    finetuned_mase=None if y is None else float(y[i]),
                )
            )
        return out

    return ContextTable(rows=rows(Xc, yc)), TargetTable(rows=rows(Xt))


class TestKernelPredictor:
    def test_predictions_are_convex_combinations(self):
        rng = np.random.default_rng(0)
        Xc = rng.standard_normal((50, 3))
        yc = rng.random(50) * 4 + 1
        Xt = rng.standard_normal((10, 3))
        ctx, tgt = table_pair(Xc, yc, Xt)
        preds = predict_in_context(ctx, tgt, PredictorConfig(seed=0))
        assert np.all(preds >= yc.min() - 1e-12)
        assert np.all(preds <= yc.max() + 1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        ctx, tgt = table_pair(rng.standard_normal((40, 2)), rng.random(40),
                              rng.standard_normal((5, 2)))
        cfg = PredictorConfig(seed=7)
        np.testing.assert_array_equal(
            predict_in_context(ctx, tgt, cfg), predict_in_context(ctx, tgt, cfg)
        )

    def test_label_shift_equivariance(self):
        rng = np.random.default_rng(2)
        Xc = rng.standard_normal((40, 2))
        yc = rng.random(40)
        Xt = rng.standard_normal((6, 2))
        ctx1, tgt = table_pair(Xc, yc, Xt)
        ctx2, _ = table_pair(Xc, yc + 10.0, Xt)
        p1 = predict_in_context(ctx1, tgt, PredictorConfig(seed=0))
        p2 = predict_in_context(ctx2, tgt, PredictorConfig(seed=0))
        np.testing.assert_allclose(p2, p1 + 10.0, atol=1e-9)

    def test_weight_concentration_on_exact_match(self):
        # a target identical to one context row with a sharp bandwidth should
        # reproduce that row's label
        rng = np.random.default_rng(3)
        Xc = rng.standard_normal((30, 3)) * 5
        yc = rng.random(30)
        ctx, tgt = table_pair(Xc, yc, Xc[4:5])
        preds = predict_in_context(
            ctx, tgt, PredictorConfig(bandwidth_multiplier=0.01, knn_fallback_k=1, seed=0)
        )
        assert preds[0] == pytest.approx(yc[4], abs=1e-6)

    def test_constant_labels_predict_constant(self):
        rng = np.random.default_rng(4)
        ctx, tgt = table_pair(rng.standard_normal((20, 2)), np.full(20, 3.25),
                              rng.standard_normal((7, 2)))
        preds = predict_in_context(ctx, tgt, PredictorConfig(seed=0))
        np.testing.assert_allclose(preds, 3.25, atol=1e-12)

    def test_matches_direct_nadaraya_watson_oracle(self):
        # independent dense reimplementation with the same bandwidth rule
        rng = np.random.default_rng(5)
        Xc = rng.standard_normal((60, 2))
        yc = np.sin(Xc[:, 0]) + Xc[:, 1]
        Xt = rng.standard_normal((15, 2))
        ctx, tgt = table_pair(Xc, yc, Xt)
        cfg = PredictorConfig(bandwidth_multiplier=1.0, seed=0)
        preds = predict_in_context(ctx, tgt, cfg)

        mean, std = Xc.mean(axis=0), Xc.std(axis=0)
        Xc_s = (Xc - mean) / std
        Xt_s = (Xt - mean) / std
        ii, jj = np.triu_indices(len(Xc_s), k=1)
        sigma = np.median(np.linalg.norm(Xc_s[ii] - Xc_s[jj], axis=1))
        ref = np.empty(len(Xt_s))
        for i, t in enumerate(Xt_s):
            w = np.exp(-np.sum((Xc_s - t) ** 2, axis=1) / (2 * sigma**2))
            ref[i] = np.dot(w, yc) / w.sum()
        np.testing.assert_allclose(preds, ref, atol=1e-10)

    def test_underflow_falls_back_to_knn_mean(self):
        # two far clusters: with a tiny bandwidth every kernel weight
        # underflows for a distant target, triggering the kNN-mean path
        Xc = np.vstack([np.zeros((5, 1)), np.ones((5, 1)) * 1000])
        yc = np.array([1.0] * 5 + [9.0] * 5)
        Xt = np.array([[1000.0]])
        ctx, tgt = table_pair(Xc, yc, Xt)
        preds = predict_in_context(
            ctx, tgt, PredictorConfig(bandwidth_multiplier=1e-6, knn_fallback_k=5, seed=0)
        )
        assert preds[0] == pytest.approx(9.0)

    def test_column_mismatch_rejected(self):
        rng = np.random.default_rng(6)
        ctx, _ = table_pair(rng.standard_normal((10, 2)), rng.random(10),
                            rng.standard_normal((2, 2)))
        _, tgt = table_pair(rng.standard_normal((10, 3)), rng.random(10),
                            rng.standard_normal((2, 3)))
        with pytest.raises(ValueError):
            predict_in_context(ctx, tgt, PredictorConfig())

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_feature_scale_invariance(self, seed):
        # context standardization makes the smoother invariant to per-column
        # affine rescaling of the inputs
        rng = np.random.default_rng(seed)
        Xc = rng.standard_normal((30, 3))
        yc = rng.random(30)
        Xt = rng.standard_normal((4, 3))
        scale = np.array([3.0, 0.5, 10.0])
        shift = np.array([-2.0, 5.0, 0.0])
        ctx1, tgt1 = table_pair(Xc, yc, Xt)
        ctx2, tgt2 = table_pair(Xc * scale + shift, yc, Xt * scale + shift)
        cfg = PredictorConfig(seed=0)
        np.testing.assert_allclose(
            predict_in_context(ctx1, tgt1, cfg),
            predict_in_context(ctx2, tgt2, cfg),
            atol=1e-9,
        )


class TestPredictorConfig:
    def test_remote_needs_endpoint(self):
        with pytest.raises(ValueError):
            PredictorConfig(backend="remote")

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            PredictorConfig(backend="mystery")

    def test_nonpositive_bandwidth(self):
        with pytest.raises(ValueError):
            PredictorConfig(bandwidth_multiplier=0.0)


class _Handler(BaseHTTPRequestHandler):
    mode = "mean"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.mode == "error":
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b'{"error": "boom"}')
            return
        ctx_mean = float(np.mean(body["context"]["y"]))
        n = len(body["target"]["X"])
        if self.mode == "short":
            n -= 1
        if self.mode == "nan":
            out = [float("nan")] * n
        else:
            out = [ctx_mean] * n
        payload = json.dumps({"y": out}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def mock_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestRemoteBackend:
    def test_echo_mean_round_trip(self, mock_server):
        _Handler.mode = "mean"
        preds = remote_predict(np.ones((3, 2)), [1.0, 2.0, 3.0], np.ones((4, 2)),
                               mock_server)
        np.testing.assert_allclose(preds, 2.0)

    def test_via_predict_in_context(self, mock_server):
        _Handler.mode = "mean"
        rng = np.random.default_rng(0)
        ctx, tgt = table_pair(rng.standard_normal((5, 2)), [1, 2, 3, 4, 5],
                              rng.standard_normal((2, 2)))
        cfg = PredictorConfig(backend="remote", endpoint_url=mock_server)
        np.testing.assert_allclose(predict_in_context(ctx, tgt, cfg), 3.0)

    def test_length_mismatch_is_backend_error(self, mock_server):
        _Handler.mode = "short"
        with pytest.raises(BackendError):
            remote_predict(np.ones((3, 2)), [1.0, 2.0, 3.0], np.ones((4, 2)),
                           mock_server)

    def test_http_error_is_backend_error(self, mock_server):
        _Handler.mode = "error"
        with pytest.raises(BackendError):
            remote_predict(np.ones((3, 2)), [1.0, 2.0, 3.0], np.ones((4, 2)),
                           mock_server)

    def test_non_finite_is_backend_error(self, mock_server):
        _Handler.mode = "nan"
        with pytest.raises(BackendError):
            remote_predict(np.ones((3, 2)), [1.0, 2.0, 3.0], np.ones((4, 2)),
                           mock_server)

    def test_unreachable_endpoint_is_backend_error(self):
        with pytest.raises(BackendError):
            remote_predict(np.ones((3, 2)), [1.0, 2.0, 3.0], np.ones((4, 2)),
                           "http://127.0.0.1:1", timeout_ms=500)


class TestTransferabilityScore:
    def test_mean_aggregate(self):
        sr = transferability_score([1.0, 2.0, 3.0], "m", "d", "short")
        assert sr.score == -2.0
        assert sr.raw_mean_prediction == 2.0
        assert sr.n_target_rows == 3

    def test_median_aggregate(self):
        sr = transferability_score([1.0, 2.0, 100.0], "m", "d", "short",
                                   aggregate="median")
        assert sr.score == -2.0

    def test_lower_predicted_error_scores_higher(self):
        good = transferability_score([0.2, 0.3], "m", "d", "t")
        bad = transferability_score([2.0, 3.0], "m", "d", "t")
        assert good.score > bad.score

    def test_empty_rejected(self):
        with pytest.raises(EmptyPredictionError):
            transferability_score([], "m", "d", "t")

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            transferability_score([1.0, np.nan], "m", "d", "t")
