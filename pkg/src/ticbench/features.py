"""Statistical feature catalog computed on window contexts.

Each feature is a scalar function of the context segment only. Features
that are undefined on degenerate inputs (constant series, zero variance)
fall back to a documented constant: 0 for correlation-like and
entropy-like quantities, 0.5 for the Hurst exponent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, WindowTooShortError

CATALOG_VERSION = "native-1"

MIN_CONTEXT = 8


def _pop_std(x):
    return float(np.std(x))


def _autocorr(x, lag):
    n = len(x)
    if lag >= n:
        return 0.0
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom <= 0:
        return 0.0
    return float(np.dot(xc[:-lag], xc[lag:]) / denom)


def _pacf2(x):
    # Durbin-Levinson second-order partial autocorrelation from acf(1), acf(2).
    r1 = _autocorr(x, 1)
    r2 = _autocorr(x, 2)
    denom = 1.0 - r1 * r1
    if abs(denom) < 1e-12:
        return 0.0
    return float((r2 - r1 * r1) / denom)


def _ols_trend(x):
    n = len(x)
    t = np.arange(n, dtype=float)
    tc = t - t.mean()
    xc = x - x.mean()
    stt = float(np.dot(tc, tc))
    slope = float(np.dot(tc, xc) / stt)
    fitted = slope * tc
    ss_res = float(np.dot(xc - fitted, xc - fitted))
    ss_tot = float(np.dot(xc, xc))
    r2 = 0.0 if ss_tot <= 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return slope, r2


def _spectrum(x):
    """One-sided power spectrum of the demeaned series, DC excluded."""
    xc = x - x.mean()
    spec = np.abs(np.fft.rfft(xc)) ** 2
    return spec[1:]


def _spectral_entropy(x):
    p = _spectrum(x)
    total = p.sum()
    if total <= 0 or len(p) < 2:
        return 0.0
    p = p / total
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    return h / np.log(len(p))


def _dominant_frequency(x):
    p = _spectrum(x)
    total = p.sum()
    if total <= 0:
        return 0.0, 0.0
    j = int(np.argmax(p))
    freq = (j + 1) / len(x)
    share = float(p[j] / total)
    return freq, share


def _seasonal_strength(x):
    """Variance-decomposition seasonal strength at the dominant period."""
    freq, _ = _dominant_frequency(x)
    if freq <= 0:
        return 0.0
    n = len(x)
    period = int(round(1.0 / freq))
    period = max(2, min(period, n // 2))
    xc = x - x.mean()
    var_x = float(np.var(xc))
    if var_x <= 0:
        return 0.0
    phases = np.arange(n) % period
    sums = np.bincount(phases, weights=xc, minlength=period)
    counts = np.bincount(phases, minlength=period)
    seasonal = (sums / counts)[phases]
    resid = xc - seasonal
    return max(0.0, 1.0 - float(np.var(resid)) / var_x)


def _turning_point_rate(x):
    if len(x) < 3:
        return 0.0
    left = x[:-2]
    mid = x[1:-1]
    right = x[2:]
    tp = ((mid > left) & (mid > right)) | ((mid < left) & (mid < right))
    return float(np.sum(tp)) / (len(x) - 2)


def _mean_crossing_rate(x):
    xc = x - x.mean()
    signs = np.sign(xc)
    signs = signs[signs != 0]
    if len(signs) < 2:
        return 0.0
    return float(np.sum(signs[1:] != signs[:-1])) / (len(x) - 1)


def _cid(x):
    d = np.diff(x)
    return float(np.sqrt(np.dot(d, d)))


def _diff_variance_ratio(x):
    v = float(np.var(x))
    if v <= 0:
        return 0.0
    return float(np.var(np.diff(x))) / v


def _lumpiness(x, blocks=10):
    n = len(x)
    size = max(2, n // blocks)
    variances = []
    for i in range(0, n - size + 1, size):
        variances.append(float(np.var(x[i : i + size])))
    if len(variances) < 2:
        return 0.0
    return float(np.var(variances))


def _flat_spot(x):
    best = run = 1
    for i in range(1, len(x)):
        run = run + 1 if x[i] == x[i - 1] else 1
        best = max(best, run)
    return float(best)


def _longest_strike(mask):
    best = run = 0
    for flag in mask:
        run = run + 1 if flag else 0
        best = max(best, run)
    return float(best)


def _sample_entropy(x, m=2, r_frac=0.2, max_points=512):
    # long contexts are strided down to bound the O(n^2) template matching
    if len(x) > max_points:
        step = int(np.ceil(len(x) / max_points))
        x = x[::step]
    n = len(x)
    sd = _pop_std(x)
    if sd <= 0 or n <= m + 1:
        return 0.0
    r = r_frac * sd
    # Chebyshev-distance template matching, self-matches excluded.
    def count(mm):
        templ = np.lib.stride_tricks.sliding_window_view(x, mm)
        k = len(templ)
        total = 0
        for i in range(k - 1):
            dist = np.max(np.abs(templ[i + 1 :] - templ[i]), axis=1)
            total += int(np.sum(dist <= r))
        return total

    b = count(m)
    a = count(m + 1)
    if a == 0 or b == 0:
        return 0.0
    return float(-np.log(a / b))


def _hurst(x):
    """Rescaled-range Hurst exponent over dyadic scales."""
    n = len(x)
    if _pop_std(x) <= 0:
        return 0.5
    scales = []
    s = 8
    while s <= n:
        scales.append(s)
        s *= 2
    if len(scales) < 2:
        return 0.5
    log_rs = []
    log_s = []
    for s in scales:
        rs_vals = []
        for i in range(0, n - s + 1, s):
            seg = x[i : i + s]
            dev = np.cumsum(seg - seg.mean())
            r = float(dev.max() - dev.min())
            sd = _pop_std(seg)
            if sd > 0 and r > 0:
                rs_vals.append(r / sd)
        if rs_vals:
            log_rs.append(np.log(np.mean(rs_vals)))
            log_s.append(np.log(s))
    if len(log_s) < 2:
        return 0.5
    slope = np.polyfit(log_s, log_rs, 1)[0]
    return float(min(1.0, max(0.0, slope)))


def _build_catalog():
    entries = [
        ("mean", "location", lambda x: float(np.mean(x))),
        ("median", "location", lambda x: float(np.median(x))),
        ("std", "dispersion", lambda x: _pop_std(x)),
        ("iqr", "dispersion", lambda x: float(np.percentile(x, 75) - np.percentile(x, 25))),
        ("skewness", "dispersion", _skewness),
        ("kurtosis", "dispersion", _kurtosis),
        ("abs_energy", "dispersion", lambda x: float(np.dot(x, x))),
        ("mean_abs_change", "complexity", lambda x: float(np.mean(np.abs(np.diff(x))))),
        ("cid", "complexity", _cid),
        ("acf_lag1", "dependency", lambda x: _autocorr(x, 1)),
        ("acf_lag2", "dependency", lambda x: _autocorr(x, 2)),
        ("acf_lag4", "dependency", lambda x: _autocorr(x, 4)),
        ("acf_lag8", "dependency", lambda x: _autocorr(x, 8)),
        ("acf_lag24", "dependency", lambda x: _autocorr(x, 24)),
        ("pacf_lag2", "dependency", _pacf2),
        ("trend_slope", "trend", lambda x: _ols_trend(x)[0]),
        ("trend_r2", "trend", lambda x: _ols_trend(x)[1]),
        ("diff_var_ratio", "stationarity", _diff_variance_ratio),
        ("lumpiness", "stationarity", _lumpiness),
        ("flat_spot", "stationarity", _flat_spot),
        ("turning_point_rate", "complexity", _turning_point_rate),
        ("mean_crossing_rate", "complexity", _mean_crossing_rate),
        ("spectral_entropy", "seasonality", _spectral_entropy),
        ("dominant_freq", "seasonality", lambda x: _dominant_frequency(x)[0]),
        ("dominant_power_share", "seasonality", lambda x: _dominant_frequency(x)[1]),
        ("seasonal_strength", "seasonality", _seasonal_strength),
        ("sample_entropy", "complexity", _sample_entropy),
        ("hurst", "dependency", _hurst),
        ("strike_above_mean", "stationarity", lambda x: _longest_strike(x > x.mean())),
        ("strike_below_mean", "stationarity", lambda x: _longest_strike(x < x.mean())),
        ("count_above_mean", "location", lambda x: float(np.sum(x > x.mean()))),
        ("q10", "location", lambda x: float(np.percentile(x, 10))),
        ("q90", "location", lambda x: float(np.percentile(x, 90))),
    ]
    return entries


def _skewness(x):
    sd = _pop_std(x)
    if sd <= 0:
        return 0.0
    xc = x - x.mean()
    return float(np.mean(xc**3) / sd**3)


def _kurtosis(x):
    sd = _pop_std(x)
    if sd <= 0:
        return 0.0
    xc = x - x.mean()
    return float(np.mean(xc**4) / sd**4 - 3.0)


@dataclass
class FeatureCatalog:
    entries: list  # (feature_id, category, fn)
    version: str = CATALOG_VERSION

    @property
    def feature_ids(self):
        return [fid for fid, _, _ in self.entries]

    def __len__(self):
        return len(self.entries)


def default_catalog():
    return FeatureCatalog(entries=_build_catalog())


@dataclass
class FeatureVector:
    window_id: str
    values: np.ndarray
    catalog_version: str


@dataclass
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray  # constant columns stored with std 1


def extract_features(window, catalog=None):
    """Compute one finite value per catalog entry on the window context."""
    if catalog is None:
        catalog = default_catalog()
    x = np.asarray(window.context, dtype=float)
    if len(x) < MIN_CONTEXT:
        raise WindowTooShortError(
            f"window {window.window_id}: context length {len(x)} < {MIN_CONTEXT}"
        )
    values = np.array([fn(x) for _, _, fn in catalog.entries], dtype=float)
    if not np.all(np.isfinite(values)):
        bad = [catalog.feature_ids[i] for i in np.where(~np.isfinite(values))[0]]
        raise NumericError(f"window {window.window_id}: non-finite features {bad}")
    return FeatureVector(window_id=window.window_id, values=values, catalog_version=catalog.version)


def extract_matrix(windows, catalog=None):
    """Stack per-window feature vectors; returns (n x F matrix, window_id list)."""
    if catalog is None:
        catalog = default_catalog()
    rows = []
    ids = []
    for w in windows:
        try:
            fv = extract_features(w, catalog)
        except (WindowTooShortError, NumericError) as exc:
            raise type(exc)(f"{w.window_id}: {exc}") from exc
        rows.append(fv.values)
        ids.append(w.window_id)
    if not rows:
        return np.zeros((0, len(catalog))), ids
    return np.vstack(rows), ids


def standardize(X):
    """Zero-mean unit-variance columns (population std); constant columns map to 0."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-d matrix")
    if not np.all(np.isfinite(X)):
        raise NumericError("standardize: non-finite input")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std_safe = np.where(std > 0, std, 1.0)
    stats = StandardizationStats(mean=mean, std=std_safe)
    return (X - mean) / std_safe, stats


def apply_standardization(X, stats):
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise NumericError("apply_standardization: non-finite input")
    return (X - stats.mean) / stats.std


def save_feature_matrix(path, X, window_ids, catalog=None):
    """Feature-matrix CSV with a ``# catalog=<version>`` comment line."""
    if catalog is None:
        catalog = default_catalog()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# catalog={catalog.version}\n")
        fh.write("window_id," + ",".join(catalog.feature_ids) + "\n")
        for wid, row in zip(window_ids, X):
            fh.write(wid + "," + ",".join(repr(float(v)) for v in row) + "\n")


def load_feature_matrix(path):
    """Inverse of save_feature_matrix; returns (X, window_ids, feature_ids, version)."""
    from .errors import FormatError

    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# catalog="):
            raise FormatError(f"{path}: missing catalog comment line")
        version = first.split("=", 1)[1]
        header = fh.readline().strip().split(",")
        if header[:1] != ["window_id"]:
            raise FormatError(f"{path}: bad header")
        feature_ids = header[1:]
        ids = []
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    X = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(feature_ids)))
    return X, ids, feature_ids, version
