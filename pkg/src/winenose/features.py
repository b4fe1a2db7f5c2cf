"""The 23-per-sensor feature catalog and 138-value fingerprint assembly.

Features are computed per sensor trace over three segments: baseline
(before gas injection), absorption (injection to desorption onset) and
desorption (onset to end). The catalog order is fixed so fingerprints are
reproducible and columns line up across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from sklearn.base import BaseEstimator, TransformerMixin

from .dataset import ABSORPTION_SECONDS, Dataset, Measurement, SensorTrace
from .errors import InputError

EMA_ALPHAS = (0.1, 0.01, 0.001)


@dataclass(frozen=True)
class EmaParams:
    """Smoothing parameter for the exponential-moving-average filter."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass
class FeatureVector:
    """One measurement's 138-value fingerprint with parallel feature names."""

    values: np.ndarray
    names: list[str]
    measurement_id: str
    label: str


def delta_g(trace: SensorTrace) -> float:
    """Maximal conductance change: max - min over the trace."""
    s = trace.samples
    return float(s.max() - s.min())


def delta_g_norm(trace: SensorTrace) -> float:
    """Conductance change normalized by the minimum: (max - min) / min."""
    s = trace.samples
    return float((s.max() - s.min()) / s.min())


def auc(trace: SensorTrace, start: int, end: int) -> float:
    """Trapezoidal area under the conductance curve over [start, end).

    The time axis is in seconds (sample spacing 1 / sample_rate).
    """
    if not (0 <= start < end <= len(trace.samples)):
        raise InputError(f"segment [{start}, {end}) out of range")
    seg = trace.samples[start:end]
    trapezoid = getattr(np, "trapezoid", np.trapz)
    return float(trapezoid(seg, dx=1.0 / trace.sample_rate_hz))


def ema_transform(trace: SensorTrace, p: EmaParams) -> np.ndarray:
    """Exponential moving average of first differences.

    y[0] = 0; y[k] = (1 - alpha) * y[k-1] + alpha * (x[k] - x[k-1]).
    Output has the same length as the trace.
    """
    x = trace.samples
    if len(x) < 2:
        raise InputError("ema_transform needs at least 2 samples")
    dx = np.diff(x)
    y = np.empty(len(x))
    y[0] = 0.0
    # IIR recurrence y[k] = (1-a) y[k-1] + a dx[k-1] with zero initial state
    y[1:] = lfilter([p.alpha], [1.0, -(1.0 - p.alpha)], dx)
    return y


def ema_extrema(
    trace: SensorTrace,
    p: EmaParams,
    rising_segment: tuple[int, int],
    falling_segment: tuple[int, int],
) -> tuple[float, float]:
    """(max of ema over the rising segment, min over the falling segment)."""
    y = ema_transform(trace, p)
    for lo, hi in (rising_segment, falling_segment):
        if not (0 <= lo < hi <= len(y)):
            raise InputError(f"segment [{lo}, {hi}) out of range")
    r0, r1 = rising_segment
    f0, f1 = falling_segment
    return float(y[r0:r1].max()), float(y[f0:f1].min())


def segment_bounds(m: Measurement, absorption_seconds: float = ABSORPTION_SECONDS):
    """(baseline, absorption, desorption) index ranges for a measurement."""
    onset = m.injection_index + int(round(absorption_seconds * m.sample_rate_hz))
    onset = min(max(onset, m.injection_index + 1), m.n_points - 1)
    injection = min(m.injection_index, m.n_points - 2)
    return (0, injection), (injection, onset), (onset, m.n_points)


def _slope(seg: np.ndarray, rate: float) -> float:
    if len(seg) < 2:
        return 0.0
    t = np.arange(len(seg)) / rate
    return float(np.polyfit(t, seg, 1)[0])


def _trace_features(trace: SensorTrace, m: Measurement) -> dict[str, float]:
    (b0, b1), (a0, a1), (d0, d1) = segment_bounds(m)
    s = trace.samples
    rate = trace.sample_rate_hz
    dg = delta_g(trace)
    smin = float(s.min())
    feats = {
        "delta_g": dg,
        "delta_g_norm": delta_g_norm(trace),
        "auc_absorb": auc(trace, a0, a1),
        "auc_desorb": auc(trace, d0, d1),
    }
    for alpha in EMA_ALPHAS:
        mx, mn = ema_extrema(trace, EmaParams(alpha), (a0, a1), (d0, d1))
        feats[f"ema_max_{alpha}"] = mx
        feats[f"ema_min_{alpha}"] = mn
    diffs = np.diff(s)
    feats.update(
        baseline_mean=float(s[b0:b1].mean()) if b1 > b0 else float(s[0]),
        final_value=float(s[-1]),
        maximum=float(s.max()),
        minimum=smin,
        mean=float(s.mean()),
        std=float(s.std()),
        max_first_diff=float(diffs.max()),
        min_first_diff=float(diffs.min()),
    )
    # Rise time: seconds from injection until the signal first reaches 90% of
    # its total excursion; falls back to the segment span if never reached.
    rise = np.flatnonzero(s[a0:] >= smin + 0.9 * dg)
    feats["rise_time_90"] = (
        float(rise[0]) / rate if rise.size else (len(s) - a0) / rate
    )
    fall = np.flatnonzero(s[d0:] <= smin + 0.1 * dg)
    feats["fall_time_10"] = (
        float(fall[0]) / rate if fall.size else (len(s) - d0) / rate
    )
    feats["slope_absorb"] = _slope(s[a0:a1], rate)
    feats["slope_desorb"] = _slope(s[d0:d1], rate)
    feats["auc_total"] = auc(trace, 0, len(s))
    return feats


FEATURE_CATALOG = (
    "delta_g",
    "delta_g_norm",
    "auc_absorb",
    "auc_desorb",
    "ema_max_0.1",
    "ema_min_0.1",
    "ema_max_0.01",
    "ema_min_0.01",
    "ema_max_0.001",
    "ema_min_0.001",
    "baseline_mean",
    "final_value",
    "maximum",
    "minimum",
    "mean",
    "std",
    "max_first_diff",
    "min_first_diff",
    "rise_time_90",
    "fall_time_10",
    "slope_absorb",
    "slope_desorb",
    "auc_total",
)

N_FEATURES_PER_SENSOR = len(FEATURE_CATALOG)  # 23
N_SENSORS = 6
FINGERPRINT_SIZE = N_FEATURES_PER_SENSOR * N_SENSORS  # 138


def fingerprint_names() -> list[str]:
    """Column names in sensor-major order (sensor 1 features first)."""
    return [
        f"{feat}_s{s}"
        for s in range(1, N_SENSORS + 1)
        for feat in FEATURE_CATALOG
    ]


def extract_fingerprint(m: Measurement) -> FeatureVector:
    """Assemble the 138-value fingerprint for one measurement."""
    values = []
    for trace in sorted(m.traces, key=lambda t: t.sensor_index):
        with np.errstate(invalid="ignore"):  # non-finite inputs raise below
            feats = _trace_features(trace, m)
        for feat in FEATURE_CATALOG:
            v = feats[feat]
            if not np.isfinite(v):
                raise InputError(
                    f"non-finite feature {feat} on sensor {trace.sensor_index}"
                    f" of measurement {m.id}"
                )
            values.append(v)
    return FeatureVector(
        values=np.asarray(values),
        names=fingerprint_names(),
        measurement_id=m.id,
        label=m.label,
    )


def fingerprint_matrix(ds: Dataset):
    """Extract all fingerprints.

    Returns (X, labels, bottle_ids, names) where X is (n_measurements, 138).
    """
    vectors = [extract_fingerprint(m) for m in ds.measurements]
    X = np.stack([v.values for v in vectors]) if vectors else np.empty((0, FINGERPRINT_SIZE))
    labels = [v.label for v in vectors]
    bottles = [m.bottle_id for m in ds.measurements]
    return X, labels, bottles, fingerprint_names()


def write_fingerprints(path, X, labels, bottles) -> None:
    """Write the fingerprint matrix as CSV with label and bottle_id columns."""
    names = fingerprint_names()
    with open(path, "w") as fh:
        fh.write(",".join(names + ["label", "bottle_id"]) + "\n")
        for row, label, bottle in zip(X, labels, bottles):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write(f",{label},{bottle}\n")


def read_fingerprints(path):
    """Read a fingerprint CSV back into (X, labels, bottles, names)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[-2:] != ["label", "bottle_id"]:
            raise InputError("fingerprint CSV must end with label,bottle_id columns")
        names = header[:-2]
        rows, labels, bottles = [], [], []
        for line in fh:
            parts = line.strip().split(",")
            rows.append([float(v) for v in parts[:-2]])
            labels.append(parts[-2])
            bottles.append(parts[-1])
    return np.asarray(rows), labels, bottles, names


class FingerprintExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer turning measurements into fingerprint rows."""

    def fit(self, measurements, y=None):
        return self

    def transform(self, measurements):
        return np.stack([extract_fingerprint(m).values for m in measurements])

    def get_feature_names_out(self, input_features=None):
        return np.asarray(fingerprint_names())
