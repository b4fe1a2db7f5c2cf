"""Rising-window protocol: growing prefixes of raw traces feed per-window
MLP classifiers, the earliest adequate window is selected, and an online
session replays the choice over a live stream of sensor frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, Measurement
from .errors import InputError
from .mlp import MlpClassifier
from .protocols import FoldPlan, grouped_kfold, loo_by_bottle

CANONICAL_PLAN_START = 150
CANONICAL_PLAN_END = 3300
CANONICAL_DELTA = 50


@dataclass(frozen=True)
class WindowPlan:
    start_index: int = CANONICAL_PLAN_START
    end_index: int = CANONICAL_PLAN_END
    delta: int = CANONICAL_DELTA

    def __post_init__(self):
        if self.delta < 1:
            raise InputError("delta must be >= 1")
        if self.end_index - self.start_index < self.delta:
            raise InputError("interval shorter than one window step")

    @property
    def count(self) -> int:
        return (self.end_index - self.start_index) // self.delta


@dataclass
class WindowStats:
    t: int
    seconds: float
    train_mean: float
    train_std: float
    val_mean: float
    val_std: float
    best_freq: int  # repetitions in which this window had the best val accuracy


@dataclass
class WindowSweepResult:
    plan: WindowPlan
    repetitions: int
    windows: list[WindowStats]

    def to_json(self) -> str:
        return json.dumps(
            {
                "plan": {
                    "start_index": self.plan.start_index,
                    "end_index": self.plan.end_index,
                    "delta": self.plan.delta,
                },
                "repetitions": self.repetitions,
                "windows": [vars(w) for w in self.windows],
            },
            indent=2,
        )

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,seconds,train_mean,train_std,val_mean,val_std,best_freq\n")
            for w in self.windows:
                fh.write(
                    f"{w.t},{w.seconds},{w.train_mean},{w.train_std},"
                    f"{w.val_mean},{w.val_std},{w.best_freq}\n"
                )


def slice_window(m: Measurement, plan: WindowPlan, t: int) -> np.ndarray:
    """Sensor-major concatenation of each sensor's first t*delta samples
    from plan.start_index; length 6 * t * delta."""
    if not 1 <= t <= plan.count:
        raise InputError(f"window index {t} outside 1..{plan.count}")
    end = plan.start_index + t * plan.delta
    if end > m.n_points:
        raise InputError(f"measurement too short for window {t}")
    parts = [
        tr.samples[plan.start_index : end]
        for tr in sorted(m.traces, key=lambda tr: tr.sensor_index)
    ]
    return np.concatenate(parts)


def window_to_seconds(t: int, delta: int, rate_hz: float) -> float:
    if t < 1 or delta < 1 or rate_hz <= 0:
        raise InputError("arguments must be positive")
    return t * delta / rate_hz


def window_matrix(ds: Dataset, plan: WindowPlan, t: int):
    """(X, labels, groups) for one window across the dataset."""
    X = np.stack([slice_window(m, plan, t) for m in ds.measurements])
    labels = np.asarray([m.label for m in ds.measurements])
    groups = np.asarray([m.bottle_id for m in ds.measurements])
    return X, labels, groups


def _fold_plan(ds: Dataset, protocol, seed: int) -> FoldPlan:
    groups = np.asarray([m.bottle_id for m in ds.measurements])
    if protocol == "loo":
        ethanol = np.asarray([m.label == "Ea" for m in ds.measurements])
        return loo_by_bottle(groups, ethanol_mask=ethanol)
    kind, k = protocol
    if kind != "kfold":
        raise InputError(f"unknown protocol {protocol!r}")
    return grouped_kfold(len(ds.measurements), groups, k, seed=seed)


def sweep(
    ds: Dataset,
    plan: WindowPlan,
    protocol="loo",
    train_cfg: dict | None = None,
    repetitions: int = 5,
    seed: int = 0,
    t_values=None,
) -> WindowSweepResult:
    """Evaluate a fresh MLP per (window, repetition, fold).

    `protocol` is "loo" or ("kfold", k). `t_values` restricts the sweep to a
    subset of window indices (desk-scale runs); default is every window.
    """
    if repetitions < 1:
        raise InputError("repetitions must be >= 1")
    train_cfg = dict(train_cfg or {})
    t_values = list(t_values) if t_values is not None else list(range(1, plan.count + 1))
    rate = ds.measurements[0].sample_rate_hz

    per_window_train = {t: [] for t in t_values}
    per_window_val = {t: [] for t in t_values}
    best_freq = {t: 0 for t in t_values}
    matrices = {t: window_matrix(ds, plan, t)[:2] for t in t_values}

    for rep in range(repetitions):
        rep_seed = seed + 1000 * rep
        fold_plan = _fold_plan(ds, protocol, rep_seed)
        rep_val_means = {}
        for t in t_values:
            X, labels = matrices[t]
            train_accs, val_accs = [], []
            for train_idx, val_idx in fold_plan:
                clf = MlpClassifier(seed=rep_seed, **train_cfg)
                try:
                    clf.fit(X[train_idx], labels[train_idx])
                except Exception as exc:
                    raise type(exc)(f"window {t}: {exc}") from exc
                train_accs.append(clf.score(X[train_idx], labels[train_idx]))
                val_accs.append(clf.score(X[val_idx], labels[val_idx]))
            per_window_train[t].append(float(np.mean(train_accs)))
            per_window_val[t].append(float(np.mean(val_accs)))
            rep_val_means[t] = per_window_val[t][-1]
        best = max(rep_val_means.values())
        best_t = min(t for t, v in rep_val_means.items() if v >= best)
        best_freq[best_t] += 1

    windows = [
        WindowStats(
            t=t,
            seconds=window_to_seconds(t, plan.delta, rate),
            train_mean=float(np.mean(per_window_train[t])),
            train_std=float(np.std(per_window_train[t])),
            val_mean=float(np.mean(per_window_val[t])),
            val_std=float(np.std(per_window_val[t])),
            best_freq=best_freq[t],
        )
        for t in t_values
    ]
    return WindowSweepResult(plan=plan, repetitions=repetitions, windows=windows)


def select_earliest(result: WindowSweepResult, epsilon: float = 0.01) -> int:
    """Smallest window whose validation mean is within epsilon of the best."""
    if not result.windows or epsilon < 0:
        raise InputError("need a non-empty sweep and epsilon >= 0")
    best = max(w.val_mean for w in result.windows)
    return min(w.t for w in result.windows if w.val_mean >= best - epsilon)


@dataclass
class OnlineSession:
    """Streams sensor frames into a trained window-t model; emits once."""

    classifier: MlpClassifier
    plan: WindowPlan
    t: int
    _frames: list = field(default_factory=list)
    emitted: str | None = None
    samples_seen: int = 0

    @property
    def threshold(self) -> int:
        return self.t * self.plan.delta

    def feed(self, sensor_frame) -> str | None:
        """Buffer one frame of 6 sensor readings; return the label exactly
        once, when t*delta frames have accumulated. Later frames are ignored."""
        frame = np.asarray(sensor_frame, dtype=float)
        if frame.shape != (6,) or not np.isfinite(frame).all():
            raise InputError("frame must be 6 finite sensor readings")
        if self.emitted is not None:
            return None
        self._frames.append(frame)
        self.samples_seen += 1
        if self.samples_seen < self.threshold:
            return None
        block = np.stack(self._frames)  # (t*delta, 6)
        x = block.T.reshape(-1)  # sensor-major flattening
        self.emitted = str(self.classifier.predict(x[None, :])[0])
        return self.emitted


def replay_measurement(session: OnlineSession, m: Measurement) -> str | None:
    """Feed a recorded measurement frame-by-frame from the plan start."""
    traces = [tr.samples for tr in sorted(m.traces, key=lambda tr: tr.sensor_index)]
    for k in range(session.plan.start_index, m.n_points):
        label = session.feed([tr[k] for tr in traces])
        if label is not None:
            return label
    return session.emitted
