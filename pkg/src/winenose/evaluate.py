"""Evaluation protocols, the rank-sum comparison test, and PCA exploration.

Also home of `run_experiment`, which executes either full pipeline
(conventional feature-based SVM or rapid rising-window MLP) under repeated
grouped evaluation and returns an accuracy/timing report.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import InputError
from .features import fingerprint_matrix
from .mlp import MlpClassifier
from .protocols import FoldPlan, grouped_kfold, loo_by_bottle
from .selection import rfecv_select
from .svm import OneVsOneSvc
from .windows import WindowPlan, window_matrix, window_to_seconds

__all__ = [
    "FoldPlan",
    "grouped_kfold",
    "loo_by_bottle",
    "mann_whitney_u",
    "StatTestResult",
    "pca_fit",
    "pca_scores",
    "PcaModel",
    "run_experiment",
    "RunReport",
]


# ---------------------------------------------------------------------------
# Mann-Whitney-Wilcoxon


@dataclass
class StatTestResult:
    u_statistic: float
    p_value: float
    alternative: str
    method: str  # "exact" or "normal-approximation"


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _u_distribution(n1: int, n2: int) -> np.ndarray:
    """Frequency table of U over all C(n1+n2, n1) rank assignments (no ties)."""
    max_u = n1 * n2
    # f[i][u]: ways to assign the smallest i+j ranks with i in sample 1
    table = {(0, 0): np.array([1.0])}
    for total in range(1, n1 + n2 + 1):
        new_table = {}
        for i in range(max(0, total - n2), min(n1, total) + 1):
            j = total - i
            acc = np.zeros(max_u + 1)
            # largest rank so far goes to sample 1: it beats all j sample-2
            # elements, adding j to U
            if i > 0 and (i - 1, j) in table:
                prev = table[(i - 1, j)]
                acc[j : j + len(prev)] += prev[: max_u + 1 - j]
            # or to sample 2: U unchanged
            if j > 0 and (i, j - 1) in table:
                prev = table[(i, j - 1)]
                acc[: len(prev)] += prev
            new_table[(i, j)] = acc
        table = new_table
    return table[(n1, n2)]


def mann_whitney_u(a, b, alternative: str = "two-sided") -> StatTestResult:
    """Rank-sum test with midrank ties.

    U counts the pairs where an `a` value exceeds a `b` value (ties 0.5).
    Exact p by enumeration when n1+n2 <= 12 and there are no ties; otherwise
    a normal approximation with tie and continuity corrections.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise InputError("both samples must be non-empty")
    if alternative not in ("two-sided", "less", "greater"):
        raise InputError(f"unknown alternative {alternative!r}")
    n1, n2 = len(a), len(b)
    combined = np.concatenate([a, b])
    ranks = _midranks(combined)
    r1 = ranks[:n1].sum()
    u = r1 - n1 * (n1 + 1) / 2.0  # U for sample a

    has_ties = len(np.unique(combined)) < len(combined)
    if n1 + n2 <= 12 and not has_ties:
        dist = _u_distribution(n1, n2)
        total = dist.sum()
        ui = int(round(u))
        p_less = dist[: ui + 1].sum() / total
        p_greater = dist[ui:].sum() / total
        if alternative == "less":
            p = p_less
        elif alternative == "greater":
            p = p_greater
        else:
            p = min(1.0, 2.0 * min(p_less, p_greater))
        return StatTestResult(u, max(p, 1e-300), alternative, "exact")

    mu = n1 * n2 / 2.0
    n = n1 + n2
    _, tie_counts = np.unique(combined, return_counts=True)
    tie_term = np.sum(tie_counts**3 - tie_counts) / (n * (n - 1))
    sigma2 = n1 * n2 / 12.0 * (n + 1 - tie_term)
    if sigma2 <= 0:
        return StatTestResult(u, 1.0, alternative, "normal-approximation")
    sigma = math.sqrt(sigma2)

    def phi(z):
        return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))

    p_less = phi((u - mu + 0.5) / sigma)
    p_greater = 1.0 - phi((u - mu - 0.5) / sigma)
    if alternative == "less":
        p = p_less
    elif alternative == "greater":
        p = p_greater
    else:
        p = min(1.0, 2.0 * min(p_less, p_greater))
    return StatTestResult(u, max(min(p, 1.0), 1e-300), alternative, "normal-approximation")


# ---------------------------------------------------------------------------
# PCA


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (n_components, n_features), orthonormal rows
    explained_variance_ratio: np.ndarray


def pca_fit(X, n_components: int) -> PcaModel:
    """Top principal components of mean-centered X via SVD."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < 2:
        raise InputError("need at least 2 rows")
    if not 1 <= n_components <= min(n - 1, p):
        raise InputError(
            f"n_components must be in [1, {min(n - 1, p)}], got {n_components}"
        )
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eig = s**2 / (n - 1)
    total = eig.sum()
    components = vt[:n_components]
    # sign convention: largest-magnitude entry of each component is positive
    for row in components:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0:
            row *= -1.0
    ratios = eig[:n_components] / total if total > 0 else np.zeros(n_components)
    return PcaModel(mean=mean, components=components, explained_variance_ratio=ratios)


def pca_scores(model: PcaModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return (X - model.mean) @ model.components.T


# ---------------------------------------------------------------------------
# Repeated pipeline runs


@dataclass
class RunReport:
    pipeline: str  # "conventional" or "rapid"
    experiment: str  # "exp1" (3-class) or "exp2" (4-class)
    repetitions: int
    train_accuracies: list[float]
    val_accuracies: list[float]
    train_seconds: float  # median wall clock per repetition
    inference_seconds: float  # median wall clock per prediction
    recognition_seconds: float  # signal span a prediction needs
    input_size: int
    config: dict = field(default_factory=dict)

    @property
    def train_mean(self):
        return float(np.mean(self.train_accuracies))

    @property
    def val_mean(self):
        return float(np.mean(self.val_accuracies))

    @property
    def val_std(self):
        return float(np.std(self.val_accuracies))

    def to_json(self) -> str:
        payload = dict(vars(self))
        payload["train_mean"] = self.train_mean
        payload["val_mean"] = self.val_mean
        payload["val_std"] = self.val_std
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        fields = {
            k: data[k]
            for k in (
                "pipeline",
                "experiment",
                "repetitions",
                "train_accuracies",
                "val_accuracies",
                "train_seconds",
                "inference_seconds",
                "recognition_seconds",
                "input_size",
                "config",
            )
        }
        return cls(**fields)

    def text_table(self) -> str:
        rows = [
            ("Pipeline", self.pipeline),
            ("Experiment", self.experiment),
            ("Average accuracy", f"{100 * self.val_mean:.2f} +/- {100 * self.val_std:.2g} %"),
            ("Training accuracy", f"{100 * self.train_mean:.2f} %"),
            ("Time for recognition (s)", f"{self.recognition_seconds:.2f}"),
            ("Time for training (s)", f"{self.train_seconds:.3f}"),
            ("Time for validation (s)", f"{self.inference_seconds:.6f}"),
            ("Input size", str(self.input_size)),
            ("Online capable", "yes" if self.pipeline == "rapid" else "no"),
            ("Preprocessing", "feature extraction + RFECV + standardize"
             if self.pipeline == "conventional" else "min-max window scaling"),
            ("Repetitions", str(self.repetitions)),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def _experiment_tag(ds: Dataset) -> str:
    return "exp2" if any(m.label == "Ea" for m in ds.measurements) else "exp1"


def _fold_accuracy(clf, X, y, train_idx, val_idx):
    t0 = time.perf_counter()
    clf.fit(X[train_idx], y[train_idx])
    train_s = time.perf_counter() - t0
    train_acc = clf.score(X[train_idx], y[train_idx])
    t0 = time.perf_counter()
    pred = clf.predict(X[val_idx])
    infer_s = (time.perf_counter() - t0) / max(1, len(val_idx))
    val_acc = float(np.mean(pred == y[val_idx]))
    return train_acc, val_acc, train_s, infer_s


def run_experiment(
    ds: Dataset,
    pipeline: str = "conventional",
    repetitions: int = 10,
    seed: int = 0,
    window_t: int = 1,
    window_plan: WindowPlan | None = None,
    svm_params: dict | None = None,
    mlp_params: dict | None = None,
    selection_params: dict | None = None,
    protocol="loo",
) -> RunReport:
    """Run the conventional or rapid pipeline under repeated grouped folds."""
    if repetitions < 1:
        raise InputError("repetitions must be >= 1")
    svm_params = dict(svm_params or {})
    mlp_params = dict(mlp_params or {})
    plan = window_plan or WindowPlan()
    rate = ds.measurements[0].sample_rate_hz
    groups = np.asarray([m.bottle_id for m in ds.measurements])
    ethanol = np.asarray([m.label == "Ea" for m in ds.measurements])

    if pipeline == "conventional":
        X, labels, _, _ = fingerprint_matrix(ds)
        labels = np.asarray(labels)
        sel = rfecv_select(
            X, labels, groups, seed=seed, **(selection_params or {})
        )
        X = X[:, sel.chosen_indices]
        input_size = X.shape[1]
        # the conventional path needs everything after the trim start
        recognition_seconds = (
            max(ds.measurements[0].n_points - plan.start_index, 0) / rate
        )
        make = lambda rep_seed: OneVsOneSvc(seed=rep_seed, **svm_params)
    elif pipeline == "rapid":
        X, labels, _ = window_matrix(ds, plan, window_t)
        input_size = X.shape[1]
        recognition_seconds = window_to_seconds(window_t, plan.delta, rate)
        make = lambda rep_seed: MlpClassifier(seed=rep_seed, **mlp_params)
    else:
        raise InputError(f"unknown pipeline {pipeline!r}")

    train_accs, val_accs = [], []
    train_times, infer_times = [], []
    for rep in range(repetitions):
        rep_seed = seed + 1000 * rep
        if protocol == "loo":
            fold_plan = loo_by_bottle(groups, ethanol_mask=ethanol)
        else:
            fold_plan = grouped_kfold(len(labels), groups, protocol[1], seed=rep_seed)
        fold_train, fold_val = [], []
        for train_idx, val_idx in fold_plan:
            tr, va, ts, ins = _fold_accuracy(
                make(rep_seed), X, labels, train_idx, val_idx
            )
            fold_train.append((tr, len(train_idx)))
            fold_val.append((va, len(val_idx)))
            train_times.append(ts)
            infer_times.append(ins)
        train_accs.append(
            float(sum(a * n for a, n in fold_train) / sum(n for _, n in fold_train))
        )
        val_accs.append(
            float(sum(a * n for a, n in fold_val) / sum(n for _, n in fold_val))
        )

    return RunReport(
        pipeline=pipeline,
        experiment=_experiment_tag(ds),
        repetitions=repetitions,
        train_accuracies=train_accs,
        val_accuracies=val_accs,
        train_seconds=float(np.median(train_times)),
        inference_seconds=float(np.median(infer_times)),
        recognition_seconds=float(recognition_seconds),
        input_size=int(input_size),
        config={
            "seed": seed,
            "protocol": list(protocol) if isinstance(protocol, tuple) else protocol,
            "window_t": window_t if pipeline == "rapid" else None,
        },
    )
