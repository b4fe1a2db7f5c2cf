"""Kernel SVM trained by sequential minimal optimization (SMO).

Binary models are combined one-vs-one with majority voting, behind a
scikit-learn style estimator that standardizes features on fit. The gamma
convention is K(x, z) = exp(-gamma * ||x - z||^2); a toolbox-style
"kernel scale" s maps to gamma = 1 / s^2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import InputError, TrainingError

SVM_FORMAT_VERSION = 1

DEFAULT_C = 10.0  # box constraint used throughout
DEFAULT_KERNEL_SCALE = 8.3  # 3-class experiment; the 4-class one uses 19


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # "gaussian" or "linear"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise InputError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and (self.gamma is None or self.gamma <= 0):
            raise InputError("gaussian kernel requires gamma > 0")
        if self.kind == "linear" and self.gamma is not None:
            raise InputError("linear kernel takes no gamma")


def gamma_from_scale(scale: float) -> float:
    """Map a toolbox KernelScale value to the exponent coefficient."""
    return 1.0 / (scale * scale)


def kernel_matrix(spec: KernelSpec, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    Z = np.atleast_2d(Z)
    if X.shape[1] != Z.shape[1]:
        raise InputError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    if spec.kind == "linear":
        return X @ Z.T
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(Z * Z, axis=1)[None, :]
        - 2.0 * (X @ Z.T)
    )
    return np.exp(-spec.gamma * np.maximum(sq, 0.0))


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population std; zero-variance columns get std 0."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise InputError("standardize_fit needs at least 2 rows")
    return X.mean(axis=0), X.std(axis=0)


def standardize_apply(params, X: np.ndarray) -> np.ndarray:
    mean, std = params
    X = np.asarray(X, dtype=float)
    out = X - mean
    nonzero = std > 0
    out[:, nonzero] /= std[nonzero]
    out[:, ~nonzero] = 0.0
    return out


@dataclass
class SvmBinaryModel:
    """Result of SMO training for one class pair (labels -1 -> neg, +1 -> pos)."""

    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for support vectors
    bias: float
    kernel: KernelSpec
    neg_label: str
    pos_label: str
    # full training-time state, kept for diagnostics (not serialized)
    alphas: np.ndarray | None = field(default=None, repr=False)
    objective_history: list[float] | None = field(default=None, repr=False)


def _dual_objective(alphas, y, K):
    ay = alphas * y
    return alphas.sum() - 0.5 * ay @ K @ ay


def train_binary_svm(
    X,
    y,
    C: float = DEFAULT_C,
    kernel: KernelSpec = KernelSpec("linear"),
    tol: float = 1e-3,
    max_passes: int = 10,
    seed: int = 0,
    debug: bool = False,
    max_total_passes: int = 2000,
) -> SvmBinaryModel:
    """Simplified SMO: pairwise updates with random second index.

    Stops after `max_passes` consecutive full passes without an alpha change
    (at which point every point satisfies the KKT conditions within `tol`).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(X).all():
        raise InputError("non-finite values in training data")
    if C <= 0:
        raise TrainingError("C must be > 0")
    classes = np.unique(y)
    if set(classes) != {-1.0, 1.0}:
        raise TrainingError(f"labels must be -1/+1 with both present, got {classes}")

    n = len(y)
    K = kernel_matrix(kernel, X, X)
    alphas = np.zeros(n)
    b = 0.0
    rng = np.random.default_rng(seed)
    history = [] if debug else None
    if debug:
        history.append(_dual_objective(alphas, y, K))

    passes = 0
    total = 0
    while passes < max_passes and total < max_total_passes:
        total += 1
        num_changed = 0
        f = (alphas * y) @ K + b
        for i in range(n):
            E_i = f[i] - y[i]
            r_i = y[i] * E_i
            if not ((r_i < -tol and alphas[i] < C) or (r_i > tol and alphas[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            E_j = f[j] - y[j]
            a_i_old, a_j_old = alphas[i], alphas[j]
            if y[i] != y[j]:
                L = max(0.0, a_j_old - a_i_old)
                H = min(C, C + a_j_old - a_i_old)
            else:
                L = max(0.0, a_i_old + a_j_old - C)
                H = min(C, a_i_old + a_j_old)
            if L == H:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            a_j = a_j_old - y[j] * (E_i - E_j) / eta
            a_j = min(H, max(L, a_j))
            if abs(a_j - a_j_old) < 1e-7:
                continue
            a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
            alphas[i], alphas[j] = a_i, a_j
            b1 = (
                b
                - E_i
                - y[i] * (a_i - a_i_old) * K[i, i]
                - y[j] * (a_j - a_j_old) * K[i, j]
            )
            b2 = (
                b
                - E_j
                - y[i] * (a_i - a_i_old) * K[i, j]
                - y[j] * (a_j - a_j_old) * K[j, j]
            )
            if 0 < a_i < C:
                b = b1
            elif 0 < a_j < C:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            f = (alphas * y) @ K + b
            num_changed += 1
            if debug:
                history.append(_dual_objective(alphas, y, K))
        passes = passes + 1 if num_changed == 0 else 0

    sv = alphas > 1e-8
    return SvmBinaryModel(
        support_vectors=X[sv],
        dual_coef=(alphas * y)[sv],
        bias=float(b),
        kernel=kernel,
        neg_label="-1",
        pos_label="+1",
        alphas=alphas,
        objective_history=history,
    )


def decision_value(model: SvmBinaryModel, x) -> float:
    return float(decision_values(model, np.atleast_2d(x))[0])


def decision_values(model: SvmBinaryModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.support_vectors.size == 0:
        return np.full(X.shape[0], model.bias)
    K = kernel_matrix(model.kernel, X, model.support_vectors)
    return K @ model.dual_coef + model.bias


def predict_binary(model: SvmBinaryModel, x) -> int:
    """Sign of the decision value; an exact zero counts as +1."""
    return 1 if decision_value(model, x) >= 0 else -1


def linear_weights(model: SvmBinaryModel) -> np.ndarray:
    """Primal weight vector (linear kernel only)."""
    if model.kernel.kind != "linear":
        raise InputError("weights are only defined for linear kernels")
    return model.dual_coef @ model.support_vectors


class OneVsOneSvc(BaseEstimator, ClassifierMixin):
    """One-vs-one multiclass kernel SVM with built-in standardization.

    Parameters mirror the conventional-pipeline configuration: gaussian
    kernel with a toolbox-style scale (gamma = 1/scale^2), box constraint
    C = 10, data standardization on.
    """

    def __init__(
        self,
        C=DEFAULT_C,
        kernel="gaussian",
        kernel_scale=DEFAULT_KERNEL_SCALE,
        gamma=None,
        tol=1e-3,
        max_passes=10,
        seed=0,
        standardize=True,
    ):
        self.C = C
        self.kernel = kernel
        self.kernel_scale = kernel_scale
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes
        self.seed = seed
        self.standardize = standardize

    def _kernel_spec(self) -> KernelSpec:
        if self.kernel == "linear":
            return KernelSpec("linear")
        gamma = self.gamma if self.gamma is not None else gamma_from_scale(self.kernel_scale)
        return KernelSpec("gaussian", gamma=gamma)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        classes = sorted(set(y.tolist()))
        if len(classes) < 2:
            raise TrainingError("need at least 2 classes")
        for c in classes:
            if np.sum(y == c) < 1:
                raise TrainingError(f"class {c!r} has no rows")
        if self.standardize:
            self.scaler_ = standardize_fit(X)
            Xs = standardize_apply(self.scaler_, X)
        else:
            self.scaler_ = None
            Xs = X
        spec = self._kernel_spec()
        self.classes_ = classes
        self.models_ = {}
        for a_idx in range(len(classes)):
            for b_idx in range(a_idx + 1, len(classes)):
                neg, pos = classes[a_idx], classes[b_idx]
                mask = (y == neg) | (y == pos)
                yy = np.where(y[mask] == pos, 1.0, -1.0)
                model = train_binary_svm(
                    Xs[mask],
                    yy,
                    C=self.C,
                    kernel=spec,
                    tol=self.tol,
                    max_passes=self.max_passes,
                    seed=self.seed,
                )
                model.neg_label = str(neg)
                model.pos_label = str(pos)
                self.models_[(neg, pos)] = model
        return self

    def _transform(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.scaler_ is not None:
            X = standardize_apply(self.scaler_, X)
        return X

    def predict(self, X):
        X = self._transform(X)
        n = X.shape[0]
        votes = {c: np.zeros(n) for c in self.classes_}
        margin = {c: np.zeros(n) for c in self.classes_}
        for (neg, pos), model in self.models_.items():
            d = decision_values(model, X)
            pos_wins = d >= 0
            votes[pos] += pos_wins
            votes[neg] += ~pos_wins
            margin[pos] += np.abs(d)
            margin[neg] += np.abs(d)
        out = []
        for i in range(n):
            best = max(votes[c][i] for c in self.classes_)
            tied = [c for c in self.classes_ if votes[c][i] == best]
            if len(tied) > 1:
                tied.sort(key=lambda c: (-margin[c][i], str(c)))
            out.append(tied[0])
        return np.asarray(out)

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))


def save_svm(clf: OneVsOneSvc, path) -> None:
    """Serialize a fitted one-vs-one model to version-tagged JSON."""
    payload = {
        "format_version": SVM_FORMAT_VERSION,
        "params": clf.get_params(),
        "classes": list(clf.classes_),
        "scaler": None
        if clf.scaler_ is None
        else {"mean": clf.scaler_[0].tolist(), "std": clf.scaler_[1].tolist()},
        "models": [
            {
                "neg": str(neg),
                "pos": str(pos),
                "kernel": {"kind": m.kernel.kind, "gamma": m.kernel.gamma},
                "support_vectors": m.support_vectors.tolist(),
                "dual_coef": m.dual_coef.tolist(),
                "bias": m.bias,
            }
            for (neg, pos), m in clf.models_.items()
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_svm(path) -> OneVsOneSvc:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != SVM_FORMAT_VERSION:
        raise InputError(f"unsupported model format {payload.get('format_version')}")
    clf = OneVsOneSvc(**payload["params"])
    clf.classes_ = payload["classes"]
    scaler = payload["scaler"]
    clf.scaler_ = (
        None
        if scaler is None
        else (np.asarray(scaler["mean"]), np.asarray(scaler["std"]))
    )
    clf.models_ = {}
    for rec in payload["models"]:
        spec = KernelSpec(rec["kernel"]["kind"], rec["kernel"]["gamma"])
        clf.models_[(rec["neg"], rec["pos"])] = SvmBinaryModel(
            support_vectors=np.asarray(rec["support_vectors"]),
            dual_coef=np.asarray(rec["dual_coef"]),
            bias=rec["bias"],
            kernel=spec,
            neg_label=rec["neg"],
            pos_label=rec["pos"],
        )
    return clf
