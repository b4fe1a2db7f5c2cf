"""Dense deep MLP for raw-window classification, trained from scratch.

Architecture is fixed to eight fully connected layers (100, then six hidden
layers of 30, then the class outputs) on a flattened window of sensor
samples. Hidden layers use ReLU, the output is a softmax trained with
cross-entropy via seeded mini-batch SGD, so runs are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import InputError, TrainingError

MLP_FORMAT_VERSION = 1

HIDDEN_WIDTHS = (100, 30, 30, 30, 30, 30, 30)


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer sizes including input and output."""

    layer_sizes: tuple[int, ...]

    @property
    def n_weight_layers(self) -> int:
        return len(self.layer_sizes) - 1


@dataclass
class TrainConfig:
    seed: int = 0
    learning_rate: float = 0.01
    batch_size: int = 16
    epochs: int = 300
    patience: int | None = None  # early stop on held-out slice, if set

    def validate(self):
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be > 0")
        if self.epochs < 1:
            raise InputError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")


def build_architecture(t: int, delta: int, n_sensors: int, n_classes: int) -> MlpArchitecture:
    """Architecture for window index t: input n_sensors * t * delta."""
    if t < 1 or delta < 1 or n_sensors < 1 or n_classes < 2:
        raise InputError("invalid architecture arguments")
    return MlpArchitecture((n_sensors * t * delta, *HIDDEN_WIDTHS, n_classes))


def param_count(a: MlpArchitecture) -> int:
    """Total trainable parameters: sum of (in * out + out) per layer."""
    sizes = a.layer_sizes
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


def layer_param_counts(a: MlpArchitecture) -> list[int]:
    sizes = a.layer_sizes
    return [sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1)]


def scale_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column min and max from training rows."""
    X = np.asarray(X, dtype=float)
    return X.min(axis=0), X.max(axis=0)


def scale_apply(params, X: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1] on training extrema; no clipping of held-out
    values, constant columns map to 0."""
    lo, hi = params
    X = np.asarray(X, dtype=float)
    span = hi - lo
    out = np.zeros_like(X)
    nz = span > 0
    out[:, nz] = (X[:, nz] - lo[nz]) / span[nz]
    return out


def _init_params(a: MlpArchitecture, rng: np.random.Generator):
    weights, biases = [], []
    for fan_in, fan_out in zip(a.layer_sizes[:-1], a.layer_sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)  # He-style fan-in scaling, uniform
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class MlpModel:
    architecture: MlpArchitecture
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    scaling: tuple[np.ndarray, np.ndarray] | None = None
    classes: list[str] | None = None


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probability vector(s); rows sum to 1."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != model.architecture.layer_sizes[0]:
        raise InputError(
            f"input size {X.shape[1]} != {model.architecture.layer_sizes[0]}"
        )
    p = _forward_pass(model.weights, model.biases, X)[-1]
    return p[0] if np.ndim(x) == 1 else p


def _forward_pass(weights, biases, X):
    """Activations per layer; last entry is the softmax output."""
    acts = [X]
    a = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        a = _softmax(z) if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts


def _backward_pass(weights, acts, Y_onehot):
    """Gradients of mean cross-entropy w.r.t. every weight and bias."""
    n = Y_onehot.shape[0]
    grads_W, grads_b = [None] * len(weights), [None] * len(weights)
    delta = (acts[-1] - Y_onehot) / n  # softmax + cross-entropy shortcut
    for i in range(len(weights) - 1, -1, -1):
        grads_W[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return grads_W, grads_b


def _loss(weights, biases, X, Y_onehot):
    p = _forward_pass(weights, biases, X)[-1]
    return float(-np.mean(np.sum(Y_onehot * np.log(p + 1e-12), axis=1)))


def train(
    architecture: MlpArchitecture,
    X,
    y_indices,
    cfg: TrainConfig,
) -> MlpModel:
    """Mini-batch SGD on cross-entropy; deterministic for a given seed.

    `y_indices` are integer class indices into the output layer.
    """
    cfg.validate()
    X = np.asarray(X, dtype=float)
    y_indices = np.asarray(y_indices, dtype=int)
    n_classes = architecture.layer_sizes[-1]
    if X.shape[1] != architecture.layer_sizes[0]:
        raise TrainingError(
            f"rows have {X.shape[1]} columns, architecture wants"
            f" {architecture.layer_sizes[0]}"
        )
    if y_indices.min() < 0 or y_indices.max() >= n_classes:
        raise TrainingError("label index outside the output layer")
    Y = np.eye(n_classes)[y_indices]

    rng = np.random.default_rng(cfg.seed)
    weights, biases = _init_params(architecture, rng)

    holdout = None
    if cfg.patience is not None and len(X) >= 10:
        k = max(1, len(X) // 5)
        perm = rng.permutation(len(X))
        holdout = (X[perm[:k]], Y[perm[:k]])
        X, Y = X[perm[k:]], Y[perm[k:]]

    best = None
    best_loss = np.inf
    stale = 0
    n = len(X)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            acts = _forward_pass(weights, biases, X[idx])
            gW, gb = _backward_pass(weights, acts, Y[idx])
            for i in range(len(weights)):
                weights[i] -= cfg.learning_rate * gW[i]
                biases[i] -= cfg.learning_rate * gb[i]
        cur = _loss(weights, biases, X, Y)
        if not np.isfinite(cur):
            raise TrainingError(f"training diverged at epoch {epoch}")
        if holdout is not None:
            val = _loss(weights, biases, *holdout)
            if val < best_loss - 1e-6:
                best_loss = val
                best = ([w.copy() for w in weights], [b.copy() for b in biases])
                stale = 0
            else:
                stale += 1
                if stale > cfg.patience:
                    break
    if best is not None:
        weights, biases = best
    return MlpModel(architecture=architecture, weights=weights, biases=biases)


def _relu_masks(weights, biases, X):
    masks = []
    a = X
    for i, (W, b) in enumerate(zip(weights[:-1], biases[:-1])):
        z = a @ W + b
        masks.append(z > 0)
        a = np.maximum(z, 0.0)
    return masks


def gradient_check(architecture: MlpArchitecture, x, y_index: int, epsilon: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Parameters whose perturbation flips a ReLU activation are excluded:
    the loss is not differentiable across the kink, so the comparison is
    meaningless there.
    """
    rng = np.random.default_rng(seed)
    weights, biases = _init_params(architecture, rng)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    Y = np.eye(architecture.layer_sizes[-1])[[y_index]]

    acts = _forward_pass(weights, biases, X)
    gW, gb = _backward_pass(weights, acts, Y)

    worst = 0.0
    for params, grads in ((weights, gW), (biases, gb)):
        for P, G in zip(params, grads):
            flat = P.ravel()
            gflat = G.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + epsilon
                lp = _loss(weights, biases, X, Y)
                mp = _relu_masks(weights, biases, X)
                flat[idx] = orig - epsilon
                lm = _loss(weights, biases, X, Y)
                mm = _relu_masks(weights, biases, X)
                flat[idx] = orig
                if any(np.any(a != b) for a, b in zip(mp, mm)):
                    continue
                numeric = (lp - lm) / (2.0 * epsilon)
                denom = max(abs(numeric) + abs(gflat[idx]), 1e-8)
                worst = max(worst, abs(numeric - gflat[idx]) / denom)
    return worst


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Eight-layer MLP with built-in per-column min-max scaling."""

    def __init__(self, seed=0, learning_rate=0.01, batch_size=16, epochs=300, patience=None):
        self.seed = seed
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.patience = patience

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        self.classes_ = sorted(set(y.tolist()))
        y_idx = np.asarray([self.classes_.index(v) for v in y])
        self.scaling_ = scale_fit(X)
        Xs = scale_apply(self.scaling_, X)
        arch = MlpArchitecture((X.shape[1], *HIDDEN_WIDTHS, len(self.classes_)))
        cfg = TrainConfig(
            seed=self.seed,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            patience=self.patience,
        )
        self.model_ = train(arch, Xs, y_idx, cfg)
        self.model_.scaling = self.scaling_
        self.model_.classes = [str(c) for c in self.classes_]
        return self

    def predict_proba(self, X):
        Xs = scale_apply(self.scaling_, np.atleast_2d(np.asarray(X, dtype=float)))
        return forward(self.model_, Xs)

    def predict(self, X):
        p = self.predict_proba(X)
        return np.asarray([self.classes_[i] for i in np.argmax(p, axis=1)])

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))


def save_mlp(clf: MlpClassifier, path) -> None:
    payload = {
        "format_version": MLP_FORMAT_VERSION,
        "params": clf.get_params(),
        "classes": list(clf.classes_),
        "layer_sizes": list(clf.model_.architecture.layer_sizes),
        "weights": [w.tolist() for w in clf.model_.weights],
        "biases": [b.tolist() for b in clf.model_.biases],
        "scaling": {"lo": clf.scaling_[0].tolist(), "hi": clf.scaling_[1].tolist()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_mlp(path) -> MlpClassifier:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != MLP_FORMAT_VERSION:
        raise InputError(f"unsupported model format {payload.get('format_version')}")
    clf = MlpClassifier(**payload["params"])
    clf.classes_ = payload["classes"]
    clf.scaling_ = (np.asarray(payload["scaling"]["lo"]), np.asarray(payload["scaling"]["hi"]))
    clf.model_ = MlpModel(
        architecture=MlpArchitecture(tuple(payload["layer_sizes"])),
        weights=[np.asarray(w) for w in payload["weights"]],
        biases=[np.asarray(b) for b in payload["biases"]],
        scaling=clf.scaling_,
        classes=payload["classes"],
    )
    return clf
