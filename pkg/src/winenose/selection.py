"""SVM-based recursive feature elimination with cross-validated subset choice.

Ranking trains a linear-kernel one-vs-one SVM and scores each surviving
feature by the summed squared weight components across the binary models;
the lowest-scoring features are dropped each round. Subset size is then
picked by grouped k-fold accuracy of a gaussian-kernel SVM along the
elimination path (ties go to the smaller size).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import InputError
from .protocols import grouped_kfold
from .svm import OneVsOneSvc, linear_weights, standardize_apply, standardize_fit


@dataclass
class SelectionResult:
    chosen_indices: list[int]
    ranking: np.ndarray  # elimination order per feature, 1 = dropped first
    cv_curve: list[tuple[int, float]]  # (subset size, mean CV accuracy)
    chosen_size: int

    def to_json(self, names=None) -> str:
        payload = {
            "chosen_indices": list(map(int, self.chosen_indices)),
            "chosen_size": int(self.chosen_size),
            "ranking": [int(r) for r in self.ranking],
            "cv_curve": [[int(s), float(a)] for s, a in self.cv_curve],
        }
        if names is not None:
            payload["chosen_names"] = [names[i] for i in self.chosen_indices]
        return json.dumps(payload, indent=2)


def _pair_weight_scores(X, y, C, seed) -> np.ndarray:
    clf = OneVsOneSvc(C=C, kernel="linear", seed=seed, standardize=False)
    clf.fit(X, y)
    scores = np.zeros(X.shape[1])
    for model in clf.models_.values():
        w = linear_weights(model)
        scores += w * w
    return scores


def rfe_rank(X, y, step: int = 1, C: float = 10.0, seed: int = 0) -> np.ndarray:
    """Full elimination order over all features (1 = eliminated first)."""
    if step < 1:
        raise InputError("step must be >= 1")
    X = np.asarray(X, dtype=float)
    X = standardize_apply(standardize_fit(X), X)
    y = np.asarray(y)
    n_features = X.shape[1]
    remaining = list(range(n_features))
    ranking = np.zeros(n_features, dtype=int)
    order = 0
    while remaining:
        scores = _pair_weight_scores(X[:, remaining], y, C, seed)
        drop = min(step, len(remaining))
        worst = np.argsort(scores, kind="stable")[:drop]
        for local in sorted(worst, key=lambda i: scores[i]):
            order += 1
            ranking[remaining[local]] = order
        for local in sorted(worst, reverse=True):
            del remaining[local]
    return ranking


def surviving_at_size(ranking: np.ndarray, size: int) -> list[int]:
    """Features still alive when `size` of them remain on the elimination path."""
    n = len(ranking)
    return [i for i in range(n) if ranking[i] > n - size]


def rfecv_select(
    X,
    y,
    groups,
    k: int = 5,
    step: int = 1,
    C: float = 10.0,
    kernel_scale: float = 8.3,
    seed: int = 0,
) -> SelectionResult:
    """Rank features, then pick the subset size with best grouped-CV accuracy."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    ranking = rfe_rank(X, y, step=step, C=C, seed=seed)
    n_features = X.shape[1]

    sizes = []
    s = n_features
    while s > 0:
        sizes.append(s)
        s -= step
    sizes = sorted(set(sizes))

    plan = grouped_kfold(len(y), groups, k, seed=seed)
    curve = []
    for size in sizes:
        cols = surviving_at_size(ranking, size)
        accs = []
        for train, val in plan:
            clf = OneVsOneSvc(C=C, kernel_scale=kernel_scale, seed=seed)
            clf.fit(X[np.ix_(train, cols)], y[train])
            accs.append(clf.score(X[np.ix_(val, cols)], y[val]))
        curve.append((size, float(np.mean(accs))))

    best_acc = max(acc for _, acc in curve)
    chosen_size = min(size for size, acc in curve if acc >= best_acc - 1e-12)
    chosen = surviving_at_size(ranking, chosen_size)
    return SelectionResult(
        chosen_indices=chosen,
        ranking=ranking,
        cv_curve=curve,
        chosen_size=chosen_size,
    )


class RfecvSelector(BaseEstimator, TransformerMixin):
    """Transformer wrapper: fit runs RFECV, transform keeps chosen columns."""

    def __init__(self, k=5, step=1, C=10.0, kernel_scale=8.3, seed=0):
        self.k = k
        self.step = step
        self.C = C
        self.kernel_scale = kernel_scale
        self.seed = seed

    def fit(self, X, y, groups=None):
        if groups is None:
            groups = np.arange(len(y))  # each row its own group
        self.result_ = rfecv_select(
            X,
            y,
            groups,
            k=self.k,
            step=self.step,
            C=self.C,
            kernel_scale=self.kernel_scale,
            seed=self.seed,
        )
        return self

    def transform(self, X):
        return np.asarray(X)[:, self.result_.chosen_indices]
