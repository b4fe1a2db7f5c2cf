"""Group-aware evaluation fold plans (leave-one-bottle-out, grouped k-fold).

Grouping prevents leakage: all measurements from one bottle stay on the same
side of every split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError


@dataclass
class FoldPlan:
    """Ordered train/validation index splits plus provenance."""

    folds: list[tuple[np.ndarray, np.ndarray]]
    grouping: str
    seed: int | None = None

    def __len__(self):
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def loo_by_bottle(groups, ethanol_mask=None, wine_groups=None) -> FoldPlan:
    """One fold per wine bottle; each bottle's rows form that fold's validation.

    Rows flagged by `ethanol_mask` (their groups are batches, not bottles) are
    spread round-robin across the wine folds so every fold can contain ethanol
    validation rows.
    """
    groups = np.asarray(groups)
    n = len(groups)
    if ethanol_mask is None:
        ethanol_mask = np.zeros(n, dtype=bool)
    ethanol_mask = np.asarray(ethanol_mask, dtype=bool)

    wine_bottles = []
    for g in groups[~ethanol_mask]:
        if g not in wine_bottles:
            wine_bottles.append(g)
    if len(wine_bottles) < 2:
        raise ProtocolError("leave-one-bottle-out needs at least 2 bottles")

    validation = {b: list(np.flatnonzero((groups == b) & ~ethanol_mask)) for b in wine_bottles}

    # distribute ethanol batches round-robin over the bottle folds
    ethanol_batches = []
    for g in groups[ethanol_mask]:
        if g not in ethanol_batches:
            ethanol_batches.append(g)
    for i, batch in enumerate(ethanol_batches):
        target = wine_bottles[i % len(wine_bottles)]
        validation[target].extend(np.flatnonzero((groups == batch) & ethanol_mask))

    all_idx = np.arange(n)
    folds = []
    for b in wine_bottles:
        val = np.asarray(sorted(validation[b]), dtype=int)
        train = np.setdiff1d(all_idx, val)
        folds.append((train, val))
    return FoldPlan(folds=folds, grouping="bottle")


def grouped_kfold(n_rows: int, groups, k: int, seed: int = 0) -> FoldPlan:
    """Partition groups into k folds of near-equal group counts."""
    groups = np.asarray(groups)
    unique = []
    for g in groups:
        if g not in unique:
            unique.append(g)
    if k < 2 or k > len(unique):
        raise ProtocolError(f"k={k} incompatible with {len(unique)} groups")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unique))
    assignment = {unique[idx]: i % k for i, idx in enumerate(order)}
    all_idx = np.arange(n_rows)
    folds = []
    for f in range(k):
        val = np.asarray(
            [i for i in all_idx if assignment[groups[i]] == f], dtype=int
        )
        train = np.setdiff1d(all_idx, val)
        folds.append((train, val))
    return FoldPlan(folds=folds, grouping="group-kfold", seed=seed)
