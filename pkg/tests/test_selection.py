import numpy as np
import pytest

from winenose.errors import ProtocolError
from winenose.selection import (
    RfecvSelector,
    rfe_rank,
    rfecv_select,
    surviving_at_size,
)
from winenose.svm import OneVsOneSvc, linear_weights, standardize_apply, standardize_fit


def informative_2class(seed=0, n=60, n_features=10, noise=0.1):
    rng = np.random.default_rng(seed)
    y = np.array(["a"] * (n // 2) + ["b"] * (n // 2))
    X = rng.normal(size=(n, n_features))
    X[:, 0] = np.where(y == "b", 1.0, -1.0) + rng.normal(0, noise, n)
    return X, y


class TestRfeRank:
    def test_informative_feature_survives_longest(self):
        X, y = informative_2class()
        ranking = rfe_rank(X, y)
        assert ranking[0] == X.shape[1]  # eliminated last
        # cross-check with direct weight inspection on the full set
        Xs = standardize_apply(standardize_fit(X), X)
        clf = OneVsOneSvc(kernel="linear", standardize=False).fit(Xs, y)
        w = linear_weights(next(iter(clf.models_.values())))
        assert np.argmax(w * w) == 0

    def test_duplicated_informative_pair_outranks_noise(self):
        X, y = informative_2class(n_features=10)
        X = np.column_stack([X, X[:, 0]])  # feature 10 duplicates feature 0
        ranking = rfe_rank(X, y)
        assert ranking[0] > max(ranking[1:10])
        assert ranking[10] > max(ranking[1:10])

    def test_step_equal_to_n_features_is_single_pass(self):
        X, y = informative_2class(n_features=8)
        ranking = rfe_rank(X, y, step=8)
        Xs = standardize_apply(standardize_fit(X), X)
        clf = OneVsOneSvc(kernel="linear", standardize=False).fit(Xs, y)
        w = linear_weights(next(iter(clf.models_.values())))
        expected_order = np.argsort(w * w, kind="stable")
        for pos, feat in enumerate(expected_order, start=1):
            assert ranking[feat] == pos

    def test_ranking_is_permutation(self):
        X, y = informative_2class(n_features=12)
        ranking = rfe_rank(X, y, step=3)
        assert sorted(ranking) == list(range(1, 13))

    def test_constant_feature_eliminated_first(self):
        X, y = informative_2class(n_features=6)
        X[:, 3] = 7.0
        ranking = rfe_rank(X, y)
        assert ranking[3] == 1

    def test_deterministic(self):
        X, y = informative_2class()
        np.testing.assert_array_equal(rfe_rank(X, y, seed=1), rfe_rank(X, y, seed=1))


class TestRfecv:
    def test_planted_features_chosen(self):
        rng = np.random.default_rng(0)
        n = 60
        y = np.array(["a"] * 30 + ["b"] * 30)
        X = rng.normal(size=(n, 40))
        X[:, 0] = np.where(y == "b", 1.5, -1.5) + rng.normal(0, 0.2, n)
        groups = np.repeat(np.arange(10), 6)
        res = rfecv_select(X, y, groups, k=5, step=2, kernel_scale=3.0)
        assert 0 in res.chosen_indices
        assert res.chosen_size <= 20
        assert res.chosen_size == len(res.chosen_indices)
        assert sorted(res.ranking) == list(range(1, 41))

    def test_all_noise_picks_small_subset(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 12))
        y = np.array(["a"] * 20 + ["b"] * 20)
        groups = np.repeat(np.arange(8), 5)
        res = rfecv_select(X, y, groups, k=4, step=3, kernel_scale=3.0)
        # flat cv curve: tie-break lands on a small evaluated size
        accs = [a for _, a in res.cv_curve]
        assert max(accs) - min(accs) < 0.35
        assert res.chosen_size <= 6

    def test_chosen_set_lies_on_elimination_path(self):
        X, y = informative_2class(n_features=20)
        groups = np.repeat(np.arange(10), 6)
        res = rfecv_select(X, y, groups, k=5, step=4, kernel_scale=3.0)
        assert set(res.chosen_indices) == set(
            surviving_at_size(res.ranking, res.chosen_size)
        )

    def test_reproducible(self):
        X, y = informative_2class(n_features=15)
        groups = np.repeat(np.arange(10), 6)
        r1 = rfecv_select(X, y, groups, k=5, step=5, seed=3, kernel_scale=3.0)
        r2 = rfecv_select(X, y, groups, k=5, step=5, seed=3, kernel_scale=3.0)
        assert r1.chosen_indices == r2.chosen_indices
        assert r1.cv_curve == r2.cv_curve
        np.testing.assert_array_equal(r1.ranking, r2.ranking)

    def test_too_few_groups(self):
        X, y = informative_2class(n_features=5)
        groups = np.repeat(np.arange(3), 20)
        with pytest.raises(ProtocolError):
            rfecv_select(X, y, groups, k=5)

    def test_report_json(self):
        X, y = informative_2class(n_features=6)
        groups = np.repeat(np.arange(6), 10)
        res = rfecv_select(X, y, groups, k=3, step=2, kernel_scale=3.0)
        import json

        payload = json.loads(res.to_json(names=[f"f{i}" for i in range(6)]))
        assert payload["chosen_size"] == len(payload["chosen_indices"])
        assert len(payload["ranking"]) == 6
        assert payload["chosen_names"] == [f"f{i}" for i in payload["chosen_indices"]]


class TestSelectorEstimator:
    def test_fit_transform(self):
        X, y = informative_2class(n_features=12)
        groups = np.repeat(np.arange(10), 6)
        sel = RfecvSelector(k=5, step=4, kernel_scale=3.0).fit(X, y, groups=groups)
        Xt = sel.transform(X)
        assert Xt.shape == (60, sel.result_.chosen_size)
