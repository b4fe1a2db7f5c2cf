"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s tests/test_acceptance.py` to see them)."""

import itertools
import time

import numpy as np
import pytest

from winenose.evaluate import mann_whitney_u, pca_fit, pca_scores, run_experiment
from winenose.features import extract_fingerprint, fingerprint_names
from winenose.mlp import (
    MlpArchitecture,
    MlpClassifier,
    build_architecture,
    gradient_check,
    layer_param_counts,
)
from winenose.selection import rfecv_select
from winenose.svm import KernelSpec, decision_values, train_binary_svm
from winenose.windows import (
    OnlineSession,
    WindowPlan,
    replay_measurement,
    select_earliest,
    slice_window,
    sweep,
    window_matrix,
    window_to_seconds,
)


def report(number, description, ok):
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {description}")
    assert ok, f"criterion {number} failed: {description}"


def test_criterion_1_window_arithmetic():
    ok = (
        abs(window_to_seconds(1, 50, 18.5) - 2.70) <= 0.01
        and abs(window_to_seconds(13, 50, 18.5) - 35.13) <= 0.01
        and abs(window_to_seconds(24, 50, 18.5) - 64.86) <= 0.01
        and WindowPlan(150, 3300, 50).count == 63
        and abs((3330 - 150) / 18.5 - 171.89) <= 0.01
    )
    report(1, "window timing and count arithmetic", ok)


def test_criterion_2_mlp_parameter_counts():
    w1 = layer_param_counts(build_architecture(1, 50, 6, 4))
    ok = (
        w1 == [30100, 3030, 930, 930, 930, 930, 930, 124]
        and layer_param_counts(build_architecture(12, 50, 6, 4))[0] == 360100
        and layer_param_counts(build_architecture(63, 50, 6, 4))[0] == 1890100
    )
    report(2, "MLP trainable-parameter counts", ok)


def test_criterion_3_fingerprint_shape(desk_dataset):
    fv1 = extract_fingerprint(desk_dataset.measurements[0])
    fv2 = extract_fingerprint(desk_dataset.measurements[0])
    ok = (
        len(fv1.values) == 138
        and len(set(fv1.names)) == 138
        and fv1.names == fv2.names == fingerprint_names()
        and np.array_equal(fv1.values, fv2.values)
    )
    report(3, "138-feature fingerprint with stable ordering", ok)


def test_criterion_4_backprop_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(20):
        depth = int(rng.integers(2, 5))
        sizes = tuple(int(rng.integers(2, 8)) for _ in range(depth + 1))
        arch = MlpArchitecture(sizes)
        x = rng.normal(size=sizes[0])
        err = gradient_check(arch, x, int(rng.integers(sizes[-1])), seed=trial)
        worst = max(worst, err)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 60
    report(4, f"gradient check max rel err {worst:.2e} in {elapsed:.1f}s", ok)


def test_criterion_5_smo_correctness():
    rng = np.random.default_rng(7)
    worst_kkt = 0.0
    monotone = True
    for trial in range(50):
        n = int(rng.integers(6, 14))
        sep = rng.uniform(1.0, 3.0)
        X = np.vstack(
            [rng.normal(-sep, 0.8, (n, 2)), rng.normal(sep, 0.8, (n, 2))]
        )
        y = np.array([-1.0] * n + [1.0] * n)
        C = 10.0
        m = train_binary_svm(
            X, y, C=C, kernel=KernelSpec("gaussian", gamma=0.5),
            tol=1e-3, seed=trial, debug=True,
        )
        f = decision_values(m, X)
        for i in range(len(y)):
            r = y[i] * f[i] - 1.0
            a = m.alphas[i]
            if a < 1e-8:
                worst_kkt = max(worst_kkt, -r)
            elif a > C - 1e-8:
                worst_kkt = max(worst_kkt, r)
            else:
                worst_kkt = max(worst_kkt, abs(r))
        h = m.objective_history
        monotone &= all(b >= a - 1e-9 for a, b in zip(h, h[1:]))
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    xor_model = train_binary_svm(X, y, C=10.0, kernel=KernelSpec("gaussian", gamma=1.0))
    xor_ok = np.all(np.sign(decision_values(xor_model, X)) == y)
    ok = worst_kkt <= 1e-3 + 1e-9 and monotone and xor_ok
    report(5, f"SMO KKT (worst {worst_kkt:.2e}), monotone dual, XOR", ok)


def brute_force_p(a, b, alternative):
    n1, n2 = len(a), len(b)
    combined = np.concatenate([a, b])
    order = np.argsort(combined)
    ranks = np.empty(len(combined))
    ranks[order] = np.arange(1, len(combined) + 1)
    u_obs = ranks[:n1].sum() - n1 * (n1 + 1) / 2
    us = np.array(
        [sum(c) - n1 * (n1 + 1) / 2
         for c in itertools.combinations(range(1, n1 + n2 + 1), n1)]
    )
    p_less = np.mean(us <= u_obs)
    p_greater = np.mean(us >= u_obs)
    if alternative == "less":
        return p_less
    if alternative == "greater":
        return p_greater
    return min(1.0, 2 * min(p_less, p_greater))


def test_criterion_6_mann_whitney_exact():
    rng = np.random.default_rng(1)
    ok = True
    for n1 in range(1, 10):
        for n2 in range(1, 10):
            if n1 + n2 > 10:
                continue
            a = rng.normal(size=n1)
            b = rng.normal(size=n2)
            for alt in ("less", "greater", "two-sided"):
                res = mann_whitney_u(a, b, alt)
                ok &= res.method == "exact"
                ok &= abs(res.p_value - brute_force_p(a, b, alt)) < 1e-12
            ua = mann_whitney_u(a, b).u_statistic
            ub = mann_whitney_u(b, a).u_statistic
            ok &= abs(ua + ub - n1 * n2) < 1e-9
    report(6, "exact rank-sum p-values match brute-force enumeration", ok)


def test_criterion_7_pca_correctness():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 8))
    model = pca_fit(X, 8)
    gram = model.components @ model.components.T
    ortho = np.abs(gram - np.eye(8)).max() < 1e-8
    rec = pca_scores(model, X) @ model.components + model.mean
    recon = np.abs(rec - X).max() < 1e-8
    line = np.array([[i, 2 * i] for i in range(6)], dtype=float)
    rank1 = abs(pca_fit(line, 1).explained_variance_ratio[0] - 1.0) < 1e-9
    report(7, "PCA orthonormality, reconstruction, rank-1 ratio", ok := (ortho and recon and rank1))


def test_criterion_8_end_to_end_desk_scale(desk_dataset):
    start = time.perf_counter()
    conv = run_experiment(
        desk_dataset,
        pipeline="conventional",
        repetitions=5,
        seed=0,
        selection_params={"step": 10, "k": 4},
        protocol="loo",
    )
    plan = WindowPlan()
    swept = sweep(
        desk_dataset,
        plan,
        protocol=("kfold", 4),
        train_cfg={"epochs": 200, "learning_rate": 0.05},
        repetitions=5,
        seed=0,
        t_values=[1, 2, 3, 4, 6],
    )
    window1 = next(w for w in swept.windows if w.t == 1)
    chosen = select_earliest(swept, epsilon=0.01)
    chosen_seconds = window_to_seconds(chosen, plan.delta, 18.5)
    elapsed = time.perf_counter() - start
    ok = (
        conv.val_mean >= 0.95
        and window1.val_mean >= 0.95
        and chosen_seconds < conv.recognition_seconds / 10
        and elapsed < 15 * 60
    )
    report(
        8,
        f"conventional LOO {conv.val_mean:.3f}, window-1 {window1.val_mean:.3f},"
        f" earliest window {chosen} ({chosen_seconds:.2f}s vs"
        f" {conv.recognition_seconds:.0f}s span), {elapsed:.0f}s total",
        ok,
    )


def test_criterion_9_online_batch_equivalence(desk_dataset):
    plan = WindowPlan()
    ok = True
    for t in (1, 5, 13):
        X, labels, _ = window_matrix(desk_dataset, plan, t)
        clf = MlpClassifier(epochs=60, learning_rate=0.05).fit(X, labels)
        for m in desk_dataset.measurements:
            session = OnlineSession(classifier=clf, plan=plan, t=t)
            online = replay_measurement(session, m)
            ok &= session.samples_seen == t * plan.delta
            batch = clf.predict(slice_window(m, plan, t)[None, :])[0]
            ok &= online == batch
    report(9, "online emission at t*delta frames equals batch prediction", ok)


def test_criterion_10_rfecv_sanity():
    classes = ["c0", "c1", "c2", "c3", "c4"]
    rows_per = 12
    all_ok = True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        y = np.repeat(classes, rows_per)
        X = rng.normal(0, 1.0, size=(len(y), 138))
        for ci in range(5):
            X[y == classes[ci], ci] += 4.0
        groups = np.concatenate(
            [[f"{c}-b{i % 2}" for i in range(rows_per)] for c in classes]
        )
        res = rfecv_select(X, y, groups, k=5, step=5, kernel_scale=3.0, seed=seed)
        planted_kept = set(range(5)) <= set(res.chosen_indices)
        noise_kept = len([i for i in res.chosen_indices if i >= 5])
        all_ok &= planted_kept and noise_kept <= 0.2 * 133
    report(10, "planted features survive RFECV, >=80% of noise eliminated", all_ok)
