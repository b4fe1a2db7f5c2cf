import numpy as np
import pytest

from winenose.errors import InputError
from winenose.mlp import MlpClassifier
from winenose.windows import (
    OnlineSession,
    WindowPlan,
    WindowStats,
    WindowSweepResult,
    replay_measurement,
    select_earliest,
    slice_window,
    sweep,
    window_matrix,
    window_to_seconds,
)


class TestPlanArithmetic:
    def test_canonical_count_is_63(self):
        assert WindowPlan().count == 63

    def test_seconds_per_window(self):
        assert window_to_seconds(1, 50, 18.5) == pytest.approx(2.70, abs=0.01)
        assert window_to_seconds(13, 50, 18.5) == pytest.approx(35.13, abs=0.01)
        assert window_to_seconds(24, 50, 18.5) == pytest.approx(64.86, abs=0.01)

    def test_invalid_plan(self):
        with pytest.raises(InputError):
            WindowPlan(start_index=0, end_index=10, delta=50)


class TestSlicing:
    def test_window_1_length(self, noiseless_dataset):
        x = slice_window(noiseless_dataset.measurements[0], WindowPlan(), 1)
        assert x.shape == (300,)

    def test_last_window_covers_interval(self, noiseless_dataset):
        x = slice_window(noiseless_dataset.measurements[0], WindowPlan(), 63)
        assert x.shape == (18900,)

    def test_prefix_property(self, noiseless_dataset):
        m = noiseless_dataset.measurements[0]
        plan = WindowPlan()
        for t in (1, 2, 5):
            a = slice_window(m, plan, t).reshape(6, -1)
            b = slice_window(m, plan, t + 1).reshape(6, -1)
            np.testing.assert_array_equal(a, b[:, : t * plan.delta])

    def test_sensor_major_order(self, noiseless_dataset):
        m = noiseless_dataset.measurements[0]
        plan = WindowPlan()
        x = slice_window(m, plan, 1)
        for s in range(6):
            np.testing.assert_array_equal(
                x[s * 50 : (s + 1) * 50],
                m.traces[s].samples[150:200],
            )

    def test_out_of_range_window(self, noiseless_dataset):
        with pytest.raises(InputError):
            slice_window(noiseless_dataset.measurements[0], WindowPlan(), 64)


def fake_sweep(val_means):
    plan = WindowPlan()
    windows = [
        WindowStats(t=t, seconds=window_to_seconds(t, 50, 18.5),
                    train_mean=1.0, train_std=0.0, val_mean=v, val_std=0.0,
                    best_freq=0)
        for t, v in enumerate(val_means, start=1)
    ]
    return WindowSweepResult(plan=plan, repetitions=1, windows=windows)


class TestSelectEarliest:
    def test_near_best_first_window(self):
        assert select_earliest(fake_sweep([0.97, 0.98, 0.98]), 0.01) == 1

    def test_zero_slack_is_argmax(self):
        assert select_earliest(fake_sweep([0.5, 0.7, 0.9]), 0.0) == 3

    def test_all_equal_picks_first(self):
        assert select_earliest(fake_sweep([0.9, 0.9, 0.9]), 0.0) == 1

    def test_monotone_in_epsilon(self):
        rng = np.random.default_rng(0)
        means = list(rng.uniform(0.5, 1.0, 20))
        chosen = [select_earliest(fake_sweep(means), e) for e in (0.0, 0.05, 0.2)]
        assert chosen == sorted(chosen, reverse=True)


class TestSweep:
    def test_shape_contract(self, desk_dataset):
        res = sweep(
            desk_dataset,
            WindowPlan(),
            protocol=("kfold", 3),
            train_cfg={"epochs": 10, "learning_rate": 0.05},
            repetitions=2,
            t_values=[1, 2],
        )
        assert len(res.windows) == 2
        assert sum(w.best_freq for w in res.windows) == 2
        for w in res.windows:
            assert 0.0 <= w.val_mean <= 1.0
            assert 0.0 <= w.train_mean <= 1.0

    def test_report_serialization(self, tmp_path):
        res = fake_sweep([0.9, 0.95])
        import json

        payload = json.loads(res.to_json())
        assert len(payload["windows"]) == 2
        res.write_csv(tmp_path / "sweep.csv")
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("t,seconds")
        assert len(lines) == 3


@pytest.fixture(scope="module")
def trained(desk_dataset):
    plan = WindowPlan()
    X, labels, _ = window_matrix(desk_dataset, plan, 1)
    clf = MlpClassifier(epochs=150, learning_rate=0.05).fit(X, labels)
    return plan, clf


class TestOnlineSession:
    def test_emits_exactly_on_threshold(self, trained, desk_dataset):
        plan, clf = trained
        m = desk_dataset.measurements[0]
        session = OnlineSession(classifier=clf, plan=plan, t=1)
        traces = [tr.samples for tr in m.traces]
        outputs = []
        for k in range(plan.start_index, plan.start_index + 60):
            outputs.append(session.feed([tr[k] for tr in traces]))
        assert all(o is None for o in outputs[:49])
        assert outputs[49] is not None
        assert all(o is None for o in outputs[50:])
        assert session.emitted == outputs[49]

    def test_no_emission_below_threshold(self, trained, desk_dataset):
        plan, clf = trained
        m = desk_dataset.measurements[1]
        session = OnlineSession(classifier=clf, plan=plan, t=1)
        traces = [tr.samples for tr in m.traces]
        for k in range(plan.start_index, plan.start_index + 49):
            assert session.feed([tr[k] for tr in traces]) is None
        assert session.emitted is None

    def test_online_equals_batch(self, trained, desk_dataset):
        plan, clf = trained
        for m in desk_dataset.measurements[:6]:
            session = OnlineSession(classifier=clf, plan=plan, t=1)
            online = replay_measurement(session, m)
            batch = clf.predict(slice_window(m, plan, 1)[None, :])[0]
            assert online == batch

    def test_malformed_frame(self, trained):
        plan, clf = trained
        session = OnlineSession(classifier=clf, plan=plan, t=1)
        with pytest.raises(InputError):
            session.feed([1.0, 2.0])
        with pytest.raises(InputError):
            session.feed([np.nan] * 6)
