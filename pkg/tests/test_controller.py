import logging

import numpy as np
import pytest

from aoipower.controller import DriftPlusPenalty, FixedRate, Schedule, SlotParams, default_baseline_schedule, run_slot
from aoipower.state import NetworkState


def params(K, dm=4.0):
    return SlotParams(W=1.0, N0=1.0, eta=1.0, delta_max=np.full(K, dm))


def test_table_schedule():
    s = default_baseline_schedule(10)
    one_based = [sorted(k + 1 for k in s.at(t)) for t in range(1, 9)]
    assert one_based == [[1], [2], [3], [4], [5, 6], [7, 8], [9, 10], [1]]
    assert sorted(k + 1 for k in s.at(0)) == [9, 10]
    s.validate(10, 10)


@pytest.mark.parametrize("K", [1, 3, 7, 8, 15, 20])
def test_generalised_schedule_covers_everyone(K):
    s = default_baseline_schedule(K)
    counts = np.zeros(K, int)
    for st in s.sets:
        assert len(st) <= -(-K // 7)
        for k in st:
            counts[k] += 1
    assert np.all(counts == 1)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule((frozenset({0, 1, 2}),)).validate(3, 2)
    with pytest.raises(ValueError):
        Schedule((frozenset({0}),)).validate(2, 2)
    with pytest.raises(ValueError):
        Schedule((frozenset({5}),)).validate(2, 2)


def test_first_slot_is_idle():
    out = run_slot(NetworkState.initial(3), np.ones((3, 3)), DriftPlusPenalty(V=1.0), params(3))
    assert not out.decision.b.any()
    assert out.decision.total_power == 0.0
    assert out.state.aoi.tolist() == [1, 1, 1]
    assert out.state.t == 1


def test_fixed_rate_follows_schedule():
    sched = default_baseline_schedule(10)
    state = NetworkState(aoi=np.full(10, 3), vqueue=np.zeros(10), t=5)
    out = run_slot(state, np.ones((10, 10)), FixedRate(sched), params(10))
    assert sorted(np.flatnonzero(out.decision.b) + 1) == [5, 6]
    assert out.state.aoi[4] == out.state.aoi[5] == 1
    assert out.state.aoi[0] == 4


def test_sampled_sensor_age_resets():
    state = NetworkState(aoi=np.array([9, 9]), vqueue=np.array([30.0, 30.0]), t=4)
    out = run_slot(state, np.ones((2, 2)), DriftPlusPenalty(V=0.01), params(2))
    assert out.decision.b.tolist() == [1, 1]
    assert out.state.aoi.tolist() == [1, 1]


def test_exhaustive_policy():
    state = NetworkState(aoi=np.array([5, 2]), vqueue=np.array([3.0, 0.0]), t=2)
    g = np.array([[1.0, 0.5], [0.2, 2.0]])
    sub = run_slot(state, g, DriftPlusPenalty(V=1.0), params(2)).decision
    exh = run_slot(state, g, DriftPlusPenalty(V=1.0, solver="exhaustive"), params(2)).decision
    assert exh.objective <= sub.objective + 1e-12


def test_forced_failure_is_skipped(caplog):
    sched = Schedule((frozenset({0, 1}),))
    g = np.array([[1.0, 1.0], [0.0, 0.0]])
    with caplog.at_level(logging.WARNING):
        out = run_slot(NetworkState.initial(2), g, FixedRate(sched), params(2))
    assert out.forced_failures == 1
    assert out.decision.b.tolist() == [1, 0]
    assert "skipped" in caplog.text


def test_all_forced_samples_fail():
    out = run_slot(NetworkState.initial(1), np.zeros((1, 1)), FixedRate(Schedule((frozenset({0}),))), params(1))
    assert out.forced_failures == 1
    assert not out.decision.b.any()
    assert out.state.aoi.tolist() == [1]


def test_policy_validation():
    with pytest.raises(ValueError):
        DriftPlusPenalty(V=-1.0)
    with pytest.raises(ValueError):
        DriftPlusPenalty(V=1.0, solver="magic")
    with pytest.raises(TypeError):
        run_slot(NetworkState.initial(1), np.ones((1, 1)), object(), params(1))
