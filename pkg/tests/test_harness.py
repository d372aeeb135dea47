import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoipower.channel import ChannelStream
from aoipower.config import ConfigError, SystemConfig
from aoipower.harness import (
    compare_solvers,
    metrics_from_trace,
    read_trace_csv,
    run_simulation,
    sweep,
    write_outputs,
    write_sweep_csv,
)
from aoipower.solver import GuardError
from aoipower.state import NetworkState
from golden_run import golden_config

GOLDEN = Path(__file__).parent / "golden"


def small(**kw):
    base = dict(K=4, N=4, T=300, seed=7)
    base.update(kw)
    return SystemConfig(**base)


def test_single_slot_spends_nothing():
    m, tr = run_simulation(small(T=1))
    assert m.avg_total_power == 0.0
    assert tr.b.sum() == 0


def test_deterministic():
    a, ta = run_simulation(small())
    b, tb = run_simulation(small())
    assert a.same_as(b)
    assert np.array_equal(ta.b, tb.b)


def test_seed_changes_run():
    a, _ = run_simulation(small(seed=1))
    b, _ = run_simulation(small(seed=2))
    assert a.avg_total_power != b.avg_total_power


@settings(max_examples=15)
@given(
    st.integers(1, 5),
    st.integers(1, 5),
    st.integers(1, 120),
    st.integers(0, 10**6),
    st.sampled_from(["dpp", "fixed_rate"]),
    st.floats(1.5, 6.0),
)
def test_metrics_recompute_from_trace(K, N, T, seed, policy, dm):
    cfg = small(K=K, N=N, T=T, seed=seed, policy=policy, delta_max=dm)
    if policy == "fixed_rate" and -(-K // 7) > N:
        return
    m, tr = run_simulation(cfg)
    assert m.same_as(metrics_from_trace(tr, cfg.delta_max_vector))


def test_trace_matches_state_recursions():
    cfg = small(T=200)
    _, tr = run_simulation(cfg)
    state = NetworkState.initial(cfg.K)
    for t in range(cfg.T):
        assert np.array_equal(tr.aoi[t], state.aoi)
        assert np.array_equal(tr.vqueue[t], state.vqueue)
        state = state.advance(tr.b[t], cfg.delta_max_vector)
    assert np.array_equal(tr.final_aoi, state.aoi)


def test_csv_roundtrip_reproduces_metrics(tmp_path):
    cfg = small(T=150)
    m, tr = run_simulation(cfg)
    write_outputs(tmp_path, m, tr, cfg)
    cols = read_trace_csv(tmp_path / "trace.csv")
    aoi = np.column_stack([cols[f"delta_{k + 1}"] for k in range(cfg.K)])
    vq = np.column_stack([cols[f"Q_{k + 1}"] for k in range(cfg.K)])
    assert np.array_equal(aoi, tr.aoi)
    assert np.array_equal(vq, tr.vqueue)
    assert np.array_equal(cols["total_power"], tr.power)
    assert np.array_equal(cols["b_mask"], tr.bitmask())
    assert float(np.cumsum(cols["total_power"])[-1] / cfg.T) == m.avg_total_power
    assert np.array_equal(aoi.sum(axis=0) / cfg.T, m.avg_aoi)
    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert doc["avg_total_power"] == m.avg_total_power
    assert doc["config"]["T"] == 150


def test_dpp_decisions_feasible_on_run():
    cfg = small(T=100)
    m, tr = run_simulation(cfg)
    assert np.all(tr.b.sum(axis=1) <= cfg.N)
    assert np.all(tr.objective <= 0.0)
    assert m.infeasible == 0


def test_config_errors_before_first_slot():
    with pytest.raises(ConfigError):
        run_simulation(small(T=0))


def test_singleton_sweep_is_a_run():
    cfg = small(T=120)
    rows = sweep("V", [cfg.V], cfg)
    m, _ = run_simulation(cfg)
    assert rows[0]["avg_total_power"] == m.avg_total_power
    assert rows[0]["avg_queue_sum"] == m.avg_queue_sum


def test_sweep_shares_channels():
    cfg = small()
    a = ChannelStream(cfg.replace(V=10.0).sensors, cfg.fading, cfg.seed, cfg.N)
    b = ChannelStream(cfg.replace(V=99.0, delta_max=2.5).sensors, cfg.fading, cfg.seed, cfg.N)
    for t in (0, 17, 299):
        assert np.array_equal(a.gains(t), b.gains(t))


def test_sweep_rows_and_csv(tmp_path):
    cfg = small(T=80)
    rows = sweep("deltaMax", [2, 4], cfg, seeds=[1, 2])
    assert [r["value"] for r in rows] == [2, 4]
    assert all(r["seeds"] == 2 and len(r["per_seed"]) == 2 for r in rows)
    r0 = rows[0]
    assert r0["avg_total_power"] == pytest.approx(np.mean([p["avg_total_power"] for p in r0["per_seed"]]))
    write_sweep_csv(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert len(lines) == 4


def test_sweep_rejects_bad_input():
    with pytest.raises(ValueError):
        sweep("V", [], small())
    with pytest.raises(ConfigError):
        sweep("W", [1.0], small())


def test_compare_single_cell_has_no_gap():
    rep = compare_solvers(small(K=1, N=1, T=200), trials=2)
    assert rep["gap_abs"]["max"] == 0.0
    assert rep["slots"] == 400


def test_compare_gap_nonnegative():
    rep = compare_solvers(small(K=3, N=3, T=300))
    assert rep["min_gap"] >= 0.0
    assert rep["trials_detail"][0]["evaluations_exhaustive"] == 300 * 170


def test_compare_guard():
    with pytest.raises(GuardError):
        compare_solvers(small(K=6, N=5, T=2))


def test_fixed_rate_age_is_schedule_mean():
    m, tr = run_simulation(SystemConfig(policy="fixed_rate", T=7 * 200, seed=3))
    assert m.forced_failures == 0
    # after one full period every sensor cycles through ages 1..7
    assert np.allclose(tr.aoi[7:].mean(axis=0), 4.0, atol=0.01)


def _load_golden_csv(path):
    lines = Path(path).read_text().splitlines()
    return lines[0], lines[1], [row.split(",") for row in lines[2:]]


def test_golden_outputs(tmp_path):
    cfg = golden_config()
    m, tr = run_simulation(cfg)
    write_outputs(tmp_path, m, tr, cfg)
    v_new, h_new, rows_new = _load_golden_csv(tmp_path / "trace.csv")
    v_old, h_old, rows_old = _load_golden_csv(GOLDEN / "trace.csv")
    assert (v_new, h_new) == (v_old, h_old)
    assert len(rows_new) == len(rows_old)
    for new, old in zip(rows_new, rows_old):
        for name, a, b in zip(h_old.split(","), new, old):
            if name.startswith("Q_") or name in ("total_power", "objective"):
                assert math.isclose(float(a), float(b), rel_tol=1e-9, abs_tol=1e-300)
            else:
                assert a == b
    new = json.loads((tmp_path / "metrics.json").read_text())
    old = json.loads((GOLDEN / "metrics.json").read_text())
    assert list(new) == list(old)
    assert list(new["config"]) == list(old["config"])
    assert new["avg_aoi"] == old["avg_aoi"]
    assert new["avg_total_power"] == pytest.approx(old["avg_total_power"], rel=1e-9)
