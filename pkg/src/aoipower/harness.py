"""Simulation runs, parameter sweeps, solver comparison and output writers."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelStream
from .config import ConfigError, SystemConfig
from .controller import DriftPlusPenalty, run_slot
from .solver import EXHAUSTIVE_MAX_CELLS, GuardError, SlotProblem, solve_exhaustive, solve_suboptimal
from .state import NetworkState, drift_bound

log = logging.getLogger(__name__)

TRACE_SCHEMA = 1
METRICS_SCHEMA = 1
SWEEP_SCHEMA = 1
SWEEP_PARAMS = ("V", "N", "deltaMax")


@dataclass
class Trace:
    """Per-slot record; row ``t`` holds the state at the start of slot ``t``."""

    aoi: np.ndarray  # (T, K) int64
    vqueue: np.ndarray  # (T, K)
    b: np.ndarray  # (T, K) int8
    power: np.ndarray  # (T,)
    objective: np.ndarray  # (T,)
    evaluations: np.ndarray  # (T,) int64
    infeasible: np.ndarray  # (T,) int64
    forced_failures: np.ndarray  # (T,) int64
    final_aoi: np.ndarray = None
    final_vqueue: np.ndarray = None

    @classmethod
    def allocate(cls, T: int, K: int) -> "Trace":
        return cls(
            aoi=np.zeros((T, K), dtype=np.int64),
            vqueue=np.zeros((T, K)),
            b=np.zeros((T, K), dtype=np.int8),
            power=np.zeros(T),
            objective=np.zeros(T),
            evaluations=np.zeros(T, dtype=np.int64),
            infeasible=np.zeros(T, dtype=np.int64),
            forced_failures=np.zeros(T, dtype=np.int64),
        )

    @property
    def T(self) -> int:
        return self.power.shape[0]

    @property
    def K(self) -> int:
        return self.aoi.shape[1]

    def bitmask(self) -> np.ndarray:
        """Sampling vector per slot packed with sensor 1 in bit 0."""
        weights = np.left_shift(np.int64(1), np.arange(self.K, dtype=np.int64))
        return self.b.astype(np.int64) @ weights

    def write_csv(self, path) -> None:
        K = self.K
        header = (
            ["t"]
            + [f"delta_{k + 1}" for k in range(K)]
            + [f"Q_{k + 1}" for k in range(K)]
            + ["b_mask", "total_power", "objective", "evaluations"]
        )
        masks = self.bitmask()
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema_version={TRACE_SCHEMA}\n")
            w = csv.writer(fh)
            w.writerow(header)
            for t in range(self.T):
                w.writerow(
                    [t]
                    + self.aoi[t].tolist()
                    + [repr(float(q)) for q in self.vqueue[t]]
                    + [int(masks[t]), repr(float(self.power[t])), repr(float(self.objective[t])), int(self.evaluations[t])]
                )


def read_trace_csv(path) -> dict:
    """Columns of a written trace as arrays keyed by header name."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema_version="):
            raise ValueError("missing schema_version line")
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in body]
        if name.startswith("Q_") or name in ("total_power", "objective"):
            cols[name] = np.array([float(v) for v in vals])
        else:
            cols[name] = np.array([int(v) for v in vals], dtype=np.int64)
    return cols


@dataclass
class RunMetrics:
    T: int
    K: int
    avg_total_power: float
    avg_aoi: np.ndarray
    avg_queue_sum: float
    max_aoi: int
    running_power: np.ndarray
    running_queue_sum: np.ndarray
    evaluations: int
    infeasible: int
    forced_failures: int
    drift_bound: float
    extra: dict = field(default_factory=dict)

    def avg_aoi_window(self, trace: Trace, start: int) -> np.ndarray:
        return trace.aoi[start:].mean(axis=0)

    def to_dict(self, include_series: bool = False) -> dict:
        d = {
            "schema_version": METRICS_SCHEMA,
            "T": self.T,
            "K": self.K,
            "avg_total_power": self.avg_total_power,
            "avg_aoi": self.avg_aoi.tolist(),
            "avg_queue_sum": self.avg_queue_sum,
            "max_aoi": self.max_aoi,
            "evaluations": self.evaluations,
            "infeasible": self.infeasible,
            "forced_failures": self.forced_failures,
            "drift_bound": self.drift_bound,
        }
        if include_series:
            d["running_power"] = self.running_power.tolist()
            d["running_queue_sum"] = self.running_queue_sum.tolist()
        d.update(self.extra)
        return d

    def same_as(self, other: "RunMetrics") -> bool:
        """Bit-for-bit equality of every field."""
        return (
            self.T == other.T
            and self.K == other.K
            and self.avg_total_power == other.avg_total_power
            and np.array_equal(self.avg_aoi, other.avg_aoi)
            and self.avg_queue_sum == other.avg_queue_sum
            and self.max_aoi == other.max_aoi
            and np.array_equal(self.running_power, other.running_power)
            and np.array_equal(self.running_queue_sum, other.running_queue_sum)
            and self.evaluations == other.evaluations
            and self.infeasible == other.infeasible
            and self.forced_failures == other.forced_failures
            and self.drift_bound == other.drift_bound
        )


def _counts(T: int) -> np.ndarray:
    return np.arange(1, T + 1, dtype=np.float64)


def metrics_from_trace(trace: Trace, delta_max) -> RunMetrics:
    """Batch recomputation of :class:`RunMetrics` from a trace."""
    T = trace.T
    running_power = np.cumsum(trace.power) / _counts(T)
    qsum = np.array([math.fsum(row) for row in trace.vqueue.tolist()])
    running_queue = np.cumsum(qsum) / _counts(T)
    aoi_total = trace.aoi.sum(axis=0)
    max_aoi = int(trace.aoi.max())
    return RunMetrics(
        T=T,
        K=trace.K,
        avg_total_power=float(running_power[-1]),
        avg_aoi=aoi_total / T,
        avg_queue_sum=float(running_queue[-1]),
        max_aoi=max_aoi,
        running_power=running_power,
        running_queue_sum=running_queue,
        evaluations=int(trace.evaluations.sum()),
        infeasible=int(trace.infeasible.sum()),
        forced_failures=int(trace.forced_failures.sum()),
        drift_bound=drift_bound(delta_max, max(max_aoi, 1)),
    )


def run_simulation(config: SystemConfig) -> tuple[RunMetrics, Trace]:
    """Run ``config.T`` slots and return aggregate metrics plus the trace.

    Metrics average the state at the start of each slot ``t = 0 .. T-1``
    and the power spent in that slot.
    """
    config.validate()
    K, T = config.K, config.T
    stream = ChannelStream(config.sensors, config.fading, config.seed, config.N)
    policy = config.make_policy()
    params = config.slot_params()
    state = NetworkState.initial(K)
    trace = Trace.allocate(T, K)
    running_power = np.empty(T)
    running_queue = np.empty(T)

    power_sum = 0.0
    queue_sum = 0.0
    aoi_sum = np.zeros(K, dtype=np.int64)
    max_aoi = 0
    n_eval = n_bad = n_forced = 0
    for t in range(T):
        trace.aoi[t] = state.aoi
        trace.vqueue[t] = state.vqueue
        out = run_slot(state, stream.gains(t), policy, params)
        d = out.decision
        p = d.total_power
        trace.b[t] = d.b
        trace.power[t] = p
        trace.objective[t] = d.objective
        trace.evaluations[t] = d.evaluations
        trace.infeasible[t] = d.infeasible
        trace.forced_failures[t] = out.forced_failures

        power_sum += p
        queue_sum += math.fsum(state.vqueue.tolist())
        aoi_sum += state.aoi
        max_aoi = max(max_aoi, int(state.aoi.max()))
        n_eval += d.evaluations
        n_bad += d.infeasible
        n_forced += out.forced_failures
        running_power[t] = power_sum / (t + 1)
        running_queue[t] = queue_sum / (t + 1)
        state = out.state
    trace.final_aoi = state.aoi
    trace.final_vqueue = state.vqueue

    metrics = RunMetrics(
        T=T,
        K=K,
        avg_total_power=float(running_power[-1]),
        avg_aoi=aoi_sum / T,
        avg_queue_sum=float(running_queue[-1]),
        max_aoi=max_aoi,
        running_power=running_power,
        running_queue_sum=running_queue,
        evaluations=n_eval,
        infeasible=n_bad,
        forced_failures=n_forced,
        drift_bound=drift_bound(config.delta_max_vector, max(max_aoi, 1)),
    )
    return metrics, trace


def write_metrics_json(metrics: RunMetrics, path, config: SystemConfig | None = None) -> None:
    doc = metrics.to_dict()
    if config is not None:
        doc["config"] = config.to_dict()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def apply_param(base: SystemConfig, param: str, value) -> SystemConfig:
    if param == "V":
        return base.replace(V=float(value))
    if param == "N":
        return base.replace(N=int(value))
    if param == "deltaMax":
        return base.replace(delta_max=float(value))
    raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")


def _sweep_point(cfg: SystemConfig) -> dict:
    m, _ = run_simulation(cfg)
    return {
        "avg_total_power": m.avg_total_power,
        "avg_queue_sum": m.avg_queue_sum,
        "avg_aoi_mean": float(m.avg_aoi.mean()),
        "avg_aoi_max": float(m.avg_aoi.max()),
        "max_aoi": m.max_aoi,
        "avg_aoi": m.avg_aoi.tolist(),
    }


def sweep(param: str, values, base: SystemConfig, seeds=None, workers: int = 1) -> list[dict]:
    """One row per value with metrics averaged over ``seeds``.

    Every point with the same seed sees the same channel stream. Rows keep
    the order of ``values``; ``per_seed`` holds the individual runs.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    seeds = [base.seed] if seeds is None else [int(s) for s in seeds]
    configs = [apply_param(base, param, v).replace(seed=s) for v in values for s in seeds]
    for cfg in configs:
        cfg.validate()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, configs))
    else:
        results = [_sweep_point(cfg) for cfg in configs]

    rows = []
    n = len(seeds)
    for i, v in enumerate(values):
        chunk = results[i * n : (i + 1) * n]
        row = {"param": param, "value": v, "seeds": n}
        for key in ("avg_total_power", "avg_queue_sum", "avg_aoi_mean", "avg_aoi_max"):
            row[key] = math.fsum(r[key] for r in chunk) / n
        row["max_aoi"] = max(r["max_aoi"] for r in chunk)
        row["per_seed"] = [dict(seed=s, **r) for s, r in zip(seeds, chunk)]
        rows.append(row)
    return rows


SWEEP_COLUMNS = ["param", "value", "seeds", "avg_total_power", "avg_queue_sum", "avg_aoi_mean", "avg_aoi_max", "max_aoi"]


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SWEEP_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in SWEEP_COLUMNS])


def _quantiles(x: np.ndarray) -> dict:
    if x.size == 0:
        return {}
    return {
        "min": float(x.min()),
        "median": float(np.median(x)),
        "p90": float(np.quantile(x, 0.9)),
        "max": float(x.max()),
        "mean": float(x.mean()),
    }


def _gap_trajectory(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Absolute and relative per-slot gaps along the suboptimal trajectory."""
    stream = ChannelStream(config.sensors, config.fading, config.seed, config.N)
    params = config.slot_params()
    policy = DriftPlusPenalty(V=config.V, solver="suboptimal")
    state = NetworkState.initial(config.K)
    gap = np.empty(config.T)
    rel = np.empty(config.T)
    for t in range(config.T):
        g = stream.gains(t)
        problem = SlotProblem(gains=g, weights=state.weights(), V=config.V, W=config.W, N0=config.N0, eta=config.eta_bits)
        best = solve_exhaustive(problem).objective
        out = run_slot(state, g, policy, params)
        sub = out.decision.objective
        gap[t] = sub - best
        rel[t] = gap[t] / abs(best) if best < 0 else 0.0
        state = out.state
    return gap, rel


def compare_solvers(config: SystemConfig, trials: int = 1) -> dict:
    """Suboptimal versus exhaustive on shared channel streams.

    Each trial uses seed ``config.seed + i``. Per-slot gaps are measured on
    the suboptimal trajectory (both solvers see the same state and channel);
    end metrics come from two full runs driven by the same stream.
    """
    config = config.replace(policy="dpp")
    config.validate()
    if config.K * config.N > EXHAUSTIVE_MAX_CELLS:
        raise GuardError(f"exhaustive search limited to K*N <= {EXHAUSTIVE_MAX_CELLS}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    gaps, rels, per_trial = [], [], []
    for i in range(trials):
        cfg = config.replace(seed=config.seed + i)
        gap, rel = _gap_trajectory(cfg)
        m_sub, _ = run_simulation(cfg.replace(solver="suboptimal"))
        m_exh, _ = run_simulation(cfg.replace(solver="exhaustive"))
        gaps.append(gap)
        rels.append(rel)
        per_trial.append(
            {
                "seed": cfg.seed,
                "power_suboptimal": m_sub.avg_total_power,
                "power_exhaustive": m_exh.avg_total_power,
                "power_rel_diff": (m_sub.avg_total_power - m_exh.avg_total_power) / m_exh.avg_total_power
                if m_exh.avg_total_power > 0
                else 0.0,
                "aoi_suboptimal": m_sub.avg_aoi.tolist(),
                "aoi_exhaustive": m_exh.avg_aoi.tolist(),
                "aoi_max_abs_diff": float(np.max(np.abs(m_sub.avg_aoi - m_exh.avg_aoi))),
                "evaluations_suboptimal": m_sub.evaluations,
                "evaluations_exhaustive": m_exh.evaluations,
            }
        )
    gap = np.concatenate(gaps)
    rel = np.concatenate(rels)
    return {
        "schema_version": METRICS_SCHEMA,
        "K": config.K,
        "N": config.N,
        "T": config.T,
        "trials": trials,
        "slots": int(gap.size),
        "min_gap": float(gap.min()),
        "gap_abs": _quantiles(gap),
        "gap_rel": _quantiles(rel),
        "zero_gap_fraction": float(np.mean(gap == 0.0)),
        "trials_detail": per_trial,
    }


def write_outputs(out_dir, metrics: RunMetrics, trace: Trace, config: SystemConfig) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path, metrics_path = out / "trace.csv", out / "metrics.json"
    trace.write_csv(trace_path)
    write_metrics_json(metrics, metrics_path, config)
    return trace_path, metrics_path
