"""Slot-by-slot control: drift-plus-penalty or a fixed sampling schedule."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .solver import (
    InfeasibleError,
    SlotDecision,
    SlotProblem,
    evaluate_sampling,
    solve_exhaustive,
    solve_suboptimal,
)
from .state import NetworkState

log = logging.getLogger(__name__)

SOLVERS = ("suboptimal", "exhaustive")


@dataclass(frozen=True)
class Schedule:
    """Periodic sampling sets; entry ``i`` applies to slots ``t = i+1 (mod period)``."""

    sets: tuple[frozenset, ...]

    @property
    def period(self) -> int:
        return len(self.sets)

    def at(self, t: int) -> frozenset:
        # the first listed set belongs to slot 1, so slot 0 uses the last one
        return self.sets[(t - 1) % self.period]

    def validate(self, n_sensors: int, n_channels: int) -> None:
        seen = set()
        for s in self.sets:
            if len(s) > n_channels:
                raise ValueError(f"schedule slot samples {len(s)} sensors but only {n_channels} sub-channels")
            if any(k < 0 or k >= n_sensors for k in s):
                raise ValueError("schedule names a sensor outside the network")
            seen |= s
        if len(seen) != n_sensors:
            raise ValueError("every sensor must appear in the schedule")

    def to_list(self) -> list:
        return [sorted(s) for s in self.sets]


def default_baseline_schedule(n_sensors: int, period: int = 7) -> Schedule:
    """Round-robin schedule sampling every sensor once per ``period`` slots.

    Sensors are packed in index order; when ``n_sensors`` does not divide
    evenly the larger groups go last. For ten sensors and period 7 this gives
    ``{1} {2} {3} {4} {5,6} {7,8} {9,10}`` (1-based).
    """
    base, extra = divmod(n_sensors, period)
    sizes = [base] * (period - extra) + [base + 1] * extra
    sets = []
    k = 0
    for size in sizes:
        sets.append(frozenset(range(k, k + size)))
        k += size
    return Schedule(tuple(sets))


@dataclass(frozen=True)
class DriftPlusPenalty:
    V: float
    solver: str = "suboptimal"

    def __post_init__(self):
        if self.V < 0:
            raise ValueError("V must be nonnegative")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")


@dataclass(frozen=True)
class FixedRate:
    schedule: Schedule
    V: float = 0.0  # only used to report a comparable objective


@dataclass(frozen=True)
class SlotParams:
    """Physical constants the controller needs each slot."""

    W: float
    N0: float
    eta: float  # bits
    delta_max: np.ndarray
    refill: str = "sampling"


@dataclass
class SlotOutcome:
    decision: SlotDecision
    state: NetworkState
    forced_failures: int = 0


def run_slot(state: NetworkState, gains: np.ndarray, policy, params: SlotParams) -> SlotOutcome:
    """Decide slot ``state.t`` and advance AoI and virtual queues."""
    if not isinstance(policy, (DriftPlusPenalty, FixedRate)):
        raise TypeError(f"unknown policy {policy!r}")
    weights = state.weights()
    problem = SlotProblem(gains=gains, weights=weights, V=policy.V, W=params.W, N0=params.N0, eta=params.eta)
    failures = 0
    if isinstance(policy, DriftPlusPenalty):
        if policy.solver == "exhaustive":
            decision = solve_exhaustive(problem)
        else:
            decision = solve_suboptimal(problem, refill=params.refill)
    else:
        decision, failures = _forced(state, problem, policy.schedule, params.refill)
    return SlotOutcome(decision=decision, state=state.advance(decision.b, params.delta_max), forced_failures=failures)


def _forced(state, problem, schedule, refill):
    b = np.zeros(problem.n_sensors, dtype=np.int8)
    b[list(schedule.at(state.t))] = 1
    failures = 0
    while b.any():
        try:
            return evaluate_sampling(b, problem, refill=refill), failures
        except InfeasibleError as exc:
            # deep fade on every assigned channel: skip that sample
            log.warning("slot %d: forced sample of sensor %d skipped", state.t, exc.sensor)
            b[exc.sensor] = 0
            failures += 1
    d = SlotDecision.empty(problem.n_sensors, problem.n_channels)
    d.evaluations = 1
    return d, failures
