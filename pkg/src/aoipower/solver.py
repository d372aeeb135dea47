"""Per-slot sampling, sub-channel assignment and power allocation.

Two solvers share one objective,
``V * sum(p) + sum_k b_k * w_k`` with ``w_k`` from :func:`state.sampling_weight`:

* :func:`solve_suboptimal` enumerates every sampling vector with at most
  ``N`` samplers, assigns channels greedily and water-fills each sampler.
* :func:`solve_exhaustive` also enumerates every channel assignment and is
  optimal for the per-slot problem; it is only meant for small instances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend

REFILL_MODES = ("sampling", "all")
EXHAUSTIVE_MAX_CELLS = 25


class InfeasibleError(ValueError):
    """A sampling sensor has no channel with positive gain."""

    def __init__(self, message, sensor=None):
        super().__init__(message)
        self.sensor = sensor


class GuardError(ValueError):
    """Instance too large for the exhaustive search."""


def _kernels(backend):
    return _backend.kernels if backend is None else _backend.get(backend)


@dataclass(frozen=True)
class SlotProblem:
    gains: np.ndarray
    weights: np.ndarray
    V: float
    W: float
    N0: float
    eta: float  # bits

    def __post_init__(self):
        g = np.ascontiguousarray(self.gains, dtype=np.float64)
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if g.ndim != 2:
            raise ValueError("gains must be a K x N matrix")
        if w.shape != (g.shape[0],):
            raise ValueError("need one weight per sensor")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValueError("gains must be finite and nonnegative")
        if np.any(w > 0):
            raise ValueError("sampling weights must be nonpositive")
        if self.V < 0 or not self.W > 0 or not self.N0 > 0 or not self.eta > 0:
            raise ValueError("need V >= 0 and W, N0, eta > 0")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "weights", w)

    @property
    def n_sensors(self) -> int:
        return self.gains.shape[0]

    @property
    def n_channels(self) -> int:
        return self.gains.shape[1]


@dataclass
class SlotDecision:
    b: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    objective: float
    evaluations: int = 0
    infeasible: int = 0

    @property
    def total_power(self) -> float:
        return float(self.p.sum())

    def rates(self, gains, W, N0) -> np.ndarray:
        """Per-sensor achieved rate in bits per slot."""
        r = rate(self.p, np.asarray(gains), W, N0)
        return (self.rho * r).sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "b": self.b.astype(int).tolist(),
            "rho": self.rho.astype(int).tolist(),
            "p": self.p.tolist(),
            "objective": self.objective,
            "total_power": self.total_power,
            "evaluations": self.evaluations,
            "infeasible": self.infeasible,
        }

    @classmethod
    def empty(cls, K, N) -> "SlotDecision":
        return cls(
            b=np.zeros(K, dtype=np.int8),
            rho=np.zeros((K, N), dtype=np.int8),
            p=np.zeros((K, N)),
            objective=0.0,
        )


def rate(p, gain, W, N0):
    """Shannon rate ``W log2(1 + p g / (W N0))`` in bits per (unit) slot."""
    snr = np.asarray(p, dtype=float) * np.asarray(gain, dtype=float) / (W * N0)
    r = W * np.log1p(snr) / math.log(2.0)
    return float(r) if np.ndim(r) == 0 else r


def waterfill(gains, W, N0, eta, backend=None):
    """Least total power delivering ``eta`` bits over parallel channels.

    Active channels share one water level ``mu`` with ``p_n = mu - W N0 / g_n``;
    the rest get nothing. Returns ``(powers, total)``.
    """
    powers, total, _ = _kernels(backend).waterfill(gains, W, N0, eta)
    if math.isinf(total):
        raise InfeasibleError("no channel with positive gain")
    return powers, total


def water_level(gains, W, N0, eta, backend=None) -> float:
    _, total, level = _kernels(backend).waterfill(gains, W, N0, eta)
    if math.isinf(total):
        raise InfeasibleError("no channel with positive gain")
    return level


def greedy_assign(gains, b, refill: str = "sampling", backend=None) -> np.ndarray:
    """Hand out all channels strongest-first, one per competing sensor per round.

    A sensor leaves the competing set once served; when the set empties it
    is refilled with the sampling sensors (``refill="sampling"``) or with
    every sensor (``refill="all"``). Ties go to the lowest sensor index,
    then the lowest channel index.
    """
    _check_refill(refill)
    b = np.ascontiguousarray(b, dtype=np.int8)
    return _kernels(backend).greedy_assign(gains, b, refill == "all")


def evaluate_sampling(b, problem: SlotProblem, refill: str = "sampling", backend=None) -> SlotDecision:
    """Greedy assignment then per-sampler water-filling for a fixed ``b``."""
    _check_refill(refill)
    b = np.ascontiguousarray(b, dtype=np.int8)
    if b.shape != (problem.n_sensors,):
        raise ValueError("b must have one entry per sensor")
    if int(b.sum()) > problem.n_channels:
        raise ValueError("more samplers than sub-channels")
    rho, p, obj, bad = _kernels(backend).evaluate(
        problem.gains, b, problem.weights, problem.V, problem.W, problem.N0, problem.eta, refill == "all"
    )
    if bad >= 0:
        raise InfeasibleError(f"sensor {bad} has no usable sub-channel", sensor=int(bad))
    return SlotDecision(b=b.copy(), rho=rho, p=p, objective=float(obj), evaluations=1)


def solve_suboptimal(problem: SlotProblem, refill: str = "sampling", backend=None) -> SlotDecision:
    """Best sampling vector under greedy assignment and water-filling.

    Ties keep the earlier candidate in binary-counter order of ``b``.
    Candidates with an unusable sampler are skipped and counted.
    """
    _check_refill(refill)
    b, rho, p, obj, n_eval, n_bad = _kernels(backend).solve_suboptimal(
        problem.gains, problem.weights, problem.V, problem.W, problem.N0, problem.eta, refill == "all"
    )
    return SlotDecision(b=b, rho=rho, p=p, objective=float(obj), evaluations=n_eval, infeasible=n_bad)


def solve_exhaustive(problem: SlotProblem, max_cells: int = EXHAUSTIVE_MAX_CELLS, backend=None) -> SlotDecision:
    """Optimal per-slot decision by full enumeration.

    ``evaluations`` counts (sampling vector, assignment) pairs visited, which
    equals :func:`count_exhaustive_assignments`.
    """
    K, N = problem.gains.shape
    if K * N > max_cells:
        raise GuardError(f"exhaustive search limited to K*N <= {max_cells}, got {K}*{N}")
    b, rho, p, obj, n_assign, n_bad = _kernels(backend).solve_exhaustive(
        problem.gains, problem.weights, problem.V, problem.W, problem.N0, problem.eta
    )
    return SlotDecision(b=b, rho=rho, p=p, objective=float(obj), evaluations=n_assign, infeasible=n_bad)


def count_sampling_vectors(K: int, N: int) -> int:
    """Number of sampling vectors with at most ``N`` samplers."""
    if K < 1 or N < 1:
        raise ValueError("K and N must be positive")
    return sum(math.comb(K, j) for j in range(min(K, N) + 1))


def count_exhaustive_assignments(K: int, N: int) -> int:
    """Sampling vectors times ways to give each channel to a sampler or nobody."""
    if K < 1 or N < 1:
        raise ValueError("K and N must be positive")
    return sum(math.comb(K, j) * (j + 1) ** N for j in range(min(K, N) + 1))


def _check_refill(refill):
    if refill not in REFILL_MODES:
        raise ValueError(f"refill must be one of {REFILL_MODES}, got {refill!r}")
