"""AoI and virtual-queue bookkeeping.

Each sensor carries its age of information ``delta`` (slots) and a virtual
queue ``Q`` whose stability enforces the time-average AoI limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def step_aoi(delta: int, sampled: int) -> int:
    """AoI at the next slot: 1 after a delivered sample, otherwise +1."""
    return 1 if sampled else delta + 1


def step_queue(q: float, delta_max: float, delta_next: int) -> float:
    return max(q - delta_max, 0.0) + delta_next


def lyapunov(queues) -> float:
    """Quadratic Lyapunov function, half the sum of squared backlogs."""
    q = np.asarray(queues, dtype=float)
    return 0.5 * float(np.dot(q, q))


def sampling_weight(delta, q):
    """Per-sensor coefficient of ``b_k`` in the per-slot objective.

    Works elementwise on arrays. The value is never positive, so taking a
    sample only pays off when its power cost times ``V`` is smaller.
    """
    delta = np.asarray(delta, dtype=float)
    q = np.asarray(q, dtype=float)
    w = 0.5 * (1.0 - (delta + 1.0) ** 2 - 2.0 * q * delta)
    return float(w) if w.ndim == 0 else w


def drift_bound(delta_max, delta_observed_max: float) -> float:
    """Drift-bound constant using the largest AoI seen in a run."""
    if delta_observed_max < 1:
        raise ValueError("observed maximum AoI must be at least 1")
    dm = np.asarray(delta_max, dtype=float)
    return 0.5 * float(np.sum(dm**2 + float(delta_observed_max) ** 2))


@dataclass
class NetworkState:
    aoi: np.ndarray
    vqueue: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, n_sensors: int) -> "NetworkState":
        return cls(
            aoi=np.zeros(n_sensors, dtype=np.int64),
            vqueue=np.zeros(n_sensors, dtype=np.float64),
            t=0,
        )

    @property
    def n_sensors(self) -> int:
        return self.aoi.shape[0]

    def weights(self) -> np.ndarray:
        return sampling_weight(self.aoi, self.vqueue)

    def advance(self, b, delta_max) -> "NetworkState":
        """State at ``t + 1`` after sampling vector ``b``."""
        b = np.asarray(b, dtype=bool)
        aoi = np.where(b, 1, self.aoi + 1).astype(np.int64)
        vq = np.maximum(self.vqueue - np.asarray(delta_max, dtype=float), 0.0) + aoi
        return NetworkState(aoi=aoi, vqueue=vq, t=self.t + 1)


@dataclass
class Trajectory:
    """States visited by a run, one row per slot (state at the slot start)."""

    aoi: list = field(default_factory=list)
    vqueue: list = field(default_factory=list)

    def append(self, state: NetworkState) -> None:
        self.aoi.append(state.aoi.copy())
        self.vqueue.append(state.vqueue.copy())

    def arrays(self):
        return np.array(self.aoi), np.array(self.vqueue)


def replay(decisions, delta_max, n_sensors: int) -> Trajectory:
    """Run a sequence of sampling vectors through the recursions."""
    traj = Trajectory()
    state = NetworkState.initial(n_sensors)
    for b in decisions:
        traj.append(state)
        state = state.advance(b, delta_max)
    traj.append(state)
    return traj
