"""Fading channel model: distance path loss times Rayleigh small-scale fading.

Gains are stored as power gains ``|h|^2``. Draws are counter-based: the gains
of slot ``t`` depend only on ``(seed, t)``, never on what was drawn before.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

# slots generated per Philox counter block
BLOCK = 256


@dataclass(frozen=True)
class FadingParams:
    path_loss_exponent: float = -3.0
    reference_distance: float = 1.0
    rayleigh_scale: float = 0.5

    def __post_init__(self):
        if not self.reference_distance > 0:
            raise ValueError("reference_distance must be positive")
        if not self.rayleigh_scale > 0:
            raise ValueError("rayleigh_scale must be positive")


@dataclass(frozen=True)
class Topology:
    """Sink and sensor coordinates in meters, sensors nearest-first."""

    sink: tuple[float, float]
    sensors: tuple[tuple[float, float], ...]

    def __post_init__(self):
        d = self.distances
        if np.any(d <= 0):
            raise ValueError("every sensor must be at a positive distance from the sink")
        if np.any(np.diff(d) < 0):
            raise ValueError("sensors must be indexed by nondecreasing distance")

    @classmethod
    def from_positions(cls, sensors, sink=(0.0, 0.0)) -> "Topology":
        """Build a topology, reordering sensors nearest-first."""
        sx, sy = float(sink[0]), float(sink[1])
        pts = [(float(x), float(y)) for x, y in sensors]
        pts.sort(key=lambda p: math.hypot(p[0] - sx, p[1] - sy))
        return cls(sink=(sx, sy), sensors=tuple(pts))

    @property
    def distances(self) -> np.ndarray:
        pos = np.asarray(self.sensors, dtype=float).reshape(-1, 2)
        return np.hypot(pos[:, 0] - self.sink[0], pos[:, 1] - self.sink[1])

    def __len__(self):
        return len(self.sensors)

    def first(self, k: int) -> "Topology":
        if k > len(self.sensors):
            raise ValueError(f"topology has {len(self.sensors)} sensors, {k} requested")
        return Topology(sink=self.sink, sensors=self.sensors[:k])

    def to_dict(self) -> dict:
        return {"sink": list(self.sink), "sensors": [list(p) for p in self.sensors]}


def load_topology(path) -> Topology:
    """Read a topology document (``sink: [x, y]``, ``sensors: [[x, y], ...]``)."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return topology_from_dict(doc)


def topology_from_dict(doc: dict) -> Topology:
    if not isinstance(doc, dict) or "sensors" not in doc:
        raise ValueError("topology needs a 'sensors' list")
    return Topology.from_positions(doc["sensors"], doc.get("sink", (0.0, 0.0)))


def default_topology() -> Topology:
    return load_topology(Path(__file__).parent / "data" / "default_topology.yaml")


def large_scale_gain(distance: float, params: FadingParams) -> float:
    """Amplitude path-loss factor ``(d / d0) ** xi``."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return (distance / params.reference_distance) ** params.path_loss_exponent


def rayleigh_power(u: np.ndarray, scale: float) -> np.ndarray:
    """Squared Rayleigh variates by inverse CDF from uniforms on [0, 1)."""
    return -2.0 * scale * scale * np.log1p(-u)


class ChannelStream:
    """Per-slot power-gain matrices for a fixed topology and seed.

    Uniforms for slots ``[j*BLOCK, (j+1)*BLOCK)`` come from a Philox
    generator keyed by ``seed`` with its counter set to block ``j``, so any
    slot can be produced on its own and runs with the same seed share
    channels slot for slot.
    """

    def __init__(self, topology: Topology, params: FadingParams, seed: int, n_channels: int):
        self.topology = topology
        self.params = params
        self.seed = int(seed)
        self.n_channels = int(n_channels)
        d = topology.distances
        self.path_gain = np.array([large_scale_gain(x, params) for x in d]) ** 2
        self._block = -1
        self._small = None

    @property
    def shape(self):
        return (len(self.topology), self.n_channels)

    def small_scale(self, t: int) -> np.ndarray:
        """Squared Rayleigh coefficients ``c^2`` for slot ``t``."""
        j, r = divmod(int(t), BLOCK)
        if j != self._block:
            bitgen = np.random.Philox(key=self.seed, counter=[0, j, 0, 0])
            u = np.random.Generator(bitgen).random((BLOCK,) + self.shape)
            self._small = rayleigh_power(u, self.params.rayleigh_scale)
            self._block = j
        return self._small[r]

    def gains(self, t: int) -> np.ndarray:
        return self.path_gain[:, None] * self.small_scale(t)


def draw_channel(topology: Topology, params: FadingParams, seed: int, t: int, n_channels: int) -> np.ndarray:
    """Gains ``|h_{k,n}(t)|^2`` for a single slot."""
    return ChannelStream(topology, params, seed, n_channels).gains(t)
