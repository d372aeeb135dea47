"""System configuration: defaults, file loading, overrides and validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .channel import FadingParams, Topology, default_topology, load_topology, topology_from_dict
from .controller import SOLVERS, DriftPlusPenalty, FixedRate, SlotParams, default_baseline_schedule
from .solver import REFILL_MODES

POLICIES = ("dpp", "fixed_rate")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    K: int = 10
    N: int = 10
    W: float = 180e3  # Hz
    N0: float = 4e-21  # W/Hz, thermal noise density at 290 K
    eta_bytes: float = 600.0
    delta_max: float | tuple = 4.0
    V: float = 8000.0
    T: int = 100_000
    seed: int = 1
    topology: Topology = field(default_factory=default_topology)
    fading: FadingParams = field(default_factory=FadingParams)
    policy: str = "dpp"
    solver: str = "suboptimal"
    greedy_refill: str = "sampling"
    baseline_period: int = 7

    @property
    def eta_bits(self) -> float:
        return 8.0 * self.eta_bytes

    @property
    def delta_max_vector(self) -> np.ndarray:
        dm = np.asarray(self.delta_max, dtype=float)
        if dm.ndim == 0:
            return np.full(self.K, float(dm))
        return dm

    @property
    def sensors(self) -> Topology:
        """The ``K`` nearest sensors of the configured topology."""
        return self.topology.first(self.K)

    def validate(self) -> "SystemConfig":
        errors = []
        if self.K < 1 or self.N < 1:
            errors.append("K and N must be at least 1")
        if self.T < 1:
            errors.append("T must be at least 1")
        for name in ("W", "N0", "eta_bytes"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be positive")
        if self.V < 0:
            errors.append("V must be nonnegative")
        dm = np.asarray(self.delta_max, dtype=float)
        if dm.ndim not in (0, 1) or (dm.ndim == 1 and dm.shape[0] != self.K):
            errors.append("delta_max must be a scalar or one value per sensor")
        elif np.any(dm <= 1):
            errors.append("delta_max must exceed 1 (an AoI of 1 is the floor)")
        if self.K > len(self.topology):
            errors.append(f"topology lists {len(self.topology)} sensors but K={self.K}")
        if self.policy not in POLICIES:
            errors.append(f"policy must be one of {POLICIES}")
        if self.solver not in SOLVERS:
            errors.append(f"solver must be one of {SOLVERS}")
        if self.greedy_refill not in REFILL_MODES:
            errors.append(f"greedy_refill must be one of {REFILL_MODES}")
        if not 0 <= self.seed < 2**64:
            errors.append("seed must fit in 64 bits")
        if self.policy == "fixed_rate" and self.K >= 1 and self.baseline_period >= 1:
            try:
                default_baseline_schedule(self.K, self.baseline_period).validate(self.K, self.N)
            except ValueError as exc:
                errors.append(str(exc))
        if errors:
            raise ConfigError("; ".join(errors))
        return self

    def make_policy(self):
        if self.policy == "dpp":
            return DriftPlusPenalty(V=self.V, solver=self.solver)
        return FixedRate(schedule=default_baseline_schedule(self.K, self.baseline_period), V=self.V)

    def slot_params(self) -> SlotParams:
        return SlotParams(
            W=self.W, N0=self.N0, eta=self.eta_bits, delta_max=self.delta_max_vector, refill=self.greedy_refill
        )

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        dm = self.delta_max
        return {
            "K": self.K,
            "N": self.N,
            "W": self.W,
            "N0": self.N0,
            "eta_bytes": self.eta_bytes,
            "delta_max": list(dm) if isinstance(dm, (tuple, list)) else dm,
            "V": self.V,
            "T": self.T,
            "seed": self.seed,
            "topology": self.topology.to_dict(),
            "fading": dataclasses.asdict(self.fading),
            "policy": self.policy,
            "solver": self.solver,
            "greedy_refill": self.greedy_refill,
            "baseline_period": self.baseline_period,
        }


_INT_FIELDS = {"K", "N", "T", "seed", "baseline_period"}
_FLOAT_FIELDS = {"W", "N0", "eta_bytes", "V"}


def config_from_dict(doc: dict, base: SystemConfig | None = None, root: Path | None = None) -> SystemConfig:
    """Overlay ``doc`` onto ``base`` (defaults when omitted)."""
    base = base or SystemConfig()
    known = {f.name for f in dataclasses.fields(SystemConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    changes = {}
    for key, value in doc.items():
        if value is None:
            continue
        if key in _INT_FIELDS:
            changes[key] = int(value)
        elif key in _FLOAT_FIELDS:
            changes[key] = float(value)
        elif key == "delta_max":
            changes[key] = tuple(float(x) for x in value) if isinstance(value, (list, tuple)) else float(value)
        elif key == "topology":
            if isinstance(value, (str, Path)):
                path = Path(value)
                if root is not None and not path.is_absolute():
                    path = root / path
                changes[key] = load_topology(path)
            else:
                changes[key] = topology_from_dict(value)
        elif key == "fading":
            changes[key] = FadingParams(**value)
        else:
            changes[key] = value
    try:
        return dataclasses.replace(base, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides: dict | None = None) -> SystemConfig:
    path = Path(path)
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a mapping")
    cfg = config_from_dict(doc, root=path.parent)
    if overrides:
        cfg = config_from_dict(overrides, base=cfg)
    return cfg
