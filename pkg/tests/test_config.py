from pathlib import Path

import numpy as np
import pytest

from aoipower.config import ConfigError, SystemConfig, config_from_dict, load_config

DATA = Path(__file__).resolve().parents[1] / "src" / "aoipower" / "data"


def test_defaults():
    c = SystemConfig().validate()
    assert (c.K, c.N, c.W, c.eta_bits, c.V, c.T) == (10, 10, 180e3, 4800.0, 8000.0, 100_000)
    assert c.N0 == 4e-21
    assert np.array_equal(c.delta_max_vector, np.full(10, 4.0))


def test_shipped_config_matches_defaults():
    assert load_config(DATA / "default_config.yaml").to_dict() == SystemConfig().to_dict()


def test_roundtrip():
    c = SystemConfig(K=4, N=3, delta_max=(2.0, 3.0, 4.0, 5.0), V=10.0)
    assert config_from_dict(c.to_dict()).to_dict() == c.to_dict()


def test_overrides_and_relative_topology(tmp_path):
    (tmp_path / "topo.yaml").write_text("sensors:\n  - [10, 0]\n  - [0, 20]\n")
    (tmp_path / "cfg.yaml").write_text("K: 2\nN: 2\ntopology: topo.yaml\nV: 5\n")
    c = load_config(tmp_path / "cfg.yaml", overrides={"V": 7, "T": 3}).validate()
    assert (c.K, c.V, c.T) == (2, 7.0, 3)
    assert np.allclose(c.sensors.distances, [10, 20])


@pytest.mark.parametrize(
    "changes",
    [
        {"T": 0},
        {"K": 11},
        {"W": 0.0},
        {"N0": -1.0},
        {"eta_bytes": 0.0},
        {"V": -1.0},
        {"delta_max": 1.0},
        {"delta_max": (4.0, 4.0)},
        {"policy": "greedy"},
        {"solver": "magic"},
        {"greedy_refill": "everyone"},
        {"seed": -1},
        {"policy": "fixed_rate", "N": 1},
    ],
)
def test_validation_errors(changes):
    with pytest.raises(ConfigError):
        SystemConfig().replace(**changes).validate()


def test_unknown_key():
    with pytest.raises(ConfigError):
        config_from_dict({"bandwidth": 1.0})


def test_bad_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(p)
