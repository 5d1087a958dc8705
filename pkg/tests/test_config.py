import math
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from rangeguard.config import (ConfigError, ScenarioConfig, config_from_dict, dump_config,
                               load_config, to_flat_dict)
from rangeguard.estimator import GateError

CANONICAL = Path(__file__).resolve().parents[1] / "configs" / "reference.toml"


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return p


def test_canonical_file():
    cfg = load_config(CANONICAL)
    assert cfg == ScenarioConfig()
    assert cfg.estimator.gamma1 == 0.45 and cfg.controller.alpha == -0.001
    assert cfg.t == 0.1 and cfg.q12_0 == (0.0, -2.0, 0.05)
    assert cfg.q1_2_0 == (-6.0, -4.0, -1.45) and cfg.q2_2_0 == (-6.0, -2.0, -1.5)
    assert (cfg.controller.rbar, cfg.controller.r1, cfg.controller.r2) == (0.1, 5.8, 3.0)
    assert cfg.controller.iota2 == 0.03 and cfg.h == 0.5
    assert (cfg.shape.g_amplitude, cfg.shape.g_freq, cfg.shape.g_kind) == (0.3, 0.125, "cos")
    assert cfg.shape.r == cfg.controller.r1


@pytest.mark.parametrize("text, exc, match", [
    ("gamma1 = 0.6", GateError, "forgetting-factor gate"),
    ("gamma1 = 0.55", GateError, "forgetting-factor gate"),
    ("alpha = 0.7", GateError, "encirclement-gain gate"),
    ("alpha = 0.578", GateError, "encirclement-gain gate"),
    ("z1 = 1.5", ConfigError, "z1 < z2"),
    ("steps = 0", ConfigError, "steps"),
    ("t = 0.0", ConfigError, "positive"),
    ("colour = 1", ConfigError, "unknown"),
    ("x1_0 = [1.0, 2.0]", ConfigError, "3 components"),
    ("target2_script = 'zigzag'", ConfigError, "unknown script"),
    ("q12_0 = [0.0, -3.0, 0.0]", ConfigError, "q12_0"),
    ("dropout = 1.0", ConfigError, "dropout"),
    ("[estimator]\ngamma1 = 0.3", ConfigError, "flat"),
    ("gamma1 = ", ConfigError, "Invalid"),
    ("x2_0 = [nan, 0.0, 0.0]", ConfigError, "finite"),
    ("range_sigma = inf", ConfigError, "finite"),
])
def test_rejections(tmp_path, text, exc, match):
    with pytest.raises(exc, match=match):
        load_config(_write(tmp_path, text))


def test_boundaries_accepted(tmp_path):
    cfg = load_config(_write(tmp_path, f"gamma1 = 0.5\nalpha = {1 / math.sqrt(3)!r}\n"))
    assert cfg.estimator.gamma1 == 0.5


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_dump_round_trip(tmp_path):
    cfg = ScenarioConfig().with_overrides(seed=7, dropout=0.1,
                                          target1_waypoints=[(1, 2, 3), (4, 5, 6)])
    p = _write(tmp_path, dump_config(cfg))
    assert load_config(p) == cfg


@given(st.floats(0.01, 0.5), st.floats(-0.57, 0.57), st.integers(0, 2**31))
def test_flat_dict_round_trip(g, a, seed):
    cfg = ScenarioConfig().with_overrides(gamma1=g, alpha=a, seed=seed)
    assert config_from_dict(to_flat_dict(cfg)) == cfg
