"""Scenario configuration: flat ``key = value`` TOML with vector literals."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import ControllerParams, ShapeParams, ZoneThresholds
from .estimator import EstimatorParams, GateError
from .worldsim import SCRIPTS, SensorModel


class ConfigError(ValueError):
    pass


Vec = tuple[float, float, float]


@dataclass(frozen=True)
class ScenarioConfig:
    t: float = 0.1
    steps: int = 500
    seed: int = 0
    # initial relative geometry, q_i^j = p_i - x_j
    q12_0: Vec = (0.0, -2.0, 0.05)
    q1_2_0: Vec = (-6.0, -4.0, -1.45)
    q2_2_0: Vec = (-6.0, -2.0, -1.5)
    attitude1_0: Vec = (0.0, 0.0, 0.0)
    attitude2_0: Vec = (0.0, 0.0, 0.0)
    # targets
    h: float = 0.5
    x1_0: Vec = (0.0, 0.0, 0.0)
    v1: Vec = (0.1, 0.0, 0.0)
    vmax1: float = 0.2
    target1_script: str = "constant"
    target1_waypoints: tuple = ()
    x2_0: Vec = (12.0, 4.0, 2.0)
    v2: Vec = (0.0, 0.0, 0.0)
    vmax2: float = 0.3
    target2_script: str = "kamikaze"
    target2_waypoints: tuple = ()
    # sensing
    range_sigma: float = 0.02
    q12_sigma: float = 0.0
    attitude_sigma: float = 0.0
    attitude_walk: float = 0.0
    dropout: float = 0.0
    estimator: EstimatorParams = field(default_factory=EstimatorParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    zones: ZoneThresholds = field(default_factory=ZoneThresholds)
    shape: ShapeParams = field(default_factory=lambda: ShapeParams(r=5.8))

    def __post_init__(self):
        if self.t <= 0:
            raise ConfigError("sampling period t must be positive")
        if int(self.steps) < 1:
            raise ConfigError("steps must be >= 1")
        for name in ("target1_script", "target2_script"):
            if getattr(self, name) not in SCRIPTS:
                raise ConfigError(f"{name}: unknown script {getattr(self, name)!r}")
        gap = np.subtract(self.q1_2_0, self.q2_2_0) - np.asarray(self.q12_0)
        if np.max(np.abs(gap)) > 1e-9:
            raise ConfigError("q1_2_0 - q2_2_0 must equal q12_0")
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) or (isinstance(value, tuple) and value
                                            and not isinstance(value[0], tuple)):
                if not np.all(np.isfinite(value)):
                    raise ConfigError(f"{f.name} must be finite")
        if self.h < 0:
            raise ConfigError("h must be non-negative")
        for name in ("range_sigma", "q12_sigma", "attitude_sigma", "attitude_walk"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")

    @property
    def sensor(self) -> SensorModel:
        return SensorModel(self.range_sigma, self.q12_sigma, self.attitude_sigma, self.dropout)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return config_from_dict({**to_flat_dict(self), **kw})


# flat key -> (sub-config attribute, field name)
_NESTED = {
    "gamma1": ("estimator", "gamma1"),
    "eta0": ("estimator", "eta0"),
    "vmax2_est": ("estimator", "vmax2"),
    "compensator_warmup": ("estimator", "warmup"),
    "compensator_lag": ("estimator", "lag"),
    "alpha": ("controller", "alpha"),
    "r1": ("controller", "r1"),
    "r2": ("controller", "r2"),
    "rbar": ("controller", "rbar"),
    "iota2": ("controller", "iota2"),
    "hysteresis": ("controller", "hysteresis"),
    "max_rate": ("controller", "max_rate"),
    "takedown_tol": ("controller", "takedown_tol"),
    "enforce_gate": ("controller", "enforce_gate"),
    "z1": ("zones", "z1"),
    "z2": ("zones", "z2"),
    "z3": ("zones", "z3"),
    "nu": ("shape", "nu"),
    "g_kind": ("shape", "g_kind"),
    "g_amplitude": ("shape", "g_amplitude"),
    "g_freq": ("shape", "g_freq"),
}
_SUB = {"estimator": EstimatorParams, "controller": ControllerParams,
        "zones": ZoneThresholds, "shape": ShapeParams}
_TOP = {f.name for f in fields(ScenarioConfig)} - set(_SUB)


def _as_vec(key, value):
    try:
        v = tuple(float(x) for x in value)
    except TypeError:
        raise ConfigError(f"{key}: expected a 3-vector, got {value!r}") from None
    if len(v) != 3:
        raise ConfigError(f"{key}: expected 3 components, got {len(v)}")
    return v


def config_from_dict(d: dict) -> ScenarioConfig:
    """Build and validate a config from flat keys; unknown keys are errors."""
    top, sub = {}, {name: {} for name in _SUB}
    for key, value in d.items():
        if key in _NESTED:
            group, name = _NESTED[key]
            sub[group][name] = value
        elif key in _TOP:
            top[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for key, value in list(top.items()):
        if key.endswith("_waypoints"):
            top[key] = tuple(_as_vec(key, w) for w in value)
        elif isinstance(value, (list, tuple)):
            top[key] = _as_vec(key, value)
    if "steps" in top:
        top["steps"] = int(top["steps"])
    if "seed" in top:
        top["seed"] = int(top["seed"])
    sub["shape"].setdefault("r", float(sub["controller"].get("r1", ControllerParams.r1)))
    try:
        built = {name: cls(**sub[name]) for name, cls in _SUB.items()}
        return ScenarioConfig(**top, **built)
    except GateError:
        raise
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def to_flat_dict(cfg: ScenarioConfig) -> dict:
    out = {name: getattr(cfg, name) for name in _TOP}
    for key, (group, name) in _NESTED.items():
        out[key] = getattr(getattr(cfg, group), name)
    return out


def load_config(path) -> ScenarioConfig:
    """Parse a flat TOML scenario file.

    Raises GateError (a ValueError) naming the violated stability condition when the
    forgetting factor or controller gain is out of range, ConfigError for
    anything else malformed.
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat, found tables {nested}")
    return config_from_dict(raw)


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    for key, value in sorted(to_flat_dict(cfg).items()):
        if isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, tuple):
            if value and isinstance(value[0], tuple):
                inner = ", ".join("[" + ", ".join(repr(float(c)) for c in w) + "]" for w in value)
                lines.append(f"{key} = [{inner}]")
            else:
                lines.append(f"{key} = [" + ", ".join(repr(float(c)) for c in value) + "]")
        else:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"
