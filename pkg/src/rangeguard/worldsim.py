"""Ground-truth world: guardian kinematics, target scripts and range sensing."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.transform import Rotation as _Rot

from .geometry import so3_exp, vec3

EULER_SEQ = "ZYX"  # yaw, pitch, roll


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DroneState:
    R: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class TargetTrack:
    x: np.ndarray
    v: np.ndarray
    vmax: float
    script: str = "constant"
    waypoints: tuple = ()
    waypoint_index: int = 0
    aim: np.ndarray | None = None  # kamikaze aim point, refreshed by the world


SCRIPTS = ("constant", "waypoints", "kamikaze")


@dataclass(frozen=True)
class RangeObservation:
    d1: float
    d2: float
    q12: np.ndarray
    x1_shared: np.ndarray
    attitude1: np.ndarray  # (roll, pitch, yaw)
    attitude2: np.ndarray
    dropped: bool = False


def step_drone(s: DroneState, u, ubar, t: float) -> DroneState:
    """Advance one sample: ``R+ = Exp(ubar t) R`` and ``p+ = p + t R u``."""
    if t <= 0:
        raise ValueError("sampling period must be positive")
    R_next = so3_exp(ubar, t) @ s.R
    p_next = s.p + t * (s.R @ np.asarray(u, dtype=float))
    return DroneState(R_next, p_next)


def _saturate(v: np.ndarray, vmax: float) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n > vmax:
        return v * (vmax / n)
    return v


def script_velocity(tr: TargetTrack, t: float) -> tuple[np.ndarray, int]:
    if tr.script == "constant":
        return tr.v, tr.waypoint_index
    if tr.script == "kamikaze":
        if tr.aim is None:
            raise ConfigError("kamikaze script needs an aim point")
        d = tr.aim - tr.x
        n = float(np.linalg.norm(d))
        if n < 1e-12:
            return np.zeros(3), tr.waypoint_index
        # do not overshoot the aim point within one sample
        return d / n * min(tr.vmax, n / t), tr.waypoint_index
    if tr.script == "waypoints":
        idx = tr.waypoint_index
        if idx >= len(tr.waypoints):
            return np.zeros(3), idx
        d = np.asarray(tr.waypoints[idx], dtype=float) - tr.x
        n = float(np.linalg.norm(d))
        if n <= tr.vmax * t:
            return d / t, idx + 1
        return d / n * tr.vmax, idx
    raise ConfigError(f"unknown target script {tr.script!r}")


def step_target(tr: TargetTrack, t: float) -> TargetTrack:
    """Move the target one sample along its script, speed capped at ``vmax``."""
    if t <= 0:
        raise ValueError("sampling period must be positive")
    v, idx = script_velocity(tr, t)
    v = _saturate(np.asarray(v, dtype=float), tr.vmax)
    return replace(tr, x=tr.x + t * v, v=v, waypoint_index=idx)


def project_target1(x1, h: float) -> np.ndarray:
    """Virtual escort point at height ``h`` above a surface target."""
    if h < 0:
        raise ValueError("projection height must be non-negative")
    x1 = vec3(x1)
    return x1 + np.array([0.0, 0.0, h])


def euler_from_rotation(R: np.ndarray) -> np.ndarray:
    yaw, pitch, roll = _Rot.from_matrix(R).as_euler(EULER_SEQ)
    return np.array([roll, pitch, yaw])


def rotation_from_euler(angles) -> np.ndarray:
    roll, pitch, yaw = angles
    return _Rot.from_euler(EULER_SEQ, [yaw, pitch, roll]).as_matrix()


@dataclass
class World:
    drones: list[DroneState]
    target1: TargetTrack
    target2: TargetTrack
    h: float = 0.0

    def x1_virtual(self) -> np.ndarray:
        return project_target1(self.target1.x, self.h)

    def true_ranges(self) -> tuple[float, float]:
        x2 = self.target2.x
        return (float(np.linalg.norm(self.drones[0].p - x2)),
                float(np.linalg.norm(self.drones[1].p - x2)))


@dataclass
class SensorModel:
    range_sigma: float = 0.02
    q12_sigma: float = 0.0
    attitude_sigma: float = 0.0
    dropout: float = 0.0
    min_range: float = 1e-6


def sense(world: World, model, rng) -> RangeObservation:
    """Noisy ranges to Target 2 plus the shared quantities.

    ``model`` is a SensorModel or a bare range sigma; ``rng`` a Generator or a
    seed. The generator is advanced by the same number of draws per call so
    toggling one noise source does not reshuffle the others.
    """
    if not isinstance(model, SensorModel):
        model = SensorModel(range_sigma=float(model))
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    r1, r2 = world.true_ranges()
    eps = rng.normal(0.0, 1.0, size=2) * model.range_sigma
    q_noise = rng.normal(0.0, 1.0, size=3) * model.q12_sigma
    a_noise = rng.normal(0.0, 1.0, size=(2, 3)) * model.attitude_sigma
    drop = rng.random() < model.dropout
    p1, p2 = world.drones[0].p, world.drones[1].p
    return RangeObservation(
        d1=max(r1 + eps[0], model.min_range),
        d2=max(r2 + eps[1], model.min_range),
        q12=(p1 - p2) + q_noise,
        x1_shared=world.x1_virtual(),
        attitude1=euler_from_rotation(world.drones[0].R) + a_noise[0],
        attitude2=euler_from_rotation(world.drones[1].R) + a_noise[1],
        dropped=bool(drop),
    )
