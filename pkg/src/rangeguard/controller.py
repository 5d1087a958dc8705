"""Zone logic, encirclement shape and the anti-synchronised encirclement laws.

Drone 1 tracks ``-zeta`` and drone 2 tracks ``+zeta`` around the active
target, so the pair always sits on opposite sides of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .estimator import GateError
from .geometry import GeometryError, rotation_angle, so3_log

ALPHA_BOUND = 1.0 / math.sqrt(3.0)


class Zone(IntEnum):
    PROTECT = 1   # d >= z3: escort Target 1
    APPROACH = 2  # z2 <= d < z3: encircle Target 2
    CAPTURE = 3   # d < z2: shrink onto Target 2


G_FUNCS = {
    "cos": math.cos,
    "sin": math.sin,
    "none": lambda _: 0.0,
}


@dataclass(frozen=True)
class ShapeParams:
    r: float
    nu: float = 0.5
    g_kind: str = "cos"
    g_amplitude: float = 0.3
    g_freq: float = 1.0 / 8.0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("encirclement radius must be positive")
        if self.g_kind not in G_FUNCS:
            raise ValueError(f"unknown vertical motion function {self.g_kind!r}")

    def g(self, k: int) -> float:
        return self.g_amplitude * G_FUNCS[self.g_kind](self.g_freq * k * math.pi)


def shape(sp: ShapeParams, k: int, r: float | None = None) -> np.ndarray:
    """``r * (sin(nu k pi), cos(nu k pi), g(k))``."""
    if k < 0:
        raise ValueError("step index must be non-negative")
    r = sp.r if r is None else r
    a = sp.nu * k * math.pi
    return r * np.array([math.sin(a), math.cos(a), sp.g(k)])


@dataclass(frozen=True)
class ZoneThresholds:
    z1: float = 0.3
    z2: float = 1.5
    z3: float = 4.5

    def __post_init__(self):
        if not 0.0 < self.z1 < self.z2 < self.z3:
            raise ValueError(
                f"zone thresholds must satisfy 0 < z1 < z2 < z3, got "
                f"({self.z1}, {self.z2}, {self.z3})")

    def interval(self, zone: Zone) -> tuple[float, float]:
        return {
            Zone.PROTECT: (self.z3, math.inf),
            Zone.APPROACH: (self.z2, self.z3),
            Zone.CAPTURE: (-math.inf, self.z2),
        }[Zone(zone)]


@dataclass(frozen=True)
class ControllerParams:
    alpha: float = -0.001
    r1: float = 5.8
    r2: float = 3.0
    rbar: float = 0.1
    iota2: float = 0.03
    hysteresis: float = 0.1
    max_rate: float = 50.0
    takedown_tol: float = 0.05
    enforce_gate: bool = True

    def __post_init__(self):
        if self.enforce_gate and not -ALPHA_BOUND < self.alpha <= ALPHA_BOUND:
            raise GateError(
                f"encirclement-gain gate: alpha={self.alpha} must satisfy "
                "-1/sqrt(3) < alpha <= 1/sqrt(3)")
        if not 0.0 < self.rbar < self.r2:
            raise ValueError("capture radius rbar must satisfy 0 < rbar < r2")
        if self.r1 <= 0:
            raise ValueError("r1 must be positive")
        if self.hysteresis < 0 or self.iota2 < 0:
            raise ValueError("hysteresis and iota2 must be non-negative")


@dataclass(frozen=True)
class EngagementState:
    zone: Zone = Zone.PROTECT
    r3: float = math.nan
    omega3_entry: tuple[int, float] | None = None
    takedown: bool = False
    takedown_step: int | None = None


def raw_zone(dhat12: float, zt: ZoneThresholds) -> Zone:
    if dhat12 >= zt.z3:
        return Zone.PROTECT
    if dhat12 >= zt.z2:
        return Zone.APPROACH
    return Zone.CAPTURE


def classify_zone(dhat12: float, zt: ZoneThresholds, prev: Zone | None = None,
                  hysteresis: float = 0.0) -> Zone:
    """Zone of ``dhat12``; leaving ``prev`` needs a margin of ``hysteresis``.

    Distances below z1 stay in the capture zone.
    """
    if dhat12 < 0:
        raise ValueError("distance must be non-negative")
    new = raw_zone(dhat12, zt)
    if prev is None or new == prev:
        return new
    lo, hi = zt.interval(prev)
    if lo - hysteresis <= dhat12 < hi + hysteresis:
        return Zone(prev)
    return new


def adc(q, zeta_k, zeta_next, v_comp, alpha: float, R, t: float):
    """Body-frame velocity commands for both guardians.

    ``q`` holds the (estimated) relative positions of drone 1 and drone 2 to
    the active target, ``v_comp`` the target velocity to feed forward and
    ``R`` the two measured attitudes. The closed loop gives
    ``q1+ + zeta+ = alpha (q1 + zeta)`` when ``q`` and ``v_comp`` are exact.
    """
    q1, q2 = (np.asarray(x, dtype=float) for x in q)
    R1, R2 = (np.asarray(x, dtype=float) for x in R)
    comp = t * np.asarray(v_comp, dtype=float)
    w1 = (alpha - 1.0) * q1 + alpha * zeta_k - zeta_next + comp
    w2 = (alpha - 1.0) * q2 - alpha * zeta_k + zeta_next + comp
    return R1.T @ w1 / t, R2.T @ w2 / t


def shrink_radius(r3_prev: float, params: ControllerParams, speed_at_entry: float,
                  zt: ZoneThresholds, t: float) -> float:
    """Next capture radius.

    The step shrinks the orbit from r2 to rbar over roughly the time the
    target needs to cross from z2 to z1 at its entry speed; ``t * speed`` is
    that speed as a per-sample displacement.
    """
    dec = (params.r2 - params.rbar) * (t * speed_at_entry + params.iota2) / (zt.z2 - zt.z1)
    return max(params.rbar, r3_prev - dec)


def update_engagement(es: EngagementState, zone: Zone, step: int, speed: float,
                      params: ControllerParams) -> EngagementState:
    """Zone bookkeeping; entering the capture zone resets the orbit to r2."""
    if zone == Zone.CAPTURE:
        if es.zone != Zone.CAPTURE or es.omega3_entry is None:
            return replace(es, zone=zone, r3=params.r2, omega3_entry=(step, speed))
        return replace(es, zone=zone)
    return replace(es, zone=zone, r3=math.nan, omega3_entry=None)


def attitude_control(R_measured, t: float, max_rate: float = 50.0) -> np.ndarray:
    """Angular-rate command that returns the body frame to the world frame.

    Deadbeat (``Exp(ubar t) R = I``) away from the pi branch; there the
    command turns half-way about the extracted axis. The rate is clamped
    to ``max_rate`` in both cases.
    """
    R = np.asarray(R_measured, dtype=float)
    try:
        ubar = -so3_log(R) / t
    except GeometryError:
        # axis from the symmetric part, R ~ 2 n n^T - I near pi
        B = 0.5 * (R + np.eye(3))
        n = B[:, int(np.argmax(np.diag(B)))]
        n = n / np.linalg.norm(n)
        ubar = -n * (0.5 * rotation_angle(R)) / t
    rate = float(np.linalg.norm(ubar))
    if rate > max_rate:
        ubar = ubar * (max_rate / rate)
    return ubar


def takedown_check(d_to_target2, r3: float, rbar: float, tol: float = 0.05) -> bool:
    """Capture fires once the orbit has fully shrunk and a guardian is in reach."""
    if not r3 <= rbar:
        return False
    return float(np.min(d_to_target2)) <= rbar + tol
