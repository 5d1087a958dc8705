"""Range-only target position estimator (RLS with forgetting factor).

Each guardian runs one instance. The regressor is the inter-drone vector
``q12`` and the scalar output is reconstructed from the two ranges, so both
instances see identical innovations and stay exactly ``q12`` apart.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import IntersectionCircle, range_output

PE_TOL = 1e-6


class GateError(ValueError):
    """A parameter lies outside the range where convergence is guaranteed."""


@dataclass(frozen=True)
class EstimatorParams:
    gamma1: float = 0.45
    eta0: float = 1.0
    vmax2: float = 0.3
    warmup: int = 2
    lag: int = 16

    def __post_init__(self):
        if not 0.0 < self.gamma1 <= 0.5:
            raise GateError(
                f"forgetting-factor gate: gamma1={self.gamma1} "
                "must satisfy 0 < gamma1 <= 1/2")
        if not self.eta0 > 0.0:
            raise ValueError("eta0 must be positive")
        if self.vmax2 <= 0.0:
            raise ValueError("vmax2 must be positive")
        if self.lag < 1 or self.warmup < 0:
            raise ValueError("compensator lag must be >= 1 and warmup >= 0")


@dataclass(frozen=True)
class EstimatorState:
    qhat: np.ndarray
    eta: np.ndarray
    vhat: np.ndarray
    c_prev: np.ndarray | None
    k: int = 0
    drone: int = 1
    c_prev_step: int = 0
    active_steps: int = 0
    centers: tuple = ()  # (step, centre) of recent non-degenerate circles


def init_state(circle: IntersectionCircle, p_i, params: EstimatorParams,
               drone: int = 1) -> EstimatorState:
    """Initial guess: the target sits at the intersection-circle centre."""
    return EstimatorState(
        qhat=np.asarray(p_i, dtype=float) - circle.center,
        eta=params.eta0 * np.eye(3),
        vhat=np.zeros(3),
        c_prev=None,
        drone=drone,
    )


def predict(s: EstimatorState, R, u, t: float) -> np.ndarray:
    """One-step prediction from the drone's own world displacement.

    With ``q = p - x`` the target's motion enters with a minus sign.
    """
    return s.qhat + t * (np.asarray(R) @ np.asarray(u, dtype=float) - s.vhat)


def gain(eta_prev: np.ndarray, q12, gamma1: float) -> np.ndarray:
    q12 = np.asarray(q12, dtype=float)
    Pq = eta_prev @ q12
    return Pq / (gamma1 + q12 @ Pq)


def covariance_update(eta_prev: np.ndarray, q12, gamma1: float) -> np.ndarray:
    """Covariance whose inverse is ``gamma1 * inv(eta_prev) + q12 q12^T``.

    Evaluated in covariance form (no explicit inverse) and re-symmetrised.
    """
    q12 = np.asarray(q12, dtype=float)
    K = gain(eta_prev, q12, gamma1)
    eta = (eta_prev - np.outer(K, q12 @ eta_prev)) / gamma1
    return 0.5 * (eta + eta.T)


def displacement_compensator(c, c_prev, vmax2: float, t: float, active: bool = True,
                             degenerate: bool = False, vhat_prev=None,
                             elapsed: int = 1) -> np.ndarray:
    """Target velocity surrogate from the motion of the circle centre.

    ``v = vmax2 * w / max(vmax2, |w|)`` with ``w = (c - c_prev) / (t * elapsed)``,
    so the result never exceeds ``vmax2``.
    """
    if not active:
        return np.zeros(3)
    if degenerate or c_prev is None:
        return np.zeros(3) if vhat_prev is None else np.asarray(vhat_prev, dtype=float)
    w = (np.asarray(c, dtype=float) - np.asarray(c_prev, dtype=float)) / (t * elapsed)
    return vmax2 * w / max(vmax2, float(np.linalg.norm(w)))


def correct(s: EstimatorState, obs, pred, K) -> EstimatorState:
    """Measurement update ``qhat = pred + K (w - q12 . pred)``."""
    q12 = np.asarray(obs.q12, dtype=float)
    w = range_output(obs.d1, obs.d2, q12, drone=s.drone)
    qhat = pred + np.asarray(K) * (w - q12 @ pred)
    return replace(s, qhat=qhat)


def estimator_step(s: EstimatorState, obs, R_prev, u_prev, t: float,
                   params: EstimatorParams) -> EstimatorState:
    """Predict, then gain/covariance/correct unless the sample was dropped."""
    pred = predict(s, R_prev, u_prev, t)
    if getattr(obs, "dropped", False):
        return replace(s, qhat=pred, k=s.k + 1)
    K = gain(s.eta, obs.q12, params.gamma1)
    eta = covariance_update(s.eta, obs.q12, params.gamma1)
    s = correct(replace(s, eta=eta, k=s.k + 1), obs, pred, K)
    return s


def compensator_step(s: EstimatorState, circle: IntersectionCircle, active: bool,
                     t: float, params: EstimatorParams, step: int) -> EstimatorState:
    """Refresh ``vhat`` for the current zone.

    The centre is differenced against the newest recorded centre at least
    ``params.lag`` steps old. With the lag equal to the encirclement period
    the baseline has the same orientation at both ends, so a constant
    placement offset of the guardians cancels instead of feeding back into
    the estimate. Until that much history exists the oldest recorded centre
    is used. The first ``params.warmup`` active steps are skipped (the
    guardians are still re-forming around Target 2) and degenerate circles
    hold the previous estimate.
    """
    if not active:
        return replace(s, vhat=np.zeros(3), c_prev=None, active_steps=0, centers=())
    n_active = s.active_steps + 1
    if n_active <= params.warmup:
        return replace(s, vhat=np.zeros(3), active_steps=n_active)
    if circle.degenerate:
        return replace(s, active_steps=n_active)
    older = [(k, c) for k, c in s.centers if step - k >= params.lag]
    if older or s.centers:
        k_prev, c_prev = older[-1] if older else s.centers[0]
        vhat = displacement_compensator(circle.center, c_prev, params.vmax2, t,
                                        elapsed=step - k_prev)
    else:
        k_prev, c_prev, vhat = s.c_prev_step, s.c_prev, s.vhat
    keep = tuple((k, c) for k, c in s.centers if step - k <= params.lag)
    return replace(s, vhat=vhat, c_prev=c_prev, c_prev_step=k_prev, active_steps=n_active,
                   centers=keep + ((step, circle.center.copy()),))


def inter_target_distance(qhat2, q1) -> float:
    return float(np.linalg.norm(np.asarray(qhat2, dtype=float) - np.asarray(q1, dtype=float)))


def pe_check(window, N: int | None = None, tol: float = PE_TOL):
    """Eigen-bounds of the windowed regressor Gram sum ``sum q q^T``.

    Returns ``(min_eig, max_eig, is_pe)``.
    """
    Q = np.asarray(window, dtype=float).reshape(-1, 3)
    if N is None:
        N = len(Q)
    if N < 3:
        raise ValueError("a window shorter than 3 samples cannot span 3-space")
    if len(Q) != N:
        raise ValueError(f"window has {len(Q)} samples, expected {N}")
    eig = np.linalg.eigvalsh(Q.T @ Q)
    return float(eig[0]), float(eig[-1]), bool(eig[0] > tol)
