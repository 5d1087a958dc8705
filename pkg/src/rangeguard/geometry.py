"""3-D rotation helpers and two-sphere range geometry.

Relative-position convention used throughout the package: ``q_i^j = p_i - x_j``
(drone minus target) and ``q12 = p1 - p2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SMALL_ANGLE = 1e-8
LOG_BRANCH_MARGIN = 1e-6


class GeometryError(ValueError):
    pass


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise GeometryError(f"non-finite vector {v}")
    return v


def skew(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def vee(S: np.ndarray) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def so3_exp(omega, t: float = 1.0) -> np.ndarray:
    """Rotation matrix for the axis-angle vector ``omega * t`` (Rodrigues)."""
    phi = np.asarray(omega, dtype=float) * t
    theta = float(np.linalg.norm(phi))
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * K @ K
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * K @ K


def so3_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of ``R`` on the principal branch.

    Raises GeometryError when the angle is within 1e-6 of pi, where the
    axis sign is ambiguous.
    """
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    theta = math.acos(cos_theta)
    if theta >= math.pi - LOG_BRANCH_MARGIN:
        raise GeometryError(f"rotation angle {theta:.9f} too close to pi")
    A = 0.5 * (R - R.T)
    if theta < SMALL_ANGLE:
        # theta/sin(theta) ~ 1 + theta^2/6
        return vee(A) * (1.0 + theta**2 / 6.0)
    return vee(A) * (theta / math.sin(theta))


def rotation_angle(R: np.ndarray) -> float:
    return math.acos(np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0))


def is_rotation(R: np.ndarray, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    return (R.shape == (3, 3)
            and np.allclose(R.T @ R, np.eye(3), atol=tol)
            and abs(np.linalg.det(R) - 1.0) <= tol)


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class IntersectionCircle:
    radius: float
    center: np.ndarray
    degenerate: bool


def intersection_circle(p1, p2, d1: float, d2: float) -> IntersectionCircle:
    """Circle on which two range spheres (centres p1, p2) intersect.

    A negative discriminant (spheres that miss each other because of range
    noise) is clamped to zero and flagged as degenerate; the centre is then
    the point on the baseline nearest both spheres.
    """
    p1, p2 = vec3(p1), vec3(p2)
    base = p2 - p1
    d12_sq = float(base @ base)
    if d12_sq <= 1e-18:
        raise GeometryError("coincident drone positions")
    d12 = math.sqrt(d12_sq)
    s = d1**2 - d2**2 + d12_sq
    disc = 4.0 * d12_sq * d1**2 - s**2
    degenerate = disc < 0.0
    radius = math.sqrt(max(0.0, disc)) / (2.0 * d12)
    center = p1 + (s / (2.0 * d12_sq)) * base
    return IntersectionCircle(radius, center, degenerate)


def range_output(d1: float, d2: float, q12, drone: int = 1) -> float:
    """Scalar output ``q12 . q_i^2`` reconstructed from the two ranges.

    For drone 1 this is ``(d1^2 - d2^2 + |q12|^2) / 2``; drone 2's relative
    vector differs by ``q12`` so its output is shifted by ``-|q12|^2``.
    """
    q12 = np.asarray(q12, dtype=float)
    nsq = float(q12 @ q12)
    w = 0.5 * (d1**2 - d2**2 + nsq)
    if drone == 1:
        return w
    if drone == 2:
        return w - nsq
    raise ValueError(f"drone index must be 1 or 2, got {drone}")
