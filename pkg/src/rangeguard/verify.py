"""Numerical checks of the convergence analysis against logged runs.

The Lyapunov difference inequalities are evaluated step by step from logged
ground truth. The closed-form steady-state bounds are evaluated with
empirically measured inputs and checked as one-sided inequalities.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .controller import ALPHA_BOUND, ShapeParams, shape
from .estimator import pe_check


@dataclass(frozen=True)
class Violation:
    step: int
    inequality: str
    margin: float


@dataclass
class BoundReport:
    beta_hat: float
    beta_check: float
    rho1: float
    rho2_empirical: float
    eps22: float
    eps21: float
    eps11: float
    pe_min_eig: float
    steady: dict
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violations"] = [asdict(v) for v in self.violations]
        d["ok"] = self.ok
        return d


def bound_rho1(t, gamma1, beta_hat, beta_check, rho2) -> float:
    """Asymptotic bound on the squared position-estimation error."""
    if not 0.0 < gamma1 < 0.5:
        raise ValueError(f"bound undefined for gamma1={gamma1}; needs 0 < gamma1 < 1/2")
    if beta_hat <= 0 or beta_check <= 0:
        raise ValueError("covariance bounds must be positive")
    return 2.0 * t**2 * gamma1 * beta_check * rho2**2 / ((1.0 - 2.0 * gamma1) * beta_hat)


def bound_eps(alpha, rho1, rho2, vmax2, vmax1=0.0):
    """Steady-state bounds ``(eps22, eps21, eps11)`` on squared encirclement errors.

    ``rho2``, ``vmax2`` and ``vmax1`` are per-sample displacements. The two
    Target-1 bounds carry a ``1 - 2 alpha^2`` denominator (a two-term split of
    the error recursion) while eps22 carries ``1 - 3 alpha^2``.
    """
    if not abs(alpha) < ALPHA_BOUND:
        raise ValueError(f"bounds diverge for |alpha| >= 1/sqrt(3), got {alpha}")
    eps22 = (3.0 * (alpha - 1.0)**2 * rho1 + 3.0 * (rho2 + vmax2)**2) / (1.0 - 3.0 * alpha**2)
    eps11 = 8.0 * vmax1**2 / (1.0 - 2.0 * alpha**2)
    eps21 = 2.0 * vmax1**2 / (1.0 - 2.0 * alpha**2)
    return eps22, eps21, eps11


def _tol(scale, tol):
    return tol * max(1.0, scale)


def noise_equivalent_velocity(log, gamma1: float, t: float) -> np.ndarray:
    """Velocity error that reproduces step k -> k+1 including range noise.

    A measurement-noise term ``n`` on the output enters the error update
    exactly like an extra velocity error ``eta a n / (gamma1 t)``. Row k
    is the disturbance acting on the transition out of step k; the last
    row has no successor and is zero.
    """
    e_v = np.asarray(log["e_v"], dtype=float)
    out = e_v.copy()
    eta, q12, n = log["eta"], log["q12"], log["varpi_noise"]
    for k in range(len(e_v) - 1):
        out[k] = e_v[k] + eta[k] @ q12[k + 1] * n[k + 1] / (gamma1 * t)
    out[-1] = 0.0
    return out


def estimation_margins(log, gamma1: float, t: float, include_noise: bool = True):
    """Per-step ``(k, margin, scale)`` of the estimation Lyapunov inequality.

    ``margin = (V+ - V) - rhs`` with ``V = e_p^T inv(eta) e_p`` and
    ``rhs = (2 gamma1 - 1) V + 2 gamma1 t^2 e_v^T inv(eta) e_v``; it is
    non-positive when the inequality holds. With ``include_noise`` the
    velocity error is augmented by the noise-equivalent term so the
    inequality applies to noisy runs. Dropped samples are skipped.
    """
    e_p = np.asarray(log["e_p"], dtype=float)
    eta = np.asarray(log["eta"], dtype=float)
    dropped = np.asarray(log["dropped"])
    e_v = noise_equivalent_velocity(log, gamma1, t) if include_noise else np.asarray(log["e_v"])
    out = []
    for k in range(len(e_p) - 1):
        if dropped[k + 1]:
            continue
        info = np.linalg.inv(eta[k])
        info_next = np.linalg.inv(eta[k + 1])
        V = e_p[k] @ info @ e_p[k]
        V_next = e_p[k + 1] @ info_next @ e_p[k + 1]
        rhs = (2 * gamma1 - 1) * V + 2 * gamma1 * t**2 * (e_v[k] @ info @ e_v[k])
        out.append((k, float((V_next - V) - rhs), float(max(V, V_next))))
    return out


def lyapunov_check_estimation(log, gamma1: float, t: float, include_noise: bool = True,
                              tol: float = 1e-9) -> list[Violation]:
    """Steps where the estimation inequality fails by more than ``tol`` (relative)."""
    return [Violation(k, "estimation", m)
            for k, m, scale in estimation_margins(log, gamma1, t, include_noise)
            if m > _tol(scale, tol)]


def _shape_from_meta(meta) -> ShapeParams:
    return ShapeParams(r=meta.get("r1", 5.8), nu=meta["nu"], g_kind=meta["g_kind"],
                       g_amplitude=meta["g_amplitude"], g_freq=meta["g_freq"])


def encirclement_margins(log, alpha: float, sp: ShapeParams | None = None,
                         t: float | None = None):
    """Per-step ``(k, id, margin, scale)`` of the encirclement inequalities.

    Target 2 (zones 2-3):
    ``dV <= (3 a^2 - 1) V + 3 (a - 1)^2 |e_p|^2 + 3 |e_v- + dv|^2`` with the
    velocity terms as per-sample displacements. Target 1 (zone 1):
    ``dV <= (2 a^2 - 1) V + 2 |dv1|^2``.
    """
    meta = getattr(log, "meta", {}) or {}
    sp = sp or _shape_from_meta(meta)
    t = t if t is not None else meta["t"]
    zone = np.asarray(log["zone"])
    p = (np.asarray(log["p1"]), np.asarray(log["p2"]))
    x1, x2 = np.asarray(log["x1"]), np.asarray(log["x2"])
    v1, v2 = np.asarray(log["v1"]), np.asarray(log["v2"])
    vhat, e_p = np.asarray(log["vhat"]), np.asarray(log["e_p"])
    r1, r_t2, r_next = log["r_t1"], log["r_t2"], log["r_t2_next"]
    sign = (1.0, -1.0)  # drone 1 tracks -zeta, drone 2 tracks +zeta
    c3, c2 = 3 * alpha**2 - 1, 2 * alpha**2 - 1
    out = []
    for k in range(len(zone) - 1):
        if zone[k] == 1:
            z_k, z_n, x, x_n = shape(sp, k, r1[k]), shape(sp, k + 1, r1[k]), x1[k], x1[k + 1]
            v_prev = v1[k - 1] if k > 0 else np.zeros(3)
            dv = t * (v1[k] - v_prev)
            extra, coef, tag = 2 * dv @ dv, c2, "t1"
        else:
            z_k, z_n, x, x_n = shape(sp, k, r_t2[k]), shape(sp, k + 1, r_next[k]), x2[k], x2[k + 1]
            v_prev = v2[k - 1] if k > 0 else v2[k]
            d = t * (v_prev - vhat[k]) + t * (v2[k] - v_prev)
            extra = 3 * (alpha - 1)**2 * (e_p[k] @ e_p[k]) + 3 * d @ d
            coef, tag = c3, "t2"
        for i in range(2):
            e = p[i][k] - x + sign[i] * z_k
            e_n = p[i][k + 1] - x_n + sign[i] * z_n
            V, V_n = e @ e, e_n @ e_n
            out.append((k, f"encircle_{tag}_drone{i + 1}",
                        float((V_n - V) - (coef * V + extra)), float(max(V, V_n))))
    return out


def lyapunov_check_encirclement(log, alpha: float, sp: ShapeParams | None = None,
                                t: float | None = None, tol: float = 1e-9) -> list[Violation]:
    """Violations of the encirclement inequalities for both guardians.

    Steps where the contraction factor (``3 a^2 - 1`` near Target 2,
    ``2 a^2 - 1`` near Target 1) is not negative are reported as
    ``contraction`` violations: the inequality then certifies no decrease.
    """
    out = [Violation(k, name, m) for k, name, m, scale in encirclement_margins(log, alpha, sp, t)
           if m > _tol(scale, tol)]
    zone = np.asarray(log["zone"])
    for k in range(len(zone) - 1):
        coef, tag = (2 * alpha**2 - 1, "t1") if zone[k] == 1 else (3 * alpha**2 - 1, "t2")
        if coef >= 0:
            out.append(Violation(k, f"contraction_{tag}", float(coef)))
    return out


def steady_mask(log, settle: int = 16, zones=(2, 3)) -> np.ndarray:
    """Steps in ``zones`` at least ``settle`` steps after the first entry."""
    zone = np.asarray(log["zone"])
    inside = np.isin(zone, zones)
    mask = np.zeros(len(zone), dtype=bool)
    hits = np.flatnonzero(inside)
    if len(hits):
        start = hits[0] + settle
        mask[start:] = inside[start:]
    return mask


def steady_state_metrics(log, window: int | None = None, settle: int = 16) -> dict:
    """RMS and max errors per zone after the settling period.

    Target 2 metrics cover zones 2-3 from ``settle`` steps after the first
    entry into zone 2; Target 1 metrics cover zone 1 after ``settle`` steps
    and use the horizontal components only (surface escort). ``window``
    optionally restricts each set to its trailing ``window`` steps.
    """
    def trail(mask):
        idx = np.flatnonzero(mask)
        return idx[-window:] if window else idx

    out = {}
    idx2 = trail(steady_mask(log, settle, (2, 3)))
    if len(idx2):
        ep = np.linalg.norm(log["e_p"][idx2], axis=1)
        eb = np.maximum(np.linalg.norm(log["ebar_12"][idx2], axis=1),
                        np.linalg.norm(log["ebar_22"][idx2], axis=1))
        out["target2"] = dict(
            steps=int(len(idx2)),
            e_p_max=float(ep.max()), e_p_rms=float(np.sqrt(np.mean(ep**2))),
            ebar_max=float(eb.max()), ebar_rms=float(np.sqrt(np.mean(eb**2))),
        )
        for z in (2, 3):
            sel = idx2[np.asarray(log["zone"])[idx2] == z]
            if len(sel):
                e = np.linalg.norm(log["e_p"][sel], axis=1)
                out[f"zone{z}"] = dict(steps=int(len(sel)), e_p_max=float(e.max()),
                                       e_p_rms=float(np.sqrt(np.mean(e**2))))
    idx1 = trail(steady_mask(log, settle, (1,)))
    if len(idx1):
        e1 = np.linalg.norm(log["ebar_11"][idx1][:, :2], axis=1)
        e2 = np.linalg.norm(log["ebar_21"][idx1][:, :2], axis=1)
        both = np.concatenate([e1, e2])
        out["target1"] = dict(steps=int(len(idx1)), ebar_rms=float(np.sqrt(np.mean(both**2))),
                              ebar_max=float(both.max()))
    return out


def covariance_bounds(log, mask) -> tuple[float, float]:
    """Extreme eigenvalues of ``inv(eta)`` over the masked steps."""
    lo, hi = math.inf, 0.0
    for k in np.flatnonzero(mask):
        eig = np.linalg.eigvalsh(np.linalg.inv(log["eta"][k]))
        lo, hi = min(lo, eig[0]), max(hi, eig[-1])
    return float(lo), float(hi)


def verify_run(log, gamma1: float, alpha: float, t: float, vmax2: float, vmax1: float = 0.0,
               settle: int = 16, pe_window: int = 16) -> BoundReport:
    """Run every check on one log and collect a BoundReport."""
    violations = lyapunov_check_estimation(log, gamma1, t)
    violations += lyapunov_check_encirclement(log, alpha, t=t)
    notes = ["eps11/eps21 use a 1-2*alpha^2 denominator, eps22 uses 1-3*alpha^2"]
    mask = steady_mask(log, settle, (2, 3))
    steady = steady_state_metrics(log, settle=settle)
    if not mask.any():
        notes.append("run never reached a steady Target-2 encirclement; bounds not evaluated")
        return BoundReport(math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                           math.nan, math.nan, steady, violations, notes)
    beta_hat, beta_check = covariance_bounds(log, mask)
    ev_eff = noise_equivalent_velocity(log, gamma1, t)
    idx = np.flatnonzero(mask)
    idx_inner = idx[idx < len(log) - 1]
    rho2 = float(max(np.linalg.norm(ev_eff[idx_inner], axis=1).max(initial=0.0),
                     np.linalg.norm(log["e_v"][idx], axis=1).max()))
    # excitation of the inter-drone baseline inside the steady set
    pe_min = math.inf
    for s in range(idx[0], idx[-1] - pe_window + 2):
        if mask[s:s + pe_window].all():
            pe_min = min(pe_min, pe_check(log["q12"][s:s + pe_window], pe_window)[0])
    try:
        rho1 = bound_rho1(t, gamma1, beta_hat, beta_check, rho2)
    except ValueError as exc:
        rho1 = math.inf
        notes.append(str(exc))
    try:
        eps22, eps21, eps11 = bound_eps(alpha, rho1, t * rho2, t * vmax2, t * vmax1)
    except ValueError as exc:
        eps22 = eps21 = eps11 = math.nan
        notes.append(str(exc))
        violations.append(Violation(int(idx[0]), "eps22_undefined", float(3 * alpha**2 - 1)))
    ep_sq = np.sum(log["e_p"][idx]**2, axis=1)
    for k, v in zip(idx, ep_sq):
        if v > rho1:
            violations.append(Violation(int(k), "rho1", float(v - rho1)))
    if not math.isnan(eps22):
        eb_sq = np.maximum(np.sum(log["ebar_12"][idx]**2, axis=1),
                           np.sum(log["ebar_22"][idx]**2, axis=1))
        for k, v in zip(idx, eb_sq):
            if v > eps22:
                violations.append(Violation(int(k), "eps22", float(v - eps22)))
        m1 = steady_mask(log, settle, (1,))
        for k in np.flatnonzero(m1):
            v = max(np.sum(log["ebar_11"][k][:2]**2), np.sum(log["ebar_21"][k][:2]**2))
            if v > eps21 + 1e-12:
                violations.append(Violation(int(k), "eps21", float(v - eps21)))
    if not pe_min > 1e-6:
        violations.append(Violation(int(idx[0]), "pe", float(pe_min)))
    return BoundReport(beta_hat, beta_check, rho1, rho2, eps22, eps21, eps11,
                       float(pe_min), steady, violations, notes)
