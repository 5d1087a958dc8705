"""Fixed-order simulation loop, trajectory log and CSV/JSONL export.

Per step: sense -> range geometry -> both estimators -> distance estimate and
zone -> compensator -> encirclement and attitude commands -> world step -> log.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, to_flat_dict
from .controller import (EngagementState, Zone, adc, attitude_control, classify_zone,
                         raw_zone, shape, shrink_radius, takedown_check, update_engagement)
from .estimator import (compensator_step, estimator_step, init_state,
                        inter_target_distance)
from .geometry import GeometryError, intersection_circle, range_output, so3_exp
from .worldsim import (DroneState, TargetTrack, World, rotation_from_euler, sense,
                       step_drone, step_target)


class NumericalError(RuntimeError):
    def __init__(self, step: int, quantity: str):
        super().__init__(f"non-finite {quantity} at step {step}")
        self.step = step
        self.quantity = quantity


# (name, shape); vectors export as name_x/_y/_z, matrices as name_ij
SCHEMA: list[tuple[str, tuple]] = [
    ("step", ()), ("time", ()), ("zone", ()),
    ("p1", (3,)), ("p2", (3,)), ("att1", (3,)), ("att2", (3,)),
    ("x1", (3,)), ("x2", (3,)), ("v1", (3,)), ("v2", (3,)),
    ("d1", ()), ("d2", ()), ("q12", (3,)), ("varpi", ()), ("varpi_noise", ()),
    ("circle_radius", ()), ("circle_center", (3,)), ("degenerate", ()), ("dropped", ()),
    ("qhat1", (3,)), ("qhat2", (3,)), ("eta", (3, 3)), ("vhat", (3,)),
    ("dhat12", ()), ("d12", ()),
    ("r_t1", ()), ("r_t2", ()), ("r_t2_next", ()),
    ("u1", (3,)), ("u2", (3,)), ("ubar1", (3,)), ("ubar2", (3,)),
    ("e_p", (3,)), ("e_v", (3,)),
    ("ebar_11", (3,)), ("ebar_21", (3,)), ("ebar_12", (3,)), ("ebar_22", (3,)),
    ("takedown", ()),
]
INT_FIELDS = {"step", "zone", "degenerate", "dropped", "takedown"}


def _columns(name, shp):
    if shp == ():
        return [name]
    if shp == (3,):
        return [f"{name}_{c}" for c in "xyz"]
    return [f"{name}_{i}{j}" for i in range(shp[0]) for j in range(shp[1])]


COLUMNS = [c for name, shp in SCHEMA for c in _columns(name, shp)]


@dataclass
class TrajectoryLog:
    data: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)
    takedown_step: int | None = None

    def __len__(self):
        return len(self.data["step"])

    def __getitem__(self, name):
        return self.data[name]

    def zone_sequence(self) -> list[int]:
        """Distinct zones in order of appearance, with repeats on re-entry."""
        seq = []
        for z in self.data["zone"]:
            if not seq or seq[-1] != z:
                seq.append(int(z))
        return seq

    def rows(self):
        flat = [self.data[name].reshape(len(self), -1) for name, _ in SCHEMA]
        return np.hstack(flat)


def _world_from_config(cfg: ScenarioConfig) -> World:
    x2 = np.asarray(cfg.x2_0, dtype=float)
    drones = [
        DroneState(rotation_from_euler(cfg.attitude1_0), x2 + np.asarray(cfg.q1_2_0)),
        DroneState(rotation_from_euler(cfg.attitude2_0), x2 + np.asarray(cfg.q2_2_0)),
    ]
    t1 = TargetTrack(np.asarray(cfg.x1_0, dtype=float), np.asarray(cfg.v1, dtype=float),
                     cfg.vmax1, cfg.target1_script, cfg.target1_waypoints)
    t2 = TargetTrack(x2, np.asarray(cfg.v2, dtype=float), cfg.vmax2,
                     cfg.target2_script, cfg.target2_waypoints)
    return World(drones, t1, t2, cfg.h)


def run_scenario(cfg: ScenarioConfig) -> TrajectoryLog:
    """Simulate until the step budget runs out or Target 2 is taken down."""
    t = cfg.t
    est_p, ctl_p, zt, sp = cfg.estimator, cfg.controller, cfg.zones, cfg.shape
    rng = np.random.default_rng(cfg.seed)
    sensor = cfg.sensor
    world = _world_from_config(cfg)
    records = {name: [] for name, _ in SCHEMA}

    est = [None, None]
    engagement = EngagementState()
    prev_world_disp = [None, None]  # R_hat u of the previous step, per drone
    x1v_prev = None
    takedown_step = None

    for k in range(cfg.steps):
        # 1. sense
        obs = sense(world, sensor, rng)
        p1, p2 = world.drones[0].p, world.drones[1].p
        x1v = obs.x1_shared
        x2 = world.target2.x
        for name, value in (("p1", p1), ("p2", p2), ("x2", x2), ("d1", obs.d1),
                            ("d2", obs.d2), ("q12", obs.q12)):
            if not np.all(np.isfinite(value)):
                raise NumericalError(k, name)
        R_hat = [rotation_from_euler(obs.attitude1), rotation_from_euler(obs.attitude2)]

        # 2. range geometry (drone 2 located through the shared q12)
        try:
            circle = intersection_circle(p1, p1 - obs.q12, obs.d1, obs.d2)
        except GeometryError:
            raise NumericalError(k, "circle") from None
        varpi = range_output(obs.d1, obs.d2, obs.q12, drone=1)
        varpi_noise = varpi - float(obs.q12 @ (p1 - x2))

        # 3. estimators
        p_own = (p1, p2)
        for i in range(2):
            if est[i] is None:
                est[i] = init_state(circle, p_own[i], est_p, drone=i + 1)
                est[i] = estimator_step(est[i], obs, np.eye(3), np.zeros(3), t, est_p)
            else:
                est[i] = estimator_step(est[i], obs, np.eye(3), prev_world_disp[i], t, est_p)

        # 4. distance estimate and zone
        q1_1, q2_1 = p1 - x1v, p2 - x1v
        dhat12 = inter_target_distance(est[0].qhat, q1_1)
        if k == 0:
            zone = raw_zone(dhat12, zt)
        else:
            zone = classify_zone(dhat12, zt, engagement.zone, ctl_p.hysteresis)

        # 5. compensator and engagement bookkeeping
        active = zone in (Zone.APPROACH, Zone.CAPTURE)
        for i in range(2):
            est[i] = compensator_step(est[i], circle, active, t, est_p, k)
        vhat = est[0].vhat
        engagement = update_engagement(engagement, zone, k, float(np.linalg.norm(vhat)), ctl_p)

        # 6. encirclement and attitude control
        v1_prev = np.zeros(3) if x1v_prev is None else (x1v - x1v_prev) / t
        if zone == Zone.PROTECT:
            r_now = r_next = ctl_p.r1
            q_used, v_comp = (q1_1, q2_1), v1_prev
        else:
            if zone == Zone.CAPTURE:
                r_now = engagement.r3
                r_next = shrink_radius(r_now, ctl_p, engagement.omega3_entry[1], zt, t)
            else:
                r_now = r_next = ctl_p.r2
            q_used, v_comp = (est[0].qhat, est[1].qhat), vhat
        z_k, z_next = shape(sp, k, r_now), shape(sp, k + 1, r_next)
        u1, u2 = adc(q_used, z_k, z_next, v_comp, ctl_p.alpha, R_hat, t)
        ubar1 = attitude_control(R_hat[0], t, ctl_p.max_rate)
        ubar2 = attitude_control(R_hat[1], t, ctl_p.max_rate)

        takedown = False
        if zone == Zone.CAPTURE:
            takedown = takedown_check((obs.d1, obs.d2), r_now, ctl_p.rbar, ctl_p.takedown_tol)
            if takedown:
                engagement = replace(engagement, takedown=True, takedown_step=k)
                takedown_step = k

        # metrics at step k, before the world moves
        z1 = shape(sp, k, ctl_p.r1)
        r_t2 = engagement.r3 if zone == Zone.CAPTURE else ctl_p.r2
        z2 = shape(sp, k, r_t2)
        q1_2, q2_2 = p1 - x2, p2 - x2
        rec = dict(
            step=k, time=k * t, zone=int(zone),
            p1=p1, p2=p2, att1=obs.attitude1, att2=obs.attitude2,
            x1=x1v, x2=x2,
            d1=obs.d1, d2=obs.d2, q12=obs.q12, varpi=varpi, varpi_noise=varpi_noise,
            circle_radius=circle.radius, circle_center=circle.center,
            degenerate=int(circle.degenerate), dropped=int(obs.dropped),
            qhat1=est[0].qhat, qhat2=est[1].qhat, eta=est[0].eta, vhat=vhat,
            dhat12=dhat12, d12=float(np.linalg.norm(x2 - x1v)),
            r_t1=ctl_p.r1, r_t2=r_t2,
            r_t2_next=r_next if zone != Zone.PROTECT else ctl_p.r2,
            u1=u1, u2=u2, ubar1=ubar1, ubar2=ubar2,
            e_p=q1_2 - est[0].qhat,
            ebar_11=q1_1 + z1, ebar_21=q2_1 - z1,
            ebar_12=q1_2 + z2, ebar_22=q2_2 - z2,
            takedown=int(takedown),
        )

        if zone == Zone.CAPTURE:
            engagement = replace(engagement, r3=r_next)

        # 7. world step
        new_drones = []
        for i, (u, ub) in enumerate(((u1, ubar1), (u2, ubar2))):
            d = step_drone(world.drones[i], u, ub, t)
            if cfg.attitude_walk > 0:
                d = DroneState(so3_exp(rng.normal(0.0, cfg.attitude_walk, 3), 1.0) @ d.R, d.p)
            new_drones.append(d)
        prev_world_disp = [R_hat[0] @ u1, R_hat[1] @ u2]
        t1 = step_target(world.target1, t)
        tr2 = world.target2
        if tr2.script == "kamikaze":
            tr2 = replace(tr2, aim=world.target1.x)
        t2 = step_target(tr2, t)
        x1v_prev = x1v
        world = World(new_drones, t1, t2, world.h)

        # 8. log
        rec["v1"] = (world.x1_virtual() - x1v) / t
        rec["v2"] = t2.v
        rec["e_v"] = t2.v - vhat
        for name, value in rec.items():
            arr = np.asarray(value, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise NumericalError(k, name)
            records[name].append(arr)
        if takedown:
            break

    data = {}
    for name, shp in SCHEMA:
        arr = np.array(records[name], dtype=float).reshape((-1,) + shp)
        data[name] = arr.astype(np.int64) if name in INT_FIELDS else arr
    meta = to_flat_dict(cfg)
    return TrajectoryLog(data, meta, takedown_step)


def export(log: TrajectoryLog, fmt: str, path) -> Path:
    """Write the log as CSV (fixed header) or JSON lines; 17 significant digits."""
    if len(log) == 0:
        raise ValueError("cannot export an empty log")
    path = Path(path)
    rows = log.rows()
    int_cols = {c for name, shp in SCHEMA if name in INT_FIELDS for c in _columns(name, shp)}
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for row in rows:
                w.writerow([str(int(v)) if c in int_cols else format(float(v), ".17g")
                            for c, v in zip(COLUMNS, row)])
    elif fmt == "jsonl":
        with path.open("w") as fh:
            for row in rows:
                obj = {c: (int(v) if c in int_cols else float(format(float(v), ".17g")))
                       for c, v in zip(COLUMNS, row)}
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def import_log(path, fmt: str | None = None) -> TrajectoryLog:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt == "csv":
        with path.open(newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header != COLUMNS:
                raise ValueError("unexpected CSV header")
            rows = np.array([[float(v) for v in row] for row in r], dtype=float)
    elif fmt == "jsonl":
        with path.open() as fh:
            rows = np.array([[json.loads(line)[c] for c in COLUMNS] for line in fh if line.strip()],
                            dtype=float)
    else:
        raise ValueError(f"unknown log format {fmt!r}")
    rows = rows.reshape(-1, len(COLUMNS))
    data, col = {}, 0
    for name, shp in SCHEMA:
        width = int(np.prod(shp)) if shp else 1
        arr = rows[:, col:col + width].reshape((-1,) + shp)
        data[name] = arr.astype(np.int64) if name in INT_FIELDS else arr
        col += width
    hits = np.flatnonzero(data["takedown"])
    return TrajectoryLog(data, {}, int(data["step"][hits[0]]) if len(hits) else None)
