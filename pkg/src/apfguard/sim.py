"""Fixed-step scenario execution with conflict/arrival/deadlock monitoring.

The engine is deterministic and single-threaded: per step, every vehicle's
command is computed from the state at time t, then all vehicles and obstacles
advance synchronously.  Internally the loop is vectorized over vehicles and
obstacles with numpy; the public types stay plain dataclasses.

Trace CSV schema (one row per (t, vehicle), header mandatory, floats at nine
significant digits)::

    t,vid,px,py,vx,vy,xix,xiy,vcx,vcy,dwp[,oid,dxi,dp,theta,Vo,ao]...

with one ``oid,dxi,dp,theta,Vo,ao`` block per configured obstacle (peers are
not serialized as obstacle blocks; pairwise distances follow from the per-
vehicle ``xix,xiy`` columns).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    CONSTANT_VELOCITY,
    DEFAULT_DT,
    MulticopterState,
    Obstacle,
    VehicleParams,
    step_obstacle,
)
from .errors import DegenerateGeometryError, InvalidArgumentError, InvalidConfigurationError
from .guidance import GuidanceParams, bump_window
from .mathcore import Vec2
from .multiobs import ALL_WITHIN, NEAREST_WITHIN, combine_parallel
from . import mathcore

DEFAULT_ARRIVAL_TOL = 0.1
DEFAULT_ARRIVAL_HOLD_S = 1.0
DEADLOCK_WINDOW_S = 5.0


@dataclass
class VehicleSpec:
    params: VehicleParams
    initial: MulticopterState
    waypoint: Vec2


@dataclass
class SimOptions:
    combine_parallel: bool = False
    selection_policy: str = ALL_WITHIN
    peers_as_obstacles: bool = False
    peer_radius: float = 0.0
    vel_tol: float = 1e-6
    arrival_tol: float = DEFAULT_ARRIVAL_TOL
    arrival_hold_s: float = DEFAULT_ARRIVAL_HOLD_S


@dataclass
class ScenarioConfig:
    vehicles: list[VehicleSpec]
    obstacles: list[Obstacle]
    guidance: GuidanceParams = field(default_factory=GuidanceParams)
    dt: float = DEFAULT_DT
    t_end: float = 60.0
    options: SimOptions = field(default_factory=SimOptions)

    def check(self) -> None:
        """Raise InvalidConfigurationError on structural problems."""
        if not self.vehicles:
            raise InvalidConfigurationError("at least one vehicle is required")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise InvalidConfigurationError(f"dt must be positive, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end > self.dt):
            raise InvalidConfigurationError(f"t_end must exceed dt, got {self.t_end!r}")
        if self.options.selection_policy not in (ALL_WITHIN, NEAREST_WITHIN):
            raise InvalidConfigurationError(
                f"unknown selection policy {self.options.selection_policy!r}"
            )
        if self.options.peer_radius < 0.0:
            raise InvalidConfigurationError("peer_radius must be nonnegative")
        for veh in self.vehicles:
            for ob in self.obstacles:
                # raises InvalidConfigurationError when the window is empty
                bump_window(ob.r_o, self.guidance.gamma, veh.params.r_s, veh.params.r_a)


@dataclass
class TraceRecord:
    """One simulation step.  Per-vehicle arrays are indexed by vehicle id;
    per-obstacle arrays have shape (vehicles, obstacles)."""

    t: float
    p: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    v_c: np.ndarray
    dwp: np.ndarray
    v_w: np.ndarray
    dxi: np.ndarray
    dp: np.ndarray
    theta: np.ndarray
    vo_pot: np.ndarray
    ao: np.ndarray
    min_peer_dxi: float = math.nan


@dataclass
class SimMetrics:
    min_filtered_margin: float
    min_physical_margin: float
    arrival_time: float | None
    arrival_times: list[float | None]
    conflict_events: list[tuple[float, str]]
    deadlock: bool
    final_theta: list[float]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x

        payload = {
            "min_filtered_margin": clean(self.min_filtered_margin),
            "min_physical_margin": clean(self.min_physical_margin),
            "arrival_time": self.arrival_time,
            "arrival_times": self.arrival_times,
            "conflict_events": [[t, oid] for t, oid in self.conflict_events],
            "deadlock": self.deadlock,
            "final_theta": [clean(x) for x in self.final_theta],
            "warnings": self.warnings,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


class ArrivalMonitor:
    """Latches true once the waypoint error stays within tol for `hold` steps."""

    def __init__(self, tol: float, hold: int):
        if tol <= 0.0:
            raise InvalidArgumentError(f"tol must be positive, got {tol!r}")
        self.tol = tol
        self.hold = hold
        self.count = 0

    def update(self, p_wp_err: Vec2) -> bool:
        if p_wp_err.norm() <= self.tol:
            self.count += 1
        else:
            self.count = 0
        return self.count >= self.hold


def arrival_check(errors, tol: float, hold: int) -> bool:
    """True if the error sequence ends with `hold` consecutive in-tolerance steps."""
    mon = ArrivalMonitor(tol, hold)
    arrived = False
    for err in errors:
        arrived = mon.update(err)
    return arrived


def deadlock_check(
    records: list[TraceRecord],
    vehicle: int,
    v_m: float,
    tol: float = DEFAULT_ARRIVAL_TOL,
    arrived: bool = False,
) -> bool:
    """Deadlock test over a trace window of at least 5 s.

    A vehicle is deadlocked when it has not arrived, sits far from the
    waypoint (more than 10x the arrival tolerance), and over the window either
    its command is essentially zero or it makes no net progress toward the
    waypoint (which covers being dragged along by an obstacle).
    """
    if len(records) < 2:
        raise InvalidArgumentError("deadlock_check needs a window of records")
    span = records[-1].t - records[0].t
    if span < DEADLOCK_WINDOW_S - 1e-9:
        raise InvalidArgumentError(f"deadlock window must cover >= {DEADLOCK_WINDOW_S} s, got {span} s")
    if arrived:
        return False
    if records[-1].dwp[vehicle] <= 10.0 * tol:
        return False
    mean_vc = float(np.mean([np.hypot(r.v_c[vehicle, 0], r.v_c[vehicle, 1]) for r in records]))
    progress = float(records[0].dwp[vehicle] - records[-1].dwp[vehicle])
    return mean_vc < 0.01 * v_m or progress < 0.01 * v_m * span


# ---------------------------------------------------------------------------
# Vectorized barrier evaluation (windows vary per vehicle/obstacle pair).


def _barrier_pot_gain(z, d1, d2, gp: GuidanceParams):
    """Elementwise (potential, gain) with per-element windows [d1, d2].

    Hot-loop twin of the scalar guidance functions (same branches, no
    per-element validation); agreement is asserted in the test suite.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (z - d1) / (d2 - d1)
        sigma = np.where(t < 0.0, 1.0, np.where(t > 1.0, 0.0, 1.0 + t * t * (2.0 * t - 3.0)))
        sigma_d = np.where((t >= 0.0) & (t <= 1.0), 6.0 * t * (t - 1.0) / (d2 - d1), 0.0)
        x1, x2 = mathcore.smooth_sat_joints(gp.eps_s)
        x = z / d1
        # Clamping (x - x2) into the arc's domain makes the arc expression
        # evaluate to the correct constant branches outside [x1, x2] too.
        dd = np.minimum(np.maximum(x - x2, x1 - x2), 0.0)
        root = np.sqrt(gp.eps_s * gp.eps_s - dd * dd)
        linear = x < x1
        s = np.where(linear, x, (1.0 - gp.eps_s) + root)
        s_d = np.where(linear, 1.0, -dd / root)
        denom = (1.0 + gp.eps) * z - d1 * s
        denom_d = (1.0 + gp.eps) - s_d
        pot = gp.k2 * sigma / denom
        grad = gp.k2 * (sigma_d * denom - sigma * denom_d) / (denom * denom)
        return pot, -grad / z


def _row_saturate(vecs: np.ndarray, vmax: np.ndarray) -> np.ndarray:
    norms = np.hypot(vecs[:, 0], vecs[:, 1])
    scale = np.where(norms > vmax, vmax / np.where(norms > 0.0, norms, 1.0), 1.0)
    return vecs * scale[:, None]


def _control_groups(scenario: ScenarioConfig) -> list[list[int]]:
    """Indices of original obstacles forming each control obstacle."""
    if not scenario.options.combine_parallel:
        return [[i] for i in range(len(scenario.obstacles))]
    groups: list[list[int]] = []
    for i, ob in enumerate(scenario.obstacles):
        if ob.behavior == CONSTANT_VELOCITY:
            for g in groups:
                rep = scenario.obstacles[g[0]]
                if rep.behavior == CONSTANT_VELOCITY and (
                    (rep.v_o - ob.v_o).norm() <= scenario.options.vel_tol
                ):
                    g.append(i)
                    break
            else:
                groups.append([i])
        else:
            groups.append([i])
    return groups


def run(scenario: ScenarioConfig) -> tuple[list[TraceRecord], SimMetrics]:
    """Execute a scenario; returns the full trace and summary metrics."""
    scenario.check()
    opts = scenario.options
    gp = scenario.guidance
    dt = scenario.dt
    steps = int(round(scenario.t_end / dt))

    m_count = len(scenario.vehicles)
    pos = np.array([[v.initial.p.x, v.initial.p.y] for v in scenario.vehicles])
    vel = np.array([[v.initial.v.x, v.initial.v.y] for v in scenario.vehicles])
    wp = np.array([[v.waypoint.x, v.waypoint.y] for v in scenario.vehicles])
    l_arr = np.array([v.params.l for v in scenario.vehicles])
    vm = np.array([v.params.v_m for v in scenario.vehicles])
    rs = np.array([v.params.r_s for v in scenario.vehicles])
    ra = np.array([v.params.r_a for v in scenario.vehicles])
    decay = np.exp(-l_arr * dt)[:, None]
    lead = ((1.0 - np.exp(-l_arr * dt)) / l_arr)[:, None]

    # Original obstacles (telemetry, conflict accounting).
    n_obs = len(scenario.obstacles)
    obs_state: list[Obstacle] = list(scenario.obstacles)
    all_constant = all(ob.behavior == CONSTANT_VELOCITY for ob in obs_state)
    obs_p = np.array([[ob.p_o.x, ob.p_o.y] for ob in obs_state]).reshape(n_obs, 2)
    obs_v = np.array([[ob.v_o.x, ob.v_o.y] for ob in obs_state]).reshape(n_obs, 2)
    obs_r = np.array([ob.r_o for ob in obs_state])
    d1_obs = gp.gamma * rs[:, None] + obs_r[None, :]
    d2_obs = np.where(ra[:, None] > d1_obs, ra[:, None], ra[:, None] + obs_r[None, :])

    # Control obstacles: parallel groups wrapped in one disc each.
    groups = _control_groups(scenario)
    ctrl: list[Obstacle] = [
        combine_parallel([obs_state[i] for i in g], opts.vel_tol) if len(g) > 1 else obs_state[g[0]]
        for g in groups
    ]
    n_ctrl = len(ctrl)
    ctrl_p = np.array([[ob.p_o.x, ob.p_o.y] for ob in ctrl]).reshape(n_ctrl, 2)
    ctrl_v = np.array([[ob.v_o.x, ob.v_o.y] for ob in ctrl]).reshape(n_ctrl, 2)
    ctrl_r = np.array([ob.r_o for ob in ctrl])
    ctrl_mirrors_obs = all(g == [i] for i, g in enumerate(groups))
    ctrl_dynamic = [i for i, g in enumerate(groups) if obs_state[g[0]].behavior != CONSTANT_VELOCITY]
    for ob in ctrl:
        for veh in scenario.vehicles:
            bump_window(ob.r_o, gp.gamma, veh.params.r_s, veh.params.r_a)
    d1_ctrl = gp.gamma * rs[:, None] + ctrl_r[None, :]
    d2_ctrl = np.where(ra[:, None] > d1_ctrl, ra[:, None], ra[:, None] + ctrl_r[None, :])

    peers = opts.peers_as_obstacles and m_count > 1
    if peers:
        d1_peer = gp.gamma * rs + opts.peer_radius
        d2_peer = np.where(ra > d1_peer, ra, ra + opts.peer_radius)
        peer_thresh = (
            np.maximum(rs[:, None], rs[None, :]) + opts.peer_radius
        )  # conflict threshold per pair
        not_self = ~np.eye(m_count, dtype=bool)

    hold_steps = max(1, int(round(opts.arrival_hold_s / dt)))
    last_exceed = np.full(m_count, -1, dtype=int)

    records: list[TraceRecord] = []
    conflict_events: list[tuple[float, str]] = []
    obs_in_conflict = np.zeros((m_count, n_obs), dtype=bool)
    peer_in_conflict = np.zeros((m_count, m_count), dtype=bool) if peers else None
    min_filtered = math.inf
    min_physical = math.inf
    warnings: list[str] = []
    spacing_warned = False

    for step in range(steps + 1):
        t = step * dt
        xi = pos + vel / l_arr[:, None]
        xi_wp_err = xi - wp

        # --- obstacle terms -------------------------------------------------
        if n_obs:
            xi_obs = obs_p[None, :, :] + obs_v[None, :, :] / l_arr[:, None, None]
            diff_obs = xi[:, None, :] - xi_obs  # (M, N, 2)
            z_obs = np.hypot(diff_obs[..., 0], diff_obs[..., 1])
            pot_obs, gain_obs = _barrier_pot_gain(z_obs, d1_obs, d2_obs, gp)
            dp_obs = np.hypot(
                pos[:, None, 0] - obs_p[None, :, 0], pos[:, None, 1] - obs_p[None, :, 1]
            )
            vo_norm = np.hypot(obs_v[:, 0], obs_v[:, 1])
            with np.errstate(invalid="ignore", divide="ignore"):
                cosang = np.einsum("mnk,nk->mn", diff_obs, obs_v) / (z_obs * vo_norm[None, :])
            theta = np.arccos(np.clip(cosang, -1.0, 1.0))
        else:
            z_obs = np.zeros((m_count, 0))
            dp_obs = np.zeros((m_count, 0))
            theta = np.zeros((m_count, 0))
            pot_obs = np.zeros((m_count, 0))
            gain_obs = np.zeros((m_count, 0))

        # --- control: repulsion from control obstacles ----------------------
        repel = np.zeros((m_count, 2))
        if n_ctrl:
            if ctrl_mirrors_obs:
                diff_ctrl, z_ctrl, gain_ctrl = diff_obs, z_obs, gain_obs
            else:
                xi_ctrl = ctrl_p[None, :, :] + ctrl_v[None, :, :] / l_arr[:, None, None]
                diff_ctrl = xi[:, None, :] - xi_ctrl
                z_ctrl = np.hypot(diff_ctrl[..., 0], diff_ctrl[..., 1])
                _, gain_ctrl = _barrier_pot_gain(z_ctrl, d1_ctrl, d2_ctrl, gp)
            if np.any(z_ctrl == 0.0):
                raise DegenerateGeometryError(
                    f"filtered position coincides with an obstacle center at t={t:.3f} s"
                )
            if opts.selection_policy == NEAREST_WITHIN:
                inside = z_ctrl <= d2_ctrl
                z_masked = np.where(inside, z_ctrl, np.inf)
                nearest = np.argmin(z_masked, axis=1)
                mask = np.zeros_like(gain_ctrl)
                rows = np.arange(m_count)
                mask[rows, nearest] = np.where(np.isfinite(z_masked[rows, nearest]), 1.0, 0.0)
                gain_ctrl = gain_ctrl * mask
            repel += np.einsum("mn,mnk->mk", gain_ctrl, diff_ctrl)

        if peers:
            diff_peer = xi[:, None, :] - xi[None, :, :]  # (M, M, 2)
            z_peer = np.hypot(diff_peer[..., 0], diff_peer[..., 1])
            if np.any(z_peer[not_self] == 0.0):
                raise DegenerateGeometryError(
                    f"two vehicles share a filtered position at t={t:.3f} s"
                )
            z_safe = np.where(not_self, z_peer, 1.0)
            _, gain_peer = _barrier_pot_gain(
                z_safe, d1_peer[:, None] * np.ones((1, m_count)), d2_peer[:, None] * np.ones((1, m_count)), gp
            )
            gain_peer = np.where(not_self, gain_peer, 0.0)
            repel += np.einsum("mn,mnk->mk", gain_peer, diff_peer)
            min_peer = float(np.min(z_peer[not_self]))
        else:
            min_peer = math.nan

        attract = _row_saturate(gp.k1 * xi_wp_err, vm)
        v_c = -_row_saturate(attract - repel, vm)

        # --- telemetry ------------------------------------------------------
        dwp = np.hypot(pos[:, 0] - wp[:, 0], pos[:, 1] - wp[:, 1])
        z_wp = np.hypot(xi_wp_err[:, 0], xi_wp_err[:, 1])
        v_w = np.where(
            gp.k1 * z_wp <= vm,
            0.5 * gp.k1 * z_wp * z_wp,
            vm * vm / (2.0 * gp.k1) + vm * (z_wp - vm / gp.k1),
        )
        records.append(
            TraceRecord(
                t=t,
                p=pos.copy(),
                v=vel.copy(),
                xi=xi,
                v_c=v_c,
                dwp=dwp,
                v_w=v_w,
                dxi=z_obs,
                dp=dp_obs,
                theta=theta,
                vo_pot=pot_obs,
                ao=gain_obs,
                min_peer_dxi=min_peer,
            )
        )

        # --- conflict accounting -------------------------------------------
        if n_obs:
            margin_f = z_obs - (rs[:, None] + obs_r[None, :])
            margin_p = dp_obs - (rs[:, None] + obs_r[None, :])
            min_filtered = min(min_filtered, float(margin_f.min()))
            min_physical = min(min_physical, float(margin_p.min()))
            now = margin_f < 0.0
            for m_idx, o_idx in zip(*np.nonzero(now & ~obs_in_conflict)):
                oid = f"o{o_idx}" if m_count == 1 else f"v{m_idx}:o{o_idx}"
                conflict_events.append((t, oid))
            obs_in_conflict = now
            if n_obs > 1 and not spacing_warned:
                gaps = np.hypot(
                    obs_p[:, None, 0] - obs_p[None, :, 0], obs_p[:, None, 1] - obs_p[None, :, 1]
                )
                need = 2.0 * ra.max() + obs_r[:, None] + obs_r[None, :]
                close = (gaps < need) & ~np.eye(n_obs, dtype=bool)
                for i, j in zip(*np.nonzero(close)):
                    if i < j and (obs_v[i] - obs_v[j] != 0).any():
                        warnings.append(
                            f"obstacles {i},{j} closer than pairwise spacing bound at t={t:.2f} s"
                        )
                        spacing_warned = True
        if peers:
            margin_peer = z_peer - peer_thresh
            tri = np.triu(not_self)
            min_filtered = min(min_filtered, float(margin_peer[tri].min()))
            dp_peer = np.hypot(
                pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1]
            )
            min_physical = min(min_physical, float((dp_peer - peer_thresh)[tri].min()))
            now_p = (margin_peer < 0.0) & tri
            for i, j in zip(*np.nonzero(now_p & ~peer_in_conflict)):
                conflict_events.append((t, f"v{i}:v{j}"))
            peer_in_conflict = now_p

        last_exceed = np.where(dwp > opts.arrival_tol, step, last_exceed)

        # --- advance --------------------------------------------------------
        if step == steps:
            break
        dv = vel - v_c
        pos = pos + v_c * dt + dv * lead
        vel = v_c + dv * decay
        if n_obs:
            if all_constant:
                obs_p = obs_p + obs_v * dt
            else:
                xi0 = Vec2(float(xi[0, 0]), float(xi[0, 1]))
                xid0 = Vec2(float(v_c[0, 0]), float(v_c[0, 1]))
                for i, ob in enumerate(obs_state):
                    obs_state[i] = step_obstacle(
                        ob, xi0, dt, l=float(l_arr[0]), multicopter_xi_dot=xid0
                    )
                obs_p = np.array([[ob.p_o.x, ob.p_o.y] for ob in obs_state])
                obs_v = np.array([[ob.v_o.x, ob.v_o.y] for ob in obs_state])
        if n_ctrl and not ctrl_mirrors_obs:
            if ctrl_dynamic:
                for k in ctrl_dynamic:
                    ctrl_p[k] = obs_p[groups[k][0]]
                    ctrl_v[k] = obs_v[groups[k][0]]
                static = [k for k in range(n_ctrl) if k not in ctrl_dynamic]
                ctrl_p[static] += ctrl_v[static] * dt
            else:
                ctrl_p = ctrl_p + ctrl_v * dt

    # --- metrics ------------------------------------------------------------
    arrival_times: list[float | None] = []
    for m_idx in range(m_count):
        stretch = steps - last_exceed[m_idx]
        if stretch >= hold_steps:
            arrival_times.append(float((last_exceed[m_idx] + 1) * dt) if last_exceed[m_idx] >= 0 else 0.0)
        else:
            arrival_times.append(None)
    arrival_time = None if any(a is None for a in arrival_times) else max(arrival_times)

    deadlock = False
    window_steps = int(round(DEADLOCK_WINDOW_S / dt))
    if steps >= window_steps:
        window = records[-(window_steps + 1):]
        for m_idx, veh in enumerate(scenario.vehicles):
            if deadlock_check(
                window, m_idx, veh.params.v_m, opts.arrival_tol, arrived=arrival_times[m_idx] is not None
            ):
                deadlock = True
                break

    final_theta = [float(records[-1].theta[0, n]) for n in range(n_obs)]
    metrics = SimMetrics(
        min_filtered_margin=min_filtered,
        min_physical_margin=min_physical,
        arrival_time=arrival_time,
        arrival_times=arrival_times,
        conflict_events=conflict_events,
        deadlock=deadlock,
        final_theta=final_theta,
        warnings=warnings,
    )
    return records, metrics


# ---------------------------------------------------------------------------
# Trace serialization.


def _fmt(x: float) -> str:
    return format(x + 0.0, ".9g")  # +0.0 normalizes negative zero


def write_trace_csv(records: list[TraceRecord], out) -> None:
    """Write the documented CSV schema to a path or text file object."""
    if not records:
        raise InvalidArgumentError("cannot serialize an empty trace")
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w", newline="") if own else out
    try:
        m_count = records[0].p.shape[0]
        n_obs = records[0].dxi.shape[1]
        header = ["t", "vid", "px", "py", "vx", "vy", "xix", "xiy", "vcx", "vcy", "dwp"]
        for _ in range(n_obs):
            header += ["oid", "dxi", "dp", "theta", "Vo", "ao"]
        fh.write(",".join(header) + "\n")
        for rec in records:
            t_s = _fmt(rec.t)
            for vid in range(m_count):
                row = [
                    t_s,
                    str(vid),
                    _fmt(rec.p[vid, 0]),
                    _fmt(rec.p[vid, 1]),
                    _fmt(rec.v[vid, 0]),
                    _fmt(rec.v[vid, 1]),
                    _fmt(rec.xi[vid, 0]),
                    _fmt(rec.xi[vid, 1]),
                    _fmt(rec.v_c[vid, 0]),
                    _fmt(rec.v_c[vid, 1]),
                    _fmt(rec.dwp[vid]),
                ]
                for oid in range(n_obs):
                    row += [
                        str(oid),
                        _fmt(rec.dxi[vid, oid]),
                        _fmt(rec.dp[vid, oid]),
                        _fmt(rec.theta[vid, oid]),
                        _fmt(rec.vo_pot[vid, oid]),
                        _fmt(rec.ao[vid, oid]),
                    ]
                fh.write(",".join(row) + "\n")
    finally:
        if own:
            fh.close()


def trace_csv_text(records: list[TraceRecord]) -> str:
    buf = io.StringIO()
    write_trace_csv(records, buf)
    return buf.getvalue()
