"""Figure rendering: trajectory snapshots, separation-vs-time, pairwise minima, θ(t)."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Circle

from .reader import Trace, load_trace

KINDS = ("trajectory", "distance", "min_pairwise", "theta")

SAFETY_GID = "safety-threshold"
AVOIDANCE_GID = "avoidance-threshold"


class PlotError(Exception):
    """The requested figure cannot be produced from this trace."""


@dataclass
class PlotSpec:
    kind: str
    trace_path: str
    out_path: str
    snapshot_times: tuple[float, ...] = field(default_factory=tuple)

    def check(self) -> None:
        if self.kind not in KINDS:
            raise PlotError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.snapshot_times and self.kind != "trajectory":
            raise PlotError("snapshot times only apply to trajectory figures")


def _require_meta(trace: Trace, why: str) -> dict:
    if trace.meta is None:
        raise PlotError(f"trace has no .meta.json sidecar, needed for {why}")
    return trace.meta


def _snapshot_times(spec: PlotSpec, t: np.ndarray) -> list[float]:
    if spec.snapshot_times:
        lo, hi = float(t[0]), float(t[-1])
        for ts in spec.snapshot_times:
            if not lo <= ts <= hi:
                raise PlotError(f"snapshot time {ts} outside trace range [{lo}, {hi}]")
        return list(spec.snapshot_times)
    return [float(t[0]), float(t[len(t) // 2]), float(t[-1])]


def _trajectory(ax, trace: Trace, spec: PlotSpec) -> None:
    meta = _require_meta(trace, "radii and obstacle discs")
    times = _snapshot_times(spec, trace.t)
    for m in range(trace.n_vehicles):
        (line,) = ax.plot(trace.p[:, m, 0], trace.p[:, m, 1], lw=1.0)
        wx, wy = meta["waypoints"][m]
        ax.plot([wx], [wy], marker="*", ms=8, color=line.get_color(), ls="none")
    for ts in times:
        k = int(np.argmin(np.abs(trace.t - ts)))
        for m in range(trace.n_vehicles):
            cx, cy = trace.p[k, m]
            ax.add_patch(
                Circle((cx, cy), meta["r_s"][m], fill=False, ls="--", lw=0.6, color="tab:red")
            )
            ax.add_patch(
                Circle((cx, cy), meta["r_a"][m], fill=False, ls=":", lw=0.6, color="tab:orange")
            )
        for ob in meta["obstacles"]:
            if ob["behavior"] != "constant_velocity":
                continue  # only constant-velocity discs can be reconstructed from t=0 data
            ox = ob["p_o"][0] + ob["v_o"][0] * ts
            oy = ob["p_o"][1] + ob["v_o"][1] * ts
            ax.add_patch(Circle((ox, oy), ob["r_o"], alpha=0.25, color="tab:gray"))
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"trajectories, snapshots at t = {', '.join(f'{ts:g}' for ts in times)} s")


def _nearest_peer_distance(trace: Trace) -> np.ndarray:
    """Each vehicle's filtered distance to its nearest peer, shape (T, M)."""
    diff = trace.xi[:, :, None, :] - trace.xi[:, None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    np.einsum("tmm->tm", dist)[:] = np.inf
    return dist.min(axis=2)


def _distance(ax, trace: Trace) -> None:
    meta = _require_meta(trace, "threshold lines")
    peer_r = meta.get("peer_radius", 0.0)
    if trace.n_obstacles >= 1:
        for m in range(trace.n_vehicles):
            for n in range(trace.n_obstacles):
                ax.plot(trace.t, trace.dxi[:, m, n], lw=1.0, label=f"v{m} vs o{n}")
        safety = sorted(
            {
                meta["r_s"][m] + ob["r_o"]
                for m in range(trace.n_vehicles)
                for ob in meta["obstacles"]
            }
        )
        avoid = sorted(
            {
                meta["r_a"][m] + ob["r_o"]
                for m in range(trace.n_vehicles)
                for ob in meta["obstacles"]
            }
        )
    elif trace.n_vehicles >= 2:
        # no obstacle columns: plot each vehicle against its nearest peer
        nearest = _nearest_peer_distance(trace)
        for m in range(trace.n_vehicles):
            ax.plot(trace.t, nearest[:, m], lw=0.7)
        safety = sorted({r + peer_r for r in meta["r_s"]})
        avoid = sorted({r + peer_r for r in meta["r_a"]})
    else:
        raise PlotError("distance figure needs obstacle columns or at least two vehicles")
    for y in safety:
        line = ax.axhline(y, color="tab:red", ls="--", lw=0.9, label=f"safety {y:g} m")
        line.set_gid(SAFETY_GID)
    for y in avoid:
        line = ax.axhline(y, color="tab:orange", ls=":", lw=0.9, label=f"avoidance {y:g} m")
        line.set_gid(AVOIDANCE_GID)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("filtered separation [m]")
    if ax.get_legend_handles_labels()[1]:
        ax.legend(fontsize=7, ncols=2)


def min_pairwise_series(trace: Trace) -> np.ndarray:
    """Per-step minimum separation over vehicle pairs and vehicle-obstacle pairs.

    Vehicle pairs use filtered positions; obstacle terms reuse the trace's dxi
    columns.  Raises when the trace has neither a pair nor an obstacle.
    """
    parts = []
    if trace.n_vehicles >= 2:
        diff = trace.xi[:, :, None, :] - trace.xi[:, None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        iu = np.triu_indices(trace.n_vehicles, k=1)
        parts.append(dist[:, iu[0], iu[1]].min(axis=1))
    if trace.n_obstacles >= 1:
        parts.append(trace.dxi.reshape(len(trace.t), -1).min(axis=1))
    if not parts:
        raise PlotError("min_pairwise needs at least two vehicles or one obstacle")
    return np.min(np.stack(parts), axis=0)


def _min_pairwise(ax, trace: Trace) -> None:
    series = min_pairwise_series(trace)
    ax.plot(trace.t, series, lw=1.0)
    if trace.meta is not None:
        if trace.n_vehicles >= 2:
            y = max(trace.meta["r_s"]) + trace.meta.get("peer_radius", 0.0)
        else:
            y = min(
                trace.meta["r_s"][m] + ob["r_o"]
                for m in range(trace.n_vehicles)
                for ob in trace.meta["obstacles"]
            )
        ax.axhline(y, color="tab:red", ls="--", lw=0.9).set_gid(SAFETY_GID)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("minimum pairwise separation [m]")


def nearest_peer_theta(trace: Trace) -> np.ndarray:
    """Approach angle of each vehicle relative to its nearest peer, shape (T, M).

    The angle between (ξ_self − ξ_peer) and the peer's commanded velocity; π
    means the nearest peer is flying straight away.  NaN where the peer is
    effectively stationary.
    """
    if trace.n_vehicles < 2:
        raise PlotError("theta figure needs obstacle columns or at least two vehicles")
    diff = trace.xi[:, :, None, :] - trace.xi[:, None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    n_t, m_count = dist.shape[:2]
    np.einsum("tmm->tm", dist)[:] = np.inf  # a vehicle is not its own peer
    nearest = dist.argmin(axis=2)  # (T, M)
    t_idx = np.arange(n_t)[:, None]
    m_idx = np.arange(m_count)[None, :]
    err = trace.xi - trace.xi[t_idx, nearest]  # ξ_self − ξ_peer
    v_peer = trace.v_c[t_idx, nearest]
    num = np.einsum("tmk,tmk->tm", err, v_peer)
    den = np.linalg.norm(err, axis=-1) * np.linalg.norm(v_peer, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = np.where(den > 0.0, num / np.maximum(den, 1e-300), np.nan)
    return np.arccos(np.clip(cosang, -1.0, 1.0))


def _theta(ax, trace: Trace) -> None:
    if trace.n_obstacles >= 1:
        for m in range(trace.n_vehicles):
            for n in range(trace.n_obstacles):
                ax.plot(trace.t, trace.theta[:, m, n], lw=1.0, label=f"v{m} vs o{n}")
        ax.legend(fontsize=7)
    else:
        angles = nearest_peer_theta(trace)
        for m in range(trace.n_vehicles):
            ax.plot(trace.t, angles[:, m], lw=0.7)
    ax.axhline(math.pi, color="tab:green", ls="--", lw=0.9)
    ax.set_ylim(0.0, math.pi + 0.2)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("approach angle [rad]")


def render(spec: PlotSpec) -> Figure:
    """Draw the requested figure and write it to spec.out_path.

    Returns the figure so callers can inspect artists.  The trace files are
    never modified; the output file is written atomically by matplotlib or an
    exception is raised.
    """
    spec.check()
    trace = load_trace(spec.trace_path)
    fig = Figure(figsize=(6.4, 4.8), dpi=120)
    ax = fig.subplots()
    if spec.kind == "trajectory":
        _trajectory(ax, trace, spec)
    elif spec.kind == "distance":
        _distance(ax, trace)
    elif spec.kind == "min_pairwise":
        _min_pairwise(ax, trace)
    else:
        _theta(ax, trace)
    out_dir = os.path.dirname(os.path.abspath(spec.out_path))
    os.makedirs(out_dir, exist_ok=True)
    fig.savefig(spec.out_path)
    return fig
