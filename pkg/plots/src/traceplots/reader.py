"""Trace CSV parsing.

The schema is one row per (time step, vehicle): eleven fixed columns

    t,vid,px,py,vx,vy,xix,xiy,vcx,vcy,dwp

followed by one six-column block per obstacle

    oid,dxi,dp,theta,Vo,ao

A ``<name>.meta.json`` sidecar next to ``<name>.csv`` carries the scenario
geometry (radii, waypoints, obstacle discs) needed to draw thresholds.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

FIXED_COLUMNS = ("t", "vid", "px", "py", "vx", "vy", "xix", "xiy", "vcx", "vcy", "dwp")
BLOCK_COLUMNS = ("oid", "dxi", "dp", "theta", "Vo", "ao")


class SchemaError(Exception):
    """The CSV file does not match the documented trace schema."""


@dataclass
class Trace:
    """Arrays indexed [time, vehicle] or [time, vehicle, obstacle]."""

    t: np.ndarray  # (T,)
    p: np.ndarray  # (T, M, 2) physical position
    v: np.ndarray  # (T, M, 2) physical velocity
    xi: np.ndarray  # (T, M, 2) filtered position
    v_c: np.ndarray  # (T, M, 2) commanded velocity
    dwp: np.ndarray  # (T, M) distance to waypoint
    dxi: np.ndarray  # (T, M, N) filtered distance to each obstacle
    dp: np.ndarray  # (T, M, N) physical distance to each obstacle
    theta: np.ndarray  # (T, M, N) approach angle
    vo_pot: np.ndarray  # (T, M, N) barrier potential
    ao: np.ndarray  # (T, M, N) repulsive gain
    meta: dict | None = None

    @property
    def n_vehicles(self) -> int:
        return self.p.shape[1]

    @property
    def n_obstacles(self) -> int:
        return self.dxi.shape[2]


def _check_header(header: list[str]) -> int:
    """Validate the column layout and return the obstacle-block count."""
    fixed = tuple(header[: len(FIXED_COLUMNS)])
    if fixed != FIXED_COLUMNS:
        raise SchemaError(
            f"expected columns {','.join(FIXED_COLUMNS)}..., got {','.join(header[:11])}"
        )
    rest = header[len(FIXED_COLUMNS) :]
    if len(rest) % len(BLOCK_COLUMNS) != 0:
        raise SchemaError(
            f"trailing columns {','.join(rest)} are not whole {','.join(BLOCK_COLUMNS)} blocks"
        )
    n_obs = len(rest) // len(BLOCK_COLUMNS)
    for k in range(n_obs):
        block = tuple(rest[k * len(BLOCK_COLUMNS) : (k + 1) * len(BLOCK_COLUMNS)])
        if block != BLOCK_COLUMNS:
            raise SchemaError(
                f"obstacle block {k} has columns {','.join(block)}, "
                f"expected {','.join(BLOCK_COLUMNS)}"
            )
    return n_obs


def meta_path_for(trace_path: str) -> str:
    base, ext = os.path.splitext(trace_path)
    return base + ".meta.json"


def load_meta(trace_path: str) -> dict | None:
    """Load the sidecar written next to the trace, or None if absent."""
    path = meta_path_for(trace_path)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        return json.load(fh)


def load_trace(trace_path: str) -> Trace:
    with open(trace_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{trace_path}: empty file, expected a header row")
    n_obs = _check_header(rows[0])
    width = len(FIXED_COLUMNS) + n_obs * len(BLOCK_COLUMNS)
    body = rows[1:]
    if not body:
        raise SchemaError(f"{trace_path}: header only, no data rows")
    for i, row in enumerate(body):
        if len(row) != width:
            raise SchemaError(
                f"{trace_path}: row {i + 2} has {len(row)} fields, expected {width}"
            )

    try:
        data = np.array(body, dtype=float)
    except ValueError as exc:
        raise SchemaError(f"{trace_path}: non-numeric field ({exc})") from exc

    vid = data[:, 1].astype(int)
    n_veh = int(vid.max()) + 1
    if len(body) % n_veh != 0:
        raise SchemaError(f"{trace_path}: row count is not a multiple of {n_veh} vehicles")
    n_t = len(body) // n_veh
    if not np.array_equal(vid.reshape(n_t, n_veh), np.tile(np.arange(n_veh), (n_t, 1))):
        raise SchemaError(f"{trace_path}: vehicle ids must cycle 0..{n_veh - 1} per step")

    grid = data.reshape(n_t, n_veh, width)
    t = grid[:, 0, 0]
    blocks = grid[:, :, len(FIXED_COLUMNS) :].reshape(n_t, n_veh, n_obs, len(BLOCK_COLUMNS))
    return Trace(
        t=t,
        p=grid[:, :, 2:4],
        v=grid[:, :, 4:6],
        xi=grid[:, :, 6:8],
        v_c=grid[:, :, 8:10],
        dwp=grid[:, :, 10],
        dxi=blocks[:, :, :, 1],
        dp=blocks[:, :, :, 2],
        theta=blocks[:, :, :, 3],
        vo_pot=blocks[:, :, :, 4],
        ao=blocks[:, :, :, 5],
        meta=load_meta(trace_path),
    )
