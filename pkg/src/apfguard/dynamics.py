"""Vehicle/obstacle state types and exact fixed-step integration.

The autopilot velocity loop is a first-order lag ``v̇ = -l (v - v_c)``, which
we integrate exactly over each step (zero-order hold on the command) instead
of with a generic scheme.  A consequence worth knowing: the filtered position
``ξ = p + v/l`` advances exactly as ``ξ⁺ = ξ + v_c·dt``.

Obstacles come in three behaviors: constant velocity, a scripted command
series, and a pursuer that steers its filtered position toward the vehicle's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DegenerateGeometryError, InvalidArgumentError
from .mathcore import Vec2, saturate

DEFAULT_DT = 0.01


def _require_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise InvalidArgumentError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class VehicleParams:
    """Static vehicle parameters.

    l      -- maneuver constant (1/s); 1/l is the velocity-loop time constant
    v_m    -- maximum commanded/achievable speed (m/s)
    r_s    -- safety radius (m)
    r_a    -- avoidance radius (m); must exceed r_s
    """

    l: float
    v_m: float
    r_s: float
    r_a: float

    def __post_init__(self) -> None:
        _require_positive("l", self.l)
        _require_positive("v_m", self.v_m)
        _require_positive("r_s", self.r_s)
        if not (math.isfinite(self.r_a) and self.r_a > self.r_s):
            raise InvalidArgumentError(f"r_a > r_s required, got r_a={self.r_a!r}, r_s={self.r_s!r}")


@dataclass(frozen=True)
class MulticopterState:
    p: Vec2
    v: Vec2


@dataclass(frozen=True)
class ScriptedBehavior:
    """Piecewise-constant filtered-velocity commands: ((t_k, command_k), ...).

    The command with the largest t_k <= age applies; before the first t_k the
    obstacle's initial velocity is held.
    """

    commands: tuple[tuple[float, Vec2], ...]

    def command_at(self, age: float, fallback: Vec2) -> Vec2:
        chosen = fallback
        for t_k, cmd in self.commands:
            if t_k <= age:
                chosen = cmd
            else:
                break
        return chosen


@dataclass(frozen=True)
class PursuerBehavior:
    """Chases the vehicle's filtered position with closing speed eps1 (m/s)."""

    eps1: float

    def __post_init__(self) -> None:
        _require_positive("eps1", self.eps1)


CONSTANT_VELOCITY = "constant_velocity"


@dataclass(frozen=True)
class Obstacle:
    """A moving disc.  ``v_o_max`` bounds the filtered-velocity magnitude.

    ``age`` is the obstacle's elapsed simulation time; step_obstacle advances
    it so scripted command lookup stays a pure function of the state.
    """

    p_o: Vec2
    v_o: Vec2
    r_o: float
    v_o_max: float
    behavior: str | ScriptedBehavior | PursuerBehavior = CONSTANT_VELOCITY
    age: float = 0.0

    def __post_init__(self) -> None:
        _require_positive("r_o", self.r_o)
        _require_positive("v_o_max", self.v_o_max)
        if isinstance(self.behavior, str) and self.behavior != CONSTANT_VELOCITY:
            raise InvalidArgumentError(f"unknown obstacle behavior {self.behavior!r}")


@dataclass(frozen=True)
class FilteredErrors:
    """All filtered/physical error quantities for one (vehicle, obstacle, waypoint) triple."""

    xi: Vec2
    xi_o_err: Vec2
    xi_wp_err: Vec2
    p_o_err: Vec2
    v_o_err: Vec2
    p_wp_err: Vec2


def filtered_position(p: Vec2, v: Vec2, l: float) -> Vec2:
    """The velocity-lead coordinate ``ξ = p + v/l``."""
    _require_positive("l", l)
    return p + v / l


def _zoh(p: Vec2, v: Vec2, cmd: Vec2, l: float, dt: float) -> tuple[Vec2, Vec2]:
    """Exact step of ṗ = v, v̇ = -l(v - cmd) with cmd held over [t, t+dt]."""
    decay = math.exp(-l * dt)
    dv = v - cmd
    v_next = cmd + dv * decay
    p_next = p + cmd * dt + dv * ((1.0 - decay) / l)
    return p_next, v_next


def step_multicopter(state: MulticopterState, v_c: Vec2, params: VehicleParams, dt: float) -> MulticopterState:
    """Advance one step; the command is clamped to the speed limit first."""
    _require_positive("dt", dt)
    cmd = saturate(v_c, params.v_m)
    p, v = _zoh(state.p, state.v, cmd, params.l, dt)
    return MulticopterState(p, v)


def step_multicopter_rk4(state: MulticopterState, v_c: Vec2, params: VehicleParams, dt: float) -> MulticopterState:
    """Classical RK4 step of the same held-command dynamics (cross-check only)."""
    _require_positive("dt", dt)
    cmd = saturate(v_c, params.v_m)
    l = params.l

    def deriv(p: Vec2, v: Vec2) -> tuple[Vec2, Vec2]:
        return v, (cmd - v) * l

    p0, v0 = state.p, state.v
    k1p, k1v = deriv(p0, v0)
    k2p, k2v = deriv(p0 + k1p * (dt / 2), v0 + k1v * (dt / 2))
    k3p, k3v = deriv(p0 + k2p * (dt / 2), v0 + k2v * (dt / 2))
    k4p, k4v = deriv(p0 + k3p * dt, v0 + k3v * dt)
    p = p0 + (k1p + 2 * k2p + 2 * k3p + k4p) * (dt / 6)
    v = v0 + (k1v + 2 * k2v + 2 * k3v + k4v) * (dt / 6)
    return MulticopterState(p, v)


def step_obstacle(
    ob: Obstacle,
    multicopter_xi: Vec2,
    dt: float,
    *,
    l: float | None = None,
    multicopter_xi_dot: Vec2 | None = None,
) -> Obstacle:
    """Advance an obstacle one step.

    Constant-velocity obstacles translate exactly.  Scripted and pursuer
    obstacles share the vehicle's first-order filtered-velocity model and
    therefore need the maneuver constant ``l``.  The pursuer's command is the
    vehicle's filtered velocity (``multicopter_xi_dot``, zero if omitted) plus
    a closing term of magnitude eps1 toward the vehicle; commands are clamped
    to ``v_o_max``.
    """
    _require_positive("dt", dt)
    if ob.behavior == CONSTANT_VELOCITY:
        return replace(ob, p_o=ob.p_o + ob.v_o * dt, age=ob.age + dt)
    if l is None:
        raise InvalidArgumentError("scripted/pursuer obstacles require the maneuver constant l")
    _require_positive("l", l)
    if isinstance(ob.behavior, ScriptedBehavior):
        cmd = ob.behavior.command_at(ob.age, ob.v_o)
    elif isinstance(ob.behavior, PursuerBehavior):
        xi_o = filtered_position(ob.p_o, ob.v_o, l)
        gap = multicopter_xi - xi_o
        dist = gap.norm()
        if dist == 0.0:
            raise DegenerateGeometryError("pursuer coincides with the vehicle's filtered position")
        xi_dot = multicopter_xi_dot if multicopter_xi_dot is not None else Vec2(0.0, 0.0)
        cmd = xi_dot + gap * (ob.behavior.eps1 / dist)
    else:
        raise InvalidArgumentError(f"unknown obstacle behavior {ob.behavior!r}")
    cmd = saturate(cmd, ob.v_o_max)
    p_o, v_o = _zoh(ob.p_o, ob.v_o, cmd, l, dt)
    return replace(ob, p_o=p_o, v_o=v_o, age=ob.age + dt)


def compute_errors(m: MulticopterState, ob: Obstacle, wp: Vec2, l: float) -> FilteredErrors:
    """Filtered position and all error vectors for one vehicle/obstacle pair."""
    xi = filtered_position(m.p, m.v, l)
    xi_o = filtered_position(ob.p_o, ob.v_o, l)
    return FilteredErrors(
        xi=xi,
        xi_o_err=xi - xi_o,
        xi_wp_err=xi - wp,
        p_o_err=m.p - ob.p_o,
        v_o_err=m.v - ob.v_o,
        p_wp_err=m.p - wp,
    )


def velocity_margin_radius(v_m: float, v_o_max: float, l: float) -> float:
    """The filtered-vs-physical separation slack r_v = (v_m + v_o_max)/l."""
    _require_positive("v_m", v_m)
    if not (math.isfinite(v_o_max) and v_o_max >= 0.0):
        raise InvalidArgumentError(f"v_o_max must be nonnegative, got {v_o_max!r}")
    _require_positive("l", l)
    return (v_m + v_o_max) / l


def approach_angle(xi_o_err: Vec2, v_o: Vec2) -> float:
    """Angle in [0, π] between the filtered error and the obstacle velocity."""
    n1 = xi_o_err.norm()
    n2 = v_o.norm()
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateGeometryError("approach_angle requires nonzero vectors")
    c = xi_o_err.dot(v_o) / (n1 * n2)
    return math.acos(max(-1.0, min(1.0, c)))
