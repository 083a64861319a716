"""Scenario file parsing/serialization and the built-in scenario factory.

File format: flat UTF-8 ``key = value`` text.  Keys before any section header
configure timing and run options; ``[guidance]`` holds controller gains; each
``[vehicle]`` and ``[obstacle]`` section (repeatable) declares one body.
Vectors are written as two whitespace-separated numbers.  ``#`` starts a
comment.  Unknown keys are rejected.  Example::

    dt = 0.01
    t_end = 60

    [guidance]
    k1 = 1

    [vehicle]
    l = 5
    v_m = 6
    r_s = 5
    r_a = 7.5
    p = 0 0
    v = 0 0
    waypoint = 0 0

    [obstacle]
    p_o = 30 0
    v_o = -5 0
    r_o = 10
    v_o_max = 5
    behavior = constant_velocity

Scripted obstacles use ``behavior = scripted`` plus repeatable
``command = t ax ay`` lines; pursuers use ``behavior = pursuer`` plus
``eps1 = value``.
"""

from __future__ import annotations

import math
import os
import random

from .dynamics import (
    CONSTANT_VELOCITY,
    MulticopterState,
    Obstacle,
    PursuerBehavior,
    ScriptedBehavior,
    VehicleParams,
)
from .errors import (
    ApfGuardError,
    InvalidArgumentError,
    ScenarioFormatError,
    SerializationError,
)
from .guidance import GuidanceParams
from .mathcore import Vec2
from .sim import ScenarioConfig, SimOptions, VehicleSpec

BUILTIN_NAMES = (
    "head_on",
    "converge_left",
    "parallel_v",
    "parallel_v_no_combine",
    "nonparallel_4",
    "super_41",
    "pursuer_demo",
)

_TOP_KEYS = ("dt", "t_end")
_OPTION_KEYS = (
    "combine_parallel",
    "selection_policy",
    "peers_as_obstacles",
    "peer_radius",
    "vel_tol",
    "arrival_tol",
    "arrival_hold_s",
)
_GUIDANCE_KEYS = ("k1", "k2", "eps", "eps_s", "gamma")
_VEHICLE_KEYS = ("l", "v_m", "r_s", "r_a", "p", "v", "waypoint")
_OBSTACLE_KEYS = ("p_o", "v_o", "r_o", "v_o_max", "behavior", "eps1", "command")


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise SerializationError(f"cannot serialize non-finite value {x!r}")
    s = format(x, ".9g")
    # Nine significant digits cover every value this package produces; fall
    # back to the shortest exact form if a hand-built config needs more.
    return s if float(s) == x else repr(x)


def _fmt_vec(v: Vec2) -> str:
    return f"{_fmt_float(v.x)} {_fmt_float(v.y)}"


def save(config: ScenarioConfig) -> str:
    """Serialize a ScenarioConfig to the documented text format."""
    opts = config.options
    gp = config.guidance
    lines = [
        f"dt = {_fmt_float(config.dt)}",
        f"t_end = {_fmt_float(config.t_end)}",
        f"combine_parallel = {'true' if opts.combine_parallel else 'false'}",
        f"selection_policy = {opts.selection_policy}",
        f"peers_as_obstacles = {'true' if opts.peers_as_obstacles else 'false'}",
        f"peer_radius = {_fmt_float(opts.peer_radius)}",
        f"vel_tol = {_fmt_float(opts.vel_tol)}",
        f"arrival_tol = {_fmt_float(opts.arrival_tol)}",
        f"arrival_hold_s = {_fmt_float(opts.arrival_hold_s)}",
        "",
        "[guidance]",
        f"k1 = {_fmt_float(gp.k1)}",
        f"k2 = {_fmt_float(gp.k2)}",
        f"eps = {_fmt_float(gp.eps)}",
        f"eps_s = {_fmt_float(gp.eps_s)}",
        f"gamma = {_fmt_float(gp.gamma)}",
    ]
    for veh in config.vehicles:
        lines += [
            "",
            "[vehicle]",
            f"l = {_fmt_float(veh.params.l)}",
            f"v_m = {_fmt_float(veh.params.v_m)}",
            f"r_s = {_fmt_float(veh.params.r_s)}",
            f"r_a = {_fmt_float(veh.params.r_a)}",
            f"p = {_fmt_vec(veh.initial.p)}",
            f"v = {_fmt_vec(veh.initial.v)}",
            f"waypoint = {_fmt_vec(veh.waypoint)}",
        ]
    for ob in config.obstacles:
        lines += [
            "",
            "[obstacle]",
            f"p_o = {_fmt_vec(ob.p_o)}",
            f"v_o = {_fmt_vec(ob.v_o)}",
            f"r_o = {_fmt_float(ob.r_o)}",
            f"v_o_max = {_fmt_float(ob.v_o_max)}",
        ]
        if ob.behavior == CONSTANT_VELOCITY:
            lines.append("behavior = constant_velocity")
        elif isinstance(ob.behavior, PursuerBehavior):
            lines.append("behavior = pursuer")
            lines.append(f"eps1 = {_fmt_float(ob.behavior.eps1)}")
        elif isinstance(ob.behavior, ScriptedBehavior):
            lines.append("behavior = scripted")
            for t_k, cmd in ob.behavior.commands:
                lines.append(f"command = {_fmt_float(t_k)} {_fmt_vec(cmd)}")
        else:
            raise SerializationError(f"unknown behavior {ob.behavior!r}")
    return "\n".join(lines) + "\n"


def _parse_float(raw: str, line_no: int, col: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ScenarioFormatError(f"expected a number, got {raw!r}", line_no, col) from None
    if not math.isfinite(value):
        raise ScenarioFormatError(f"non-finite number {raw!r}", line_no, col)
    return value


def _parse_vec(raw: str, line_no: int, col: int) -> Vec2:
    parts = raw.split()
    if len(parts) != 2:
        raise ScenarioFormatError(f"expected two numbers, got {raw!r}", line_no, col)
    return Vec2(_parse_float(parts[0], line_no, col), _parse_float(parts[1], line_no, col))


def _parse_bool(raw: str, line_no: int, col: int) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ScenarioFormatError(f"expected true/false, got {raw!r}", line_no, col)


def load(source: str) -> ScenarioConfig:
    """Parse a scenario from a path or from literal text.

    The result is fully validated; structural problems raise
    InvalidConfigurationError naming the violated invariant, and syntax
    problems raise ScenarioFormatError with line/column.
    """
    if "\n" not in source and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source
    top: dict[str, tuple[str, int, int]] = {}
    guidance_kv: dict[str, tuple[str, int, int]] = {}
    vehicles_kv: list[dict] = []
    obstacles_kv: list[dict] = []
    section = "top"
    current: dict | None = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ScenarioFormatError("unterminated section header", line_no, len(line))
            name = stripped[1:-1].strip()
            if name == "guidance":
                section = "guidance"
                current = None
            elif name == "vehicle":
                section = "vehicle"
                current = {}
                vehicles_kv.append(current)
            elif name == "obstacle":
                section = "obstacle"
                current = {"command": []}
                obstacles_kv.append(current)
            else:
                raise ScenarioFormatError(f"unknown section [{name}]", line_no, 1)
            continue
        if "=" not in stripped:
            raise ScenarioFormatError("expected 'key = value'", line_no, 1)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        col = raw_line.index("=") + 2
        if section == "top":
            if key not in _TOP_KEYS and key not in _OPTION_KEYS:
                raise ScenarioFormatError(f"unknown key {key!r}", line_no, 1)
            top[key] = (value, line_no, col)
        elif section == "guidance":
            if key not in _GUIDANCE_KEYS:
                raise ScenarioFormatError(f"unknown guidance key {key!r}", line_no, 1)
            guidance_kv[key] = (value, line_no, col)
        elif section == "vehicle":
            if key not in _VEHICLE_KEYS:
                raise ScenarioFormatError(f"unknown vehicle key {key!r}", line_no, 1)
            current[key] = (value, line_no, col)
        else:
            if key not in _OBSTACLE_KEYS:
                raise ScenarioFormatError(f"unknown obstacle key {key!r}", line_no, 1)
            if key == "command":
                current["command"].append((value, line_no, col))
            else:
                current[key] = (value, line_no, col)

    def take_float(kv: dict, key: str, default: float | None = None) -> float:
        if key not in kv:
            if default is not None:
                return default
            raise ScenarioFormatError(f"missing required key {key!r}", None, None)
        return _parse_float(*kv[key])

    def take_vec(kv: dict, key: str) -> Vec2:
        if key not in kv:
            raise ScenarioFormatError(f"missing required key {key!r}")
        return _parse_vec(*kv[key])

    try:
        options = SimOptions()
        if "combine_parallel" in top:
            options.combine_parallel = _parse_bool(*top["combine_parallel"])
        if "peers_as_obstacles" in top:
            options.peers_as_obstacles = _parse_bool(*top["peers_as_obstacles"])
        if "selection_policy" in top:
            options.selection_policy = top["selection_policy"][0]
        options.peer_radius = take_float(top, "peer_radius", options.peer_radius)
        options.vel_tol = take_float(top, "vel_tol", options.vel_tol)
        options.arrival_tol = take_float(top, "arrival_tol", options.arrival_tol)
        options.arrival_hold_s = take_float(top, "arrival_hold_s", options.arrival_hold_s)
        guidance = GuidanceParams(
            k1=take_float(guidance_kv, "k1", 1.0),
            k2=take_float(guidance_kv, "k2", 1.0),
            eps=take_float(guidance_kv, "eps", 1e-3),
            eps_s=take_float(guidance_kv, "eps_s", 0.1),
            gamma=take_float(guidance_kv, "gamma", 1.2),
        )
        vehicles = []
        for kv in vehicles_kv:
            vehicles.append(
                VehicleSpec(
                    params=VehicleParams(
                        l=take_float(kv, "l"),
                        v_m=take_float(kv, "v_m"),
                        r_s=take_float(kv, "r_s"),
                        r_a=take_float(kv, "r_a"),
                    ),
                    initial=MulticopterState(p=take_vec(kv, "p"), v=take_vec(kv, "v")),
                    waypoint=take_vec(kv, "waypoint"),
                )
            )
        obstacles = []
        for kv in obstacles_kv:
            behavior_raw = kv.get("behavior", (CONSTANT_VELOCITY, 0, 0))[0]
            if behavior_raw == CONSTANT_VELOCITY:
                behavior: object = CONSTANT_VELOCITY
            elif behavior_raw == "pursuer":
                behavior = PursuerBehavior(eps1=take_float(kv, "eps1"))
            elif behavior_raw == "scripted":
                commands = []
                for value, line_no, col in kv["command"]:
                    parts = value.split()
                    if len(parts) != 3:
                        raise ScenarioFormatError(
                            f"expected 'command = t ax ay', got {value!r}", line_no, col
                        )
                    commands.append(
                        (
                            _parse_float(parts[0], line_no, col),
                            Vec2(
                                _parse_float(parts[1], line_no, col),
                                _parse_float(parts[2], line_no, col),
                            ),
                        )
                    )
                behavior = ScriptedBehavior(commands=tuple(commands))
            else:
                line_no, col = kv["behavior"][1], kv["behavior"][2]
                raise ScenarioFormatError(f"unknown behavior {behavior_raw!r}", line_no, col)
            obstacles.append(
                Obstacle(
                    p_o=take_vec(kv, "p_o"),
                    v_o=take_vec(kv, "v_o"),
                    r_o=take_float(kv, "r_o"),
                    v_o_max=take_float(kv, "v_o_max"),
                    behavior=behavior,
                )
            )
        config = ScenarioConfig(
            vehicles=vehicles,
            obstacles=obstacles,
            guidance=guidance,
            dt=take_float(top, "dt", 0.01),
            t_end=take_float(top, "t_end", 60.0),
            options=options,
        )
    except InvalidArgumentError as exc:
        raise ScenarioFormatError(f"invalid value: {exc}") from exc
    config.check()
    return config


# ---------------------------------------------------------------------------
# Built-in scenarios.

_NONPARALLEL_SEED = 7
_NONPARALLEL_HORIZON = 100.0


def _min_gap_over_time(p1: Vec2, v1: Vec2, p2: Vec2, v2: Vec2, horizon: float) -> float:
    """min over t in [0, horizon] of the center distance of two linear motions."""
    dp = p1 - p2
    dv = v1 - v2
    speed2 = dv.dot(dv)
    t_star = 0.0 if speed2 == 0.0 else min(max(-dp.dot(dv) / speed2, 0.0), horizon)
    return (dp + dv * t_star).norm()


def _nonparallel_obstacles(seed: int) -> list[Obstacle]:
    """Four constant-velocity obstacles with seeded headings.

    Rejection-sampled so that pairwise spacing stays above 2*r_a + r_o_i +
    r_o_j over the whole horizon and every obstacle starts well clear of the
    vehicle, keeping the scenario's standing assumptions machine-checkable.
    """
    rng = random.Random(seed)
    r_a = 7.5
    radii = [12.0, 14.0, 16.0, 18.0]
    start = Vec2(50.0, -50.0)
    chosen: list[Obstacle] = []
    for r_o in radii:
        for _ in range(100000):
            p = Vec2(rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0))
            heading = rng.uniform(0.0, 2.0 * math.pi)
            speed = rng.uniform(8.0, 10.0)
            v = Vec2(speed * math.cos(heading), speed * math.sin(heading))
            if (p - start).norm() < r_o + 5.0 + 10.0:  # clear of the vehicle at t=0
                continue
            ok = all(
                _min_gap_over_time(p, v, ob.p_o, ob.v_o, _NONPARALLEL_HORIZON)
                >= 2.0 * r_a + r_o + ob.r_o
                for ob in chosen
            )
            if ok:
                chosen.append(Obstacle(p_o=p, v_o=v, r_o=r_o, v_o_max=10.0))
                break
        else:
            raise ApfGuardError("obstacle sampling failed to satisfy spacing constraints")
    return chosen


def builtin(name: str) -> ScenarioConfig:
    """A fresh ScenarioConfig for one of the named built-in scenarios."""
    if name not in BUILTIN_NAMES:
        raise InvalidArgumentError(f"unknown scenario {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    gp = GuidanceParams()
    if name in ("head_on", "converge_left", "pursuer_demo"):
        params = VehicleParams(l=5.0, v_m=6.0, r_s=5.0, r_a=7.5)
        if name == "converge_left":
            veh = VehicleSpec(params, MulticopterState(Vec2(-30.0, 0.0), Vec2(0.0, 0.0)), Vec2(30.0, 0.0))
            obstacle = Obstacle(Vec2(0.0, 30.0), Vec2(0.0, -5.0), 10.0, 5.0)
            t_end = 60.0
        else:
            veh = VehicleSpec(params, MulticopterState(Vec2(0.0, 0.0), Vec2(0.0, 0.0)), Vec2(0.0, 0.0))
            if name == "pursuer_demo":
                obstacle = Obstacle(
                    Vec2(30.0, 0.0), Vec2(-5.0, 0.0), 10.0, 9.0, behavior=PursuerBehavior(eps1=0.1)
                )
                t_end = 180.0
            else:
                obstacle = Obstacle(Vec2(30.0, 0.0), Vec2(-5.0, 0.0), 10.0, 5.0)
                t_end = 60.0
        return ScenarioConfig(vehicles=[veh], obstacles=[obstacle], guidance=gp, t_end=t_end)
    if name in ("parallel_v", "parallel_v_no_combine"):
        params = VehicleParams(l=5.0, v_m=10.0, r_s=5.0, r_a=7.5)
        veh = VehicleSpec(params, MulticopterState(Vec2(20.0, -30.0), Vec2(0.0, 0.0)), Vec2(20.0, 30.0))
        obstacles = [
            Obstacle(
                p_o=Vec2(15.0 * i - 45.0, 70.0 - 15.0 * abs(i - 3)),
                v_o=Vec2(0.0, -8.0),
                r_o=10.0 + 2.0 * i,
                v_o_max=8.0,
            )
            for i in range(1, 6)
        ]
        combine = name == "parallel_v"
        return ScenarioConfig(
            vehicles=[veh],
            obstacles=obstacles,
            guidance=gp,
            t_end=100.0 if combine else 40.0,
            options=SimOptions(combine_parallel=combine),
        )
    if name == "nonparallel_4":
        params = VehicleParams(l=5.0, v_m=9.0, r_s=5.0, r_a=7.5)
        veh = VehicleSpec(params, MulticopterState(Vec2(50.0, -50.0), Vec2(0.0, 0.0)), Vec2(-50.0, 50.0))
        return ScenarioConfig(
            vehicles=[veh],
            obstacles=_nonparallel_obstacles(_NONPARALLEL_SEED),
            guidance=gp,
            t_end=100.0,
        )
    # super_41
    vehicles = []
    for i in range(1, 21):
        ang = (i - 1) * math.pi / 10.0
        wp_ang = (i + 9) * math.pi / 10.0
        vehicles.append(
            VehicleSpec(
                VehicleParams(l=5.0, v_m=5.0 + (i - 1) / 8.0, r_s=15.0, r_a=22.5),
                MulticopterState(Vec2(400.0 * math.cos(ang), 400.0 * math.sin(ang)), Vec2(0.0, 0.0)),
                Vec2(400.0 * math.cos(wp_ang), 400.0 * math.sin(wp_ang)),
            )
        )
    for i in range(21, 41):
        ang = (i - 21) * math.pi / 10.0
        wp_ang = (i - 11) * math.pi / 10.0
        vehicles.append(
            VehicleSpec(
                VehicleParams(l=5.0, v_m=5.0 + (i - 1) / 8.0, r_s=15.0, r_a=22.5),
                MulticopterState(Vec2(200.0 * math.cos(ang), 200.0 * math.sin(ang)), Vec2(0.0, 0.0)),
                Vec2(200.0 * math.cos(wp_ang), 200.0 * math.sin(wp_ang)),
            )
        )
    vehicles.append(
        VehicleSpec(
            VehicleParams(l=5.0, v_m=10.0, r_s=15.0, r_a=22.5),
            MulticopterState(Vec2(405.0, 0.0), Vec2(0.0, 0.0)),
            Vec2(-350.0, -350.0),
        )
    )
    return ScenarioConfig(
        vehicles=vehicles,
        obstacles=[],
        guidance=gp,
        t_end=400.0,
        options=SimOptions(peers_as_obstacles=True, peer_radius=0.0),
    )
