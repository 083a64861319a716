"""Command-line interface: run scenarios, verify oracles, list built-ins, sweep gains.

Exit codes: 0 success (and conflict-free for `run`/`sweep`), 2 when a conflict
occurred (machine-checkable safety signal), 1 on usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import scenario_io, sim, verify
from .dynamics import PursuerBehavior, ScriptedBehavior, CONSTANT_VELOCITY
from .errors import ApfGuardError, InvalidArgumentError, InvalidConfigurationError
from .mathcore import Vec2
from .multiobs import validate

OUT_ENV = "APFGUARD_OUT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFLICT = 2


def _load_scenario(ref: str) -> sim.ScenarioConfig:
    if ref in scenario_io.BUILTIN_NAMES:
        return scenario_io.builtin(ref)
    if os.path.exists(ref):
        return scenario_io.load(ref)
    raise InvalidArgumentError(
        f"unknown scenario {ref!r}: not a built-in name or existing file"
    )


def _parse_vec_override(value: str) -> Vec2:
    parts = value.replace(",", " ").split()
    if len(parts) != 2:
        raise InvalidArgumentError(f"expected two numbers, got {value!r}")
    return Vec2(float(parts[0]), float(parts[1]))


def _apply_override(config: sim.ScenarioConfig, key: str, value: str) -> None:
    head, _, rest = key.partition(".")
    if key == "dt":
        config.dt = float(value)
    elif key == "t_end":
        config.t_end = float(value)
    elif head == "guidance" and rest in ("k1", "k2", "eps", "eps_s", "gamma"):
        config.guidance = dataclasses.replace(config.guidance, **{rest: float(value)})
    elif head == "options":
        if not hasattr(config.options, rest):
            raise InvalidArgumentError(f"unknown override key {key!r}")
        current = getattr(config.options, rest)
        if isinstance(current, bool):
            if value not in ("true", "false"):
                raise InvalidArgumentError(f"{key} expects true/false, got {value!r}")
            setattr(config.options, rest, value == "true")
        elif isinstance(current, str):
            setattr(config.options, rest, value)
        else:
            setattr(config.options, rest, float(value))
    elif head == "vehicle":
        if rest in ("l", "v_m", "r_s", "r_a"):
            for veh in config.vehicles:
                veh.params = dataclasses.replace(veh.params, **{rest: float(value)})
        elif rest == "waypoint":
            for veh in config.vehicles:
                veh.waypoint = _parse_vec_override(value)
        else:
            raise InvalidArgumentError(f"unknown override key {key!r}")
    elif head == "obstacle":
        if rest in ("r_o", "v_o_max"):
            config.obstacles = [
                dataclasses.replace(ob, **{rest: float(value)}) for ob in config.obstacles
            ]
        elif rest == "eps1":
            config.obstacles = [
                dataclasses.replace(ob, behavior=PursuerBehavior(eps1=float(value)))
                if isinstance(ob.behavior, PursuerBehavior)
                else ob
                for ob in config.obstacles
            ]
        elif rest in ("p_o", "v_o"):
            config.obstacles = [
                dataclasses.replace(ob, **{rest: _parse_vec_override(value)})
                for ob in config.obstacles
            ]
        else:
            raise InvalidArgumentError(f"unknown override key {key!r}")
    else:
        raise InvalidArgumentError(f"unknown override key {key!r}")


def _apply_common(config: sim.ScenarioConfig, args) -> None:
    for ov in args.override or []:
        if "=" not in ov:
            raise InvalidArgumentError(f"override must look like key=value, got {ov!r}")
        key, _, value = ov.partition("=")
        _apply_override(config, key.strip(), value.strip())
    if args.dt is not None:
        config.dt = args.dt
    if args.t_end is not None:
        config.t_end = args.t_end
    config.check()


def _behavior_name(behavior) -> str:
    if behavior == CONSTANT_VELOCITY:
        return "constant_velocity"
    if isinstance(behavior, PursuerBehavior):
        return "pursuer"
    if isinstance(behavior, ScriptedBehavior):
        return "scripted"
    return "unknown"


def _trace_meta(config: sim.ScenarioConfig) -> dict:
    """Sidecar metadata so downstream renderers can draw radii and discs."""
    return {
        "dt": config.dt,
        "t_end": config.t_end,
        "l": [v.params.l for v in config.vehicles],
        "v_m": [v.params.v_m for v in config.vehicles],
        "r_s": [v.params.r_s for v in config.vehicles],
        "r_a": [v.params.r_a for v in config.vehicles],
        "waypoints": [[v.waypoint.x, v.waypoint.y] for v in config.vehicles],
        "peers_as_obstacles": config.options.peers_as_obstacles,
        "peer_radius": config.options.peer_radius,
        "obstacles": [
            {
                "p_o": [ob.p_o.x, ob.p_o.y],
                "v_o": [ob.v_o.x, ob.v_o.y],
                "r_o": ob.r_o,
                "behavior": _behavior_name(ob.behavior),
            }
            for ob in config.obstacles
        ],
    }


def _out_dir(args) -> str:
    out = args.out or os.environ.get(OUT_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_run(args) -> int:
    config = _load_scenario(args.scenario)
    _apply_common(config, args)
    report = validate(config)
    print(report.to_text())
    records, metrics = sim.run(config)
    out = _out_dir(args)
    sim.write_trace_csv(records, os.path.join(out, "trace.csv"))
    with open(os.path.join(out, "trace.meta.json"), "w") as fh:
        json.dump(_trace_meta(config), fh, indent=2, sort_keys=True)
    with open(os.path.join(out, "metrics.json"), "w") as fh:
        fh.write(metrics.to_json() + "\n")
    print("metrics:")
    print(metrics.to_json())
    return EXIT_CONFLICT if metrics.conflict_events else EXIT_OK


def cmd_verify(args) -> int:
    tolerances = {}
    for ov in args.tolerance or []:
        name, _, value = ov.partition("=")
        if name not in verify.ALL_CHECKS:
            raise InvalidArgumentError(
                f"unknown oracle {name!r}; known: {', '.join(verify.ALL_CHECKS)}"
            )
        tolerances[name] = float(value)
    results = verify.run_all(seed=args.seed, only=args.only, tolerances=tolerances)
    if not results:
        raise InvalidArgumentError(f"no oracle matches {args.only!r}")
    header = f"{'oracle':<22}{'trials':>8}{'worst_violation':>18}{'tolerance':>12}{'result':>8}"
    print(header)
    print("-" * len(header))
    for r in results:
        print(
            f"{r.name:<22}{r.trials:>8}{r.worst_violation:>18.3e}{r.tolerance:>12.1e}"
            f"{'pass' if r.passed else 'FAIL':>8}"
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_USAGE


def cmd_list(_args) -> int:
    for name in scenario_io.BUILTIN_NAMES:
        print(name)
    return EXIT_OK


SWEEP_EPS = (1e-2, 1e-3, 1e-4)
SWEEP_GAMMA = (1.1, 1.2, 1.5)


def cmd_sweep(args) -> int:
    base = _load_scenario(args.scenario)
    _apply_common(base, args)

    def cell(eps: float, gamma: float):
        config = _load_scenario(args.scenario)
        _apply_common(config, args)
        config.guidance = dataclasses.replace(config.guidance, eps=eps, gamma=gamma)
        # A gamma can inflate the safety distance past the avoidance radius for
        # this geometry; report such cells as invalid instead of aborting.
        try:
            config.check()
            _, metrics = sim.run(config)
        except InvalidConfigurationError:
            metrics = None
        return eps, gamma, metrics

    grid = [(eps, gamma) for eps in SWEEP_EPS for gamma in SWEEP_GAMMA]
    with ThreadPoolExecutor(max_workers=len(grid)) as pool:
        results = list(pool.map(lambda eg: cell(*eg), grid))
    print(f"{'eps':>8}{'gamma':>7}{'min_filtered_margin':>21}{'arrival':>10}{'conflicts':>11}")
    rows = []
    all_clear = True
    for eps, gamma, metrics in results:
        if metrics is None:
            print(f"{eps:>8.0e}{gamma:>7.2f}{'invalid-window':>21}{'n/a':>10}{'n/a':>11}")
        else:
            arr = f"{metrics.arrival_time:.2f}" if metrics.arrival_time is not None else "none"
            print(
                f"{eps:>8.0e}{gamma:>7.2f}{metrics.min_filtered_margin:>21.6f}"
                f"{arr:>10}{len(metrics.conflict_events):>11}"
            )
            if metrics.conflict_events:
                all_clear = False
        rows.append((eps, gamma, metrics))
    out = _out_dir(args)
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("eps,gamma,min_filtered_margin,arrival_time,conflicts\n")
        for eps, gamma, metrics in rows:
            if metrics is None:
                fh.write(f"{eps:.9g},{gamma:.9g},,,\n")
                continue
            arr = "" if metrics.arrival_time is None else format(metrics.arrival_time, ".9g")
            fh.write(
                f"{eps:.9g},{gamma:.9g},{metrics.min_filtered_margin:.9g},{arr},"
                f"{len(metrics.conflict_events)}\n"
            )
    return EXIT_OK if all_clear else EXIT_CONFLICT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apfguard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="built-in name or scenario file path")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        p.add_argument("--override", action="append", metavar="KEY=VALUE")
        p.add_argument("--seed", type=int, default=verify.DEFAULT_SEED)
        p.add_argument("--dt", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)

    p_run = sub.add_parser("run", help="simulate a scenario and write trace/metrics")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run the numeric oracle suite")
    p_verify.add_argument("--only", help="substring filter on oracle names")
    p_verify.add_argument("--seed", type=int, default=verify.DEFAULT_SEED)
    p_verify.add_argument("--tolerance", action="append", metavar="NAME=VALUE")
    p_verify.set_defaults(func=cmd_verify)

    p_list = sub.add_parser("list", help="list built-in scenarios")
    p_list.set_defaults(func=cmd_list)

    p_sweep = sub.add_parser("sweep", help="grid-sweep barrier sharpness and inflation")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ApfGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
