"""Grouping of parallel obstacles, active-obstacle selection, and assumption checks.

A rigid formation of obstacles sharing one velocity can be wrapped in a single
enclosing disc and avoided as one.  Selection picks which obstacles feed the
repulsive term each step.  ``validate`` grades a scenario against the standing
assumptions the safety analysis rests on — it reports margins and never throws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dynamics import CONSTANT_VELOCITY, Obstacle, PursuerBehavior, filtered_position
from .errors import InvalidArgumentError, NotParallelError
from .guidance import bump_window
from .mathcore import Disc, Vec2, min_enclosing_disc

DEFAULT_VEL_TOL = 1e-6

ALL_WITHIN = "all_within"
NEAREST_WITHIN = "nearest_within"


@dataclass
class AssumptionReport:
    """Pass/fail per standing assumption, with numeric margins (m).

    a2pp_pairwise margins are center separations minus the required
    ``2*r_a + r_o_i + r_o_j`` at t = 0.
    """

    a1_constant_velocity: list[bool] = field(default_factory=list)
    a2_initial_separation: bool = True
    a2_margins: list[float] = field(default_factory=list)
    a2pp_pairwise: list[list[bool]] = field(default_factory=list)
    a2pp_margins: list[list[float]] = field(default_factory=list)
    a3_waypoint_clearance: bool = True
    a3_margins: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def all_pass(self) -> bool:
        return (
            all(self.a1_constant_velocity)
            and self.a2_initial_separation
            and all(all(row) for row in self.a2pp_pairwise)
            and self.a3_waypoint_clearance
        )

    def to_text(self) -> str:
        lines = ["assumption report:"]
        lines.append(
            "  a1 constant-velocity obstacles: "
            + (", ".join("pass" if ok else "FAIL" for ok in self.a1_constant_velocity) or "n/a")
        )
        lines.append(
            f"  a2 initial separation: {'pass' if self.a2_initial_separation else 'FAIL'}"
            + (f" (worst margin {min(self.a2_margins):.3f} m)" if self.a2_margins else "")
        )
        flat = [
            row[j]
            for i, row in enumerate(self.a2pp_margins)
            for j in range(i + 1, len(row))
        ]
        lines.append(
            "  a2'' pairwise obstacle spacing: "
            + ("pass" if all(all(r) for r in self.a2pp_pairwise) else "FAIL")
            + (f" (worst margin {min(flat):.3f} m)" if flat else " (n/a)")
        )
        lines.append(
            f"  a3 waypoint clearance: {'pass' if self.a3_waypoint_clearance else 'FAIL'}"
            + (f" (worst margin {min(self.a3_margins):.3f} m)" if self.a3_margins else "")
        )
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


def combine_parallel(obstacles: list[Obstacle], vel_tol: float = DEFAULT_VEL_TOL) -> Obstacle:
    """Wrap same-velocity obstacles in their minimal enclosing disc."""
    if not obstacles:
        raise InvalidArgumentError("combine_parallel requires a nonempty list")
    if len(obstacles) == 1:
        return obstacles[0]
    for ob in obstacles[1:]:
        if (ob.v_o - obstacles[0].v_o).norm() > vel_tol:
            raise NotParallelError(
                f"velocity spread exceeds {vel_tol} m/s: {obstacles[0].v_o} vs {ob.v_o}"
            )
    disc = min_enclosing_disc([Disc(ob.p_o, ob.r_o) for ob in obstacles])
    n = float(len(obstacles))
    v_mean = Vec2(
        sum(ob.v_o.x for ob in obstacles) / n,
        sum(ob.v_o.y for ob in obstacles) / n,
    )
    return Obstacle(
        p_o=disc.center,
        v_o=v_mean,
        r_o=disc.radius,
        v_o_max=max(ob.v_o_max for ob in obstacles),
        behavior=CONSTANT_VELOCITY,
    )


def select_active(
    xi: Vec2,
    obstacles: list[Obstacle],
    l: float,
    r_s: float,
    r_a: float,
    gamma: float,
    policy: str = ALL_WITHIN,
) -> list[tuple[Vec2, float]]:
    """Obstacles inside the avoidance trigger, as (filtered error, radius) pairs.

    ``nearest_within`` keeps at most the closest by filtered separation, ties
    broken by lowest index.
    """
    if policy not in (ALL_WITHIN, NEAREST_WITHIN):
        raise InvalidArgumentError(f"unknown selection policy {policy!r}")
    within: list[tuple[float, int, Vec2, float]] = []
    for idx, ob in enumerate(obstacles):
        err = xi - filtered_position(ob.p_o, ob.v_o, l)
        _, trigger = bump_window(ob.r_o, gamma, r_s, r_a)
        z = err.norm()
        if z <= trigger:
            within.append((z, idx, err, ob.r_o))
    if policy == NEAREST_WITHIN and within:
        within = [min(within, key=lambda item: (item[0], item[1]))]
    within.sort(key=lambda item: item[1])
    return [(err, r_o) for _, _, err, r_o in within]


def validate(scenario) -> AssumptionReport:
    """Grade a ScenarioConfig against the standing assumptions.

    Reports margins per obstacle/pair; puts soft conditions (vehicle faster
    than every obstacle, pairwise spacing drift over time) in ``warnings``.
    """
    report = AssumptionReport()
    obstacles = scenario.obstacles
    for idx, ob in enumerate(obstacles):
        constant = ob.behavior == CONSTANT_VELOCITY
        report.a1_constant_velocity.append(constant)
        if isinstance(ob.behavior, PursuerBehavior):
            report.warnings.append(f"obstacle {idx} pursues the vehicle (not constant velocity)")
    for veh in scenario.vehicles:
        l = veh.params.l
        xi0 = filtered_position(veh.initial.p, veh.initial.v, l)
        for idx, ob in enumerate(obstacles):
            sep = (xi0 - filtered_position(ob.p_o, ob.v_o, l)).norm()
            margin = sep - (veh.params.r_s + ob.r_o)
            report.a2_margins.append(margin)
            if margin <= 0.0:
                report.a2_initial_separation = False
            _, trigger = bump_window(ob.r_o, scenario.guidance.gamma, veh.params.r_s, veh.params.r_a)
            # trigger is already a center-to-center filtered distance
            wp_margin = (veh.waypoint - ob.p_o).norm() - trigger
            report.a3_margins.append(wp_margin)
            if ob.v_o.norm() == 0.0 and wp_margin <= 0.0:
                report.a3_waypoint_clearance = False
            if ob.v_o_max >= veh.params.v_m:
                report.warnings.append(
                    f"obstacle {idx} speed bound {ob.v_o_max} m/s >= vehicle v_m {veh.params.v_m} m/s"
                )
    # Pairwise spacing at t = 0; same-velocity (combinable) pairs are exempt.
    n = len(obstacles)
    r_a_max = max((veh.params.r_a for veh in scenario.vehicles), default=0.0)
    report.a2pp_pairwise = [[True] * n for _ in range(n)]
    report.a2pp_margins = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            gap = (obstacles[i].p_o - obstacles[j].p_o).norm()
            margin = gap - (2.0 * r_a_max + obstacles[i].r_o + obstacles[j].r_o)
            report.a2pp_margins[i][j] = report.a2pp_margins[j][i] = margin
            parallel = (obstacles[i].v_o - obstacles[j].v_o).norm() <= DEFAULT_VEL_TOL
            ok = parallel or margin >= 0.0
            report.a2pp_pairwise[i][j] = report.a2pp_pairwise[j][i] = ok
            if not ok:
                report.warnings.append(
                    f"obstacles {i},{j} start {gap:.2f} m apart (margin {margin:.2f} m)"
                )
    return report
