"""Attractive/repulsive potentials and the saturated velocity command.

The attractive part is a line-integral potential that is quadratic near the
waypoint and linear far away.  The repulsive part is a barrier-like potential
that is identically zero outside the avoidance window and grows like
``k2/(eps*z)`` as the filtered separation ``z`` approaches the inflated
safety distance.  Its radial derivative yields the repulsive gain ``a_o``.

Radii bookkeeping: the barrier's fade window nominally runs from the inflated
safety distance ``gamma*r_s + r_o`` up to the avoidance radius ``r_a``.  When
the obstacle is so large that ``r_a`` falls inside the inflated safety
distance, the window is measured center-to-center instead and runs up to
``r_a + r_o``.  ``bump_window`` below is the single source of truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mathcore
from .errors import DegenerateGeometryError, InvalidArgumentError, InvalidConfigurationError
from .dynamics import VehicleParams
from .mathcore import Vec2, saturate

DEFAULT_K1 = 1.0
DEFAULT_K2 = 1.0
DEFAULT_EPS = 1e-3
DEFAULT_EPS_S = 0.1
DEFAULT_GAMMA = 1.2


@dataclass(frozen=True)
class GuidanceParams:
    """Controller gains.

    k1     -- attractive gain (1/s)
    k2     -- repulsive strength
    eps    -- barrier sharpness; smaller means a harder barrier
    eps_s  -- corner rounding of the smooth saturation
    gamma  -- safety-radius inflation factor (> 1)
    """

    k1: float = DEFAULT_K1
    k2: float = DEFAULT_K2
    eps: float = DEFAULT_EPS
    eps_s: float = DEFAULT_EPS_S
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self) -> None:
        for name in ("k1", "k2", "eps"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidArgumentError(f"{name} must be positive, got {value!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 1.0):
            raise InvalidArgumentError(f"gamma must exceed 1, got {self.gamma!r}")
        if not (0.0 < self.eps_s <= mathcore.EPS_S_MAX):
            raise InvalidArgumentError(
                f"eps_s must lie in (0, {mathcore.EPS_S_MAX:.6f}], got {self.eps_s!r}"
            )


def bump_window(r_o: float, gamma: float, r_s: float, r_a: float) -> tuple[float, float]:
    """The (inner, outer) fade window of the repulsive barrier.

    Returns ``(gamma*r_s + r_o, r_a)`` when that is a proper window; for large
    obstacles (``r_a <= gamma*r_s + r_o``) the outer edge is taken
    center-to-center as ``r_a + r_o``.  The outer edge doubles as the
    avoidance trigger distance.
    """
    d1 = gamma * r_s + r_o
    d2 = r_a if r_a > d1 else r_a + r_o
    if d2 <= d1:
        raise InvalidConfigurationError(
            f"empty avoidance window: gamma*r_s + r_o = {d1} >= {d2} "
            f"(r_s={r_s}, r_o={r_o}, r_a={r_a}, gamma={gamma})"
        )
    return d1, d2


def waypoint_potential(xi_wp_err: Vec2, k1: float, v_m: float) -> float:
    """Line-integral attractive potential of the saturated error field."""
    if not (math.isfinite(k1) and k1 > 0.0):
        raise InvalidArgumentError(f"k1 must be positive, got {k1!r}")
    if not (math.isfinite(v_m) and v_m > 0.0):
        raise InvalidArgumentError(f"v_m must be positive, got {v_m!r}")
    z = xi_wp_err.norm()
    if k1 * z <= v_m:
        return 0.5 * k1 * z * z
    return v_m * v_m / (2.0 * k1) + v_m * (z - v_m / k1)


def _barrier_terms(z, r_o: float, gp: GuidanceParams, r_s: float, r_a: float):
    """sigma, sigma', D, D' for the barrier at separation(s) z (array-aware)."""
    d1, d2 = bump_window(r_o, gp.gamma, r_s, r_a)
    za = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(za)) or np.any(za <= 0.0):
        raise DegenerateGeometryError("obstacle separation must be positive and finite")
    sigma = mathcore.bump(za, d1, d2)
    sigma_d = mathcore.bump_deriv(za, d1, d2)
    denom = (1.0 + gp.eps) * za - d1 * mathcore.smooth_sat(za / d1, gp.eps_s)
    denom_d = (1.0 + gp.eps) - mathcore.smooth_sat_deriv(za / d1, gp.eps_s)
    return sigma, sigma_d, denom, denom_d


def obstacle_potential(z, r_o: float, gp: GuidanceParams, r_s: float, r_a: float):
    """Barrier potential at filtered separation ``z``; zero beyond the window."""
    sigma, _, denom, _ = _barrier_terms(z, r_o, gp, r_s, r_a)
    val = np.asarray(sigma) / denom
    val = gp.k2 * val
    return float(val) if np.ndim(val) == 0 else val


def obstacle_potential_gradient(z, r_o: float, gp: GuidanceParams, r_s: float, r_a: float):
    """Analytic d/dz of :func:`obstacle_potential` (nonpositive)."""
    sigma, sigma_d, denom, denom_d = _barrier_terms(z, r_o, gp, r_s, r_a)
    val = gp.k2 * (np.asarray(sigma_d) * denom - np.asarray(sigma) * denom_d) / (denom * denom)
    return float(val) if np.ndim(val) == 0 else val


def repulsive_gain(z, r_o: float, gp: GuidanceParams, r_s: float, r_a: float):
    """The nonnegative gain a_o = -(dV/dz)/z multiplying the error vector."""
    grad = obstacle_potential_gradient(z, r_o, gp, r_s, r_a)
    val = -np.asarray(grad) / np.asarray(z, dtype=float)
    return float(val) if np.ndim(val) == 0 else val


def velocity_command(
    xi_wp_err: Vec2,
    near_obstacles: list[tuple[Vec2, float]],
    gp: GuidanceParams,
    vp: VehicleParams,
) -> Vec2:
    """The saturated velocity command toward the waypoint, repelled by obstacles.

    ``near_obstacles`` holds (filtered error vector, obstacle radius) pairs,
    typically pre-filtered to those inside the avoidance trigger; obstacles
    beyond it contribute zero anyway.
    """
    attract = saturate(xi_wp_err * gp.k1, vp.v_m)
    repel = Vec2(0.0, 0.0)
    for xi_o_err, r_o in near_obstacles:
        z = xi_o_err.norm()
        if z == 0.0:
            raise DegenerateGeometryError("zero-norm filtered obstacle error")
        gain = repulsive_gain(z, r_o, gp, vp.r_s, vp.r_a)
        if gain != 0.0:
            repel = repel + xi_o_err * gain
    return -saturate(attract - repel, vp.v_m)
