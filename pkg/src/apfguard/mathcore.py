"""Planar vector/disc primitives and the shaping functions used by the guidance law.

Three scalar shaping functions live here: a hard vector saturation, a cubic
"bump" that fades from 1 to 0 over a window, and a smooth (rounded-corner)
approximation of ``min(x, 1)``.  A minimal enclosing disc routine supports
grouping several obstacle discs into one.

All functions are pure.  The scalar shaping functions also accept numpy
arrays and apply elementwise, which the simulation loop relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError

# Corner-rounding geometry for smooth_sat, computed from the angles rather
# than hard-coded decimals so the branch joints line up exactly.
_TAN_67_5 = math.tan(math.radians(67.5))
_SIN_45 = math.sin(math.radians(45.0))

#: Largest admissible rounding parameter for :func:`smooth_sat`.
EPS_S_MAX = _TAN_67_5 / (_TAN_67_5 * _SIN_45 - 1.0)


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidArgumentError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Vec2:
    """A 2D vector (position, velocity or error, per context)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgumentError(f"Vec2 components must be finite, got ({self.x!r}, {self.y!r})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "Vec2":
        return Vec2(self.x / s, self.y / s)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @staticmethod
    def from_array(a) -> "Vec2":
        return Vec2(float(a[0]), float(a[1]))


ZERO = Vec2(0.0, 0.0)


@dataclass(frozen=True)
class Disc:
    """A closed disc with strictly positive radius."""

    center: Vec2
    radius: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.radius) or self.radius <= 0.0:
            raise InvalidArgumentError(f"Disc radius must be positive and finite, got {self.radius!r}")

    def contains_disc(self, other: "Disc", slack: float = 1e-9) -> bool:
        return (self.center - other.center).norm() + other.radius <= self.radius + slack


def saturate(v: Vec2, v_max: float) -> Vec2:
    """Clamp ``v`` to the closed ball of radius ``v_max``, preserving direction."""
    _require_finite("v_max", v_max)
    if v_max <= 0.0:
        raise InvalidArgumentError(f"v_max must be positive, got {v_max}")
    n = v.norm()
    if n <= v_max:
        return v
    return v * (v_max / n)


def kappa(v: Vec2, v_max: float) -> float:
    """Scaling factor such that ``saturate(v, v_max) == kappa(v, v_max) * v``."""
    _require_finite("v_max", v_max)
    if v_max <= 0.0:
        raise InvalidArgumentError(f"v_max must be positive, got {v_max}")
    n = v.norm()
    if n <= v_max:
        return 1.0
    return v_max / n


def _check_window(d1, d2) -> None:
    if not (0.0 < d1 < d2):
        raise InvalidArgumentError(f"bump window requires 0 < d1 < d2, got d1={d1}, d2={d2}")


def bump(x, d1: float, d2: float):
    """Cubic fade-out: 1 below ``d1``, 0 above ``d2``, C^1 Hermite cubic between.

    ``x`` may be a scalar or numpy array.
    """
    _check_window(d1, d2)
    t = (np.asarray(x, dtype=float) - d1) / (d2 - d1)
    val = np.where(t < 0.0, 1.0, np.where(t > 1.0, 0.0, 1.0 + t * t * (2.0 * t - 3.0)))
    return float(val) if val.ndim == 0 else val


def bump_deriv(x, d1: float, d2: float):
    """Derivative of :func:`bump` with respect to ``x`` (nonpositive)."""
    _check_window(d1, d2)
    t = (np.asarray(x, dtype=float) - d1) / (d2 - d1)
    inside = (t >= 0.0) & (t <= 1.0)
    val = np.where(inside, 6.0 * t * (t - 1.0) / (d2 - d1), 0.0)
    return float(val) if val.ndim == 0 else val


def _check_eps_s(eps_s: float) -> None:
    _require_finite("eps_s", eps_s)
    if not (0.0 < eps_s <= EPS_S_MAX):
        raise InvalidArgumentError(f"eps_s must lie in (0, {EPS_S_MAX:.6f}], got {eps_s}")


def smooth_sat_joints(eps_s: float) -> tuple[float, float]:
    """The branch joints (x1, x2) of :func:`smooth_sat`."""
    _check_eps_s(eps_s)
    x2 = 1.0 + eps_s / _TAN_67_5
    x1 = x2 - eps_s * _SIN_45
    return x1, x2


def smooth_sat(x, eps_s: float):
    """Smooth approximation of ``min(x, 1)`` for ``x >= 0``.

    Identity up to ``x1``, a circular arc of radius ``eps_s`` through the
    corner, then exactly 1.  Always ``<= min(x, 1)``.
    """
    x1, x2 = smooth_sat_joints(eps_s)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0):
        raise InvalidArgumentError("smooth_sat requires x >= 0")
    # Clip the arc argument so the sqrt stays defined where the branch is unused.
    d = np.clip(xa - x2, -eps_s, eps_s)
    arc = (1.0 - eps_s) + np.sqrt(eps_s * eps_s - d * d)
    val = np.where(xa < x1, xa, np.where(xa > x2, 1.0, arc))
    return float(val) if val.ndim == 0 else val


def smooth_sat_deriv(x, eps_s: float):
    """Derivative of :func:`smooth_sat`; lies in [0, 1]."""
    x1, x2 = smooth_sat_joints(eps_s)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0):
        raise InvalidArgumentError("smooth_sat_deriv requires x >= 0")
    d = np.clip(xa - x2, -eps_s * _SIN_45, 0.0)
    arc = -d / np.sqrt(eps_s * eps_s - d * d)
    val = np.where(xa < x1, 1.0, np.where(xa > x2, 0.0, arc))
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# Minimal enclosing disc of discs.  The optimum is internally tangent to at
# most three of the inputs, so for the small lists this package deals in we
# enumerate every candidate support set (single, pair, triple) exactly and
# keep the smallest candidate that contains everything.


def _enclosing_of_two(a: Disc, b: Disc) -> Disc:
    if a.contains_disc(b, slack=0.0):
        return a
    if b.contains_disc(a, slack=0.0):
        return b
    d = (b.center - a.center).norm()
    r = (d + a.radius + b.radius) / 2.0
    # Center along the segment, offset so both discs are internally tangent.
    u = (b.center - a.center) / d
    c = a.center + u * (r - a.radius)
    return Disc(c, r)


def _enclosing_of_three(a: Disc, b: Disc, c: Disc) -> Disc | None:
    """Disc internally tangent to all three, or None if the system degenerates."""
    # ||q - ci|| = R - ri.  Subtracting the squared equations pairwise gives
    # two linear relations q = u + R*w; substituting back yields a quadratic in R.
    ps = [d.center.as_array() for d in (a, b, c)]
    rs = [d.radius for d in (a, b, c)]
    m = np.empty((2, 2))
    rhs0 = np.empty(2)
    rhs1 = np.empty(2)
    for row, j in enumerate((1, 2)):
        m[row] = 2.0 * (ps[j] - ps[0])
        rhs0[row] = (ps[j] @ ps[j] - ps[0] @ ps[0]) - (rs[j] ** 2 - rs[0] ** 2)
        rhs1[row] = 2.0 * (rs[j] - rs[0])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-12:
        return None
    u = np.linalg.solve(m, rhs0)
    w = np.linalg.solve(m, rhs1)
    # ||u + R w - p0||^2 = (R - r0)^2
    g = u - ps[0]
    qa = w @ w - 1.0
    qb = 2.0 * (g @ w + rs[0])
    qc = g @ g - rs[0] ** 2
    roots = []
    if abs(qa) < 1e-14:
        if abs(qb) > 1e-14:
            roots.append(-qc / qb)
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return None
        s = math.sqrt(disc)
        roots.extend([(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)])
    best = None
    for radius in roots:
        if radius < max(rs) - 1e-9:
            continue
        center = Vec2.from_array(u + radius * w)
        cand = Disc(center, max(radius, max(rs)))
        if all(cand.contains_disc(d, slack=1e-6 * max(1.0, radius)) for d in (a, b, c)):
            if best is None or cand.radius < best.radius:
                best = cand
    return best


def min_enclosing_disc(discs: list[Disc]) -> Disc:
    """Smallest disc containing every disc in the (nonempty) input list."""
    if not discs:
        raise InvalidArgumentError("min_enclosing_disc requires a nonempty list")
    n = len(discs)
    scale = max(d.radius + d.center.norm() for d in discs)
    slack = 1e-9 * max(1.0, scale)

    def covers_all(cand: Disc) -> bool:
        return all(cand.contains_disc(d, slack) for d in discs)

    best: Disc | None = None
    for d in discs:
        if covers_all(d) and (best is None or d.radius < best.radius):
            best = d
    if best is not None:
        return best
    candidates: list[Disc] = []
    for i in range(n):
        for j in range(i + 1, n):
            candidates.append(_enclosing_of_two(discs[i], discs[j]))
            for k in range(j + 1, n):
                c = _enclosing_of_three(discs[i], discs[j], discs[k])
                if c is not None:
                    candidates.append(c)
    for cand in candidates:
        if covers_all(cand) and (best is None or cand.radius < best.radius):
            best = cand
    if best is None:
        raise DegenerateGeometryError("minimal enclosing disc computation degenerated")
    # Guarantee containment of every input despite rounding.
    need = max((best.center - d.center).norm() + d.radius for d in discs)
    if need > best.radius:
        best = Disc(best.center, need)
    return best
