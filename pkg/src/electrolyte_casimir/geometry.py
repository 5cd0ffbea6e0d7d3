"""Geometric parameters of the two-sphere (and plane-sphere) configuration.

Physical lengths ``L, R1, R2`` are reduced to the radius-ratio parameter ``u``,
the reduced distance ``x = L / R_eff`` and the conformally invariant distance
``y``.  The auxiliary ratios ``alpha_plus``/``alpha_minus`` and ``z`` used by
the single round-trip formula are carried along.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

U_MAX = 0.25


class GeometryError(ValueError):
    """Raised for geometric parameters outside their domain."""


@dataclass(frozen=True)
class PhysicalGeometry:
    """Closest-approach distance and radii, in any common length unit.

    With ``plane=True`` the second body is a plane; ``R2`` is then ignored
    and conventionally set to ``math.inf``.
    """

    L: float
    R1: float
    R2: float = math.inf
    plane: bool = False

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise GeometryError(f"distance L must be positive and finite, got {self.L}")
        if not (self.R1 > 0 and math.isfinite(self.R1)):
            raise GeometryError(f"radius R1 must be positive and finite, got {self.R1}")
        if self.plane:
            object.__setattr__(self, "R2", math.inf)
        elif not (self.R2 > 0 and math.isfinite(self.R2)):
            raise GeometryError(
                f"radius R2 must be positive and finite (use plane=True for a plane), got {self.R2}"
            )

    @property
    def R_eff(self) -> float:
        if self.plane:
            return self.R1
        return self.R1 * self.R2 / (self.R1 + self.R2)


@dataclass(frozen=True)
class ReducedGeometry:
    """Dimensionless description of the geometry.

    ``alpha_plus``/``alpha_minus`` are the radius ratios R_big/R_small and
    R_small/R_big; for the plane-sphere case (u = 0) they are ``inf`` and 0
    and ``z`` is ``inf``.
    """

    u: float
    x: float
    y: float
    alpha_plus: float
    alpha_minus: float
    z: float
    plane: bool = field(default=False)

    @property
    def radii(self) -> tuple[float, float]:
        """Radii (larger, smaller) in units of the effective radius."""
        if self.plane:
            return math.inf, 1.0
        return 1.0 + self.alpha_plus, 1.0 + self.alpha_minus

    @property
    def L(self) -> float:
        """Surface distance in units of the effective radius (equals ``x``)."""
        return self.x


def _check_u(u: float) -> None:
    if not (0.0 <= u <= U_MAX):
        raise GeometryError(f"u must lie in [0, 1/4], got {u}")


def conformal_parameter(x: float, u: float) -> float:
    """Return y = 1 + x + u x^2 / 2."""
    _check_u(u)
    if not x > 0:
        raise GeometryError(f"x must be positive, got {x}")
    return 1.0 + x + 0.5 * u * x * x


def distance_from_conformal(y: float, u: float) -> float:
    """Inverse of :func:`conformal_parameter`: the positive root x(y, u)."""
    _check_u(u)
    if not y > 1:
        raise GeometryError(f"y must exceed 1, got {y}")
    d = y - 1.0
    # x = (sqrt(1 + 2 u d) - 1)/u written without cancellation
    return 2.0 * d / (1.0 + math.sqrt(1.0 + 2.0 * u * d))


def aspect_parameters(u: float) -> tuple[float, float]:
    """Radius ratios (alpha_plus, alpha_minus) for 0 < u <= 1/4.

    ``alpha_minus`` uses 2u / (1 - 2u + sqrt(1 - 4u)) which is free of
    subtraction loss for every u; ``alpha_plus`` is its reciprocal.
    """
    _check_u(u)
    if u == 0.0:
        raise GeometryError("u = 0 is the plane-sphere limit; alpha_plus diverges")
    s = math.sqrt(max(1.0 - 4.0 * u, 0.0))
    am = 2.0 * u / (1.0 - 2.0 * u + s)
    ap = (1.0 - 2.0 * u + s) / (2.0 * u)
    return ap, am


def from_reduced(y: float, u: float) -> ReducedGeometry:
    """Build the reduced geometry directly from (y, u)."""
    x = distance_from_conformal(y, u)
    return _assemble(x, y, u)


def from_distance(x: float, u: float) -> ReducedGeometry:
    """Build the reduced geometry from (x, u)."""
    return _assemble(x, conformal_parameter(x, u), u)


def _assemble(x: float, y: float, u: float) -> ReducedGeometry:
    if u == 0.0:
        return ReducedGeometry(u=0.0, x=x, y=y, alpha_plus=math.inf, alpha_minus=0.0,
                               z=math.inf, plane=True)
    ap, am = aspect_parameters(u)
    return ReducedGeometry(u=u, x=x, y=y, alpha_plus=ap, alpha_minus=am,
                           z=2.0 * y + ap + am)


def reduce(g: PhysicalGeometry) -> ReducedGeometry:
    """Reduce physical lengths to the dimensionless parameters (u, x, y, ...)."""
    if g.plane:
        return _assemble(g.L / g.R1, 1.0 + g.L / g.R1, 0.0)
    s = g.R1 + g.R2
    u = g.R1 * g.R2 / (s * s)
    u = min(u, U_MAX)
    x = g.L * s / (g.R1 * g.R2)
    y = 1.0 + x + 0.5 * u * x * x
    red = _assemble(x, y, u)
    big, small = max(g.R1, g.R2), min(g.R1, g.R2)
    # ratios straight from the radii are more accurate than from u near u = 1/4
    return ReducedGeometry(u=red.u, x=red.x, y=red.y, alpha_plus=big / small,
                           alpha_minus=small / big, z=2.0 * y + big / small + small / big)


def to_physical(red: ReducedGeometry, R_eff: float = 1.0) -> PhysicalGeometry:
    """Reconstruct lengths for a given effective radius (larger sphere first)."""
    if red.plane:
        return PhysicalGeometry(L=red.x * R_eff, R1=R_eff, plane=True)
    big, small = red.radii
    return PhysicalGeometry(L=red.x * R_eff, R1=big * R_eff, R2=small * R_eff)
