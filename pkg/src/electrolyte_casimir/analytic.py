"""Closed-form and asymptotic expressions for the reduced free energy f_u.

All functions work on the dimensionless pair (y, u).  The single round-trip
term is evaluated in double precision for u >= ``U_SWITCH``; below that the
same expression is evaluated with mpmath at a working precision large enough
to absorb the O(1/u) cancellation between its terms.  At u = 0 exactly the
plane-sphere limit

    f1(y, 0) = y / (4 (y^2 - 1)) + (y / 4) log(1 - 1/y^2)

is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .geometry import GeometryError, U_MAX, aspect_parameters

ZETA3 = 1.2020569031595943
U_SWITCH = 1e-4
# above this y the O(1/y) terms cancel down to O(1/y^3); use extended precision
Y_SWITCH = 1e3


class InvalidModelError(ValueError):
    """Raised when a rational model has non-positive roots or mismatched lengths."""


@dataclass(frozen=True)
class RationalModel:
    """Product-form rational function of exp(y - 1).

    phi_rm(y) = prod_k (E + nu_k) / (E + mu_k),  E = exp(y - 1) - 1
    """

    nu: tuple[float, ...]
    mu: tuple[float, ...]
    max_deviation: float = float("nan")
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(float(v) for v in self.nu))
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        if len(self.nu) != len(self.mu) or not self.nu:
            raise InvalidModelError("nu and mu must be non-empty and of equal length")
        if not all(v > 0 and math.isfinite(v) for v in self.nu + self.mu):
            raise InvalidModelError("all roots nu_k, mu_k must be positive and finite")

    @property
    def order(self) -> int:
        return len(self.nu)

    def to_dict(self) -> dict:
        return {"order": self.order, "nu": list(self.nu), "mu": list(self.mu),
                "max_deviation": self.max_deviation}

    @classmethod
    def from_dict(cls, d: dict) -> "RationalModel":
        return cls(nu=d["nu"], mu=d["mu"], max_deviation=d.get("max_deviation", float("nan")),
                   label=d.get("label", ""))


TABLE_I = RationalModel(nu=(0.004618, 0.09639), mu=(0.004415, 0.08397),
                        max_deviation=1.2e-3, label="table-I")


def _check(y, u):
    if not (0.0 <= u <= U_MAX):
        raise GeometryError(f"u must lie in [0, 1/4], got {u}")
    if not y > 1.0:
        raise GeometryError(f"y must exceed 1 (contact at y = 1), got {y}")


def _f1_plane(y, lib):
    y2 = y * y
    return y / (4 * (y2 - 1)) + y / 4 * lib.log1p(-1 / y2)


def _f1_terms(y, ap, am, lib):
    """Three-term expression with log1p/atanh forms, generic over math backend."""
    z = 2 * y + ap + am
    y2 = y * y
    t1 = y / (4 * (y2 - 1))
    # log((y^2-1) z^2 / (y z + 1/2)^2) = log1p(-1/y^2) - 2 log1p(1/(2 y z))
    t2 = z / 12 * (lib.log1p(-1 / y2) - 2 * lib.log1p(1 / (2 * y * z)))
    t3 = 0
    for a in (ap, am):
        A = 2 * y2 + a * y - 1
        B = lib.sqrt(a * z)
        t3 += 2 * lib.atanh(B / A) / (12 * lib.sqrt(z) * a * lib.sqrt(a))
    return t1 + t2 + t3


def _dps_for(y, u):
    lost = 0.0
    if u > 0:
        lost += max(0.0, -math.log10(u))
    lost += 2 * max(0.0, math.log10(y))
    return int(30 + lost)


def _f1_mp(y, u):
    with mpmath.workdps(_dps_for(y, u)):
        ymp = mpmath.mpf(y)
        if u == 0.0:
            return float(_f1_plane(ymp, mpmath))
        um = mpmath.mpf(u)
        s = mpmath.sqrt(1 - 4 * um)
        am = 2 * um / (1 - 2 * um + s)
        return float(_f1_terms(ymp, 1 / am, am, mpmath))


def single_round_trip(y: float, u: float) -> float:
    """Single round-trip contribution f_u^(1)(y)."""
    _check(y, u)
    if u < U_SWITCH or y > Y_SWITCH:
        if u == 0.0 and y <= Y_SWITCH:
            return float(_f1_plane(y, np))
        return _f1_mp(y, u)
    ap, am = aspect_parameters(u)
    return float(_f1_terms(y, ap, am, np))


def _df1_terms(y, ap, am, lib):
    z = 2 * y + ap + am
    y2 = y * y
    d1 = -(y2 + 1) / (4 * (y2 - 1) ** 2)
    lam = lib.log1p(-1 / y2) - 2 * lib.log1p(1 / (2 * y * z))
    dlam = 2 * y / (y2 - 1) + 4 / z - 2 * (z + 2 * y) / (y * z + 0.5)
    d2 = lam / 6 + z / 12 * dlam
    d3 = 0
    for a in (ap, am):
        A = 2 * y2 + a * y - 1
        B = lib.sqrt(a * z)
        dA = 4 * y + a
        dB = lib.sqrt(a / z)
        at = 2 * lib.atanh(B / A)
        dat = 2 * (dB * A - B * dA) / ((A - B) * (A + B))
        d3 += (-at / (z * lib.sqrt(z)) + dat / lib.sqrt(z)) / (12 * a * lib.sqrt(a))
    return d1 + d2 + d3


def _df1_plane(y, lib):
    y2 = y * y
    return -(y2 + 1) / (4 * (y2 - 1) ** 2) + lib.log1p(-1 / y2) / 4 + 1 / (2 * (y2 - 1))


def single_round_trip_dy(y: float, u: float) -> float:
    """Derivative of :func:`single_round_trip` with respect to y."""
    _check(y, u)
    if u < U_SWITCH or y > Y_SWITCH:
        if u == 0.0 and y <= Y_SWITCH:
            return float(_df1_plane(y, np))
        with mpmath.workdps(_dps_for(y, u) + 10):
            ymp = mpmath.mpf(y)
            if u == 0.0:
                return float(_df1_plane(ymp, mpmath))
            um = mpmath.mpf(u)
            am = 2 * um / (1 - 2 * um + mpmath.sqrt(1 - 4 * um))
            return float(_df1_terms(ymp, 1 / am, am, mpmath))
    ap, am = aspect_parameters(u)
    return float(_df1_terms(y, ap, am, np))


def large_distance_limit(y: float, u: float) -> float:
    """Leading large-y behaviour: 1/(8 y^3) for u = 0, 3/(32 y^3) otherwise."""
    _check(y, u)
    return 1.0 / (8.0 * y ** 3) if u == 0.0 else 3.0 / (32.0 * y ** 3)


def pfa_limit(y: float) -> float:
    """Proximity-force limit zeta(3) / (8 (y - 1)); meaningful only for y - 1 << 1."""
    if not y > 1.0:
        raise GeometryError(f"y must exceed 1, got {y}")
    return ZETA3 / (8.0 * (y - 1.0))


def phi_rational(y, model: RationalModel = TABLE_I):
    """Evaluate the rational model at y >= 1 (scalar or array)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 1.0):
        raise GeometryError("phi_rational requires y >= 1")
    d = y - 1.0
    big = d > 1.0
    # (E + nu)/(E + mu) = (1 + nu q)/(1 + mu q) with q = 1/E avoids overflow
    with np.errstate(over="ignore"):
        e = np.expm1(np.where(big, 0.0, d))
        q = np.exp(-np.where(big, d, 0.0)) / -np.expm1(-np.where(big, d, 1.0))
    out = np.ones_like(d)
    for n, m in zip(model.nu, model.mu):
        out = out * np.where(big, (1.0 + n * q) / (1.0 + m * q), (e + n) / (e + m))
    return float(out) if out.ndim == 0 else out


def phi_rational_dy(y: float, model: RationalModel = TABLE_I) -> float:
    """Derivative of :func:`phi_rational` with respect to y."""
    d = y - 1.0
    if d > 1.0:
        # (E + 1)/((E + nu)(E + mu)) in terms of q = 1/E
        q = math.exp(-d) / -math.expm1(-d)
        dlog = sum((m - n) * q * (1.0 + q) / ((1.0 + n * q) * (1.0 + m * q))
                   for n, m in zip(model.nu, model.mu))
    else:
        e = math.expm1(d)
        dlog = sum((e + 1.0) * (m - n) / ((e + n) * (e + m))
                   for n, m in zip(model.nu, model.mu))
    return phi_rational(y, model) * dlog


def free_energy_approx(y: float, u: float, model: RationalModel = TABLE_I) -> float:
    """Approximation f_u ~ f_u^(1)(y) * phi_rm(y)."""
    return single_round_trip(y, u) * phi_rational(y, model)


def free_energy_approx_dy(y: float, u: float, model: RationalModel = TABLE_I) -> float:
    return (single_round_trip_dy(y, u) * phi_rational(y, model)
            + single_round_trip(y, u) * phi_rational_dy(y, model))


def phi_u(y: float, u: float, f_exact: float) -> float:
    """Ratio of an exact free energy to the single round-trip term at (y, u)."""
    return f_exact / single_round_trip(y, u)
