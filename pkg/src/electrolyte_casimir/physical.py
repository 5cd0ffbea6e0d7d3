"""Physical units: free energy, entropy, force and validity warnings.

The free energy is F = -k_B T f_u and the entropy S = k_B f_u, so that
F = -T S holds identically.  The force is -dF/dL, so a negative value
means attraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from . import analytic
from .geometry import GeometryError, PhysicalGeometry, reduce

K_B = 1.380649e-23  # J/K, exact
DEFAULT_ELL_T = 1e-7  # m
SCREENING_FACTOR = 5.0


@dataclass(frozen=True)
class PhysicalConditions:
    """Temperature (K), Debye length and crossover distance (m)."""

    T: float
    debye_length: float
    ell_T: float = DEFAULT_ELL_T

    def __post_init__(self):
        for name in ("T", "debye_length", "ell_T"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class Energy:
    joules: float
    kT_units: float
    entropy: float  # J/K


def dimensional_free_energy(g: PhysicalGeometry, c: PhysicalConditions, f_u: float) -> Energy:
    """Free energy -k_B T f_u in joules and in units of k_B T, with the entropy k_B f_u.

    The geometry only enters through ``f_u``; it is accepted so that callers
    pass the configuration the value belongs to.
    """
    if not f_u >= 0.0:
        raise ValueError(f"f_u must be non-negative, got {f_u}")
    return Energy(joules=-K_B * c.T * f_u, kT_units=-f_u, entropy=K_B * f_u)


Evaluator = Callable[[float, float], float]


def _y_of_L(g: PhysicalGeometry, L: float):
    red = reduce(PhysicalGeometry(L=L, R1=g.R1, R2=g.R2, plane=g.plane))
    return red.y, red.u


def force(g: PhysicalGeometry, c: PhysicalConditions, evaluator: Optional[Evaluator] = None,
          derivative: Optional[Evaluator] = None) -> float:
    """Force -dF/dL in newtons; negative values are attractive.

    Parameters
    ----------
    evaluator : callable (y, u) -> f_u, optional
        Defaults to the rational-model approximation.  Used by the central
        finite difference with step h = max(1e-4 L, 1e-6 R_eff).
    derivative : callable (y, u) -> df_u/dy, optional
        When given (or when no evaluator is given) the force is computed
        analytically through dy/dL = (1 + u x) / R_eff.
    """
    red = reduce(g)
    if evaluator is None and derivative is None:
        derivative = analytic.free_energy_approx_dy
    if derivative is not None:
        dy_dL = (1.0 + red.u * red.x) / g.R_eff
        # F = -kT f, force = -dF/dL = kT df/dy dy/dL
        return K_B * c.T * derivative(red.y, red.u) * dy_dL
    h = max(1e-4 * g.L, 1e-6 * g.R_eff)
    if h >= g.L:
        raise GeometryError("finite-difference step reaches contact; L is too small")
    if g.L - h == g.L:
        raise GeometryError("finite-difference step underflows at this L")
    fp = evaluator(*_y_of_L(g, g.L + h))
    fm = evaluator(*_y_of_L(g, g.L - h))
    return K_B * c.T * (fp - fm) / (2.0 * h)


def validity_check(g: PhysicalGeometry, c: PhysicalConditions,
                   screening_factor: float = SCREENING_FACTOR) -> list[str]:
    """Warnings where the universal high-temperature result may not apply."""
    warnings = []
    if g.L < screening_factor * c.debye_length:
        warnings.append(
            f"screening: L = {g.L:.3g} m is below {screening_factor:g} Debye lengths "
            f"({screening_factor * c.debye_length:.3g} m)"
        )
    if g.L < c.ell_T:
        warnings.append(
            f"matsubara: L = {g.L:.3g} m is below ell_T = {c.ell_T:.3g} m; "
            "nonzero Matsubara frequencies are not negligible"
        )
    return warnings
