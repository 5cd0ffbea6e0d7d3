"""Sampling of phi_u = f_u / f_u^(1) and minimax fitting of the rational model.

The model phi_rm(y) = prod_k (E + nu_k)/(E + mu_k), E = exp(y - 1) - 1, is fitted
to minimize max_i |phi_rm(y_i)/phi_i - 1|.  Roots are parametrized by their
logarithms, so they stay positive.  A least-squares fit provides the
starting point for a direct minimax solve (minimize t subject to
|r_i| <= t) with SLSQP.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from . import analytic, geometry
from .analytic import TABLE_I, RationalModel
from .kernels import KernelVariant
from .scattering import AccuracySpec, free_energy_exact

# positions (log10) of the extra root pairs added when raising the order
_NEUTRAL_LOG10 = (-2.5, -0.5, -3.5, 0.5, -1.5, 1.5)


class FitError(RuntimeError):
    """Minimax fit did not converge; ``report`` holds the best model found."""

    def __init__(self, message: str, report: "FitReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class PhiSample:
    """phi at (y, u) with its estimated relative error ``err``."""

    y: float
    u: float
    phi: float
    err: float

    def __post_init__(self):
        if not self.y > 1.0:
            raise ValueError(f"y must exceed 1, got {self.y}")


@dataclass(frozen=True)
class FitReport:
    model: RationalModel
    grid: dict
    achieved_eps: float
    reference_u: float
    converged: bool = True
    deviations: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "order": self.model.order,
            "nu": list(self.model.nu),
            "mu": list(self.model.mu),
            "achieved_eps": self.achieved_eps,
            "reference_u": self.reference_u,
            "grid": self.grid,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        model = RationalModel(d["nu"], d["mu"], max_deviation=d["achieved_eps"])
        return cls(model=model, grid=d.get("grid", {}), achieved_eps=d["achieved_eps"],
                   reference_u=d.get("reference_u", math.nan),
                   converged=d.get("converged", True))


def log_grid(lo: float = 1e-3, hi: float = 1e2, count: int = 31) -> np.ndarray:
    """y values with y - 1 log-spaced in [lo, hi]."""
    return 1.0 + np.logspace(math.log10(lo), math.log10(hi), count)


def describe_grid(ys: Sequence[float]) -> dict:
    d = np.asarray(ys, dtype=float) - 1.0
    return {"variable": "y-1", "min": float(d.min()), "max": float(d.max()),
            "count": int(d.size), "spacing": "log"}


def sample_phi(u_star: float, grid: Iterable[float], acc: Optional[AccuracySpec] = None,
               variant=KernelVariant.DIELECTRIC) -> list[PhiSample]:
    """Exact phi at each y of ``grid`` for radius parameter ``u_star``."""
    acc = AccuracySpec() if acc is None else acc
    out = []
    for y in grid:
        y = float(y)
        if not y > 1.0:
            raise ValueError(f"grid values must exceed 1, got {y}")
        res = free_energy_exact(geometry.from_reduced(y, u_star), variant, acc)
        f1 = analytic.single_round_trip(y, u_star)
        err = res.rel_error if math.isfinite(res.error) else 0.0
        out.append(PhiSample(y=y, u=u_star, phi=res.f / f1, err=err))
    return out


def deviations(model: RationalModel, samples: Sequence[PhiSample]) -> np.ndarray:
    """Relative deviations phi_rm / phi - 1 at every sample."""
    ys = np.array([s.y for s in samples])
    phis = np.array([s.phi for s in samples])
    return analytic.phi_rational(ys, model) / phis - 1.0


def max_deviation(model: RationalModel, samples: Sequence[PhiSample]) -> float:
    return float(np.max(np.abs(deviations(model, samples))))


def interlaced(model: RationalModel) -> bool:
    """True when nu_k > mu_k after sorting both sets of roots."""
    return all(n > m for n, m in zip(sorted(model.nu), sorted(model.mu)))


def _seed(n: int, samples) -> np.ndarray:
    if n == 2:
        nu, mu = list(TABLE_I.nu), list(TABLE_I.mu)
    elif n == 1:
        nu, mu = [analytic.ZETA3 * 0.01], [0.01]
    else:
        base = fit_rational_model(samples, 2).model
        nu, mu = list(base.nu), list(base.mu)
        for p in _NEUTRAL_LOG10[: n - 2]:
            nu.append(10.0 ** p)
            mu.append(10.0 ** p)
    return np.log(np.concatenate([nu, mu]))


def _residuals(p, e, phis, n):
    # exploratory optimizer steps must not overflow the roots
    p = np.clip(p, -60.0, 60.0)
    nu, mu = np.exp(p[:n]), np.exp(p[n:])
    ratio = np.prod((e[:, None] + nu) / (e[:, None] + mu), axis=1)
    r = ratio / phis - 1.0
    jac = np.hstack([(ratio / phis)[:, None] * nu / (e[:, None] + nu),
                     -(ratio / phis)[:, None] * mu / (e[:, None] + mu)])
    return r, jac


def fit_rational_model(samples: Sequence[PhiSample], n: int,
                       init: Optional[RationalModel] = None) -> FitReport:
    """Minimax fit of an order-``n`` rational model to ``samples``.

    For n > 2 without ``init`` the optimal n = 2 model is extended by pairs
    with nu = mu, which leave it unchanged, so the achieved deviation never
    exceeds the n = 2 result.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    if not samples:
        raise ValueError("no samples")
    d = np.array([s.y for s in samples]) - 1.0
    if d.min() > 1e-2 * (1 + 1e-9) or d.max() < 10.0 * (1 - 1e-9):
        raise ValueError("samples must cover y - 1 <= 1e-2 and y - 1 >= 10")
    if init is not None:
        if init.order != n:
            raise ValueError("init model has the wrong order")
        p0 = np.log(np.concatenate([init.nu, init.mu]))
    else:
        p0 = _seed(n, samples)
    e = np.expm1(d)
    phis = np.array([s.phi for s in samples])

    def peak(p):
        return float(np.max(np.abs(_residuals(p, e, phis, n)[0])))

    ls = least_squares(lambda p: _residuals(p, e, phis, n)[0], p0,
                       jac=lambda p: _residuals(p, e, phis, n)[1], method="lm",
                       xtol=1e-14, ftol=1e-14)
    best = min((p0, ls.x), key=peak)
    z0 = np.append(best, peak(best))

    def cons(z):
        r = _residuals(z[:-1], e, phis, n)[0]
        return np.concatenate([z[-1] - r, z[-1] + r])

    def cons_jac(z):
        jac = _residuals(z[:-1], e, phis, n)[1]
        one = np.ones((len(e), 1))
        return np.vstack([np.hstack([-jac, one]), np.hstack([jac, one])])

    sol = minimize(lambda z: z[-1], z0, jac=lambda z: np.eye(z.size)[-1], method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"maxiter": 500, "ftol": 1e-15})
    cand = sol.x[:-1]
    if np.all(np.isfinite(cand)) and peak(cand) < peak(best):
        best = cand
    eps = peak(best)
    model = RationalModel(np.exp(best[:n]), np.exp(best[n:]), max_deviation=eps,
                          label=f"fit-n{n}")
    us = {s.u for s in samples}
    report = FitReport(model=model, grid=describe_grid([s.y for s in samples]),
                       achieved_eps=eps, reference_u=us.pop() if len(us) == 1 else math.nan,
                       converged=bool(sol.success),
                       deviations=tuple(deviations(model, samples)))
    if not math.isfinite(eps):
        raise FitError("minimax fit failed", report)
    return report


def validate_model(model: RationalModel, y_grid: Iterable[float], u_grid: Iterable[float],
                   acc: Optional[AccuracySpec] = None, samples: Optional[dict] = None) -> float:
    """Maximum of |phi_rm / phi_u - 1| over the product grid.

    ``samples`` may map u to precomputed :class:`PhiSample` lists; missing
    values of u are computed with :func:`sample_phi`.
    """
    y_grid = list(y_grid)
    u_grid = list(u_grid)
    if not y_grid or not u_grid:
        raise ValueError("grids must be non-empty")
    worst = 0.0
    for u in u_grid:
        pts = (samples or {}).get(u)
        if pts is None:
            pts = sample_phi(u, y_grid, acc)
        worst = max(worst, max_deviation(model, pts))
    return worst
