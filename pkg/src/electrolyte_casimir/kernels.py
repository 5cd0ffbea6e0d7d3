"""Zero-frequency TM reflection kernels of a sphere in the plane-wave basis.

Matrix elements between projected wave vectors k, k' enclosing the angle phi::

    <k'|R|k> = -(2 pi R / k') sum_{l>=1} w_l (2 R^2 k k' (1 + cos phi))^l / (2l)!

with w_l = l/(l+1) for a dielectric sphere in an electrolyte and w_l = 1 for a
metallic sphere in vacuum.  Writing rho = 2 R sqrt(k k') |cos(phi/2)| the sum
has the closed forms

    dielectric:  cosh(rho) - 2 sinh(rho)/rho + 2 (cosh(rho) - 1)/rho^2
    metal:       cosh(rho) - 1

and its azimuthal Fourier coefficients are

    S_m = sum_{l>=max(1,m)} w_l (R^2 k k')^l / ((l+m)! (l-m)!)

(for the metal, I_2m(2 R sqrt(k k')) - delta_m0).  Every value returned here
carries the factor exp(-R (k + k')), which keeps it bounded by one.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import gammaln

SERIES_CAP = 10_000
# truncation in exponent units: contributions below exp(-EXP_CUT) are dropped
EXP_CUT = 45.0


class AccuracyError(RuntimeError):
    """A series or truncated sum failed to converge within its cap."""


class KernelVariant(str, enum.Enum):
    DIELECTRIC = "dielectric-in-electrolyte"
    METAL = "metal-in-vacuum"

    @classmethod
    def parse(cls, value) -> "KernelVariant":
        if isinstance(value, cls):
            return value
        aliases = {"dielectric": cls.DIELECTRIC, "metal": cls.METAL}
        if value in aliases:
            return aliases[value]
        return cls(value)

    def weight(self, ell):
        ell = np.asarray(ell, dtype=float)
        if self is KernelVariant.METAL:
            return np.ones_like(ell)
        return ell / (ell + 1.0)


def _small_rho_coefficients(variant: KernelVariant, nterms: int = 24) -> np.ndarray:
    ell = np.arange(1, nterms)
    return variant.weight(ell) * np.exp(-gammaln(2 * ell + 1))


_SMALL = {v: _small_rho_coefficients(v) for v in KernelVariant}
_RHO_SERIES = 2.0


def angular_sum_scaled(rho, s, variant=KernelVariant.DIELECTRIC):
    """exp(-s) * sum_l w_l rho^(2l)/(2l)!, elementwise; requires 0 <= rho <= s."""
    variant = KernelVariant.parse(variant)
    rho = np.asarray(rho, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), rho.shape)
    out = np.empty(rho.shape)
    small = rho < _RHO_SERIES
    if small.any():
        r2 = rho[small] ** 2
        acc = np.zeros_like(r2)
        for c in _SMALL[variant][::-1]:
            acc = (acc + c) * r2
        out[small] = acc * np.exp(-s[small])
    big = ~small
    if big.any():
        r, sb = rho[big], s[big]
        ep, em, e0 = np.exp(r - sb), np.exp(-r - sb), np.exp(-sb)
        if variant is KernelVariant.METAL:
            out[big] = 0.5 * ep + 0.5 * em - e0
        else:
            ir = 1.0 / r
            out[big] = (0.5 * ep * (1.0 - 2.0 * ir + 2.0 * ir * ir)
                        + 0.5 * em * (1.0 + 2.0 * ir + 2.0 * ir * ir)
                        - 2.0 * e0 * ir * ir)
    return out


def _series(log_x, m, s, variant, series_tol, twol):
    """Sum of w_l exp(l log_x - log((l+m)!(l-m)!) - s) from l = max(1, m).

    With ``twol`` the denominator is (2l)! instead (angular form).  Terms are
    log-concave in l, so summation stops once they decrease and the current
    term is below ``series_tol`` times the largest one.
    """
    log_tol = math.log(series_tol)
    total = 0.0
    peak = prev = -math.inf
    for ell in range(max(1, m), SERIES_CAP + 1):
        if twol:
            lt = ell * log_x - gammaln(2 * ell + 1) - s
        else:
            lt = ell * log_x - gammaln(ell + m + 1) - gammaln(ell - m + 1) - s
        w = 1.0 if variant is KernelVariant.METAL else ell / (ell + 1.0)
        total += w * math.exp(lt)
        peak = max(peak, lt)
        if lt < prev and lt - peak < log_tol:
            return total
        prev = lt
    raise AccuracyError(f"kernel series did not converge within l <= {SERIES_CAP}")


def reflection_kernel_angular(k, kp, phi, R, variant=KernelVariant.DIELECTRIC,
                              series_tol=1e-15):
    """exp(-R(k+k')) <k'|R|k> for the angle phi between k and k', by direct summation."""
    variant = KernelVariant.parse(variant)
    if not (k > 0 and kp > 0 and R > 0):
        raise ValueError("k, k' and R must be positive")
    x = 2.0 * R * R * k * kp * (1.0 + math.cos(phi))
    s = R * (k + kp)
    if x <= 0.0:
        return 0.0
    val = _series(math.log(x), 0, s, variant, series_tol, twol=True)
    return -2.0 * math.pi * R / kp * val


def mode_sum_series(m, k, kp, R, variant=KernelVariant.DIELECTRIC, series_tol=1e-15):
    """exp(-R(k+k')) S_m(k, k') summed term by term (reference implementation)."""
    variant = KernelVariant.parse(variant)
    m = abs(int(m))
    x = R * R * k * kp
    return _series(math.log(x), m, R * (k + kp), variant, series_tol, twol=False)


def reflection_kernel_mode(m, k, kp, R, variant=KernelVariant.DIELECTRIC, series_tol=1e-15):
    """m-th azimuthal Fourier coefficient of :func:`reflection_kernel_angular`."""
    if not (k > 0 and kp > 0 and R > 0):
        raise ValueError("k, k' and R must be positive")
    return -2.0 * math.pi * R / kp * mode_sum_series(m, k, kp, R, variant, series_tol)


def _nphi_for(g, mmax):
    """Angular sample count free of aliasing for modes 0..mmax.

    Fourier coefficients of exp(g (cos(phi/2) - 1)) fall off like exp(-2 m^2/g).
    """
    alias = np.sqrt(0.5 * EXP_CUT * g)
    need = np.maximum(2 * mmax + 2, mmax + alias + 2)
    return (2 ** np.ceil(np.log2(np.maximum(need, 8)))).astype(np.int64)


def _half_window(g, nphi):
    """Number of samples n >= 0 with non-negligible kernel, capped at nphi/2."""
    g = np.asarray(g, dtype=float)
    c = 1.0 - EXP_CUT / np.maximum(g, 1e-300)
    phiw = np.where(c > -1.0, 2.0 * np.arccos(np.clip(c, -1.0, 1.0)), 2.0 * np.pi)
    nw = np.ceil(phiw / (2.0 * np.pi / nphi)).astype(np.int64) + 1
    return np.minimum(nw, nphi // 2)


def mode_sums(g, s, m_lo, m_hi, variant=KernelVariant.DIELECTRIC):
    """exp(-s) S_m for m in [m_lo, m_hi) at many (g, s) pairs, g = 2 R sqrt(k k').

    The angular closed form is sampled on an equispaced grid in phi and the
    cosine coefficients are formed by the trapezoidal rule.  Only samples
    where the kernel is above exp(-EXP_CUT) times its maximum are evaluated.
    Returns an array of shape (len(g), m_hi - m_lo).
    """
    variant = KernelVariant.parse(variant)
    g = np.asarray(g, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros((g.size, m_hi - m_lo))
    if g.size == 0:
        return out
    nphi = _nphi_for(g, m_hi - 1)
    nw = _half_window(g, nphi)
    ms = np.arange(m_lo, m_hi)
    for n in np.unique(nphi):
        sel = np.flatnonzero(nphi == n)
        # bucket by window size to avoid evaluating far-away samples
        width = nw[sel]
        edges = np.unique(np.minimum(2 ** np.ceil(np.log2(np.maximum(width, 1))), n // 2))
        lo = 0
        for top in edges:
            sub = sel[(width <= top) & (width > lo)]
            lo = top
            if sub.size == 0:
                continue
            top = int(top)
            idx = np.arange(top + 1)
            phi = 2.0 * np.pi * idx / n
            wts = np.full(top + 1, 2.0 / n)
            wts[0] = 1.0 / n
            if top == n // 2:
                wts[-1] = 1.0 / n
            rho = g[sub, None] * np.cos(0.5 * phi)[None, :]
            val = angular_sum_scaled(np.abs(rho), s[sub, None], variant)
            table = np.cos(np.outer(phi, ms)) * wts[:, None]
            out[sub] = val @ table
    return out
