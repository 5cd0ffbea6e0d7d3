"""Exact evaluation of the free energy from the round-trip operator.

The round-trip operator M = R1 T12 R2 T21 is block diagonal in the azimuthal
index m.  For each m the reflection operators act on functions of the radial
wave vector k, with a kernel built from :mod:`kernels`.  In the measure dk and
after a similarity transform, each sphere contributes a symmetric
positive-semidefinite operator

    A_i(k, k') = R_i exp(-k L / 2) S_m(k, k'; R_i) exp(-k' L / 2)

where S_m carries the factor exp(-R_i (k + k')) and L is the surface distance.
Then M_m is similar to A_1 A_2 and ``log det(1 - M_m)`` is evaluated through
a Cholesky factorization of a symmetric matrix:

* plane and sphere (u = 0): the plane reflects specularly, so M_m is the
  single operator R exp(-k L) S_m exp(-k' L);
* equal spheres: M_m = A^2 and log det(1 - A^2) = log det(1 - A) + log det(1 + A);
* unequal spheres: A_2 (smaller sphere) is diagonalized on a coarse grid,
  A_2 = V diag(lam) V^T, and C = lam^(1/2) V^T A_1 V lam^(1/2) is formed with
  A_1 resolved on a finer grid, as the larger sphere's kernel is narrower.

Radial integrals use the trapezoidal rule in q = sqrt(k) with a smoothing map
near q = 0.  Since S_m(q, q') is concentrated around |q - q'| < 1/sqrt(R), only
a band of matrix entries is evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse

from .geometry import ReducedGeometry
from .kernels import AccuracyError, KernelVariant, mode_sums

# entries with R (q - q')^2 above this are below exp(-BAND) and are dropped
BAND = 40.0
MODE_CHUNK = 32
MODE_CAP = 20_000
# trapezoid spacing in units of the kernel width 1/sqrt(2 R)
COARSE_SPACING = 0.5
FINE_SPACING = 0.8
# relative eigenvalue cut in the smaller sphere's operator
EIG_CUT = 1e-15
TRIM = 1e-32
# below this tr(M_0) all modes are weak and log-dets use eigenvalues
SMALL_TRACE = 0.05


class DiscretizationError(AccuracyError):
    """1 - M is not positive definite on the chosen grid (under-resolved)."""


@dataclass(frozen=True)
class AccuracySpec:
    """Numerical settings of the exact solver.

    Parameters
    ----------
    quad_order : int
        Minimum number of radial nodes per grid.  The node spacing is chosen
        from the kernel widths; ``quad_order`` only refines it further.
    mode_tol : float
        Mode sum stops after two consecutive modes below this fraction of
        the running total.
    series_tol : float
        Relative truncation of the multipole series (used by the reference
        kernels; the production path evaluates closed forms).
    target_rel_err : float
        Sets the radial cutoff: contributions below roughly this fraction
        of the result are discarded.
    spacing : float
        Multiplier on the default node spacing.
    estimate_error : bool
        Repeat the calculation on a grid 1.25 times coarser and report the
        difference as the discretization error.
    """

    quad_order: int = 80
    mode_tol: float = 1e-10
    series_tol: float = 1e-15
    target_rel_err: float = 1e-9
    spacing: float = 1.0
    estimate_error: bool = True

    def __post_init__(self):
        if int(self.quad_order) != self.quad_order or self.quad_order < 4:
            raise ValueError(f"quad_order must be an integer >= 4, got {self.quad_order}")
        for name in ("mode_tol", "series_tol", "target_rel_err"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")


@dataclass(frozen=True, eq=False)
class ModeMatrix:
    """Symmetric round-trip matrix of one azimuthal mode.

    ``nodes`` and ``weights`` are the radial wave vectors k and their dk
    weights of the grid the matrix lives on.  For equal spheres the matrix
    is stored through its symmetric square root (``squared=True``).  For
    unequal spheres the rows refer to the retained eigenvectors of the
    smaller sphere's operator on ``nodes`` rather than to the nodes.
    """

    m: int
    nodes: np.ndarray
    weights: np.ndarray
    data: np.ndarray
    squared: bool = False

    @cached_property
    def entries(self) -> np.ndarray:
        return self.data @ self.data if self.squared else self.data

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def logdet(self, small: bool = False) -> float:
        """log det(1 - M) by Cholesky factorization.

        With ``small`` the eigenvalues are used instead and summed through
        log1p.  This keeps full relative accuracy when every eigenvalue is
        tiny, where logs of Cholesky diagonals close to 1 would cancel.
        """
        if self.size == 0:
            return 0.0
        if small:
            lam = scipy.linalg.eigvalsh(self.data, check_finite=False)
            if self.squared:
                lam = lam * lam
            if lam.max() >= 1.0:
                raise DiscretizationError("round-trip eigenvalue at or above 1; under-resolved")
            return float(np.sum(np.log1p(-np.clip(lam, 0.0, None))))
        eye = np.eye(self.size)
        if self.squared:
            return _chol_logdet(eye - self.data) + _chol_logdet(eye + self.data)
        return _chol_logdet(eye - self.data)

    def traces(self, rmax: int) -> np.ndarray:
        """tr(M^r) for r = 1..rmax."""
        out = np.zeros(rmax)
        if self.size == 0 or rmax == 0:
            return out
        x = self.data
        if self.squared:
            x = self.entries
        p = x
        out[0] = np.trace(x)
        for r in range(1, rmax):
            # tr(X^(r+1)) = sum(X^r * X) for symmetric X
            out[r] = np.sum(p * x)
            if r + 1 < rmax:
                p = p @ x
        return out


@dataclass(frozen=True)
class EnergyResult:
    """Reduced free energy with its provenance.

    ``method`` is one of ``"exact"``, ``"eq10"`` or ``"eq16"``.  ``error`` is
    an absolute error estimate (NaN when not estimated).  ``round_trips``
    holds f^(r) for r = 1, 2, ... when requested.
    """

    f: float
    error: float
    method: str
    modes: int = 0
    nodes: tuple[int, int] = (0, 0)
    round_trips: tuple[float, ...] = field(default=())

    @property
    def rel_error(self) -> float:
        return abs(self.error / self.f) if self.f else math.inf


def _chol_logdet(a: np.ndarray) -> float:
    try:
        c = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DiscretizationError(
            "1 - M is not positive definite; the discretization is under-resolved"
        ) from exc
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def radial_nodes(q_max: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal nodes and dq weights on [0, q_max] with a tanh smoothing map.

    The map q = t - a tanh(t/a), a = 3h, has vanishing first and second
    derivatives at t = 0, so the rule stays spectrally accurate for
    integrands that are smooth in q but not periodic at the origin.
    """
    a = 3.0 * h
    n = int(math.ceil((q_max + a) / h))
    t = h * np.arange(1, n + 1)
    th = np.tanh(t / a)
    return t - a * th, h * th * th


class _Band:
    """Entries (i, j) of a kernel matrix with R (qa_i - qb_j)^2 < BAND, in CSR order."""

    def __init__(self, R: float, qa: np.ndarray, qb: np.ndarray):
        self.R = R
        self.shape = (qa.size, qb.size)
        mask = R * (qa[:, None] - qb[None, :]) ** 2 < BAND
        self.i, self.j = np.nonzero(mask)
        self.indptr = np.concatenate(([0], np.cumsum(mask.sum(axis=1))))
        self.g = 2.0 * R * qa[self.i] * qb[self.j]
        self.s = R * (qa[self.i] ** 2 + qb[self.j] ** 2)
        self.table = None
        self.m_lo = 0

    def load(self, m_lo: int, m_hi: int, variant: KernelVariant) -> None:
        self.table = mode_sums(self.g, self.s, m_lo, m_hi, variant)
        self.m_lo = m_lo

    def values(self, m: int, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """R * left_i * S_m(i, j) * right_j on the band."""
        return self.R * self.table[:, m - self.m_lo] * left[self.i] * right[self.j]

    def dense(self, m, left, right) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.i, self.j] = self.values(m, left, right)
        return out

    def sparse(self, m, left, right):
        return scipy.sparse.csr_matrix((self.values(m, left, right), self.j, self.indptr),
                                       shape=self.shape)


class _Discretization:
    """Grids and kernel bands for one geometry; yields a ModeMatrix per m."""

    def __init__(self, red: ReducedGeometry, variant: KernelVariant, acc: AccuracySpec,
                 coarsen: float = 1.0):
        self.red = red
        self.variant = variant
        L = red.L
        # margin for the polynomial growth of the kernel in front of exp(-k L)
        K = math.log(1.0 / acc.target_rel_err) + 10.0
        self.kind = "plane" if red.plane else "pair"
        R_big, R_small = red.radii
        if red.plane:
            # each node carries exp(-k L) on both sides
            K = 0.5 * K
        elif abs(R_big - R_small) <= 1e-12 * R_big:
            self.kind = "equal"
        q_max = math.sqrt(K / L)
        spacing = acc.spacing * coarsen
        min_nodes = max(4, int(round(acc.quad_order / coarsen)))

        def grid(R, base):
            h = base * spacing / math.sqrt(2.0 * max(R, L))
            h = min(h, q_max / max(min_nodes - 3, 1))
            return radial_nodes(q_max, h), h

        (qc, wqc), hc = grid(R_small, COARSE_SPACING)
        self.qc, self.kc, self.wc = qc, qc * qc, 2.0 * qc * wqc
        self.dc = np.sqrt(self.wc) * np.exp(-0.5 * self.kc * L)
        self.bands = [_Band(R_small, qc, qc)]
        self.fine = False
        if self.kind == "plane":
            self.dc = np.sqrt(self.wc) * np.exp(-self.kc * L)
        elif self.kind == "pair":
            (qf, wqf), hf = grid(R_big, FINE_SPACING)
            if hf < hc:
                self.fine = True
            else:
                qf, wqf = qc, wqc
            self.qf, self.kf, self.wf = qf, qf * qf, 2.0 * qf * wqf
            self.df = np.sqrt(self.wf) * np.exp(-0.5 * self.kf * L)
            self.bands.append(_Band(R_small, qf, qc))  # small sphere, fine x coarse
            self.bands.append(_Band(R_big, qf, qf))
        self.m_hi = 0

    @property
    def node_counts(self) -> tuple[int, int]:
        return (self.qc.size, self.qf.size if self.kind == "pair" else self.qc.size)

    def ensure(self, m: int) -> None:
        if m < self.m_hi:
            return
        lo = m
        hi = m + MODE_CHUNK
        for band in self.bands:
            band.load(lo, hi, self.variant)
        self.m_hi = hi

    def matrix(self, m: int) -> ModeMatrix:
        self.ensure(m)
        nodes, weights = self.kc, self.wc
        if self.kind == "plane":
            a = self.bands[0].dense(m, self.dc, self.dc)
            return ModeMatrix(m, nodes, weights, _sym(a))
        if self.kind == "equal":
            a = self.bands[0].dense(m, self.dc, self.dc)
            return ModeMatrix(m, nodes, weights, _sym(a), squared=True)
        cc, fc, ff = self.bands
        a2 = _sym(cc.dense(m, self.dc, self.dc))
        diag = np.diag(a2)
        top = diag.max() if diag.size else 0.0
        if not top > 0.0:
            return ModeMatrix(m, nodes, weights, np.zeros((0, 0)))
        # A_2 is positive semidefinite, so |a_ij| <= sqrt(a_ii a_jj) and rows
        # with a negligible diagonal can be dropped before diagonalizing
        act = np.flatnonzero(diag > TRIM * top)
        lam, sub = scipy.linalg.eigh(a2[np.ix_(act, act)], check_finite=False)
        keep = lam > EIG_CUT * lam[-1]
        lam, sub = lam[keep], sub[:, keep]
        vec = np.zeros((diag.size, lam.size))
        vec[act] = sub
        if self.fine:
            b = fc.sparse(m, self.df, self.dc)
            a1 = ff.sparse(m, self.df, self.df)
            f = b @ (vec / np.sqrt(lam))
        else:
            a1 = ff.dense(m, self.df, self.df)
            f = vec * np.sqrt(lam)
        c = f.T @ (a1 @ f)
        return ModeMatrix(m, nodes, weights, _sym(c))


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _check_inputs(red: ReducedGeometry, acc: AccuracySpec) -> None:
    if not isinstance(red, ReducedGeometry):
        raise TypeError("geometry must be a ReducedGeometry")
    if not red.y > 1.0:
        raise ValueError(f"y must exceed 1, got {red.y}")
    if not isinstance(acc, AccuracySpec):
        raise TypeError("acc must be an AccuracySpec")


def build_mode_matrix(m: int, red: ReducedGeometry, variant=KernelVariant.DIELECTRIC,
                      acc: AccuracySpec | None = None) -> ModeMatrix:
    """Discretized symmetric round-trip matrix for azimuthal mode ``m``."""
    acc = AccuracySpec() if acc is None else acc
    _check_inputs(red, acc)
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    return _Discretization(red, KernelVariant.parse(variant), acc).matrix(int(m))


def _mode_loop(disc: _Discretization, acc: AccuracySpec, rmax: int):
    """Sum -log det(1 - M_m) and tr(M_m^r) over m with multiplicity 2 for m > 0.

    Returns (f, traces, modes, tail) where tail is the last mode contribution.
    """
    f = 0.0
    traces = np.zeros(rmax)
    quiet = 0
    m = 0
    last = 0.0
    while True:
        if m > MODE_CAP:
            raise AccuracyError(f"mode sum did not converge within m <= {MODE_CAP}")
        mat = disc.matrix(m)
        if m == 0:
            small = mat.traces(1)[0] < SMALL_TRACE
        mult = 1.0 if m == 0 else 2.0
        contrib = -0.5 * mult * mat.logdet(small)
        if rmax:
            tr = mat.traces(rmax)
            if tr[0] < -1e-12 * max(traces[0], 1e-300):
                raise DiscretizationError(f"negative trace in mode {m}")
            traces += mult * tr
        f += contrib
        last = contrib
        quiet = quiet + 1 if abs(contrib) < acc.mode_tol * abs(f) else 0
        if quiet >= 2 and m >= 1:
            return f, traces, m + 1, abs(last)
        m += 1


def _solve(red, variant, acc, rmax, coarsen=1.0):
    disc = _Discretization(red, variant, acc, coarsen)
    f, traces, modes, tail = _mode_loop(disc, acc, rmax)
    return f, traces, modes, tail, disc.node_counts


def free_energy_exact(red: ReducedGeometry, variant=KernelVariant.DIELECTRIC,
                      acc: AccuracySpec | None = None, rmax: int = 0) -> EnergyResult:
    """f_u = -sum_m (2 - delta_m0) log det(1 - M_m) / 2.

    With ``rmax > 0`` the round-trip terms f^(r), r <= rmax, are returned in
    ``round_trips`` from the same matrices.
    """
    acc = AccuracySpec() if acc is None else acc
    _check_inputs(red, acc)
    variant = KernelVariant.parse(variant)
    f, traces, modes, tail, counts = _solve(red, variant, acc, rmax)
    err = math.nan
    if acc.estimate_error:
        f2 = _solve(red, variant, acc, 0, coarsen=1.25)[0]
        err = abs(f - f2) + 2.0 * tail
    rts = tuple(float(t / (2 * r)) for r, t in enumerate(traces, start=1))
    return EnergyResult(f=f, error=err, method="exact", modes=modes, nodes=counts,
                        round_trips=rts)


def round_trip_contribution(r: int, red: ReducedGeometry, variant=KernelVariant.DIELECTRIC,
                            acc: AccuracySpec | None = None) -> float:
    """f^(r) = sum_m (2 - delta_m0) tr(M_m^r) / (2 r)."""
    if int(r) != r or r < 1:
        raise ValueError(f"r must be an integer >= 1, got {r}")
    acc = AccuracySpec() if acc is None else acc
    acc = replace(acc, estimate_error=False)
    return free_energy_exact(red, variant, acc, rmax=int(r)).round_trips[-1]
