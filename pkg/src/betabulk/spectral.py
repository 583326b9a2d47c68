"""Sturm counting, bisection eigenvalues, scaling parameters and limit densities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import SymTridiagonal
from .errors import NumericalGuardError, OutsideBulkError, ParameterError

_EPS = np.finfo(float).eps


def sturm_counts(diag, off, x) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    ``diag`` has shape ``(..., k)``, ``off`` shape ``(..., k-1)`` and ``x``
    shape ``(..., L)``; leading axes broadcast.  ``diag=None`` means a zero
    diagonal.  Uses the pivot recursion ``d_l = (a_l - x) - e_{l-1}^2 / d_{l-1}``
    and counts negative pivots.  Zero pivots become ``-eps*(|a_l|+|x|+1)``.
    """
    off = np.asarray(off, dtype=float)
    x = np.asarray(x, dtype=float)
    k = off.shape[-1] + 1
    if diag is not None:
        diag = np.asarray(diag, dtype=float)[..., None, :]
    e2 = (off * off)[..., None, :]
    ax = np.abs(x)

    def pivot_fix(d, a):
        return np.where(d == 0.0, -_EPS * (np.abs(a) + ax + 1.0), d)

    a = 0.0 if diag is None else diag[..., 0]
    d = pivot_fix(a - x, a)
    count = (d < 0).astype(np.int64)
    # a pivot that overflows to -inf makes the next one exactly a - x
    with np.errstate(over="ignore", divide="ignore"):
        for i in range(1, k):
            a = 0.0 if diag is None else diag[..., i]
            d = pivot_fix((a - x) - e2[..., i - 1] / d, a)
            count += d < 0
    return count


def _check_offdiag(T: SymTridiagonal):
    if np.any(T.offdiag <= 0):
        raise ParameterError("off-diagonal entries must be strictly positive")


def sturm_count(T: SymTridiagonal, x: float) -> int:
    _check_offdiag(T)
    return int(sturm_counts(T.diag, T.offdiag, np.array([x]))[0])


def gershgorin(diag, off):
    """Per-matrix interval containing the spectrum (leading axes preserved)."""
    off = np.abs(np.asarray(off, dtype=float))
    pad = np.zeros(off.shape[:-1] + (1,))
    radius = np.concatenate([off, pad], -1) + np.concatenate([pad, off], -1)
    if diag is None:
        diag = np.zeros(radius.shape)
    diag = np.asarray(diag, dtype=float)
    return np.min(diag - radius, -1), np.max(diag + radius, -1)


def eigenvalues_by_index(diag, off, index, lo, hi, tol: float) -> np.ndarray:
    """Bisection for the ``index``-th smallest eigenvalue (0-based) of each matrix.

    ``index`` has shape ``(..., J)``; ``lo``/``hi`` brackets broadcast against it.
    Each result is the midpoint of a bracket of width at most ``tol``.
    """
    index = np.asarray(index)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), index.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), index.shape).copy()
    width = float(np.max(hi - lo)) if index.size else 0.0
    steps = max(0, math.ceil(math.log2(width / tol))) if width > tol else 0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = sturm_counts(diag, off, mid) <= index
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def eigenvalues(T: SymTridiagonal, lo: float | None = None, hi: float | None = None,
                tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues in ``(lo, hi]`` (default: whole spectrum), ascending."""
    _check_offdiag(T)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    g_lo, g_hi = gershgorin(T.diag, T.offdiag)
    g_lo, g_hi = float(g_lo) - tol, float(g_hi) + tol
    lo = g_lo if lo is None else lo
    hi = g_hi if hi is None else hi
    if not lo < hi:
        raise ParameterError("need lo < hi")
    c0, c1 = sturm_counts(T.diag, T.offdiag, np.array([np.nextafter(lo, np.inf),
                                                       np.nextafter(hi, np.inf)]))
    idx = np.arange(c0, c1)
    return eigenvalues_by_index(T.diag, T.offdiag, idx, max(lo, g_lo), min(hi, g_hi), tol)


def window_eigenvalues(diag, off, lo, hi, tol: float):
    """Eigenvalues in ``(lo, hi]`` for a batch of matrices (rows of ``off``).

    Returns a list with one ascending array per matrix.
    """
    off = np.asarray(off, dtype=float)
    R = off.shape[0]
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (R,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (R,))
    ends = np.stack([np.nextafter(lo, np.inf), np.nextafter(hi, np.inf)], -1)
    c = sturm_counts(diag, off, ends)
    nwin = c[:, 1] - c[:, 0]
    J = int(nwin.max()) if R else 0
    if J == 0:
        return [np.empty(0) for _ in range(R)]
    idx = c[:, :1] + np.arange(J)[None, :]
    valid = np.arange(J)[None, :] < nwin[:, None]
    idx = np.where(valid, idx, c[:, :1])
    vals = eigenvalues_by_index(diag, off, idx, lo[:, None], hi[:, None], tol)
    return [vals[r, :nwin[r]] for r in range(R)]


# -- scaling parameters -----------------------------------------------------

@dataclass(frozen=True)
class ScalingParams:
    beta: float
    n: int
    m: int
    mu: float
    n0: float
    n1: float
    m1: float
    n2: int
    kappa_cutoff: float
    edge_side: int

    @property
    def scale(self) -> float:
        """Factor ``4 sqrt(n0)`` mapping ``Lambda - mu`` to the Sine_beta scale."""
        return 4.0 * math.sqrt(self.n0)

    def Lambda(self, lam):
        return self.mu + np.asarray(lam, dtype=float) / self.scale


def n0_closed_form(n, m, mu):
    mu2 = mu * mu
    n0 = (2.0 * (m + n) * mu2 - (m - n) ** 2 - mu2 * mu2) / (4.0 * mu2) - 0.5
    n1 = (m - n - mu2) ** 2 / (4.0 * mu2)
    return n0, n1


def n0_from_density(n, m, mu):
    """``n0`` from the singular-value density display (cross-check only)."""
    s = sv_density(m / n, mu / math.sqrt(n))
    return math.pi ** 2 / 4.0 * n * s * s - 0.5


def scaling_params(beta: float, n: int, m: int, mu: float, kappa_cutoff: float = 1.0,
                   check: bool = True) -> ScalingParams:
    if m <= n:
        raise ParameterError("m must exceed n")
    if mu <= 0:
        raise ParameterError("mu must be positive")
    if beta <= 0:
        raise ParameterError("beta must be positive")
    n0, n1 = n0_closed_form(n, m, mu)
    if n0 <= 0:
        raise OutsideBulkError(f"center outside bulk: n0 = {n0:.6g} <= 0")
    if check:
        alt = n0_from_density(n, m, mu)
        if abs(alt - n0) > 1e-9 * max(abs(n0), 1.0):
            raise NumericalGuardError(f"n0 cross-check failed: {n0!r} vs {alt!r}")
    n2 = math.floor(n0 - kappa_cutoff * max(n1 ** (1.0 / 3.0), 1.0))
    edge = 1 if mu * mu > m - n else -1
    return ScalingParams(beta, n, m, mu, n0, n1, m - n + n1, n2, kappa_cutoff, edge)


# -- limiting densities -----------------------------------------------------

def mp_edges(gamma: float):
    a = math.sqrt(gamma) - 1.0
    b = math.sqrt(gamma) + 1.0
    return a, b


def mp_density(gamma: float, x):
    """Marchenko-Pastur density for aspect ratio ``gamma >= 1``."""
    if gamma < 1:
        raise ParameterError("gamma must be at least 1")
    a, b = mp_edges(gamma)
    x = np.asarray(x, dtype=float)
    inside = (x >= a * a) & (x <= b * b) & (x > 0)
    xs = np.where(inside, x, 1.0)
    val = np.sqrt(np.clip((xs - a * a) * (b * b - xs), 0.0, None)) / (2.0 * math.pi * xs)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_cdf(gamma: float, x, grid: int = 4097):
    """Marchenko-Pastur CDF by quadrature in the angle ``x = c - r cos(theta)``."""
    a, b = mp_edges(gamma)
    c, r = (a * a + b * b) / 2.0, (b * b - a * a) / 2.0
    theta = np.linspace(0.0, math.pi, grid)
    xt = c - r * np.cos(theta)
    if a == 0.0:
        # c == r: sin^2 / (1 - cos) = 1 + cos
        integrand = r * (1.0 + np.cos(theta)) / (2.0 * math.pi)
    else:
        integrand = (r * np.sin(theta)) ** 2 / (2.0 * math.pi * xt)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(theta))])
    cum /= cum[-1]
    return np.interp(np.asarray(x, dtype=float), xt, cum, left=0.0, right=1.0)


def sv_density(gamma: float, x):
    x = np.asarray(x, dtype=float)
    out = 2.0 * np.abs(x) * mp_density(gamma, x * x)
    return float(out) if out.ndim == 0 else out


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + (x * np.sqrt(4.0 - x * x) / 2.0 + 2.0 * np.arcsin(x / 2.0)) / (2.0 * math.pi)


# -- counting functions -----------------------------------------------------

@dataclass
class CountingSample:
    lambda_grid: np.ndarray
    counts: np.ndarray
    replica_id: int = 0
    source: str = "matrix"
    meta: dict = field(default_factory=dict)


def count_scaled(scaled, lambda_grid) -> np.ndarray:
    """Counting function: ``#(0, lam]`` for ``lam > 0`` and ``-#(lam, 0]`` for ``lam < 0``."""
    scaled = np.sort(np.asarray(scaled, dtype=float))
    lam = np.asarray(lambda_grid, dtype=float)
    upto = np.searchsorted(scaled, lam, side="right")
    zero = np.searchsorted(scaled, 0.0, side="right")
    return (upto - zero).astype(np.int64)


def counting_function(points, params: ScalingParams, lambda_grid, replica_id: int = 0,
                      source: str = "matrix") -> CountingSample:
    scaled = params.scale * (np.asarray(points, dtype=float) - params.mu)
    grid = np.asarray(lambda_grid, dtype=float)
    return CountingSample(grid, count_scaled(scaled, grid), replica_id, source)


def hermite_scale(n: int, mu: float) -> float:
    if abs(mu) >= 2.0 * math.sqrt(n):
        raise OutsideBulkError("Hermite center must satisfy |mu| < 2 sqrt(n)")
    return math.sqrt(4.0 * n - mu * mu)


def hermite_scaling(points, n: int, mu: float, lambda_grid, replica_id: int = 0) -> CountingSample:
    scale = hermite_scale(n, mu)
    grid = np.asarray(lambda_grid, dtype=float)
    scaled = scale * (np.asarray(points, dtype=float) - mu)
    return CountingSample(grid, count_scaled(scaled, grid), replica_id, "matrix")
