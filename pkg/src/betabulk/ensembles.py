"""Chi variables and the tridiagonal beta-Laguerre / beta-Hermite models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .rng import RngStream, as_generator

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        e = np.asarray(self.offdiag, dtype=float)
        if d.ndim != 1 or e.shape != (max(d.size - 1, 0),):
            raise ParameterError("need k diagonal and k-1 off-diagonal entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def size(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class BidiagonalLaguerre:
    """Lower bidiagonal ``A_{n,m}``: ``diag`` on the diagonal, ``subdiag`` below it."""

    n: int
    m: int
    beta: float
    diag: np.ndarray
    subdiag: np.ndarray

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.subdiag, -1)


def chi_array(dof, gen: np.random.Generator) -> np.ndarray:
    """Independent chi draws, one per entry of ``dof``.

    Small shapes use ``Gamma(s) = Gamma(s + 1) * U**(1/s)`` in log space;
    results that would underflow are clamped to the smallest normal float so
    that every draw stays strictly positive.
    """
    dof = np.asarray(dof, dtype=float)
    if np.any(dof <= 0):
        raise ParameterError("chi degrees of freedom must be positive")
    shape = dof / 2.0
    small = shape < 1.0
    g = gen.standard_gamma(np.where(small, shape + 1.0, shape))
    u = gen.random(dof.shape)
    with np.errstate(divide="ignore"):
        log_g = np.log(g) + np.where(small, np.log(u) / shape, 0.0)
    chi = np.exp(0.5 * (math.log(2.0) + log_g))
    return np.maximum(chi, _TINY)


def sample_chi(dof: float, stream) -> float:
    return float(chi_array(np.array([dof]), as_generator(stream))[0])


def laguerre_dofs(n: int, m: int, beta: float):
    """Degrees of freedom of the diagonal and sub-diagonal chi entries."""
    diag = beta * (m - 1 - np.arange(n))
    sub = beta * (n - 1 - np.arange(n - 1))
    return diag, sub


def _check_laguerre(n, m, beta):
    if n < 1:
        raise ParameterError("n must be at least 1")
    if m <= n:
        raise ParameterError("m must exceed n")
    if beta <= 0:
        raise ParameterError("beta must be positive")


def sample_laguerre(n: int, m: int, beta: float, stream) -> BidiagonalLaguerre:
    _check_laguerre(n, m, beta)
    gen = as_generator(stream)
    dd, sd = laguerre_dofs(n, m, beta)
    vals = chi_array(np.concatenate([dd, sd]), gen) / math.sqrt(beta)
    return BidiagonalLaguerre(n, m, beta, vals[:n], vals[n:])


def double(B: BidiagonalLaguerre) -> SymTridiagonal:
    """Zero-diagonal ``2n x 2n`` matrix whose eigenvalues are ``+-`` singular values of B."""
    return SymTridiagonal(np.zeros(2 * B.n), interleave(B.diag, B.subdiag))


def interleave(diag, subdiag) -> np.ndarray:
    """``a1, b1, a2, b2, ..., an`` along the last axis."""
    diag = np.asarray(diag)
    subdiag = np.asarray(subdiag)
    n = diag.shape[-1]
    out = np.empty(diag.shape[:-1] + (2 * n - 1,), dtype=float)
    out[..., 0::2] = diag
    out[..., 1::2] = subdiag
    return out


def sample_hermite(n: int, beta: float, stream) -> SymTridiagonal:
    if n < 1:
        raise ParameterError("n must be at least 1")
    if beta <= 0:
        raise ParameterError("beta must be positive")
    gen = as_generator(stream)
    diag = gen.normal(0.0, math.sqrt(2.0 / beta), size=n)
    off = chi_array(beta * (n - 1 - np.arange(n - 1)), gen) / math.sqrt(beta) if n > 1 else np.empty(0)
    return SymTridiagonal(diag, off)


def _log_vandermonde(lam: np.ndarray) -> float:
    j, k = np.triu_indices(lam.size, 1)
    return float(np.sum(np.log(np.abs(lam[j] - lam[k]))))


def log_density_laguerre(lam, n: int, m: int, beta: float) -> float:
    """Unnormalized log joint eigenvalue density of the beta-Laguerre ensemble."""
    lam = np.asarray(lam, dtype=float)
    if lam.size != n:
        raise ParameterError("need exactly n eigenvalues")
    if np.any(lam <= 0):
        raise ParameterError("Laguerre eigenvalues must be positive")
    power = beta / 2.0 * (m - n) - 1.0
    return beta * _log_vandermonde(lam) + power * float(np.sum(np.log(lam))) - beta / 2.0 * float(np.sum(lam))


def log_density_hermite(lam, n: int, beta: float) -> float:
    lam = np.asarray(lam, dtype=float)
    if lam.size != n:
        raise ParameterError("need exactly n eigenvalues")
    return beta * _log_vandermonde(lam) - beta / 4.0 * float(np.sum(lam ** 2))


def laguerre_batch(n: int, m: int, beta: float, seed: int, replica_ids, domain: int):
    """Diagonal and sub-diagonal chi entries for many replicas, each on its own stream."""
    _check_laguerre(n, m, beta)
    dd, sd = laguerre_dofs(n, m, beta)
    dofs = np.concatenate([dd, sd])
    rows = [chi_array(dofs, RngStream(seed, r, domain).generator()) for r in replica_ids]
    vals = np.array(rows).reshape(len(rows), -1) / math.sqrt(beta)
    return vals[:, :n], vals[:, n:]


def hermite_batch(n: int, beta: float, seed: int, replica_ids, domain: int):
    diags, offs = [], []
    for r in replica_ids:
        T = sample_hermite(n, beta, RngStream(seed, r, domain))
        diags.append(T.diag)
        offs.append(T.offdiag)
    return np.array(diags), np.array(offs).reshape(len(offs), n - 1)
