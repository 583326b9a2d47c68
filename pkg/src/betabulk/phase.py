"""Phase functions of the doubled Laguerre matrix.

The eigenvalue equation of the conjugated tridiagonal matrix is a product of
Moebius steps ``J_l M_l Jhat_l Mhat_l`` acting on the ratio of consecutive
eigenvector entries.  Lifting these steps to the universal cover of the
circle gives the forward phase ``phi_l(lam)`` (started at ``pi``) and the
target phase ``phi_target_l(lam)`` (solved backward from ``0`` at ``l = n``).
Eigenvalues in ``(Lambda(lam0), Lambda(lam1)]`` are counted by the lattice
points ``2 pi Z`` crossed by ``phi - phi_target``, where
``Lambda(lam) = mu + lam / (4 sqrt(n0))``.

For ``l < n0`` the regularized phase conjugates by ``T_l Q_{l-1}`` so that
each step is close to the identity.  Rotation factors of ``Q_l`` are lifted
as ``2 arg(rho_j rhohat_j) - 4 pi``; with that lift the regularized sweep
equals the conjugated raw sweep exactly in the universal cover (the deck
shift is central, so conjugations by ``Q`` are unaffected).

All sweeps are vectorized: entry arrays may carry a leading replica axis and
angles have shape ``(..., len(lambda_grid))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import BidiagonalLaguerre
from .errors import OutsideBulkError, ParameterError
from .hyperbolic import TWO_PI, Affine, LiftedMoebius, Rotation, apply_lifted
from .spectral import ScalingParams


@dataclass(frozen=True)
class ConjugatedEntries:
    n: int
    m: int
    beta: float
    p: np.ndarray  # p_j = sqrt(m - j - 1/2), j = 0..n
    s: np.ndarray  # s_j = sqrt(n - j - 1/2), j = 0..n-1
    X: np.ndarray  # (..., n)
    Y: np.ndarray  # (..., n), last entry 0


def grids(n: int, m: int):
    p = np.sqrt(m - np.arange(n + 1) - 0.5)
    s = np.sqrt(n - np.arange(n) - 0.5)
    return p, s


def conjugated_entries_from_chi(diag, subdiag, n: int, m: int, beta: float) -> ConjugatedEntries:
    """``diag``/``subdiag`` are the bidiagonal entries (chi / sqrt(beta))."""
    diag = np.asarray(diag, dtype=float)
    subdiag = np.asarray(subdiag, dtype=float)
    p, s = grids(n, m)
    X = diag ** 2 / p[1:] - p[:-1]
    Y = np.zeros(diag.shape)
    Y[..., :-1] = subdiag ** 2 / s[1:] - s[:-1]
    return ConjugatedEntries(n, m, beta, p, s, X, Y)


def conjugated_entries(B: BidiagonalLaguerre) -> ConjugatedEntries:
    return conjugated_entries_from_chi(B.diag, B.subdiag, B.n, B.m, B.beta)


def conjugated_matrix(E: ConjugatedEntries) -> np.ndarray:
    """Dense (non-symmetric) conjugated tridiagonal matrix of a single instance."""
    n, p, s = E.n, E.p, E.s
    sup = np.empty(2 * n - 1)
    sub = np.empty(2 * n - 1)
    sup[0::2] = p[:n] + E.X
    sub[0::2] = p[1:]
    sup[1::2] = s[:n - 1] + E.Y[:n - 1]
    sub[1::2] = s[1:]
    return np.diag(sup, 1) + np.diag(sub, -1)


def conjugation_diagonal(B: BidiagonalLaguerre) -> np.ndarray:
    """Diagonal of ``D`` with ``D^-1 A_doubled D`` equal to :func:`conjugated_matrix`."""
    n = B.n
    p, s = grids(n, B.m)
    D = np.empty(2 * n)
    prod = 1.0
    for i in range(n):
        D[2 * i] = prod
        D[2 * i + 1] = B.diag[i] / p[i + 1] * prod
        if i < n - 1:
            prod *= B.diag[i] * B.subdiag[i] / (p[i + 1] * s[i + 1])
    return D


# -- regularizers -----------------------------------------------------------

@dataclass(frozen=True)
class Regularizers:
    rho: np.ndarray      # complex, index l = 0..L-1 (all l < n0)
    rho_hat: np.ndarray
    eta: np.ndarray
    q: np.ndarray        # lifted rotation angle of the l-th factor of Q_l
    Q: np.ndarray        # cumulative angle of Q_l

    def Q_before(self, ell: int) -> float:
        """Total angle of ``Q_{ell-1}`` (0 for ell = 0)."""
        return 0.0 if ell == 0 else float(self.Q[ell - 1])

    def T(self, ell: int) -> Affine:
        r = self.rho[ell]
        return Affine(1.0 / r.imag, -r.real)

    def T_hat(self, ell: int) -> Affine:
        r = self.rho_hat[ell]
        return Affine(1.0 / r.imag, -r.real)


def regularizers(params: ScalingParams, ell_max: int | None = None) -> Regularizers:
    """Regularizers for every ``l < n0`` (or ``l <= ell_max`` when given)."""
    L = math.ceil(params.n0)
    if ell_max is not None:
        if ell_max >= params.n0:
            raise OutsideBulkError(f"l = {ell_max} is not below n0 = {params.n0:.6g}")
        L = ell_max + 1
    k = params.n0 - np.arange(L)
    n1, m1 = params.n1, params.m1
    rho = params.edge_side * np.sqrt(n1 / (n1 + k)) + 1j * np.sqrt(k / (n1 + k))
    rho_hat = np.sqrt(m1 / (m1 + k)) + 1j * np.sqrt(k / (m1 + k))
    step = 2.0 * np.angle(rho * rho_hat)
    # the cumulative product of (rho rhohat)^2 through its angle keeps |eta| = 1 exactly
    eta = np.exp(1j * np.cumsum(step))
    q = step - 2.0 * TWO_PI
    return Regularizers(rho, rho_hat, eta, q, np.cumsum(q))


def regularizer_direct(params: ScalingParams, ell: int):
    """``rho_l`` and ``rhohat_l`` from the fixed-point formulas in terms of ``mu``."""
    p, s = grids(params.n, params.m)
    mu, d = params.mu, params.m - params.n
    u = (mu * mu - d) / (2.0 * mu * s[ell])
    v = (mu * mu + d) / (2.0 * mu * p[ell])
    return complex(u, math.sqrt(1.0 - u * u)), complex(v, math.sqrt(1.0 - v * v))


# -- step words -------------------------------------------------------------

def _col(a, ell):
    return np.asarray(a)[..., ell, None]


def raw_step(E: ConjugatedEntries, params: ScalingParams, ell: int, lam) -> LiftedMoebius:
    """``J_l M_l Jhat_l Mhat_l`` as a generator word."""
    p, s, mu = E.p, E.s, params.mu
    shift = np.asarray(lam, dtype=float) / params.scale
    J = LiftedMoebius.of(Rotation(math.pi), Affine(s[ell] / p[ell], mu / s[ell]))
    M = LiftedMoebius.of(Affine(1.0 / (1.0 + _col(E.X, ell) / p[ell]), shift / p[ell]),
                         Affine(p[ell] / p[ell + 1], 0.0))
    Jh = LiftedMoebius.of(Rotation(math.pi), Affine(p[ell] / s[ell], mu / p[ell]))
    Mh = LiftedMoebius.of(Affine(1.0 / (1.0 + _col(E.Y, ell) / s[ell]), shift / s[ell]))
    return J * M * Jh * Mh


def regularized_step(E: ConjugatedEntries, params: ScalingParams, R: Regularizers,
                     ell: int, lam) -> tuple[LiftedMoebius, LiftedMoebius]:
    """The two half steps ``S^{Qhat_l}`` and ``Shat^{Q_l}``, each simplified."""
    p, s = E.p, E.s
    shift = np.asarray(lam, dtype=float) / params.scale
    Th = LiftedMoebius.of(R.T_hat(ell))
    T0 = LiftedMoebius.of(R.T(ell))
    T1 = LiftedMoebius.of(R.T(ell + 1))
    S = Th.inverse() * LiftedMoebius.of(
        Affine(1.0, shift / p[ell]),
        Affine(p[ell] / p[ell + 1] / (1.0 + _col(E.X, ell) / p[ell]), 0.0)) * Th
    Sh = T0.inverse() * LiftedMoebius.of(
        Affine(1.0, shift / s[ell]),
        Affine(1.0 / (1.0 + _col(E.Y, ell) / s[ell]), 0.0)) * T1
    Q = float(R.Q[ell])
    Qh = Q - 2.0 * float(np.angle(R.rho_hat[ell]))
    first = S.conj(LiftedMoebius.of(Rotation(Qh))).simplified()
    second = Sh.conj(LiftedMoebius.of(Rotation(Q))).simplified()
    return first, second


def regularizing_map(R: Regularizers, ell: int) -> LiftedMoebius:
    """``T_l Q_{l-1}``: raw phase at ``l`` to regularized phase at ``l``."""
    return LiftedMoebius.of(R.T(ell), Rotation(R.Q_before(ell)))


# -- sweeps -----------------------------------------------------------------

@dataclass
class PhaseState:
    ell: int
    lambda_grid: np.ndarray
    phi: np.ndarray
    phi_target: np.ndarray | None = None
    regularized: bool = False
    max_step: float = 0.0

    def _index(self, lam) -> int:
        hits = np.flatnonzero(np.isclose(self.lambda_grid, lam, rtol=0, atol=1e-12))
        if hits.size == 0:
            raise ParameterError(f"lambda = {lam} is not on the grid")
        return int(hits[0])

    @property
    def alpha(self) -> np.ndarray:
        """Relative phase ``phi(lam) - phi(0)``."""
        return self.phi - self.phi[..., self._index(0.0), None]


def _start(E: ConjugatedEntries, lam, value: float) -> np.ndarray:
    shape = np.broadcast_shapes(np.shape(E.X)[:-1] + (1,), np.shape(lam))
    return np.full(shape, value)


def _grid(lambda_grid) -> np.ndarray:
    return np.atleast_1d(np.asarray(lambda_grid, dtype=float))


def raw_phase_sweep(E: ConjugatedEntries, params: ScalingParams, lambda_grid,
                    ell_stop: int | None = None) -> PhaseState:
    lam = _grid(lambda_grid)
    stop = E.n if ell_stop is None else ell_stop
    if not 0 <= stop <= E.n:
        raise ParameterError("ell_stop must lie in [0, n]")
    phi = _start(E, lam, math.pi)
    for ell in range(stop):
        phi = apply_lifted(raw_step(E, params, ell, lam).simplified(), phi)
    return PhaseState(stop, lam, phi)


def regularized_phase_sweep(E: ConjugatedEntries, params: ScalingParams, lambda_grid,
                            ell_stop: int, max_step: float | None = math.pi,
                            R: Regularizers | None = None) -> PhaseState:
    """Evolve the regularized phase from ``pi`` at ``l = 0`` to ``l = ell_stop``.

    ``max_step`` guards every affine generator of the conjugated half steps;
    pass ``None`` to disable the guard (counts stay exact either way).
    """
    lam = _grid(lambda_grid)
    if not 0 <= ell_stop < params.n0:
        raise OutsideBulkError(f"ell_stop = {ell_stop} must satisfy 0 <= l < n0 = {params.n0:.6g}")
    R = R if R is not None else regularizers(params, ell_stop)
    phi = _start(E, lam, math.pi)
    biggest = 0.0
    for ell in range(ell_stop):
        for half in regularized_step(E, params, R, ell, lam):
            new = apply_lifted(half, phi, max_step=max_step)
            biggest = max(biggest, float(np.max(np.abs(new - phi))))
            phi = new
    return PhaseState(ell_stop, lam, phi, regularized=True, max_step=biggest)


def target_phase_sweep(E: ConjugatedEntries, params: ScalingParams, lambda_grid,
                       ell_stop: int, regularize: bool | None = None,
                       R: Regularizers | None = None) -> np.ndarray:
    """Target phase at ``ell_stop``, solved backward from ``0`` at ``l = n``.

    By default the result is regularized by ``T_l Q_{l-1}`` whenever
    ``ell_stop < n0``.
    """
    lam = _grid(lambda_grid)
    if not 0 <= ell_stop <= E.n:
        raise ParameterError("ell_stop must lie in [0, n]")
    if regularize is None:
        regularize = ell_stop < params.n0
    phi = _start(E, lam, 0.0)
    for ell in range(E.n - 1, ell_stop - 1, -1):
        phi = apply_lifted(raw_step(E, params, ell, lam).inverse().simplified(), phi)
    if regularize:
        if ell_stop >= params.n0:
            raise OutsideBulkError("cannot regularize at l >= n0")
        R = R if R is not None else regularizers(params, ell_stop)
        phi = apply_lifted(regularizing_map(R, ell_stop), phi)
    return phi


def phase_state(E: ConjugatedEntries, params: ScalingParams, lambda_grid, ell: int,
                max_step: float | None = math.pi) -> PhaseState:
    """Forward and target phases at ``ell`` (regularized when ``ell < n0``)."""
    if ell < params.n0:
        R = regularizers(params, ell)
        st = regularized_phase_sweep(E, params, lambda_grid, ell, max_step=max_step, R=R)
        st.phi_target = target_phase_sweep(E, params, lambda_grid, ell, regularize=True, R=R)
    else:
        st = raw_phase_sweep(E, params, lambda_grid, ell)
        st.phi_target = target_phase_sweep(E, params, lambda_grid, ell, regularize=False)
    return st


def count_by_phase(state: PhaseState, lambda0: float, lambda1: float):
    """Lattice points of ``2 pi Z`` in ``(d(lam0), d(lam1)]`` with ``d = phi - phi_target``."""
    if state.phi_target is None:
        raise ParameterError("state has no target phase")
    d = state.phi - state.phi_target
    i0, i1 = state._index(lambda0), state._index(lambda1)
    c = np.floor(d[..., i1] / TWO_PI) - np.floor(d[..., i0] / TWO_PI)
    c = c.astype(np.int64)
    return int(c) if np.ndim(c) == 0 else c
