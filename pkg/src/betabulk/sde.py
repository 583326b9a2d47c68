"""Euler-Maruyama integration of the Sine_beta SDE and of the phase diffusion.

Time steps follow the geometric grid ``t_{j+1} = t_j + h (1 - t_j)``, i.e.
uniform steps of size ``-log(1 - h)`` in ``-log(1 - t)``.  On that grid the
noise amplitude per step is constant and the drift ``lam / (2 sqrt(1-t))`` is
integrated exactly.  Every replica draws its Brownian increments from its own
stream and one increment sequence drives all ``lam`` on the grid.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericalGuardError, ParameterError
from .hyperbolic import TWO_PI
from .rng import DIFFUSION, SDE, RngStream
from .spectral import CountingSample


class Infinite(enum.Enum):
    INF = "inf"


@dataclass(frozen=True)
class SineBetaConfig:
    beta: float
    lambda_grid: tuple
    h: float = 1e-3
    delta: float = 1e-10
    replicas: int = 1000
    seed: int = 0
    threads: int = 1
    block: int = 128
    max_retries: int = 3

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterError("beta must be positive")
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie in (0, 1)")
        if self.h <= 0 or self.h >= 1:
            raise ParameterError("h must lie in (0, 1)")
        if self.replicas < 1:
            raise ParameterError("replicas must be positive")


@dataclass
class SineBetaResult:
    lambda_grid: np.ndarray
    alpha_end: np.ndarray      # (replicas, L)
    counts: np.ndarray         # (replicas, L)
    residual: np.ndarray       # |alpha / 2pi - N|
    h_used: np.ndarray         # per replica
    monotone_violations: int

    @property
    def mean_residual(self) -> float:
        return float(np.mean(self.residual))


def geometric_grid(h: float, t_end: float) -> np.ndarray:
    """Times ``0 = t_0 < ... < t_J`` with ``1 - t_J <= 1 - t_end`` reached exactly at ``t_end``."""
    J = math.ceil(math.log1p(-t_end) / math.log1p(-h)) if t_end > 0 else 0
    t = 1.0 - (1.0 - h) ** np.arange(J + 1)
    t[-1] = t_end
    return t


def _sine_beta_block(ids, cfg: SineBetaConfig, h: float):
    lam = np.asarray(cfg.lambda_grid, dtype=float)
    t = geometric_grid(h, 1.0 - cfg.delta)
    root = np.sqrt(1.0 - t)
    # exact integral of lam / (2 sqrt(1 - t)) over each step
    drift = lam[None, :] * (root[:-1] - root[1:])[:, None]
    steps = t.size - 1
    noise = np.stack([RngStream(cfg.seed, r, SDE).generator().standard_normal((steps, 2))
                      for r in ids])                      # (B, steps, 2)
    amp = np.sqrt(2.0 / cfg.beta) * np.sqrt(np.diff(t) / (1.0 - t[:-1]))
    alpha = np.zeros((len(ids), lam.size))
    worst = np.zeros(len(ids))
    for j in range(steps):
        # Re[(e^{-i a} - 1)(dZ1 + i dZ2)] = (cos a - 1) dZ1 + sin a dZ2
        dz1 = noise[:, j, 0:1]
        dz2 = noise[:, j, 1:2]
        d = drift[j] + amp[j] * ((np.cos(alpha) - 1.0) * dz1 + np.sin(alpha) * dz2)
        worst = np.maximum(worst, np.max(np.abs(d), axis=1))
        alpha = alpha + d
    return alpha, worst


def simulate_sine_beta(cfg: SineBetaConfig) -> SineBetaResult:
    """Terminal relative phases ``alpha_lam(1 - delta)`` and rounded counts ``N(lam)``."""
    lam = np.asarray(cfg.lambda_grid, dtype=float)
    ids = np.arange(cfg.replicas)
    blocks = [ids[i:i + cfg.block] for i in range(0, cfg.replicas, cfg.block)]
    with ThreadPoolExecutor(max(1, cfg.threads)) as pool:
        parts = list(pool.map(lambda b: _sine_beta_block(b, cfg, cfg.h), blocks))
    alpha = np.concatenate([a for a, _ in parts])
    worst = np.concatenate([w for _, w in parts])
    h_used = np.full(cfg.replicas, cfg.h)
    for r in np.flatnonzero(worst > math.pi):
        h = cfg.h
        for _ in range(cfg.max_retries):
            h /= 2.0
            a, w = _sine_beta_block([r], cfg, h)
            if w[0] <= math.pi:
                alpha[r], h_used[r] = a[0], h
                break
        else:
            raise NumericalGuardError(f"replica {r}: step exceeded pi after {cfg.max_retries} halvings")
    counts = np.rint(alpha / TWO_PI).astype(np.int64)
    residual = np.abs(alpha / TWO_PI - counts)
    order = np.argsort(lam, kind="stable")
    violations = int(np.sum(np.any(np.diff(counts[:, order], axis=1) < 0, axis=1)))
    return SineBetaResult(lam, alpha, counts, residual, h_used, violations)


def sine_beta_counting(cfg: SineBetaConfig) -> list[CountingSample]:
    res = simulate_sine_beta(cfg)
    return [CountingSample(res.lambda_grid, res.counts[r], r, "sde",
                           {"residual": float(np.max(res.residual[r]))})
            for r in range(cfg.replicas)]


# -- phase diffusion --------------------------------------------------------

@dataclass(frozen=True)
class PhaseDiffusionParams:
    beta: float
    kappa: float | Infinite = Infinite.INF
    nu: float | Infinite = Infinite.INF
    edge_side: int = 1

    def __post_init__(self):
        for name in ("kappa", "nu"):
            v = getattr(self, name)
            if v is not Infinite.INF and v < 1:
                raise ParameterError(f"{name} must be at least 1")

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        if self.nu is Infinite.INF:
            return self.edge_side * np.ones_like(t) + 0j
        nu = self.nu
        return self.edge_side * np.sqrt((nu - 1) / (nu - t)) + 1j * np.sqrt((1 - t) / (nu - t))

    def rho_hat(self, t):
        t = np.asarray(t, dtype=float)
        if self.kappa is Infinite.INF:
            return np.ones_like(t) + 0j
        k = self.kappa
        return np.sqrt((k - 1) / (k - t)) + 1j * np.sqrt((1 - t) / (k - t))

    def p_inv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kappa is Infinite.INF:
            return np.zeros_like(t)
        return 1.0 / np.sqrt(self.kappa - t)

    def re_rho_prime_over_im_rho(self, t):
        """``Re(rho') / Im(rho)`` in closed form."""
        t = np.asarray(t, dtype=float)
        if self.nu is Infinite.INF:
            return np.zeros_like(t)
        nu = self.nu
        return self.edge_side * math.sqrt(nu - 1) / (2.0 * (nu - t) * np.sqrt(1 - t))

    def drift(self, t, lam):
        """Drift of the phase diffusion at time ``t`` for each ``lam``."""
        sh = np.sqrt(1.0 - t)
        r, rh = self.rho(t), self.rho_hat(t)
        base = (-self.re_rho_prime_over_im_rho(t)
                + (r * r + rh * rh).imag / (2.0 * self.beta * sh * sh)
                + rh.real * self.p_inv(t) / (2.0 * sh))
        return np.asarray(lam) / (2.0 * sh) + base

    def common_noise_coeff(self, t):
        """Coefficient of the real Brownian motion ``B`` shared by all ``lam``."""
        r, rh = self.rho(t), self.rho_hat(t)
        return np.sqrt(np.maximum(2.0 + (r * r + rh * rh).real, 0.0)) / (math.sqrt(self.beta) * np.sqrt(1.0 - t))


@dataclass
class PhaseDiffusionPath:
    t: np.ndarray          # (J+1,)
    phi: np.ndarray        # (replicas, J+1, L)
    lambda_grid: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        zero = np.flatnonzero(self.lambda_grid == 0.0)
        if zero.size == 0:
            raise ParameterError("lambda = 0 must be on the grid")
        return self.phi - self.phi[..., zero[0], None]


def simulate_phase_diffusion(params: PhaseDiffusionParams, lambda_grid, t_end: float,
                             h: float = 1e-3, seed: int = 0, replicas: int = 1,
                             noise: bool = True, threads: int = 1, block: int = 128
                             ) -> PhaseDiffusionPath:
    """Euler-Maruyama paths of the limiting phase diffusion started at ``pi``.

    ``W`` (complex) and ``B`` (real) are independent and shared across ``lam``.
    ``noise=False`` integrates the deterministic part only.
    """
    if not 0 <= t_end < 1:
        raise ParameterError("t_end must lie in [0, 1)")
    lam = np.atleast_1d(np.asarray(lambda_grid, dtype=float))
    t = geometric_grid(h, t_end)
    dt = np.diff(t)
    steps = dt.size

    def run(ids):
        phi = np.full((len(ids), steps + 1, lam.size), math.pi)
        if noise:
            draws = np.stack([RngStream(seed, r, DIFFUSION).generator().standard_normal((steps, 3))
                              for r in ids])
        cur = phi[:, 0, :]
        for j in range(steps):
            tj = t[j]
            d = params.drift(tj, lam)[None, :] * dt[j]
            if noise:
                sq = math.sqrt(dt[j])
                w1, w2, b = draws[:, j, 0:1], draws[:, j, 1:2], draws[:, j, 2:3]
                amp = math.sqrt(2.0 / params.beta) / math.sqrt(1.0 - tj)
                d = d + amp * sq * (np.cos(cur) * w1 + np.sin(cur) * w2)
                d = d + float(params.common_noise_coeff(tj)) * sq * b
            cur = cur + d
            phi[:, j + 1, :] = cur
        return phi

    ids = np.arange(replicas)
    blocks = [ids[i:i + block] for i in range(0, replicas, block)]
    with ThreadPoolExecutor(max(1, threads)) as pool:
        parts = list(pool.map(run, blocks))
    return PhaseDiffusionPath(t, np.concatenate(parts), lam)
