"""Monte Carlo studies comparing the matrix side with the Sine_beta side."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .ensembles import hermite_batch, interleave, laguerre_batch
from .errors import ParameterError
from .phase import conjugated_entries_from_chi, regularized_phase_sweep, regularizers
from .rng import HERMITE, MATRIX
from .sde import PhaseDiffusionParams, SineBetaConfig, simulate_phase_diffusion, simulate_sine_beta
from .spectral import (ScalingParams, count_scaled, eigenvalues_by_index, gershgorin,
                       hermite_scale, mp_cdf, mp_edges, scaling_params, sturm_counts,
                       window_eigenvalues)
from .stats import ks_1samp, ks_2samp, summary, var_se

KINDS = ("bulk-compare", "density", "hermite-compare", "phase-vs-sde")
DEFAULT_GRID = (-4 * math.pi, -2 * math.pi, 2 * math.pi, 4 * math.pi)


@dataclass
class ExperimentConfig:
    kind: str = "bulk-compare"
    beta: float = 2.0
    n: int = 2000
    m: int = 4000
    c: float | None = 3.0
    mu: float | None = None
    lambda_grid: tuple = DEFAULT_GRID
    replicas: int = 500
    sde_replicas: int | None = None
    seed: int = 0
    kappa_cutoff: float = 1.0
    epsilon: float = 0.5
    h: float = 1e-3
    delta: float = 1e-10
    hermite_mu: float = 0.0
    threads: int = 1
    block: int = 50

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ParameterError(f"kind must be one of {KINDS}")
        if self.beta <= 0:
            raise ParameterError("beta must be positive")
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        if self.m <= self.n:
            raise ParameterError("m must exceed n")
        if self.replicas < 1:
            raise ParameterError("replicas must be positive")
        if self.kind != "density":
            if self.mu is None and self.c is None:
                raise ParameterError("give either c or mu")
            if self.mu is None:
                a, b = mp_edges(self.m / self.n)
                if not a * a < self.c < b * b:
                    raise ParameterError(f"c must lie in ({a * a:.4g}, {b * b:.4g})")
            elif self.mu <= 0:
                raise ParameterError("mu must be positive")
        if not 0 < self.epsilon < 1:
            raise ParameterError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1 or not 0 < self.h < 1:
            raise ParameterError("h and delta must lie in (0, 1)")
        if self.threads < 1 or self.block < 1:
            raise ParameterError("threads and block must be positive")

    @property
    def center(self) -> float:
        return self.mu if self.mu is not None else math.sqrt(self.c * self.n)

    @property
    def n_sde(self) -> int:
        return self.sde_replicas if self.sde_replicas is not None else self.replicas

    def params(self) -> ScalingParams:
        return scaling_params(self.beta, self.n, self.m, self.center, self.kappa_cutoff)

    def echo(self) -> dict:
        d = asdict(self)
        del d["threads"]   # affects wall-clock only, so reports stay byte-identical
        d["lambda_grid"] = [float(x) for x in self.lambda_grid]
        return d


@dataclass
class Report:
    config: dict
    per_lambda: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)   # (replica_id, source, lambda, value)
    sample_column: str = "count"
    elapsed_s: float | None = None

    def to_dict(self, timing: bool = False) -> dict:
        return {"config": self.config, "per_lambda": self.per_lambda, "extra": self.extra,
                "meta": {"seed": self.config.get("seed"),
                         "elapsed_s": self.elapsed_s if timing else None,
                         "version": __version__}}

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(_clean(self.to_dict(timing)), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica_id", "source", "lambda", self.sample_column])
        for row in self.samples:
            w.writerow([row[0], row[1], "" if row[2] is None else repr(float(row[2])),
                        row[3] if isinstance(row[3], (int, np.integer)) else repr(float(row[3]))])
        return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _blocks(total: int, size: int):
    ids = np.arange(total)
    return [ids[i:i + size] for i in range(0, total, size)]


def _pmap(fn, blocks, threads):
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, blocks))


def _compare(lam, a, b, names=("matrix", "sde")) -> dict:
    ks, p = ks_2samp(a, b)
    return {"lambda": float(lam), names[0]: summary(a), names[1]: summary(b), "ks": ks, "ks_p": p}


# -- matrix-side counting ---------------------------------------------------

def laguerre_counts(cfg: ExperimentConfig, params: ScalingParams) -> np.ndarray:
    """Matrix-side ``N_n(lam)`` for every replica, via window eigenvalues."""
    grid = np.asarray(cfg.lambda_grid, dtype=float)
    margin = 2 * math.pi
    lo = params.Lambda(min(grid.min(), 0.0) - margin)
    hi = params.Lambda(max(grid.max(), 0.0) + margin)
    tol = 1e-9 / params.scale

    def run(ids):
        d, s = laguerre_batch(cfg.n, cfg.m, cfg.beta, cfg.seed, ids, MATRIX)
        off = interleave(d, s)
        eig = window_eigenvalues(None, off, lo, hi, tol)
        return np.array([count_scaled(params.scale * (e - params.mu), grid) for e in eig])

    return np.concatenate(_pmap(run, _blocks(cfg.replicas, cfg.block), cfg.threads))


def run_bulk_comparison(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    t0 = time.perf_counter()
    params = cfg.params()
    grid = np.asarray(cfg.lambda_grid, dtype=float)
    mat = laguerre_counts(cfg, params)
    sde = simulate_sine_beta(SineBetaConfig(cfg.beta, tuple(grid), cfg.h, cfg.delta, cfg.n_sde,
                                            cfg.seed, cfg.threads))
    rep = Report(cfg.echo())
    rep.per_lambda = [_compare(l, mat[:, i], sde.counts[:, i]) for i, l in enumerate(grid)]
    rep.extra = {"n0": params.n0, "n1": params.n1, "mu": params.mu,
                 "sde_mean_residual": sde.mean_residual,
                 "sde_monotone_violations": sde.monotone_violations}
    for src, arr in (("matrix", mat), ("sde", sde.counts)):
        rep.samples += [(r, src, l, int(arr[r, i])) for r in range(arr.shape[0])
                        for i, l in enumerate(grid)]
    rep.elapsed_s = time.perf_counter() - t0
    return rep


def positive_spectrum(off, tol=1e-10):
    """All positive eigenvalues of zero-diagonal tridiagonal matrices (rows of ``off``)."""
    _, hi = gershgorin(None, off)
    return window_eigenvalues(None, off, 0.0, hi, tol)


def run_density_check(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    t0 = time.perf_counter()
    gamma = cfg.m / cfg.n

    def run(ids):
        d, s = laguerre_batch(cfg.n, cfg.m, cfg.beta, cfg.seed, ids, MATRIX)
        return [e ** 2 / cfg.n for e in positive_spectrum(interleave(d, s))]

    pooled = np.concatenate([x for part in _pmap(run, _blocks(cfg.replicas, 5), cfg.threads)
                             for x in part])
    a, b = mp_edges(gamma)
    ks, p = ks_1samp(pooled, lambda x: mp_cdf(gamma, x))
    outside = float(np.mean((pooled < a * a - 0.1) | (pooled > b * b + 0.1)))
    rep = Report(cfg.echo(), sample_column="value")
    rep.extra = {"gamma": gamma, "support": [a * a, b * b], "ks": ks, "ks_p": p,
                 "mass_outside": outside, "points": int(pooled.size)}
    rep.elapsed_s = time.perf_counter() - t0
    return rep


# -- central gaps -----------------------------------------------------------

def central_gaps(diag, off, center: float, scale: float, tol: float) -> np.ndarray:
    """Scaled gap between the eigenvalues straddling ``center`` (one per matrix)."""
    k = sturm_counts(diag, off, np.full((off.shape[0], 1), center))[:, 0]
    lo, hi = gershgorin(diag, off)
    idx = np.stack([k - 1, k], -1)
    ok = (k >= 1) & (k < off.shape[-1] + 1)
    idx = np.where(ok[:, None], idx, 0)
    ev = eigenvalues_by_index(diag, off, idx, lo[:, None], hi[:, None], tol)
    gaps = scale * (ev[:, 1] - ev[:, 0])
    return gaps[ok]


def run_hermite_comparison(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    t0 = time.perf_counter()
    params = cfg.params()
    hscale = hermite_scale(cfg.n, cfg.hermite_mu)
    grid = np.asarray(cfg.lambda_grid, dtype=float)

    def lag(ids):
        d, s = laguerre_batch(cfg.n, cfg.m, cfg.beta, cfg.seed, ids, MATRIX)
        return central_gaps(None, interleave(d, s), params.mu, params.scale, 1e-9 / params.scale)

    def her(ids):
        d, o = hermite_batch(cfg.n, cfg.beta, cfg.seed, ids, HERMITE)
        gaps = central_gaps(d, o, cfg.hermite_mu, hscale, 1e-9 / hscale)
        lo = cfg.hermite_mu + (min(grid.min(), 0.0) - 2 * math.pi) / hscale
        hi = cfg.hermite_mu + (max(grid.max(), 0.0) + 2 * math.pi) / hscale
        eig = window_eigenvalues(d, o, lo, hi, 1e-9 / hscale)
        counts = np.array([count_scaled(hscale * (e - cfg.hermite_mu), grid) for e in eig])
        return gaps, counts

    lg = np.concatenate(_pmap(lag, _blocks(cfg.replicas, cfg.block), cfg.threads))
    hparts = _pmap(her, _blocks(cfg.n_sde, cfg.block), cfg.threads)
    hg = np.concatenate([g for g, _ in hparts])
    hc = np.concatenate([c for _, c in hparts])
    lc = laguerre_counts(cfg, params)
    ks, p = ks_2samp(lg, hg)
    rep = Report(cfg.echo(), sample_column="value")
    rep.per_lambda = [_compare(l, lc[:, i], hc[:, i], ("laguerre", "hermite"))
                      for i, l in enumerate(grid)]
    rep.extra = {"gap_ks": ks, "gap_ks_p": p, "laguerre_gap": summary(lg), "hermite_gap": summary(hg),
                 "flags": ["insufficient-samples"] if min(lg.size, hg.size) < 10 else []}
    rep.samples = ([(i, "laguerre", None, float(g)) for i, g in enumerate(lg)]
                   + [(i, "hermite", None, float(g)) for i, g in enumerate(hg)])
    rep.elapsed_s = time.perf_counter() - t0
    return rep


# -- relative phase vs diffusion -------------------------------------------

def matrix_relative_phase(cfg: ExperimentConfig, params: ScalingParams, grid, ell: int) -> np.ndarray:
    """``alpha_{ell, lam}`` for every replica; ``grid`` must contain 0."""
    R = regularizers(params, ell)

    def run(ids):
        d, s = laguerre_batch(cfg.n, cfg.m, cfg.beta, cfg.seed, ids, MATRIX)
        E = conjugated_entries_from_chi(d, s, cfg.n, cfg.m, cfg.beta)
        return regularized_phase_sweep(E, params, grid, ell, R=R).alpha

    return np.concatenate(_pmap(run, _blocks(cfg.replicas, cfg.block), cfg.threads))


def run_phase_vs_sde(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    t0 = time.perf_counter()
    params = cfg.params()
    grid = np.unique(np.concatenate([[0.0], np.asarray(cfg.lambda_grid, dtype=float)]))
    ell = math.floor(params.n0 * (1 - cfg.epsilon))
    mat = matrix_relative_phase(cfg, params, grid, ell)
    diff = PhaseDiffusionParams(cfg.beta, cfg.m / params.n0, cfg.n / params.n0, params.edge_side)
    path = simulate_phase_diffusion(diff, grid, 1 - cfg.epsilon, cfg.h, cfg.seed, cfg.n_sde,
                                    threads=cfg.threads, block=cfg.block)
    sde = path.alpha[:, -1, :]
    rep = Report(cfg.echo(), sample_column="value")
    for i, l in enumerate(grid):
        row = _compare(l, mat[:, i], sde[:, i])
        if l != 0.0:
            row["matrix"]["var_se"] = var_se(mat[:, i])
            row["sde"]["var_se"] = var_se(sde[:, i])
        rep.per_lambda.append(row)
    rep.extra = {"ell": ell, "t": 1 - cfg.epsilon, "n0": params.n0,
                 "kappa": cfg.m / params.n0, "nu": cfg.n / params.n0, "edge_side": params.edge_side}
    for src, arr in (("matrix", mat), ("sde", sde)):
        rep.samples += [(r, src, l, float(arr[r, i])) for r in range(arr.shape[0])
                        for i, l in enumerate(grid)]
    rep.elapsed_s = time.perf_counter() - t0
    return rep


def run_sine_beta(cfg: SineBetaConfig):
    """Sine_beta counting report (SDE side only) and the raw simulation result."""
    t0 = time.perf_counter()
    res = simulate_sine_beta(cfg)
    echo = {k: v for k, v in asdict(cfg).items() if k != "threads"}
    echo["lambda_grid"] = [float(x) for x in cfg.lambda_grid]
    rep = Report(echo)
    rep.per_lambda = [{"lambda": float(l), "sde": summary(res.counts[:, i]),
                       "expected_mean": float(l) / (2 * math.pi)}
                      for i, l in enumerate(res.lambda_grid)]
    rep.extra = {"mean_residual": res.mean_residual, "monotone_violations": res.monotone_violations,
                 "retried_replicas": int(np.sum(res.h_used < cfg.h))}
    rep.samples = [(r, "sde", l, int(res.counts[r, i])) for r in range(res.counts.shape[0])
                   for i, l in enumerate(res.lambda_grid)]
    rep.elapsed_s = time.perf_counter() - t0
    return rep, res


RUNNERS = {"bulk-compare": run_bulk_comparison, "density": run_density_check,
           "hermite-compare": run_hermite_comparison, "phase-vs-sde": run_phase_vs_sde}


def run(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    return RUNNERS[cfg.kind](cfg)
