import csv
import io
import json
import math

import numpy as np
import pytest

from betabulk.ensembles import interleave, laguerre_batch
from betabulk.errors import ParameterError
from betabulk.experiments import (ExperimentConfig, central_gaps, laguerre_counts, run,
                                  run_bulk_comparison, run_density_check, run_hermite_comparison,
                                  run_phase_vs_sde)
from betabulk.rng import MATRIX
from betabulk.spectral import SymTridiagonal, count_scaled

SMALL = dict(beta=2.0, n=150, m=300, c=3.0, replicas=24, sde_replicas=24, delta=1e-4, block=10)


def test_config_validation():
    with pytest.raises(ParameterError):
        ExperimentConfig(kind="nope").validate()
    with pytest.raises(ParameterError, match="m must exceed n"):
        ExperimentConfig(n=10, m=10).validate()
    with pytest.raises(ParameterError):
        ExperimentConfig(n=100, m=200, c=6.0).validate()
    with pytest.raises(ParameterError):
        ExperimentConfig(c=None, mu=None).validate()
    with pytest.raises(ParameterError):
        ExperimentConfig(epsilon=1.0).validate()
    with pytest.raises(ParameterError):
        run(ExperimentConfig(kind="bulk-compare", replicas=0))


def test_center():
    assert ExperimentConfig(n=100, c=3.0).center == pytest.approx(math.sqrt(300))
    assert ExperimentConfig(n=100, c=3.0, mu=17.0).center == 17.0


def test_matrix_counts_vs_dense():
    cfg = ExperimentConfig(**SMALL)
    P = cfg.params()
    counts = laguerre_counts(cfg, P)
    d, s = laguerre_batch(cfg.n, cfg.m, cfg.beta, cfg.seed, range(cfg.replicas), MATRIX)
    off = interleave(d, s)
    for r in range(cfg.replicas):
        ev = np.linalg.eigvalsh(SymTridiagonal(np.zeros(2 * cfg.n), off[r]).dense())
        assert np.array_equal(counts[r], count_scaled(P.scale * (ev - P.mu), cfg.lambda_grid))


def test_bulk_report_schema_and_determinism():
    a = run_bulk_comparison(ExperimentConfig(**SMALL, threads=1))
    b = run_bulk_comparison(ExperimentConfig(**SMALL, threads=3))
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()
    d = json.loads(a.to_json())
    assert set(d) == {"config", "per_lambda", "extra", "meta"}
    assert d["meta"]["elapsed_s"] is None and d["meta"]["seed"] == 0
    row = d["per_lambda"][0]
    assert set(row) == {"lambda", "matrix", "sde", "ks", "ks_p"}
    assert set(row["matrix"]) == {"mean", "var", "se", "n"}
    assert "threads" not in d["config"]
    assert json.loads(a.to_json(timing=True))["meta"]["elapsed_s"] > 0
    rows = list(csv.reader(io.StringIO(a.to_csv())))
    assert rows[0] == ["replica_id", "source", "lambda", "count"]
    assert len(rows) == 1 + 2 * 24 * 4
    assert {r[1] for r in rows[1:]} == {"matrix", "sde"}


def test_density_report():
    rep = run_density_check(ExperimentConfig(kind="density", n=100, m=200, beta=1.0, replicas=4))
    assert rep.extra["ks"] < 0.1
    assert rep.extra["mass_outside"] < 0.01
    assert rep.extra["points"] == 400
    # m = n + 1 is the closest the model gets to a square matrix (gamma -> 1)
    square = run_density_check(ExperimentConfig(kind="density", n=400, m=401, beta=2.0, replicas=1))
    assert square.extra["support"] == pytest.approx([0.0, 4.0], abs=1e-2)
    assert square.extra["mass_outside"] < 0.01


def test_central_gaps_vs_dense(rng):
    diag = rng.normal(size=(5, 30))
    off = rng.uniform(0.5, 1.5, (5, 29))
    gaps = central_gaps(diag, off, 0.1, 2.0, 1e-12)
    for r in range(5):
        ev = np.linalg.eigvalsh(SymTridiagonal(diag[r], off[r]).dense())
        k = np.searchsorted(ev, 0.1)
        assert gaps[r] == pytest.approx(2.0 * (ev[k] - ev[k - 1]), abs=1e-9)


def test_hermite_single_replica_flagged():
    rep = run_hermite_comparison(ExperimentConfig(kind="hermite-compare", n=80, m=160, replicas=1,
                                                  sde_replicas=1))
    assert "insufficient-samples" in rep.extra["flags"]
    assert 0 <= rep.extra["gap_ks"] <= 1
    ok = run_hermite_comparison(ExperimentConfig(kind="hermite-compare", n=80, m=160, replicas=20))
    assert ok.extra["flags"] == []
    assert ok.per_lambda[0].keys() >= {"laguerre", "hermite"}


def test_phase_zero_row_and_variance_growth():
    base = dict(kind="phase-vs-sde", n=300, m=600, c=3.0, replicas=150, lambda_grid=(2 * math.pi,))
    half = run_phase_vs_sde(ExperimentConfig(**base, epsilon=0.5))
    quarter = run_phase_vs_sde(ExperimentConfig(**base, epsilon=0.25))
    zero = half.per_lambda[0]
    assert zero["lambda"] == 0.0
    assert zero["matrix"]["mean"] == 0 and zero["matrix"]["var"] == 0
    assert zero["sde"]["mean"] == 0 and zero["sde"]["var"] == 0
    assert quarter.per_lambda[1]["matrix"]["var"] > half.per_lambda[1]["matrix"]["var"]
    assert quarter.per_lambda[1]["sde"]["var"] > half.per_lambda[1]["sde"]["var"]
    assert half.extra["ell"] == math.floor(half.extra["n0"] * 0.5)
