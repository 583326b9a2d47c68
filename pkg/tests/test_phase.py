import math

import numpy as np
import pytest

from conftest import random_bulk_instance

from betabulk.ensembles import double, laguerre_batch, sample_laguerre
from betabulk.errors import OutsideBulkError, ParameterError, StepTooLargeError
from betabulk.hyperbolic import TWO_PI, apply_lifted
from betabulk.phase import (ConjugatedEntries, PhaseState, conjugated_entries,
                            conjugated_entries_from_chi, conjugated_matrix, conjugation_diagonal,
                            count_by_phase, grids, phase_state, raw_phase_sweep, raw_step,
                            regularized_phase_sweep, regularizer_direct, regularizers,
                            regularizing_map, target_phase_sweep)
from betabulk.rng import MATRIX, RngStream
from betabulk.spectral import scaling_params, sturm_count


def sturm_window(B, P, lam0, lam1):
    M = double(B)
    return sturm_count(M, float(P.Lambda(lam1))) - sturm_count(M, float(P.Lambda(lam0)))


def test_grids_identity():
    p, s = grids(12, 20)
    assert np.allclose(p[:12] ** 2 - s ** 2, 8)
    assert p.size == 13 and s.size == 12


def test_entries_definition(rng):
    B = sample_laguerre(5, 9, 2.0, rng)
    E = conjugated_entries(B)
    p, s = E.p, E.s
    for l in range(5):
        assert E.X[l] == pytest.approx(B.diag[l] ** 2 / p[l + 1] - p[l])
    for l in range(4):
        assert E.Y[l] == pytest.approx(B.subdiag[l] ** 2 / s[l + 1] - s[l])
    assert E.Y[-1] == 0.0


def test_conjugation_identity_small():
    for n, m in [(4, 7), (1, 3), (6, 8)]:
        for r in range(20):
            B = sample_laguerre(n, m, 1.5, RngStream(7, r))
            D = conjugation_diagonal(B)
            A = double(B).dense()
            conj = np.diag(1 / D) @ A @ np.diag(D)
            assert np.allclose(conj, conjugated_matrix(conjugated_entries(B)), atol=1e-10)


def test_entry_moments():
    n, m, beta, R = 50, 100, 1.0, 20_000
    d, s = laguerre_batch(n, m, beta, 1, range(R), MATRIX)
    E = conjugated_entries_from_chi(d, s, n, m, beta)
    for v in (E.X[:, 0], E.Y[:, 0]):
        se = np.std(v ** 2) / math.sqrt(R)
        assert abs(np.mean(v ** 2) - 2 / beta) < 3 * se + 2 / (m - 1)
        assert abs(np.mean(v)) < 5 * np.std(v) / math.sqrt(R) + 5 * (n - 1) ** -1.5


def test_regularizers_critical_center():
    # mu^2 = m - n makes n1 = 0 and every rho_l = i
    P = scaling_params(2.0, 100, 200, 10.0)
    R = regularizers(P)
    assert np.allclose(R.rho, 1j)


def test_regularizer_identities(rng):
    for _ in range(200):
        n, m, beta, P = random_bulk_instance(rng, (2, 500), (1, 500))
        R = regularizers(P)
        p, s = grids(n, m)
        ell = np.arange(R.rho.size)
        k = P.n0 - ell
        assert np.allclose(np.abs(R.rho), 1, atol=1e-12) and np.allclose(np.abs(R.rho_hat), 1, atol=1e-12)
        assert np.allclose(s[ell] * R.rho.imag, np.sqrt(k), rtol=1e-10)
        assert np.allclose(p[ell] * R.rho_hat.imag, np.sqrt(k), rtol=1e-10)
        assert np.all(np.sign(R.rho.real) * P.edge_side >= 0)
        assert np.allclose(np.abs(R.eta), 1, atol=1e-12)
        l = int(rng.integers(0, R.rho.size))
        rho, rho_hat = regularizer_direct(P, l)
        assert rho == pytest.approx(R.rho[l], abs=1e-9) and rho_hat == pytest.approx(R.rho_hat[l], abs=1e-9)


def test_eta_matches_sequential_product():
    P = scaling_params(1.0, 300, 420, 14.0)
    R = regularizers(P)
    acc, ref = 1.0 + 0j, []
    for r, rh in zip(R.rho, R.rho_hat):
        acc = acc * (r * rh) ** 2
        acc /= abs(acc)
        ref.append(acc)
    assert np.allclose(R.eta, ref, atol=1e-10)
    assert np.allclose(np.exp(1j * R.Q), R.eta)


def test_regularizers_out_of_bulk():
    P = scaling_params(2.0, 20, 30, 5.0)
    with pytest.raises(OutsideBulkError):
        regularizers(P, math.ceil(P.n0))
    B = sample_laguerre(20, 30, 2.0, RngStream(0))
    with pytest.raises(OutsideBulkError):
        regularized_phase_sweep(conjugated_entries(B), P, [0.0], math.ceil(P.n0))


def test_raw_sweep_monotone(rng):
    for _ in range(20):
        n, m, beta, P = random_bulk_instance(rng)
        E = conjugated_entries(sample_laguerre(n, m, beta, rng))
        grid = np.linspace(-30, 30, 61)
        st = raw_phase_sweep(E, P, grid)
        assert np.all(np.diff(st.phi) > 0)
        assert np.all(np.diff(target_phase_sweep(E, P, grid, 0, regularize=False)) < 0)


def test_raw_sweep_one_by_one():
    P = scaling_params(2.0, 1, 3, 1.2)
    B = sample_laguerre(1, 3, 2.0, RngStream(4))
    E = conjugated_entries(B)
    a = B.diag[0]
    lam_eig = (a - P.mu) * P.scale
    phi = raw_phase_sweep(E, P, [lam_eig, lam_eig + 0.3]).phi
    w = phi / TWO_PI
    assert abs(w[0] - round(w[0])) < 1e-9
    assert abs(w[1] - round(w[1])) > 1e-3


def test_raw_count_anchor_zero(rng):
    for _ in range(40):
        n, m, beta, P = random_bulk_instance(rng, (1, 10))
        B = sample_laguerre(n, m, beta, rng)
        grid = np.array([0.0, *rng.uniform(0.1, 40, 3)])
        st = phase_state(conjugated_entries(B), P, grid, n)
        assert np.all(st.phi_target == 0.0)
        for lam in grid[1:]:
            assert count_by_phase(st, 0.0, lam) == sturm_window(B, P, 0.0, lam)


def test_regularized_equals_conjugated_raw(rng):
    for _ in range(40):
        n, m, beta, P = random_bulk_instance(rng, (2, 50), (1, 30), min_n0=2)
        E = conjugated_entries(sample_laguerre(n, m, beta, rng))
        grid = np.array([-10.0, 0.0, 3.0, 15.0])
        R = regularizers(P)
        for ell in {0, 1, int(P.n0 // 2), math.ceil(P.n0) - 1}:
            raw = raw_phase_sweep(E, P, grid, ell).phi
            reg = regularized_phase_sweep(E, P, grid, ell, max_step=None, R=R).phi
            assert np.allclose(apply_lifted(regularizing_map(R, ell), raw), reg, atol=1e-8)


def test_alpha_zero_row(rng):
    n, m, beta, P = random_bulk_instance(rng, (10, 30), min_n0=3)
    E = conjugated_entries(sample_laguerre(n, m, beta, rng))
    st = regularized_phase_sweep(E, P, [-5.0, 0.0, 5.0], int(P.n0 // 2), max_step=None)
    assert np.all(st.alpha[..., 1] == 0.0)
    assert st.alpha[0] < 0 < st.alpha[2]
    with pytest.raises(ParameterError):
        PhaseState(0, np.array([1.0]), np.array([0.0])).alpha


def test_independence_of_halves(rng):
    n, m, beta, P = random_bulk_instance(rng, (10, 30), min_n0=4)
    B = sample_laguerre(n, m, beta, rng)
    E = conjugated_entries(B)
    ell = int(P.n0 // 2)
    grid = [0.0, 4.0]
    X2, Y2 = E.X.copy(), E.Y.copy()
    X2[ell:] += 0.3
    Y2[ell:-1] -= 0.1
    late = ConjugatedEntries(n, m, beta, E.p, E.s, X2, Y2)
    assert np.array_equal(raw_phase_sweep(E, P, grid, ell).phi, raw_phase_sweep(late, P, grid, ell).phi)
    X3, Y3 = E.X.copy(), E.Y.copy()
    X3[:ell] += 0.3
    Y3[:ell] -= 0.1
    early = ConjugatedEntries(n, m, beta, E.p, E.s, X3, Y3)
    assert np.array_equal(target_phase_sweep(E, P, grid, ell), target_phase_sweep(early, P, grid, ell))


def test_count_by_phase_properties(rng):
    for _ in range(30):
        n, m, beta, P = random_bulk_instance(rng, min_n0=3)
        B = sample_laguerre(n, m, beta, rng)
        grid = np.sort(rng.uniform(-25, 25, 6))
        for ell in (n, int(P.n0 // 2)):
            st = phase_state(conjugated_entries(B), P, grid, ell, max_step=None)
            d = st.phi - st.phi_target
            assert np.all(np.diff(d) > 0)
            assert count_by_phase(st, grid[2], grid[2]) == 0
            assert (count_by_phase(st, grid[0], grid[5])
                    == count_by_phase(st, grid[0], grid[3]) + count_by_phase(st, grid[3], grid[5]))


def test_exact_count_equivalence(rng):
    for _ in range(60):
        n, m, beta, P = random_bulk_instance(rng)
        B = sample_laguerre(n, m, beta, rng)
        E = conjugated_entries(B)
        grid = np.sort(rng.uniform(-20, 20, 5))
        for ell in {n, int(P.n0 // 2), max(P.n2, 0)}:
            st = phase_state(E, P, grid, ell, max_step=None)
            for i in range(4):
                assert count_by_phase(st, grid[i], grid[i + 1]) == sturm_window(B, P, grid[i], grid[i + 1])


def test_batched_sweep_matches_single(rng):
    n, m, beta = 12, 20, 2.0
    P = scaling_params(beta, n, m, 3.0)
    d, s = laguerre_batch(n, m, beta, 5, range(4), MATRIX)
    E = conjugated_entries_from_chi(d, s, n, m, beta)
    grid = [0.0, 2.0]
    ell = int(P.n0 // 2)
    batch = regularized_phase_sweep(E, P, grid, ell, max_step=None).phi
    for r in range(4):
        one = conjugated_entries_from_chi(d[r], s[r], n, m, beta)
        assert np.allclose(regularized_phase_sweep(one, P, grid, ell, max_step=None).phi, batch[r])


def test_step_guard_trips():
    P = scaling_params(2.0, 20, 40, 5.5)
    E = conjugated_entries(sample_laguerre(20, 40, 2.0, RngStream(1)))
    with pytest.raises(StepTooLargeError):
        regularized_phase_sweep(E, P, [0.0, 50.0], int(P.n0) - 1, max_step=1e-3)
    st = regularized_phase_sweep(E, P, [0.0, 1.0], 5, max_step=math.pi)
    assert 0 < st.max_step < math.pi


def test_raw_step_word_shape():
    P = scaling_params(2.0, 5, 8, 2.0)
    E = conjugated_entries(sample_laguerre(5, 8, 2.0, RngStream(0)))
    T = raw_step(E, P, 0, np.array([0.0, 1.0]))
    assert len(T.word) == 7
