import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mindiag.errors import DegenerateSpectrumError, ParameterError
from mindiag.operators import GammaFamilySpec, block_compose, build_gamma_T, build_TrPlusD
from mindiag.spectral import (
    CLUSTER_TOL,
    balanced_spectrum_check,
    eig_sym,
    op_norm,
    spectral_projections,
    verify_vpm,
)

from conftest import random_symmetric

seeds = st.integers(0, 2**31 - 1)
sizes = st.integers(1, 12)


def test_exchange_eigensystem(exchange):
    es = eig_sym(exchange)
    assert np.allclose(es.eigenvalues, [-1.0, 1.0], atol=1e-15)
    s = 1 / math.sqrt(2)
    assert np.allclose(es.eigenvectors[:, 0], [s, -s], atol=1e-15)
    assert np.allclose(es.eigenvectors[:, 1], [s, s], atol=1e-15)


def test_identity_eigenvalues():
    assert np.array_equal(eig_sym(np.eye(3)).eigenvalues, [1.0, 1.0, 1.0])


def test_gamma_family_residual():
    t = build_gamma_T(GammaFamilySpec(0.5, 40))
    es = eig_sym(t)
    assert es.residual <= 1e-10 * max(1.0, es.norm)
    assert abs(es.lam_max - np.linalg.eigvalsh(t.entries)[-1]) <= 1e-12


def test_eig_sym_is_deterministic():
    a = random_symmetric(np.random.default_rng(3), 9)
    e1, e2 = eig_sym(a), eig_sym(a)
    assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
    assert np.array_equal(e1.eigenvectors, e2.eigenvectors)


def test_eig_sym_rejects_non_square():
    with pytest.raises(ParameterError):
        eig_sym(np.zeros((2, 3)))


@given(seeds, sizes)
def test_decomposition_invariants(seed, n):
    a = random_symmetric(np.random.default_rng(seed), n) * 10.0 ** np.random.default_rng(seed).integers(-3, 4)
    es = eig_sym(a)
    nrm = max(1.0, es.norm)
    v, w = es.eigenvectors, es.eigenvalues
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-10
    assert es.residual <= 1e-10 * nrm
    assert np.linalg.norm((v * w) @ v.T - a, 2) <= 1e-9 * nrm
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-11 * nrm)


def test_warm_start_matches_cold():
    rng = np.random.default_rng(5)
    a = random_symmetric(rng, 15)
    b = a + 1e-3 * random_symmetric(rng, 15)
    warm = eig_sym(b, warm_start=eig_sym(a).eigenvectors)
    cold = eig_sym(b)
    assert np.allclose(warm.eigenvalues, cold.eigenvalues, atol=1e-13)
    assert warm.sweeps <= cold.sweeps


def test_op_norm_examples(exchange, caso3):
    assert op_norm(np.array([[0.0, -3.5], [-3.5, 0.0]])) == pytest.approx(3.5, abs=1e-15)
    assert op_norm(caso3) == pytest.approx(np.linalg.norm(caso3[:, 0]), abs=1e-14)
    a = random_symmetric(np.random.default_rng(1), 3)
    assert op_norm(block_compose(a, 2 * exchange)) == pytest.approx(max(op_norm(a), 2.0), abs=1e-14)


@given(seeds, st.integers(1, 8), st.floats(-5, 5))
def test_op_norm_is_a_norm(seed, n, c):
    rng = np.random.default_rng(seed)
    a, b = random_symmetric(rng, n), random_symmetric(rng, n)
    assert op_norm(a + b) <= op_norm(a) + op_norm(b) + 1e-10
    assert op_norm(c * a) == pytest.approx(abs(c) * op_norm(a), abs=1e-10)


def test_projections_exchange(exchange):
    p = spectral_projections(eig_sym(exchange))
    assert (p.r, p.s) == (1, 1)
    assert np.allclose(p.plus_basis[:, 0], [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_projections_multiplicity():
    p = spectral_projections(eig_sym(np.diag([1.0, 1.0, -1.0])))
    assert (p.r, p.s) == (2, 1)


def test_projections_caso3(caso3):
    p = spectral_projections(eig_sym(caso3))
    c = caso3[:, 0]
    cn = np.linalg.norm(c)
    vp = (cn * np.eye(3)[0] + c) / (math.sqrt(2) * cn)
    assert p.r == 1
    assert abs(abs(p.plus_basis[:, 0] @ vp) - 1.0) <= 1e-14


def test_projections_degenerate():
    with pytest.raises(DegenerateSpectrumError):
        spectral_projections(eig_sym(np.eye(3)))
    with pytest.raises(DegenerateSpectrumError):
        spectral_projections(eig_sym(np.zeros((2, 2))))


@given(seeds, st.integers(2, 8))
def test_projection_bases_reproduce(seed, n):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, n)
    es = eig_sym(a)
    p = spectral_projections(es, CLUSTER_TOL)
    assert np.max(np.abs(p.plus_basis.T @ p.minus_basis)) <= 1e-10
    for v in p.plus_basis.T:
        assert np.linalg.norm(a @ v - p.lam_max * v) <= CLUSTER_TOL * es.norm + 1e-12
    for v in p.minus_basis.T:
        assert np.linalg.norm(a @ v - p.lam_min * v) <= CLUSTER_TOL * es.norm + 1e-12


def test_balanced_examples(exchange):
    assert balanced_spectrum_check(exchange, 1e-8) == (True, 0.0)
    ok, res = balanced_spectrum_check(np.diag([2.0, 1.0]), 1e-8)
    assert not ok and res == pytest.approx(3.0)


def test_balanced_TrPlusD():
    ok, res = balanced_spectrum_check(build_TrPlusD(GammaFamilySpec(0.5, 80)), 1e-8)
    assert ok, res


def test_vpm_caso3_and_exchange(caso3, exchange):
    rp, rm = verify_vpm(caso3, 0)
    assert max(rp, rm) <= 1e-12
    assert verify_vpm(exchange, 0) == (0.0, 0.0)


def test_vpm_preconditions():
    with pytest.raises(ParameterError):
        verify_vpm(np.array([[1.0, 1.0], [1.0, 0.0]]), 0)
    with pytest.raises(DegenerateSpectrumError):
        verify_vpm(np.zeros((2, 2)), 0)
