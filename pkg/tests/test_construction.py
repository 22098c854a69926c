import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mindiag.construction import solve_orthogonal_diagonal, verify_caso3
from mindiag.errors import ParameterError, ZeroPivotError
from mindiag.operators import (
    GammaFamilySpec,
    buffer_size,
    build_d_sequence,
    build_gamma_T,
    build_TrPlusD,
)
from mindiag.solver import oracle_grid
from mindiag.spectral import op_norm


def compliant(seed: int, n: int, i0: int) -> np.ndarray:
    """Random matrix meeting all four hypotheses at i0.

    The orthogonalizing diagonal is invariant under scaling of the i0 border,
    so the border is scaled up afterwards until it dominates.
    """
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n))
    b = b + b.T
    np.fill_diagonal(b, 0.0)
    c = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
    c[i0] = 0.0
    b[i0, :] = c
    b[:, i0] = c
    d = solve_orthogonal_diagonal(b, i0).d
    t = b + np.diag(d)
    inner = t.copy()
    inner[i0, :] = 0.0
    inner[:, i0] = 0.0
    factor = max(1.0, 1.5 * op_norm(inner) / np.linalg.norm(c))
    t[i0, :] *= factor
    t[:, i0] *= factor
    return t


def test_caso3_example(caso3):
    rep = verify_caso3(caso3, 0)
    assert rep.all_hold
    assert rep.op_norm == pytest.approx(math.sqrt(2), abs=1e-14)
    assert np.allclose(rep.minimal_diag.d, np.diag(caso3), atol=1e-15)
    assert rep.norm_identity_residual <= 1e-14
    # brute force: no diagonal change lowers the norm
    assert oracle_grid(caso3) >= op_norm(caso3) - 1e-6


def test_exchange_example(exchange):
    rep = verify_caso3(exchange, 0)
    assert rep.all_hold
    assert rep.op_norm == pytest.approx(1.0) and rep.column_norm == pytest.approx(1.0)


def test_TrPlusD_satisfies_hypotheses():
    rep = verify_caso3(build_TrPlusD(GammaFamilySpec(0.5, 40)), 0)
    assert rep.all_hold, rep
    assert rep.norm_identity_residual <= 1e-9 * rep.op_norm


def test_TrPlusD_long_truncation_border_falls_below_zero_threshold():
    # at n = 80 the border entries r*gamma^79 are below 1e-13 * max|T|
    rep = verify_caso3(build_TrPlusD(GammaFamilySpec(0.5, 80)), 0)
    assert not rep.hyp2_nonzero_row
    assert rep.hyp3_dominance and rep.hyp4_orthogonality
    assert rep.norm_identity_residual <= 1e-9 * rep.op_norm


def test_failing_hypotheses_are_reported():
    rep = verify_caso3(np.diag([2.0, 1.0]), 0)
    assert not rep.hyp2_nonzero_row and not rep.all_hold
    t = np.array([[0.0, 0.1, 0.1], [0.1, 0.0, 5.0], [0.1, 5.0, 0.0]])
    rep = verify_caso3(t, 0)
    assert not rep.hyp3_dominance and rep.dominance_margin < 0


def test_index_range():
    with pytest.raises(IndexError):
        verify_caso3(np.zeros((2, 2)), 2)


def test_orthogonal_diagonal_three_by_three():
    for t in (0.5, -1.25, 3.0):
        off = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, t], [1.0, t, 0.0]])
        d = solve_orthogonal_diagonal(off, 0).d
        assert np.allclose(d, [0.0, -t, -t], atol=1e-15)
        a = off + np.diag(d)
        assert np.allclose(a[:, 0] @ a[:, 1:], 0.0, atol=1e-15)


def test_orthogonal_diagonal_matches_gamma_closed_form():
    g, n = 0.5, 8
    big = n + buffer_size(g, 1e-17)
    d = solve_orthogonal_diagonal(build_gamma_T(GammaFamilySpec(g, big)).entries, 0).d
    ref = build_d_sequence(GammaFamilySpec(g, n)).d
    assert np.allclose(d[3:n], ref[3:], rtol=0, atol=1e-13)


def test_zero_pivot_names_index():
    off = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 2.0], [0.0, 2.0, 0.0]])
    with pytest.raises(ZeroPivotError) as err:
        solve_orthogonal_diagonal(off, 0)
    assert err.value.index == 2
    assert "2" in str(err.value)


def test_nonzero_diagonal_rejected():
    with pytest.raises(ParameterError):
        solve_orthogonal_diagonal(np.eye(2), 0)


@given(st.integers(0, 2**31 - 1), st.integers(2, 10), st.data())
def test_norm_identity_when_hypotheses_hold(seed, n, data):
    i0 = data.draw(st.integers(0, n - 1))
    t = compliant(seed, n, i0)
    rep = verify_caso3(t, i0)
    assert rep.all_hold
    assert rep.norm_identity_residual <= 1e-9 * rep.op_norm


@given(st.integers(0, 2**31 - 1), st.integers(2, 10), st.data())
def test_orthogonal_diagonal_is_unique_solution(seed, n, data):
    i0 = data.draw(st.integers(0, n - 1))
    rng = np.random.default_rng(seed)
    off = rng.standard_normal((n, n))
    off = off + off.T
    np.fill_diagonal(off, 0.0)
    d = solve_orthogonal_diagonal(off, i0).d
    # the linear system in the unknowns d_k (k != i0), solved independently
    idx = [k for k in range(n) if k != i0]
    c = off[:, i0]
    A = np.diag(c[idx])
    rhs = -np.array([c @ off[:, k] for k in idx])
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    assert d[i0] == 0.0
    assert np.allclose(d[idx], sol, rtol=1e-12, atol=1e-12)


@settings(max_examples=8)
@given(st.integers(0, 2**31 - 1), st.integers(2, 3))
def test_compliant_matrices_are_locally_minimal(seed, n):
    t = compliant(seed, n, 0)
    assert oracle_grid(t) >= op_norm(t) - 1e-6
