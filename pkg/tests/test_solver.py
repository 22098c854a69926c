import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mindiag.certificates import certified_lower_bound, trace_norm
from mindiag.errors import SizeError
from mindiag.operators import GammaFamilySpec, with_diag
from mindiag.solver import (
    SolverOptions,
    min_diag_norm,
    objective,
    oracle_grid,
    subgradient,
    sweep_quotient_norm,
)

from conftest import random_symmetric

seeds = st.integers(0, 2**31 - 1)


@pytest.mark.parametrize("b", [1.0, -2.5, 1e-3])
def test_exchange(b):
    res = min_diag_norm(np.array([[0.0, b], [b, 0.0]]))
    assert res.upper == pytest.approx(abs(b), rel=1e-12)
    assert np.allclose(res.d_star.d, 0.0, atol=1e-9 * abs(b))
    assert res.status == "converged"


def test_caso3_off_diagonal_part():
    c = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.5], [1.0, 0.5, 0.0]])
    res = min_diag_norm(c)
    assert res.upper == pytest.approx(math.sqrt(2), abs=1e-8)
    assert np.allclose(res.d_star.d, [0.0, -0.5, -0.5], atol=1e-6)
    assert res.gap <= 1e-8


def test_zero_and_diagonal_inputs():
    res = min_diag_norm(np.zeros((3, 3)))
    assert res.upper == 0.0 and res.lower == 0.0 and res.status == "converged"
    assert np.array_equal(res.d_star.d, np.zeros(3))
    res = min_diag_norm(np.diag([2.0, -1.0]))
    assert res.upper == 0.0
    assert np.array_equal(res.d_star.d, [-2.0, 1.0])


def test_iteration_cap_is_reported():
    c = random_symmetric(np.random.default_rng(0), 6)
    res = min_diag_norm(c, SolverOptions(max_iters=1, polish_iters=0, tol=1e-12))
    assert res.status == "iter_cap"
    assert res.gap > 1e-12 * res.upper


def test_deterministic_given_seed():
    c = random_symmetric(np.random.default_rng(4), 7)
    opts = SolverOptions(multistart=3, seed=11)
    r1, r2 = min_diag_norm(c, opts), min_diag_norm(c, opts)
    assert np.array_equal(r1.d_star.d, r2.d_star.d) and r1.upper == r2.upper


@settings(max_examples=25)
@given(seeds, st.integers(2, 9))
def test_result_invariants(seed, n):
    c = random_symmetric(np.random.default_rng(seed), n)
    res = min_diag_norm(c)
    assert res.upper >= 0
    assert res.lower <= res.upper + 1e-12
    assert res.upper == pytest.approx(objective(c, res.d_star.d), rel=1e-14)
    assert res.status == "converged"
    assert res.gap <= 1e-6 * res.upper


@settings(max_examples=25)
@given(seeds, st.integers(2, 9))
def test_weak_duality_of_certificate(seed, n):
    c = random_symmetric(np.random.default_rng(seed), n)
    res = min_diag_norm(c)
    assume(res.certificate is not None)
    x = res.certificate.X
    delta = float(np.max(np.abs(np.diag(x))))
    assert trace_norm(x) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.sum(x * c)) <= res.upper + delta * np.max(np.abs(res.d_star.d)) + 1e-10


@settings(max_examples=15)
@given(seeds, st.integers(2, 7))
def test_lower_bound_is_rigorous(seed, n):
    # any diagonal gives an upper bound on the quotient norm; the certified
    # lower bound built at a random point must not exceed it
    rng = np.random.default_rng(seed)
    c = random_symmetric(rng, n)
    lower, _, _ = certified_lower_bound(c, rng.standard_normal(n))
    best = min_diag_norm(c).upper
    assert lower <= best + 1e-12


@settings(max_examples=15)
@given(seeds, st.integers(2, 7))
def test_translation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    c = random_symmetric(rng, n)
    e = rng.standard_normal(n)
    r1 = min_diag_norm(c)
    r2 = min_diag_norm(with_diag(c, e))
    assert r2.upper == pytest.approx(r1.upper, rel=1e-6)
    # minimizers need not be unique; compare objective values of the mapped points
    assert objective(c, r2.d_star.d + e) == pytest.approx(r1.upper, rel=1e-6)


@given(seeds, st.integers(1, 8))
def test_objective_convexity(seed, n):
    rng = np.random.default_rng(seed)
    c = random_symmetric(rng, n)
    d1, d2 = rng.standard_normal(n), rng.standard_normal(n)
    mid = objective(c, 0.5 * (d1 + d2))
    assert mid <= 0.5 * (objective(c, d1) + objective(c, d2)) + 1e-10


@given(seeds, st.integers(2, 8))
def test_subgradient_matches_finite_differences(seed, n):
    rng = np.random.default_rng(seed)
    c = random_symmetric(rng, n)
    d = rng.standard_normal(n)
    lam = np.linalg.eigvalsh(with_diag(c, d))
    # simple, well separated active extreme
    assume(abs(lam[-1] + lam[0]) > 1e-2)
    assume(lam[-1] - lam[-2] > 1e-2 and lam[1] - lam[0] > 1e-2)
    g = subgradient(c, d)
    h = 1e-6
    f0 = objective(c, d)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        assert (objective(c, d + e) - f0) / h == pytest.approx(g[k], abs=1e-5)


def test_oracle_examples():
    assert oracle_grid([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(1.0, abs=1e-4)
    assert oracle_grid(np.diag([5.0, -5.0])) == pytest.approx(0.0, abs=1e-4)


def test_oracle_agrees_with_solver_on_seeded_3x3():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        c = random_symmetric(rng, 3)
        o = oracle_grid(c)
        assert abs(min_diag_norm(c).upper - o) <= 1e-3 * (1 + o)


def test_oracle_grid_only_is_still_an_upper_bound():
    c = random_symmetric(np.random.default_rng(9), 3)
    coarse = oracle_grid(c, refine=False)
    assert coarse >= min_diag_norm(c).upper - 1e-12
    assert coarse >= oracle_grid(c) - 1e-12


def test_oracle_size_limit():
    with pytest.raises(SizeError):
        oracle_grid(np.zeros((5, 5)))


@pytest.fixture(scope="module")
def tr_sweep():
    spec = GammaFamilySpec(0.5, 80, "Tr")
    return sweep_quotient_norm(spec, [20, 40, 80], SolverOptions(), track=(10, 20, 30))


def test_sweep_mid_range_entries_approach_limit(tr_sweep):
    last = tr_sweep[-1]
    for k in (10, 20, 30):
        assert abs(last[f"d_{k}"] + 2.0) <= 2.0 * 0.5 ** (k - 2)
    errs = [abs(row["d_10"] + 2.0) for row in tr_sweep]
    assert errs[-1] <= errs[0] + 1e-12


def test_sweep_upper_nondecreasing(tr_sweep):
    uppers = [row["upper"] for row in tr_sweep]
    assert all(b >= a - 1e-12 for a, b in zip(uppers, uppers[1:]))


def test_sweep_gap(tr_sweep):
    for row in tr_sweep:
        assert row["gap"] <= 1e-4 * row["upper"]
        assert row["status"] == "converged"


def test_sweep_tracks_missing_index_as_nan():
    rows = sweep_quotient_norm(GammaFamilySpec(0.5, 6, "T"), [4, 6], SolverOptions(), track=(5,))
    assert math.isnan(rows[0]["d_5"]) and not math.isnan(rows[1]["d_5"])


def test_sweep_parallel_matches_serial():
    spec = GammaFamilySpec(0.5, 12, "Tr")
    serial = sweep_quotient_norm(spec, [6, 12], SolverOptions(), track=(3,))
    pooled = sweep_quotient_norm(spec, [6, 12], SolverOptions(), track=(3,), jobs=2)
    assert serial == pooled
