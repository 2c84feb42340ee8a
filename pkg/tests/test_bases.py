import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg

from spectral_deflation.bases import (
    BASES,
    dirichlet_basis,
    dual_basis,
    dual_coefficient,
    mixed_bc_basis,
    mixed_coefficients,
    shen_dirichlet_basis,
    trial_basis,
    trial_coefficients,
)

ENDS = np.array([-1.0, 1.0])


def _endpoint(c, x, deriv):
    return npleg.legval(x, npleg.legder(c, deriv) if deriv else c)


def _solve_two_conditions(columns, conditions):
    """Coefficients (a, b) of ``col0 + a col1 + b col2`` meeting two linear endpoint conditions."""
    M = np.array([[_endpoint(columns[j], x, d) for j in (1, 2)] for x, d in conditions])
    rhs = -np.array([_endpoint(columns[0], x, d) for x, d in conditions])
    return np.linalg.solve(M, rhs)


def _J(n, size):
    c = np.zeros(size)
    c[n + 2] += 1
    c[n] -= 1
    return c


@pytest.mark.parametrize("k", range(0, 61, 3))
def test_trial_constants_match_linear_solve(k):
    size = k + 6
    a, b = _solve_two_conditions([_J(k, size), _J(k + 1, size), _J(k + 2, size)], [(1.0, 1), (-1.0, 2)])
    ak, bk = trial_coefficients(k)
    assert ak == pytest.approx(a, rel=1e-12, abs=1e-14)
    assert bk == pytest.approx(b, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("k", range(0, 61, 3))
def test_dual_constant_matches_condition(k):
    size = k + 5
    Jk, Jk2 = _J(k, size), _J(k + 2, size)
    c = -_endpoint(Jk, 1.0, 1) / _endpoint(Jk2, 1.0, 1)
    assert dual_coefficient(k) == pytest.approx(c, rel=1e-12)


@pytest.mark.parametrize("k", range(0, 61, 3))
def test_mixed_constants_match_linear_solve(k):
    cols = [np.eye(k + 3)[k], np.eye(k + 3)[k + 1], np.eye(k + 3)[k + 2]]
    a, b = _solve_two_conditions(cols, [(-1.0, 1), (1.0, 0)])
    ak, bk = mixed_coefficients(k)
    assert ak == pytest.approx(a, rel=1e-12)
    assert bk == pytest.approx(b, rel=1e-12)


def _max_at(basis, x, deriv):
    return np.max(np.abs(basis.values(np.atleast_1d(x), deriv)))


@given(st.integers(4, 64))
def test_channel_trial_bcs(N):
    phi = trial_basis(N)
    scale = N**4
    assert _max_at(phi, ENDS, 0) <= 1e-12 * scale
    assert _max_at(phi, 1.0, 1) <= 1e-12 * scale
    assert _max_at(phi, -1.0, 2) <= 1e-12 * scale


@given(st.integers(4, 64))
def test_channel_test_bcs(N):
    psi = dual_basis(N)
    scale = N**4
    assert _max_at(psi, ENDS, 0) <= 1e-12 * scale
    assert _max_at(psi, ENDS, 1) <= 1e-12 * scale


@given(st.integers(2, 64))
def test_mixed_bcs(N):
    psi = mixed_bc_basis(N)
    assert _max_at(psi, -1.0, 1) <= 1e-12 * N**2
    assert _max_at(psi, 1.0, 0) <= 1e-12


@given(st.integers(2, 64))
def test_dirichlet_bcs_and_sign_variant(N):
    for basis in (dirichlet_basis(N), shen_dirichlet_basis(N)):
        assert _max_at(basis, ENDS, 0) == 0.0
    np.testing.assert_array_equal(shen_dirichlet_basis(N).coeffs, -dirichlet_basis(N).coeffs)


def test_first_dirichlet_function():
    x = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(dirichlet_basis(4).values(x)[:, 0], 1.5 * x**2 - 1.5, atol=1e-15)


@pytest.mark.parametrize(
    "factory, N, size",
    [(dirichlet_basis, 10, 9), (trial_basis, 10, 7), (dual_basis, 10, 7), (mixed_bc_basis, 10, 9)],
)
def test_basis_sizes_and_independence(factory, N, size):
    basis = factory(N)
    assert basis.size == size
    assert np.linalg.matrix_rank(basis.coeffs) == size


def test_registry_names_match():
    for name, factory in BASES.items():
        assert factory(8).name == name


@pytest.mark.parametrize("factory", [trial_basis, dual_basis])
def test_fourth_order_bases_need_n4(factory):
    with pytest.raises(ValueError):
        factory(3)
