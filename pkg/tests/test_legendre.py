import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg

from spectral_deflation.legendre import (
    coeff_derivative,
    coeff_to_nodal,
    legendre_eval,
    legendre_series,
    legendre_vander,
    lgl_rule,
    nodal_derivative_matrix,
    nodal_to_coeff,
)


@pytest.mark.parametrize(
    "n, x, expected",
    [(3, 1.0, 1.0), (4, -1.0, 1.0), (0, 0.37, 1.0), (3, -1.0, -1.0), (2, 0.5, -0.125)],
)
def test_legendre_values(n, x, expected):
    assert legendre_eval(n, x) == pytest.approx(expected, abs=1e-15)


def test_legendre_eval_rejects_negative_degree():
    with pytest.raises(ValueError):
        legendre_eval(-1, 0.0)


@given(st.integers(0, 40), st.floats(-1, 1))
def test_legendre_matches_numpy(n, x):
    ref = npleg.legval(x, np.eye(n + 1)[n])
    assert legendre_eval(n, x) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("deriv", [1, 2, 3, 4])
def test_vander_derivatives_match_numpy(deriv):
    x = np.linspace(-1, 1, 13)
    V = legendre_vander(x, 12, deriv=deriv)
    for k in range(12):
        ref = npleg.legval(x, npleg.legder(np.eye(12)[k], deriv))
        np.testing.assert_allclose(V[:, k], ref, atol=1e-9 * (1 + np.abs(ref).max()))


def test_lgl_two_and_three_points():
    r1 = lgl_rule(1)
    np.testing.assert_allclose(r1.nodes, [-1, 1])
    np.testing.assert_allclose(r1.weights, [1, 1])
    r2 = lgl_rule(2)
    np.testing.assert_allclose(r2.nodes, [-1, 0, 1], atol=1e-15)
    np.testing.assert_allclose(r2.weights, [1 / 3, 4 / 3, 1 / 3], rtol=1e-14)


def test_lgl_x30_integral():
    rule = lgl_rule(16)
    assert rule.integrate(rule.nodes**30) == pytest.approx(2 / 31, abs=1e-12)


@pytest.mark.parametrize("N", [3, 8, 17, 40, 64])
def test_lgl_nodes_against_numpy_roots(N):
    # interior nodes are roots of L_N'; weights 2 / (N (N+1) L_N(x)^2)
    inner = np.sort(npleg.legroots(npleg.legder(np.eye(N + 1)[N])))
    rule = lgl_rule(N)
    np.testing.assert_allclose(rule.nodes[1:-1], inner, atol=1e-13)
    w = 2.0 / (N * (N + 1) * npleg.legval(rule.nodes, np.eye(N + 1)[N]) ** 2)
    np.testing.assert_allclose(rule.weights, w, rtol=1e-12)


@given(N=st.integers(2, 48), data=st.data())
def test_lgl_exact_to_degree_2n_minus_1(N, data):
    deg = data.draw(st.integers(0, 2 * N - 1))
    c = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=deg + 1, max_size=deg + 1)))
    rule = lgl_rule(N)
    exact = npleg.legval(1, npleg.legint(c)) - npleg.legval(-1, npleg.legint(c))
    assert rule.integrate(npleg.legval(rule.nodes, c)) == pytest.approx(exact, abs=1e-12)


def test_lgl_rejects_order_zero():
    with pytest.raises(ValueError):
        lgl_rule(0)


def test_transform_of_basis_function_and_constant():
    rule = lgl_rule(8)
    np.testing.assert_allclose(nodal_to_coeff(legendre_eval(2, rule.nodes), rule), np.eye(9)[2], atol=1e-14)
    np.testing.assert_allclose(nodal_to_coeff(np.full(9, 5.0), rule), 5 * np.eye(9)[0], atol=1e-14)


def test_transform_of_x5():
    rule = lgl_rule(8)
    # x^5 = (8 L5 + 28 L3 + 27 L1) / 63
    expected = np.zeros(9)
    expected[[1, 3, 5]] = [27 / 63, 28 / 63, 8 / 63]
    np.testing.assert_allclose(nodal_to_coeff(rule.nodes**5, rule), expected, atol=1e-14)
    np.testing.assert_allclose(expected, npleg.poly2leg([0, 0, 0, 0, 0, 1]).tolist() + [0] * 3, atol=1e-15)


def test_coeff_to_nodal_unit_vectors():
    rule = lgl_rule(6)
    np.testing.assert_allclose(coeff_to_nodal(np.eye(7)[0], rule), np.ones(7))
    np.testing.assert_allclose(coeff_to_nodal(np.eye(7)[1], rule), rule.nodes)


@given(N=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_transform_round_trip(N, seed):
    rule = lgl_rule(N)
    c = np.random.default_rng(seed).normal(size=N + 1)
    np.testing.assert_allclose(nodal_to_coeff(coeff_to_nodal(c, rule), rule), c, atol=1e-12)


def test_transform_rejects_wrong_length():
    with pytest.raises(ValueError):
        nodal_to_coeff(np.ones(5), lgl_rule(6))


def test_coeff_derivative_small_cases():
    np.testing.assert_allclose(coeff_derivative([0, 1, 0]), [1, 0, 0])
    np.testing.assert_allclose(coeff_derivative([0, 0, 1]), [0, 3, 0])


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_coeff_derivative_matches_numpy(c):
    c = np.array(c)
    ref = npleg.legder(c) if c.size > 1 else np.zeros(0)
    out = coeff_derivative(c)
    np.testing.assert_allclose(out[: ref.size], ref, atol=1e-9 * (1 + np.abs(ref).max(initial=0)))
    assert np.all(out[ref.size :] == 0)


def test_fourth_derivative_against_finite_differences():
    c = np.random.default_rng(3).normal(size=8)
    d4 = c.copy()
    for _ in range(4):
        d4 = coeff_derivative(d4)
    x = np.array([-0.6, -0.2, 0.1, 0.35, 0.7])
    h = 1e-2
    stencil = (
        legendre_series(c, x - 2 * h) - 4 * legendre_series(c, x - h) + 6 * legendre_series(c, x)
        - 4 * legendre_series(c, x + h) + legendre_series(c, x + 2 * h)
    ) / h**4
    exact = legendre_series(d4, x)
    # the five-point stencil is O(h^2) accurate; extrapolate once to remove it
    h2 = h / 2
    stencil2 = (
        legendre_series(c, x - 2 * h2) - 4 * legendre_series(c, x - h2) + 6 * legendre_series(c, x)
        - 4 * legendre_series(c, x + h2) + legendre_series(c, x + 2 * h2)
    ) / h2**4
    richardson = (4 * stencil2 - stencil) / 3
    np.testing.assert_allclose(richardson, exact, rtol=1e-6)


@given(N=st.integers(2, 32), seed=st.integers(0, 1000))
def test_nodal_derivative_exact_for_degree_n(N, seed):
    rule = lgl_rule(N)
    c = np.random.default_rng(seed).normal(size=N + 1)
    D = nodal_derivative_matrix(N)
    np.testing.assert_allclose(
        D @ legendre_series(c, rule.nodes), legendre_series(c, rule.nodes, 1), atol=1e-9 * N**2
    )
