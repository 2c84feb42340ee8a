"""Legendre polynomials, Legendre-Gauss-Lobatto quadrature and transforms.

Nodes are always stored in ascending order (``-1`` first).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when the LGL node iteration fails to converge."""


def legendre_eval(n: int, x):
    """Evaluate ``L_n(x)`` by the three-term recurrence.

    ``x`` may be a scalar or an array; the return has the same shape.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p if p.ndim else float(p)


def legendre_vander(x, m: int, deriv: int = 0) -> np.ndarray:
    """Matrix ``V[i, k] = L_k^{(deriv)}(x_i)`` for ``k = 0..m-1``.

    Derivatives are obtained column by column from
    ``L'_{k+1} = L'_{k-1} + (2k+1) L_k`` applied ``deriv`` times.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    V = np.zeros((x.size, m))
    if m == 0:
        return V
    V[:, 0] = 1.0
    if m > 1:
        V[:, 1] = x
    for k in range(1, m - 1):
        V[:, k + 1] = ((2 * k + 1) * x * V[:, k] - k * V[:, k - 1]) / (k + 1)
    for _ in range(deriv):
        D = np.zeros_like(V)
        for k in range(1, m):
            D[:, k] = (D[:, k - 2] if k >= 2 else 0.0) + (2 * k - 1) * V[:, k - 1]
        V = D
    return V


@dataclass(frozen=True)
class LglRule:
    """Legendre-Gauss-Lobatto rule with ``N + 1`` ascending nodes."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.order + 1

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=64)
def _lgl_cached(N: int) -> tuple[np.ndarray, np.ndarray]:
    # Newton on (1 - x^2) L_N'(x) for the interior nodes; the derivative
    # comes from the Legendre ODE: (1-x^2) L'' = 2x L' - N(N+1) L.
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    interior = x[1:-1].copy()
    for _ in range(100):
        V = legendre_vander(interior, N + 1, deriv=0)
        LN = V[:, N]
        dLN = legendre_vander(interior, N + 1, deriv=1)[:, N]
        d2LN = (2 * interior * dLN - N * (N + 1) * LN) / (1 - interior**2)
        step = dLN / d2LN
        interior -= step
        if np.max(np.abs(step), initial=0.0) < 1e-15:
            break
    else:
        raise QuadratureError(f"LGL node iteration did not converge for N={N}")
    x[1:-1] = interior
    x[0], x[-1] = -1.0, 1.0
    # enforce exact antisymmetry of the node set
    x = 0.5 * (x - x[::-1])
    LN = legendre_eval(N, x)
    w = 2.0 / (N * (N + 1) * LN**2)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def lgl_rule(N: int) -> LglRule:
    """LGL rule of order ``N``: nodes are the roots of ``(1-x^2) L_N'(x)``."""
    if N < 1:
        raise ValueError("LGL rule needs N >= 1")
    nodes, weights = _lgl_cached(int(N))
    return LglRule(int(N), nodes, weights)


def _check_size(n_values: int, rule: LglRule) -> None:
    if n_values != rule.size:
        raise ValueError(f"expected {rule.size} nodal values, got {n_values}")


def discrete_norms(N: int) -> np.ndarray:
    """Squared discrete LGL norms ``gamma_k`` of ``L_0..L_N``."""
    gamma = 2.0 / (2 * np.arange(N + 1) + 1.0)
    gamma[N] = 2.0 / N
    return gamma


@lru_cache(maxsize=64)
def _transform_matrices(N: int) -> tuple[np.ndarray, np.ndarray]:
    rule = lgl_rule(N)
    V = legendre_vander(rule.nodes, N + 1)
    forward = (V * rule.weights[:, None]).T / discrete_norms(N)[:, None]
    V.setflags(write=False)
    forward.setflags(write=False)
    return V, forward


def nodal_to_coeff(values, rule: LglRule) -> np.ndarray:
    """Discrete Legendre transform of values sampled at ``rule.nodes``.

    Works along the first axis, so a stack of columns is transformed at once.
    """
    values = np.asarray(values, dtype=float)
    _check_size(values.shape[0], rule)
    return _transform_matrices(rule.order)[1] @ values


def coeff_to_nodal(c, rule: LglRule) -> np.ndarray:
    """Evaluate ``sum_k c_k L_k`` at the rule nodes (coefficients beyond N allowed)."""
    c = np.asarray(c, dtype=float)
    if c.shape[0] == rule.size:
        return _transform_matrices(rule.order)[0] @ c
    return legendre_vander(rule.nodes, c.shape[0]) @ c


def coeff_derivative(c) -> np.ndarray:
    """Legendre coefficients of the derivative; the result has the same length.

    Backward recurrence ``d_{k-1} = (2k-1) (c_k + d_{k+1} / (2k+3))``.
    """
    c = np.asarray(c, dtype=float)
    m = c.shape[0]
    d = np.zeros_like(c)
    for k in range(m - 1, 0, -1):
        nxt = d[k + 1] / (2 * k + 3) if k + 1 < m else 0.0
        d[k - 1] = (2 * k - 1) * (c[k] + nxt)
    return d


def derivative_matrix(m: int) -> np.ndarray:
    """Matrix form of :func:`coeff_derivative` on length-``m`` vectors."""
    return coeff_derivative(np.eye(m))


@lru_cache(maxsize=64)
def nodal_derivative_matrix(N: int) -> np.ndarray:
    """Differentiation of the degree-N interpolant, nodal values to nodal values."""
    V, forward = _transform_matrices(N)
    D = V @ derivative_matrix(N + 1) @ forward
    D.setflags(write=False)
    return D


def legendre_series(c, x, deriv: int = 0) -> np.ndarray:
    """Evaluate a Legendre series (or its derivative) at arbitrary points."""
    c = np.asarray(c, dtype=float)
    return legendre_vander(x, c.shape[0], deriv=deriv) @ c
