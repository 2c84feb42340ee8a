"""Boundary-adapted bases built as compact combinations of Legendre polynomials.

Each basis stores a coefficient matrix ``C`` with ``phi_k = sum_i C[i, k] L_i``,
so values and derivatives anywhere come from one Vandermonde product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .legendre import legendre_vander


@dataclass(frozen=True)
class ModalBasis:
    name: str
    N: int
    coeffs: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    def values(self, x, deriv: int = 0) -> np.ndarray:
        """``out[i, k] = phi_k^{(deriv)}(x_i)``."""
        return legendre_vander(x, self.coeffs.shape[0], deriv=deriv) @ self.coeffs

    def to_legendre(self, u) -> np.ndarray:
        return self.coeffs @ np.asarray(u, dtype=float)

    def describe(self) -> dict:
        return {"name": self.name, "N": self.N, "size": self.size}


def _j_columns(N: int, k: int) -> np.ndarray:
    """Legendre coefficients of ``J_k = L_{k+2} - L_k`` (length N+1)."""
    col = np.zeros(N + 1)
    col[k + 2] += 1.0
    col[k] -= 1.0
    return col


def dirichlet_basis(N: int) -> ModalBasis:
    """``phi_k = L_{k+2} - L_k`` for ``k = 0..N-2``; vanishes at both ends."""
    if N < 2:
        raise ValueError("Dirichlet basis needs N >= 2")
    C = np.column_stack([_j_columns(N, k) for k in range(N - 1)])
    return ModalBasis("dirichlet", N, C)


def shen_dirichlet_basis(N: int) -> ModalBasis:
    """``phi_k = L_k - L_{k+2}``: the Dirichlet basis with the opposite sign.

    Spans the same space as :func:`dirichlet_basis`, so Galerkin roots agree;
    only the coordinates of a given starting vector differ.
    """
    base = dirichlet_basis(N)
    return ModalBasis("dirichlet_shen", N, -base.coeffs)


def trial_coefficients(k):
    """(a_k, b_k) making ``J_k + a_k J_{k+1} + b_k J_{k+2}`` satisfy
    ``phi'(1) = phi''(-1) = 0``."""
    k = np.asarray(k, dtype=float)
    a = -(2 * k + 3) / (k + 3) ** 2
    b = -((k + 2) ** 2) * (2 * k + 3) / ((k + 3) ** 2 * (2 * k + 7))
    return a, b


def dual_coefficient(k):
    """c_k making ``J_k + c_k J_{k+2}`` satisfy ``psi'(+-1) = 0``."""
    k = np.asarray(k, dtype=float)
    return -(2 * k + 3) / (2 * k + 7)


def trial_basis(N: int) -> ModalBasis:
    """Trial space for the channel problem: ``phi(+-1) = phi'(1) = phi''(-1) = 0``."""
    if N < 4:
        raise ValueError("trial basis needs N >= 4")
    cols = []
    for k in range(N - 3):
        a, b = trial_coefficients(k)
        cols.append(_j_columns(N, k) + a * _j_columns(N, k + 1) + b * _j_columns(N, k + 2))
    return ModalBasis("channel_trial", N, np.column_stack(cols))


def dual_basis(N: int) -> ModalBasis:
    """Test space for the channel problem: ``psi(+-1) = psi'(+-1) = 0``."""
    if N < 4:
        raise ValueError("test basis needs N >= 4")
    cols = [_j_columns(N, k) + dual_coefficient(k) * _j_columns(N, k + 2) for k in range(N - 3)]
    return ModalBasis("channel_test", N, np.column_stack(cols))


def mixed_coefficients(k):
    """(a_k, b_k) making ``L_k + a_k L_{k+1} + b_k L_{k+2}`` satisfy
    ``psi'(-1) = psi(1) = 0``; solved from ``1 + a + b = 0`` and the
    endpoint derivative identity ``L_n'(-1) = (-1)^(n-1) n(n+1) / 2``."""
    k = np.asarray(k, dtype=float)
    a = -(2 * k + 3) / (k + 2) ** 2
    b = -((k + 1) ** 2) / (k + 2) ** 2
    return a, b


def mixed_bc_basis(N: int) -> ModalBasis:
    """``psi'(-1) = psi(1) = 0`` for ``k = 0..N-2``."""
    if N < 2:
        raise ValueError("mixed basis needs N >= 2")
    cols = []
    for k in range(N - 1):
        col = np.zeros(N + 1)
        col[k] = 1.0
        col[k + 1], col[k + 2] = mixed_coefficients(k)
        cols.append(col)
    return ModalBasis("mixed_neumann_dirichlet", N, np.column_stack(cols))


BASES = {
    "dirichlet": dirichlet_basis,
    "dirichlet_shen": shen_dirichlet_basis,
    "channel_trial": trial_basis,
    "channel_test": dual_basis,
    "mixed_neumann_dirichlet": mixed_bc_basis,
}
