"""Legendre-Galerkin discretization of ``-a Lap(u) + r(u) = f`` on ``(-1, 1)^2``.

The unknown is the coefficient matrix ``U[k, j]`` of ``sum U[k, j] phi_k(x) phi_j(y)``
with ``phi_k = L_{k+2} - L_k``, flattened column-major (``k`` runs fastest).
The linear part is ``a (A kron B + B kron A^T) u``; nonlinear and source
terms are evaluated pseudospectrally on the ``(N+1)^2`` LGL grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bases import dirichlet_basis
from .legendre import LglRule, legendre_vander, lgl_rule, nodal_to_coeff
from .system import DiscretizedSystem, check_finite


@dataclass(frozen=True)
class GalerkinMatrices:
    A: np.ndarray
    B: np.ndarray


def assemble_matrices(N: int) -> GalerkinMatrices:
    """Closed-form stiffness ``A`` (diagonal) and mass ``B`` (pentadiagonal)."""
    if N < 3:
        raise ValueError("need N >= 3 for a nontrivial interior basis")
    k = np.arange(N - 1, dtype=float)
    A = np.diag(2.0 * (2 * k + 3))
    B = np.diag(2.0 / (2 * k + 1) + 2.0 / (2 * k + 5))
    off = -2.0 / (2 * k[:-2] + 5)
    B += np.diag(off, 2) + np.diag(off, -2)
    return GalerkinMatrices(A, B)


def vec(U: np.ndarray) -> np.ndarray:
    return np.asarray(U).reshape(-1, order="F")


def unvec(u: np.ndarray, m: int) -> np.ndarray:
    return np.asarray(u).reshape((m, m), order="F")


def smoothing_ramp(y, kappa: float, height: float = 2.0) -> np.ndarray:
    """C^2 plateau of value ``height`` that ramps to zero within ``kappa`` of ``+-1``."""
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    y = np.asarray(y, dtype=float)
    out = np.full_like(y, height)
    lo = y <= -1 + kappa
    hi = y >= 1 - kappa
    t = 2 * y[lo] + 2 - kappa
    out[lo] = height * (0.5 + t / (2 * kappa) + np.sin(np.pi * t / kappa) / (2 * np.pi))
    t = 2 * y[hi] - 2 + kappa
    out[hi] = height - height * (0.5 + t / (2 * kappa) + np.sin(np.pi * t / kappa) / (2 * np.pi))
    return out


@dataclass(frozen=True)
class Lifting2D:
    """Transfinite lifting of edge data ``g1(y)`` (x=1), ``g2(x)`` (y=1),
    ``g3(y)`` (x=-1), ``g4(x)`` (y=-1)."""

    g1: Callable
    g2: Callable
    g3: Callable
    g4: Callable
    kappa: float | None = None

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        one = np.ones(1)
        corner = lambda g, s: float(np.asarray(g(s * one))[0])  # noqa: E731
        return 0.25 * (
            2 * (1 - y) * self.g4(x)
            + 2 * (1 + y) * self.g2(x)
            + 2 * (1 - x) * self.g3(y)
            + 2 * (1 + x) * self.g1(y)
            - (1 - x) * (1 - y) * corner(self.g3, -1.0)
            - (1 - x) * (1 + y) * corner(self.g2, -1.0)
            - (1 + x) * (1 - y) * corner(self.g4, 1.0)
            - (1 + x) * (1 + y) * corner(self.g1, 1.0)
        )


def make_lifting(edges: dict, kappa: float) -> Lifting2D:
    """Lifting for piecewise-constant edge values.

    ``edges`` maps ``right``/``top``/``left``/``bottom`` to constants. Nonzero
    edges are smoothed by :func:`smoothing_ramp` so the data vanish at the
    corners, which makes them compatible with zero-valued neighbours.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")

    def edge(value):
        value = float(value)
        if value == 0.0:
            return lambda s: np.zeros_like(np.asarray(s, dtype=float))
        return lambda s: smoothing_ramp(s, kappa, height=value)

    return Lifting2D(
        g1=edge(edges.get("right", 0.0)),
        g2=edge(edges.get("top", 0.0)),
        g3=edge(edges.get("left", 0.0)),
        g4=edge(edges.get("bottom", 0.0)),
        kappa=kappa,
    )


def interpolate_source(f: Callable, rule: LglRule) -> np.ndarray:
    """``f_kj = (I_N f, phi_k(x) phi_j(y))`` by tensor LGL quadrature."""
    Phi = dirichlet_basis(rule.order).values(rule.nodes)
    X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    F = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    w = rule.weights
    return vec(Phi.T @ (w[:, None] * F * w[None, :]) @ Phi)


class Galerkin2DSystem(DiscretizedSystem):
    """Residual ``a K u + a l + (I_N r(u + G), phi phi) - (I_N f, phi phi)``.

    ``K = A kron B + B kron A^T`` and ``l`` is the stiffness coupling of the
    interpolated lifting ``I_N G``. ``offset`` is added when reporting
    values in the problem's own variable.
    """

    def __init__(
        self,
        N: int,
        diffusion: float,
        reaction: Callable,
        dreaction: Callable,
        d2reaction: Callable | None = None,
        source: Callable | None = None,
        lifting: Lifting2D | None = None,
        offset: float = 0.0,
        problem_id: str = "galerkin2d",
        params: dict | None = None,
    ):
        self.N = N
        self.mats = assemble_matrices(N)
        self.basis = dirichlet_basis(N)
        self.rule = lgl_rule(N)
        self.m = N - 1
        self.n = self.m**2
        self.diffusion = float(diffusion)
        self.reaction = reaction
        self.dreaction = dreaction
        self.d2reaction = d2reaction
        self.offset = float(offset)
        self.lifting = lifting
        self.problem_id = problem_id
        self.params = dict(params or {})

        A, B = self.mats.A, self.mats.B
        self.K = np.kron(A, B) + np.kron(B, A.T)
        self.Phi = self.basis.values(self.rule.nodes)
        self.T = np.kron(self.Phi, self.Phi)
        w = self.rule.weights
        self.w2 = np.kron(w, w)
        X, Y = np.meshgrid(self.rule.nodes, self.rule.nodes, indexing="ij")
        if lifting is None:
            self.G = np.zeros((N + 1, N + 1))
            self.lift_stiffness = np.zeros(self.n)
        else:
            self.G = np.asarray(lifting(X, Y), dtype=float)
            self.G_coeffs = lifting_coefficients(self.G, self.rule)
            self.lift_stiffness = self._lifting_stiffness()
        self.g_nodal = vec(self.G)
        self.f = np.zeros(self.n) if source is None else interpolate_source(source, self.rule)

    def _lifting_stiffness(self) -> np.ndarray:
        # exact (grad I_N G, grad phi_k phi_j) on a rule of one order higher
        fine = lgl_rule(self.N + 1)
        Gc = self.G_coeffs
        Vf = legendre_vander(fine.nodes, self.N + 1)
        Vf1 = legendre_vander(fine.nodes, self.N + 1, deriv=1)
        Gx = Vf1 @ Gc @ Vf.T
        Gy = Vf @ Gc @ Vf1.T
        P = self.basis.values(fine.nodes)
        P1 = self.basis.values(fine.nodes, deriv=1)
        W = fine.weights
        out = P1.T @ (W[:, None] * Gx * W[None, :]) @ P + P.T @ (W[:, None] * Gy * W[None, :]) @ P1
        return vec(out)

    def nodal(self, u: np.ndarray) -> np.ndarray:
        """Values of ``w_N + I_N G`` at the LGL grid, flattened column-major."""
        return self.T @ u + self.g_nodal

    def nonlinear_term(self, u: np.ndarray) -> np.ndarray:
        rz = np.asarray(self.reaction(self.nodal(u)), dtype=float)
        check_finite(rz, "nonlinear term")
        return self.T.T @ (self.w2 * rz)

    def linear_term(self, u: np.ndarray) -> np.ndarray:
        return self.diffusion * (self.K @ u + self.lift_stiffness)

    def residual(self, u):
        u = np.asarray(u, dtype=float)
        return self.linear_term(u) + self.nonlinear_term(u) - self.f

    def jacobian(self, u):
        z = self.nodal(np.asarray(u, dtype=float))
        d = self.w2 * np.asarray(self.dreaction(z), dtype=float)
        check_finite(d, "reaction derivative")
        return self.diffusion * self.K + self.T.T @ (d[:, None] * self.T)

    def second_order_term(self, u, weights):
        if self.d2reaction is None:
            return None
        z = self.nodal(np.asarray(u, dtype=float))
        d = self.w2 * np.asarray(self.d2reaction(z), dtype=float) * (self.T @ weights)
        return self.T.T @ (d[:, None] * self.T)

    def coefficient_matrix(self, u) -> np.ndarray:
        return unvec(u, self.m)

    def values_at(self, u, xs, ys) -> np.ndarray:
        """Solution in the problem's variable on the tensor grid ``xs x ys`` (mapped coords)."""
        Px, Py = self.basis.values(xs), self.basis.values(ys)
        out = Px @ unvec(u, self.m) @ Py.T + self.offset
        if self.lifting is not None:
            Gc = self.G_coeffs
            out += legendre_vander(xs, self.N + 1) @ Gc @ legendre_vander(ys, self.N + 1).T
        return out

    def sample(self, u, points: int = 101):
        t = np.linspace(0.0, 1.0, points)
        s = 2 * t - 1
        return (t, t), self.values_at(u, s, s)

    def metadata(self) -> dict:
        meta = super().metadata()
        meta.update(
            basis=self.basis.describe(),
            dimension=2,
            ordering="column-major U[k, j], k fastest",
        )
        return meta


def lifting_coefficients(G: np.ndarray, rule: LglRule) -> np.ndarray:
    """2D Legendre coefficients of the interpolant of nodal values ``G``."""
    return nodal_to_coeff(nodal_to_coeff(G, rule).T, rule).T
