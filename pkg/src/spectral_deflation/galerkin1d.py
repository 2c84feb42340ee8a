"""One-dimensional Legendre discretizations.

* :class:`ChannelSystem` is the Petrov-Galerkin scheme for the fourth-order
  porous-channel equation ``u'''' + alpha (y u''' + 3 u'') + Re (u u''' - u' u'') = 0``
  on ``(0, 1)`` with ``u(0) = u''(0) = 0, u(1) = 1, u'(1) = 0``.
* :class:`Galerkin1DSystem` handles second-order problems
  ``-a u'' + r(u) = 0`` with Dirichlet or mixed boundary conditions.

Both work on ``(-1, 1)`` through ``y = (1 + x) / 2``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .bases import ModalBasis, dual_basis, mixed_bc_basis, shen_dirichlet_basis, trial_basis
from .legendre import lgl_rule, nodal_derivative_matrix
from .system import DiscretizedSystem, check_finite

BETA_CONVENTIONS = {
    # coefficient of u'' after mapping (0, 1) -> (-1, 1)
    "printed": 1.5,
    "rederived": 0.75,
}


def lifting_poly(x, deriv: int = 0):
    """``p(x) = 3/4 (1+x) - (1+x)^3 / 16`` and its derivatives."""
    t = 1 + np.asarray(x, dtype=float)
    if deriv == 0:
        return 0.75 * t - t**3 / 16
    if deriv == 1:
        return 0.75 - 3 * t**2 / 16
    if deriv == 2:
        return -3 * t / 8
    if deriv == 3:
        return np.full_like(t, -3 / 8)
    return np.zeros_like(t)


class ChannelSystem(DiscretizedSystem):
    """Unknowns are the trial coefficients ``v_k``, ``k = 0..N-4``; ``u_N = p + sum v_k phi_k``."""

    def __init__(self, alpha: float, Re: float, N: int, beta_convention: str = "rederived"):
        if N < 5:
            raise ValueError("channel discretization needs N >= 5")
        if beta_convention not in BETA_CONVENTIONS:
            raise ValueError(f"beta_convention must be one of {sorted(BETA_CONVENTIONS)}")
        self.alpha, self.Re, self.N = float(alpha), float(Re), int(N)
        self.delta = alpha / 4
        self.beta = BETA_CONVENTIONS[beta_convention] * alpha
        self.gamma = Re / 2
        self.beta_convention = beta_convention
        self.problem_id = "channel"
        self.params = {"alpha": self.alpha, "Re": self.Re, "beta_convention": beta_convention}
        self.trial = trial_basis(N)
        self.test = dual_basis(N)
        self.n = self.trial.size
        self.M, self.rhs = self._assemble_linear()

        rule = lgl_rule(N)
        self.rule = rule
        self.w = rule.weights
        self.Phi = self.trial.values(rule.nodes)
        self.Phi1 = self.trial.values(rule.nodes, 1)
        self.Dn = nodal_derivative_matrix(N)
        Psi1 = self.test.values(rule.nodes, 1)
        Psi2 = self.test.values(rule.nodes, 2)
        # rows act on nodal data: N_j = (g/2) (Psi2^T W Dn) v^2 + 2g (Psi1^T W) (v')^2
        self.R2 = (Psi2.T * self.w) @ self.Dn
        self.R1 = Psi1.T * self.w

    def coefficient_functions(self, x):
        """``A, A', A'', B, B', C, g`` of the lifted equation at ``x``."""
        d, b, gm = self.delta, self.beta, self.gamma
        t = 1 + np.asarray(x, dtype=float)
        A = (0.75 * gm + d) * t - gm * t**3 / 16
        A1 = (0.75 * gm + d) - 3 * gm * t**2 / 16
        A2 = -3 * gm * t / 8
        B = b - 0.75 * gm + 3 * gm * t**2 / 16
        B1 = 3 * gm * t / 8
        C = 3 * gm * t / 8
        g = 3 / 8 * (d + b) * t + 3 * gm * t**3 / 64
        return A, A1, A2, B, B1, C, g

    def _assemble_linear(self):
        fine = lgl_rule(self.N + 3)
        x, w = fine.nodes, fine.weights
        P0, P1, P2 = (self.trial.values(x, k) for k in range(3))
        S0, S1, S2 = (self.test.values(x, k) for k in range(3))
        A, A1, A2, B, B1, C, g = self.coefficient_functions(x)
        Apsi2 = A2[:, None] * S0 + 2 * A1[:, None] * S1 + A[:, None] * S2
        Bpsi1 = B1[:, None] * S0 + B[:, None] * S1
        W = w[:, None]
        M = (
            (S2 * W).T @ P2
            + (Apsi2 * W).T @ P1
            - (Bpsi1 * W).T @ P1
            + (S0 * W).T @ (C[:, None] * P1)
            - 3 * self.gamma / 8 * (S0 * W).T @ P0
        )
        rhs = (S0 * W).T @ g
        return M, rhs

    def nonlinear_term(self, v):
        u = self.Phi @ v
        du = self.Phi1 @ v
        out = 0.5 * self.gamma * (self.R2 @ (u * u)) + 2 * self.gamma * (self.R1 @ (du * du))
        check_finite(out, "nonlinear term")
        return out

    def residual(self, v):
        v = np.asarray(v, dtype=float)
        return self.M @ v + self.nonlinear_term(v) - self.rhs

    def jacobian(self, v):
        v = np.asarray(v, dtype=float)
        u = self.Phi @ v
        du = self.Phi1 @ v
        return (
            self.M
            + self.gamma * (self.R2 @ (u[:, None] * self.Phi))
            + 4 * self.gamma * (self.R1 @ (du[:, None] * self.Phi1))
        )

    def second_order_term(self, v, weights):
        a = self.gamma * (self.R2.T @ weights)
        b = 4 * self.gamma * (self.R1.T @ weights)
        return self.Phi.T @ (a[:, None] * self.Phi) + self.Phi1.T @ (b[:, None] * self.Phi1)

    def solution(self, v, x, deriv: int = 0):
        """``u_N^{(deriv)}`` at mapped points ``x``."""
        return lifting_poly(x, deriv) + self.trial.values(x, deriv) @ np.asarray(v, dtype=float)

    def sample(self, v, points: int = 101):
        y = np.linspace(0.0, 1.0, points)
        return (y,), self.solution(v, 2 * y - 1)

    def metadata(self):
        meta = super().metadata()
        meta.update(basis=self.trial.describe(), test_basis=self.test.describe(), dimension=1)
        return meta


class Galerkin1DSystem(DiscretizedSystem):
    """Residual ``a (u', phi_j') + (I_N r(u), phi_j)`` in a boundary-adapted basis."""

    def __init__(
        self,
        N: int,
        basis: ModalBasis,
        diffusion: float,
        reaction: Callable,
        dreaction: Callable,
        d2reaction: Callable | None = None,
        problem_id: str = "galerkin1d",
        params: dict | None = None,
    ):
        self.N = int(N)
        self.basis = basis
        self.n = basis.size
        self.diffusion = float(diffusion)
        self.reaction, self.dreaction, self.d2reaction = reaction, dreaction, d2reaction
        self.problem_id = problem_id
        self.params = dict(params or {})
        rule = lgl_rule(N)
        self.rule = rule
        self.w = rule.weights
        self.Phi = basis.values(rule.nodes)
        P1 = basis.values(rule.nodes, 1)
        self.S = (P1 * self.w[:, None]).T @ P1

    def nonlinear_term(self, u):
        r = np.asarray(self.reaction(self.Phi @ u), dtype=float)
        check_finite(r, "nonlinear term")
        return self.Phi.T @ (self.w * r)

    def residual(self, u):
        u = np.asarray(u, dtype=float)
        return self.diffusion * (self.S @ u) + self.nonlinear_term(u)

    def jacobian(self, u):
        d = self.w * np.asarray(self.dreaction(self.Phi @ np.asarray(u, dtype=float)), dtype=float)
        check_finite(d, "reaction derivative")
        return self.diffusion * self.S + self.Phi.T @ (d[:, None] * self.Phi)

    def second_order_term(self, u, weights):
        if self.d2reaction is None:
            return None
        z = self.Phi @ np.asarray(u, dtype=float)
        d = self.w * np.asarray(self.d2reaction(z), dtype=float) * (self.Phi @ weights)
        return self.Phi.T @ (d[:, None] * self.Phi)

    def solution(self, u, x, deriv: int = 0):
        return self.basis.values(x, deriv) @ np.asarray(u, dtype=float)

    def sample(self, u, points: int = 101):
        y = np.linspace(0.0, 1.0, points)
        return (y,), self.solution(u, 2 * y - 1)

    def metadata(self):
        meta = super().metadata()
        meta.update(basis=self.basis.describe(), dimension=1)
        return meta


def bratu_system(lam: float, N: int) -> Galerkin1DSystem:
    """``u'' + lam e^u = 0`` on (0, 1), ``u(0) = u(1) = 0``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    r = lambda z: -lam * np.exp(z)  # noqa: E731
    return Galerkin1DSystem(N, shen_dirichlet_basis(N), 4.0, r, r, r, "bratu", {"lam": lam})


def power_system(p: int, lam: float, N: int) -> Galerkin1DSystem:
    """``u'' + lam (1 + u^p) = 0`` on (0, 1), ``u'(0) = u(1) = 0``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    p = int(p)
    return Galerkin1DSystem(
        N,
        mixed_bc_basis(N),
        4.0,
        lambda z: -lam * (1 + z**p),
        lambda z: -lam * p * z ** (p - 1),
        lambda z: -lam * p * (p - 1) * z ** max(p - 2, 0) if p >= 2 else np.zeros_like(z),
        "power",
        {"p": p, "lam": lam},
    )
