"""Common interface for the nonlinear algebraic systems ``F(x) = 0``."""

from __future__ import annotations

import numpy as np


class DivergedEvaluation(FloatingPointError):
    """A residual evaluation produced a non-finite value."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


def check_finite(values: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise DivergedEvaluation(f"non-finite {what} at node {idx}", node=idx)


class DiscretizedSystem:
    """Residual/Jacobian oracle for ``F: R^n -> R^n``.

    Subclasses set ``n``, ``problem_id`` and ``params`` and implement
    :meth:`residual` and :meth:`jacobian`. :meth:`second_order_term`
    returns ``sum_i w_i * Hess(F_i)(x)`` or ``None`` when no closed form exists.
    """

    n: int
    problem_id: str = "generic"
    params: dict = {}

    def residual(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def second_order_term(self, x: np.ndarray, weights: np.ndarray):
        return None

    def metadata(self) -> dict:
        return {"problem": self.problem_id, "n": int(self.n), "params": dict(self.params)}

    def sample(self, x: np.ndarray, points: int = 101):
        """Solution values on a uniform grid of the native domain.

        Returns ``(axes, values)``; ``axes`` is a tuple of 1D coordinate arrays.
        """
        raise NotImplementedError


class FunctionSystem(DiscretizedSystem):
    """Wrap plain callables; handy for tests and small algebraic problems."""

    def __init__(self, residual, jacobian, n: int, second_order=None, problem_id="function"):
        self._residual = residual
        self._jacobian = jacobian
        self._second = second_order
        self.n = n
        self.problem_id = problem_id
        self.params = {}

    def residual(self, x):
        return np.asarray(self._residual(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x):
        return np.atleast_2d(np.asarray(self._jacobian(np.asarray(x, dtype=float)), dtype=float))

    def second_order_term(self, x, weights):
        if self._second is None:
            return None
        return np.atleast_2d(self._second(np.asarray(x, dtype=float), weights))
