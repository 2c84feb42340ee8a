"""Nonlinear least-squares trust-region solver with a dogleg subproblem.

Minimizes ``Q(x) = 0.5 * ||F(x)||^2`` for a square system ``F(x) = 0``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .system import DiscretizedSystem, DivergedEvaluation

log = logging.getLogger(__name__)

CONVERGED = "converged"
STALLED = "stalled_radius"
MAX_ITER = "max_iterations"
DIVERGED = "diverged_evaluation"


@dataclass(frozen=True)
class TrustRegionConfig:
    delta1: float = 0.25
    delta2: float = 0.75
    tau1: float = 0.5
    tau2: float = 2.0
    eps: float = 1e-13
    max_iterations: int = 500
    h_min: float = 1e-14
    hessian_mode: str = "gauss_newton"
    # Q at or below this counts as solved once the step has shrunk to rounding level
    floor_rtol: float = 1e-13

    def __post_init__(self):
        if not 0 < self.delta1 < self.delta2 < 1:
            raise ValueError("need 0 < delta1 < delta2 < 1")
        if not 0 < self.tau1 < 1 < self.tau2:
            raise ValueError("need 0 < tau1 < 1 < tau2")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.hessian_mode not in ("gauss_newton", "full"):
            raise ValueError(f"unknown hessian mode {self.hessian_mode!r}")


@dataclass
class TraceRow:
    k: int
    Q: float
    gnorm: float
    h: float
    ratio: float
    kind: str
    accepted: bool


@dataclass
class SolveOutcome:
    status: str
    x: np.ndarray
    iterations: int
    residual_inf: float
    gnorm: float
    Q: float
    wall_time: float
    trace: list[TraceRow] = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def dogleg_step(g, G, h: float, newton=None):
    """Dogleg approximation of ``min g^T s + 0.5 s^T G s`` over ``||s|| <= h``.

    ``newton`` may carry a precomputed ``-G^{-1} g``. Returns ``(s, kind)``.
    """
    g = np.asarray(g, dtype=float)
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return np.zeros_like(g), "full_newton"
    boundary = -(h / gnorm) * g
    curv = g @ (G @ g)
    if not curv > 0:
        return boundary, "fallback_curvature"
    cauchy = -(g @ g / curv) * g
    if np.linalg.norm(cauchy) >= h:
        return boundary, "cauchy_clipped"
    if newton is None:
        try:
            newton = -np.linalg.solve(G, g)
        except np.linalg.LinAlgError:
            newton = None
    if newton is None or not np.all(np.isfinite(newton)):
        return boundary, "fallback_singular"
    if np.linalg.norm(newton) <= h:
        return newton, "full_newton"
    d = newton - cauchy
    a = d @ d
    b = 2 * (cauchy @ d)
    c = cauchy @ cauchy - h * h
    lam = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
    lam = min(max(lam, 0.0), 1.0)
    return cauchy + lam * d, "dogleg_interp"


def hessian(system: DiscretizedSystem, x, mode: str = "gauss_newton", J=None, F=None):
    """``J^T J`` or ``J^T J + sum_i F_i Hess(F_i)``."""
    x = np.asarray(x, dtype=float)
    J = system.jacobian(x) if J is None else J
    G = J.T @ J
    if mode == "gauss_newton":
        return G
    F = system.residual(x) if F is None else F
    S = system.second_order_term(x, F)
    if S is None:
        S = _fd_second_order(system, x, J, F)
    S = 0.5 * (S + S.T)
    return G + S


def _fd_second_order(system, x, J, F):
    step = 1e-6 * (1 + np.max(np.abs(x), initial=0.0))
    S = np.empty((x.size, x.size))
    for j in range(x.size):
        xp = x.copy()
        xp[j] += step
        S[:, j] = (system.jacobian(xp) - J).T @ F / step
    return S


def _is_positive_definite(G) -> bool:
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return False
    return True


def _local_model(system, x, J, F, mode):
    """Model matrix and Newton point at ``x``.

    An indefinite full Hessian falls back to the Gauss-Newton model, whose
    Newton point is always a descent direction.
    """
    g = J.T @ F
    G = hessian(system, x, mode, J=J, F=F)
    if mode == "full" and not _is_positive_definite(G):
        G = J.T @ J
        mode = "gauss_newton"
    return g, G, _newton_direction(J, F, G, g, mode)


def _newton_direction(J, F, G, g, mode):
    if mode == "gauss_newton" and J.shape[0] == J.shape[1]:
        # same as -G^{-1} g but without squaring the condition number
        try:
            s = -np.linalg.solve(J, F)
            if np.all(np.isfinite(s)):
                return s
        except np.linalg.LinAlgError:
            pass
    try:
        s = -np.linalg.solve(G, g)
    except np.linalg.LinAlgError:
        return None
    return s if np.all(np.isfinite(s)) else None


def tr_iterate(system: DiscretizedSystem, x0, cfg: TrustRegionConfig | None = None) -> SolveOutcome:
    """Trust-region iteration from ``x0`` until optimality or failure."""
    cfg = cfg or TrustRegionConfig()
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    trace: list[TraceRow] = []

    def outcome(status, k, F, gnorm):
        Fn = np.max(np.abs(F)) if F is not None else np.inf
        Q = 0.5 * float(F @ F) if F is not None else np.inf
        return SolveOutcome(status, x.copy(), k, float(Fn), float(gnorm), Q, time.perf_counter() - start, trace)

    try:
        F = system.residual(x)
        J = system.jacobian(x)
    except DivergedEvaluation:
        return outcome(DIVERGED, 0, None, np.inf)
    Q = 0.5 * float(F @ F)
    g, G, newton = _local_model(system, x, J, F, cfg.hessian_mode)
    h = float(np.linalg.norm(g)) or 1.0

    for k in range(cfg.max_iterations):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.eps and Q <= cfg.eps:
            return outcome(CONVERGED, k, F, gnorm)
        s, kind = dogleg_step(g, G, h, newton=newton)
        snorm = float(np.linalg.norm(s))
        pred = -(g @ s + 0.5 * s @ (G @ s))
        if not pred > 0:
            # the model cannot decrease: s is a minimizer of q
            status = CONVERGED if Q <= cfg.eps else STALLED
            return outcome(status, k, F, gnorm)
        xn = x + s
        try:
            Fn = system.residual(xn)
            Qn = 0.5 * float(Fn @ Fn)
        except DivergedEvaluation:
            Fn, Qn = None, np.inf
        ratio = (Q - Qn) / pred if np.isfinite(Qn) else -np.inf
        accepted = ratio >= cfg.delta1
        trace.append(TraceRow(k, Q, gnorm, h, float(ratio), kind, bool(accepted)))
        if ratio < cfg.delta1:
            h *= cfg.tau1
            # radii that still contain the rejected step would retry it verbatim
            while h >= snorm and h >= cfg.h_min:
                h *= cfg.tau1
        elif ratio > cfg.delta2 and abs(snorm - h) <= 1e-12 * h:
            h *= cfg.tau2
        if accepted:
            x, F, Q = xn, Fn, Qn
            try:
                J = system.jacobian(x)
            except DivergedEvaluation:
                return outcome(DIVERGED, k + 1, F, np.inf)
            g, G, newton = _local_model(system, x, J, F, cfg.hessian_mode)
        elif Q <= cfg.eps and snorm <= cfg.floor_rtol * (1 + np.linalg.norm(x)):
            # Newton correction is at rounding level; no further progress possible
            return outcome(CONVERGED, k + 1, F, float(np.linalg.norm(g)))
        if h < cfg.h_min:
            return outcome(STALLED, k + 1, F, float(np.linalg.norm(g)))
    return outcome(MAX_ITER, cfg.max_iterations, F, float(np.linalg.norm(g)))
