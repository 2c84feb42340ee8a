"""Shifted deflation and the outer loop that extracts several roots in turn.

For found roots ``r_i`` the deflated residual is ``mu(x) F(x)`` with
``mu(x) = prod_i (1 + ||x - r_i||^-2)``; the operator is a scalar multiple of
the identity, so only the scalar is ever formed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .system import DiscretizedSystem, DivergedEvaluation
from .trust_region import SolveOutcome, TrustRegionConfig, tr_iterate

log = logging.getLogger(__name__)

STRATEGIES = ("same_guess", "perturb_last", "ledger_subset")


class ProximityError(ValueError):
    """The iterate sits on top of a deflated root."""


@dataclass
class DeflationLedger:
    roots: list = field(default_factory=list)
    power: int = 2
    shift: float = 1.0
    d_min: float = 1e-8
    separation: float = 1e-6
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.roots)

    def threshold(self, candidate=None) -> float:
        scale = max((np.max(np.abs(r)) for r in self.roots), default=0.0)
        if candidate is not None:
            scale = max(scale, float(np.max(np.abs(candidate))))
        return self.separation * (1 + scale)

    def is_duplicate(self, x) -> bool:
        tol = self.threshold(x)
        return any(np.max(np.abs(np.asarray(x) - r)) <= tol for r in self.roots)

    def add(self, x) -> bool:
        """Append ``x`` unless it duplicates a stored root."""
        x = np.array(x, dtype=float)
        if self.roots and x.shape != self.roots[0].shape:
            raise ValueError("root length does not match the ledger")
        if self.is_duplicate(x):
            return False
        self.roots.append(x)
        return True

    def to_json(self) -> str:
        return json.dumps(
            {
                "power": self.power,
                "shift": self.shift,
                "d_min": self.d_min,
                "separation": self.separation,
                "metadata": self.metadata,
                "roots": [r.tolist() for r in self.roots],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "DeflationLedger":
        data = json.loads(text)
        return cls(
            roots=[np.array(r, dtype=float) for r in data["roots"]],
            power=data.get("power", 2),
            shift=data.get("shift", 1.0),
            d_min=data.get("d_min", 1e-8),
            separation=data.get("separation", 1e-6),
            metadata=data.get("metadata", {}),
        )


def deflation_factor(x, roots, d_min: float = 0.0):
    """``mu(x)`` and ``grad log mu(x)`` for the shifted operator."""
    mu = 1.0
    glog = np.zeros_like(x)
    for r in roots:
        diff = x - r
        s = float(diff @ diff)
        if s <= d_min * d_min:
            raise ProximityError(f"iterate within {d_min:g} of a deflated root")
        mu *= 1.0 + 1.0 / s
        glog -= 2.0 * diff / (s * (s + 1.0))
    return mu, glog


class DeflatedSystem(DiscretizedSystem):
    """``F_defl(x) = mu(x) F(x)`` wrapping another system."""

    def __init__(self, inner: DiscretizedSystem, roots, d_min: float = 1e-8):
        self.inner = inner
        self.roots = [np.asarray(r, dtype=float) for r in roots]
        self.d_min = d_min
        self.n = inner.n
        self.problem_id = inner.problem_id
        self.params = inner.params

    def _factor(self, x):
        try:
            return deflation_factor(x, self.roots, self.d_min)
        except ProximityError as exc:
            # surfaced to the solver as a failed evaluation so the step is rejected
            raise DivergedEvaluation(str(exc)) from exc

    def residual(self, x):
        x = np.asarray(x, dtype=float)
        mu, _ = self._factor(x)
        return mu * self.inner.residual(x)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        mu, glog = self._factor(x)
        F = self.inner.residual(x)
        return mu * self.inner.jacobian(x) + np.outer(F, mu * glog)

    def second_order_term(self, x, weights):
        inner = self.inner.second_order_term(x, weights)
        if inner is None:
            return None
        x = np.asarray(x, dtype=float)
        mu, glog = self._factor(x)
        F = self.inner.residual(x)
        J = self.inner.jacobian(x)
        hlog = np.zeros((x.size, x.size))
        for r in self.roots:
            diff = x - r
            s = float(diff @ diff)
            hlog -= 2.0 / (s * (s + 1.0)) * np.eye(x.size)
            hlog += 4.0 * (2 * s + 1) / (s * s * (s + 1) ** 2) * np.outer(diff, diff)
        grad_mu = mu * glog
        hess_mu = mu * (np.outer(glog, glog) + hlog)
        Jw = J.T @ weights
        return mu * inner + np.outer(grad_mu, Jw) + np.outer(Jw, grad_mu) + (weights @ F) * hess_mu

    def sample(self, x, points: int = 101):
        return self.inner.sample(x, points)


@dataclass
class Attempt:
    """One deflation round: the solve plus what became of its result."""

    round: int
    outcome: SolveOutcome
    root_index: int | None
    duplicate: bool
    start: np.ndarray = field(repr=False)
    original_residual_inf: float = np.inf


def _subset_indices(subset, n_roots):
    if subset is None:
        return list(range(n_roots))
    return [i for i in subset if i < n_roots]


def find_multiple(
    system: DiscretizedSystem,
    x0,
    strategy: str = "same_guess",
    budget: int = 3,
    cfg: TrustRegionConfig | None = None,
    seed: int = 0,
    subset=None,
    ledger: DeflationLedger | None = None,
    perturbation: float = 0.1,
) -> tuple[list[Attempt], DeflationLedger]:
    """Run up to ``budget`` deflated trust-region solves.

    ``subset`` lists zero-based ledger indices to deflate under
    ``ledger_subset``; other strategies deflate every stored root.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if strategy == "ledger_subset" and subset is None:
        raise ValueError("ledger_subset needs a subset of root labels")
    cfg = cfg or TrustRegionConfig()
    ledger = ledger if ledger is not None else DeflationLedger()
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=float)
    attempts: list[Attempt] = []

    for rnd in range(budget):
        active = _subset_indices(subset if strategy == "ledger_subset" else None, len(ledger))
        start = x0.copy()
        if strategy == "perturb_last" and len(ledger):
            last = ledger.roots[-1]
            amp = perturbation * (1 + np.max(np.abs(last)))
            start = last + rng.uniform(-amp, amp, size=last.shape)
        target = DeflatedSystem(system, [ledger.roots[i] for i in active], ledger.d_min) if active else system
        out = tr_iterate(target, start, cfg)
        index, dup, res_inf = None, False, np.inf
        if out.converged:
            try:
                res_inf = float(np.max(np.abs(system.residual(out.x))))
            except DivergedEvaluation:
                res_inf = np.inf
            if ledger.add(out.x):
                index = len(ledger) - 1
            else:
                dup = True
        log.info(
            "round %d: %s after %d iterations, |F|=%.3e%s",
            rnd,
            out.status,
            out.iterations,
            res_inf,
            " (duplicate)" if dup else "",
        )
        attempts.append(Attempt(rnd, out, index, dup, start, res_inf))
    return attempts, ledger


def newton_iterate(system: DiscretizedSystem, x0, iterations: int = 5) -> list[float]:
    """Undamped Newton; returns ``||F||_2`` at the start and after each step.

    Stops early (padding with ``inf``) once an evaluation or solve blows up.
    """
    x = np.array(x0, dtype=float)
    history = []
    for _ in range(iterations + 1):
        try:
            F = system.residual(x)
        except DivergedEvaluation:
            break
        history.append(float(np.linalg.norm(F)))
        if len(history) == iterations + 1:
            break
        try:
            x = x - np.linalg.solve(system.jacobian(x), F)
        except (np.linalg.LinAlgError, DivergedEvaluation):
            break
    return history + [np.inf] * (iterations + 1 - len(history))
