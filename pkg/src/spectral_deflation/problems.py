"""Benchmark catalog: declarative problem specifications and system builders.

Second-order problems are stored as written, ``c * Lap(u) + F_nl(u) = f`` on
the native domain ``(0, 1)^d``. :func:`build_system` flips signs so the
stiffness term is positive and folds the factor 4 from mapping onto
``(-1, 1)^d`` into the diffusion coefficient.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import tomli
import tomli_w

from .bases import mixed_bc_basis, shen_dirichlet_basis
from .galerkin1d import ChannelSystem, Galerkin1DSystem
from .galerkin2d import Galerkin2DSystem, make_lifting, vec
from .system import DiscretizedSystem


class UnknownProblemError(KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown problem {name!r}; valid ids: {', '.join(sorted(CATALOG))}")

    def __str__(self):
        return self.args[0]


class ConfigError(ValueError):
    """A problem config file is malformed."""


@dataclass(frozen=True)
class Nonlinearity:
    """``F_nl`` with closed-form first and second derivatives.

    Scalar nonlinearities act elementwise. Jet nonlinearities (``jet > 1``)
    take arrays whose last axis holds ``(u, u', u'', ...)`` and return the
    gradient and Hessian along that axis.
    """

    value: Callable
    grad: Callable
    hess: Callable
    jet: int = 1


def _bratu(p):
    lam = p["lam"]
    e = lambda u: lam * np.exp(u)  # noqa: E731
    return Nonlinearity(e, e, e)


def _power(p):
    lam, k = p["lam"], int(p["p"])
    return Nonlinearity(
        lambda u: lam * (1 + u**k),
        lambda u: lam * k * u ** (k - 1),
        lambda u: lam * k * (k - 1) * u ** (k - 2) if k >= 2 else np.zeros_like(u),
    )


def _allen_cahn(p):
    eps = p["eps"]
    return Nonlinearity(
        lambda u: (u**3 - u) / eps,
        lambda u: (3 * u**2 - 1) / eps,
        lambda u: 6 * u / eps,
    )


def _bmp(p):
    return Nonlinearity(lambda u: u**2, lambda u: 2 * u, lambda u: np.full_like(u, 2.0))


def _henon(p):
    return Nonlinearity(lambda u: u**3, lambda u: 3 * u**2, lambda u: 6 * u)


def _channel(p):
    Re = p["Re"]

    def value(z):
        return Re * (z[..., 0] * z[..., 3] - z[..., 1] * z[..., 2])

    def grad(z):
        return Re * np.stack([z[..., 3], -z[..., 2], -z[..., 1], z[..., 0]], axis=-1)

    def hess(z):
        H = np.zeros(z.shape[:-1] + (4, 4))
        H[..., 0, 3] = H[..., 3, 0] = Re
        H[..., 1, 2] = H[..., 2, 1] = -Re
        return H

    return Nonlinearity(value, grad, hess, jet=4)


def _bmp_source(p):
    amp = p["amplitude"]
    return lambda x, y: amp * np.sin(np.pi * x) * np.sin(np.pi * y)


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    title: str
    dimension: int
    order: int
    params: dict
    # edge -> list of [kind, value] with kind in value/slope/second; 1D edges are left/right
    bcs: dict
    # coefficient c of Lap(u); a string names a parameter, optionally negated ("-eps")
    laplacian_coeff: float | str = 1.0
    default_n: int = 16
    initial_guess: str = "zeros"
    expected_solutions: int | None = None
    symmetries: tuple = ()
    presets: tuple = ()
    corner_smoothing: float | None = None
    equation: str = ""
    nonlinearity_factory: Callable = field(default=None, repr=False, compare=False)
    source_factory: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        want = {(1, 2): 2, (1, 4): 4, (2, 2): 4}.get((self.dimension, self.order))
        count = sum(len(v) for v in self.bcs.values())
        if want is None or count != want:
            raise ValueError(f"{self.id}: expected {want} boundary conditions, got {count}")

    @property
    def nonlinearity(self) -> Nonlinearity:
        return self.nonlinearity_factory(self.params)

    def F_nl(self, u):
        return self.nonlinearity.value(np.asarray(u, dtype=float))

    def f(self, *coords):
        """Right-hand side on the native domain (zero when absent)."""
        if self.source_factory is None:
            return np.zeros(np.broadcast(*[np.asarray(c) for c in coords]).shape)
        return self.source_factory(self.params)(*coords)

    def __getattr__(self, name):
        # parameters read like attributes: lookup("allen_cahn").eps
        params = self.__dict__.get("params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)

    def with_params(self, **overrides) -> "ProblemSpec":
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise ConfigError(f"{self.id} has no parameter(s) {sorted(unknown)}; known: {sorted(self.params)}")
        return dataclasses.replace(self, params={**self.params, **overrides})

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "title": self.title,
            "dimension": self.dimension,
            "order": self.order,
            "equation": self.equation,
            "laplacian_coeff": self.laplacian_coeff,
            "default_n": self.default_n,
            "initial_guess": self.initial_guess,
            "params": dict(self.params),
            "bcs": {k: [list(c) for c in v] for k, v in self.bcs.items()},
            "symmetries": list(self.symmetries),
            "presets": [dict(p) for p in self.presets],
        }
        if self.expected_solutions is not None:
            out["expected_solutions"] = self.expected_solutions
        if self.corner_smoothing is not None:
            out["corner_smoothing"] = self.corner_smoothing
        return out


CATALOG: dict[str, ProblemSpec] = {
    spec.id: spec
    for spec in (
        ProblemSpec(
            id="channel",
            title="Flow in a porous channel",
            dimension=1,
            order=4,
            equation="u'''' + alpha (y u''' + 3 u'') + Re (u u''' - u' u'') = 0",
            params={"alpha": 0.0, "Re": -20.0, "beta_convention": "rederived"},
            bcs={"left": [["value", 0.0], ["second", 0.0]], "right": [["value", 1.0], ["slope", 0.0]]},
            default_n=18,
            initial_guess="ones",
            expected_solutions=3,
            presets=(
                {"alpha": 0.0, "Re": -20.0, "expected_solutions": 3},
                {"alpha": 2.0, "Re": -40.0, "expected_solutions": 3},
                {"alpha": -2.0, "Re": -40.0, "expected_solutions": 3},
                {"alpha": 8.0, "Re": -40.0, "expected_solutions": 4},
            ),
            nonlinearity_factory=_channel,
        ),
        ProblemSpec(
            id="bratu",
            title="Bratu-Gelfand",
            dimension=1,
            order=2,
            equation="u'' + lam exp(u) = 0",
            params={"lam": 1.0},
            bcs={"left": [["value", 0.0]], "right": [["value", 0.0]]},
            default_n=16,
            initial_guess="-cos(ones)",
            expected_solutions=2,
            presets=({"lam": 1.0}, {"lam": 2.0}),
            nonlinearity_factory=_bratu,
        ),
        ProblemSpec(
            id="power",
            title="Power nonlinearity with mixed boundary conditions",
            dimension=1,
            order=2,
            equation="u'' + lam (1 + u^p) = 0",
            params={"p": 4, "lam": 1.2},
            bcs={"left": [["slope", 0.0]], "right": [["value", 0.0]]},
            default_n=16,
            initial_guess="-cos(ones)",
            expected_solutions=2,
            presets=({"p": 4, "lam": 1.2}, {"p": 3, "lam": 1.2}),
            nonlinearity_factory=_power,
        ),
        ProblemSpec(
            id="allen_cahn",
            title="Steady Allen-Cahn",
            dimension=2,
            order=2,
            equation="-eps Lap(u) + (u^3 - u) / eps = 0",
            laplacian_coeff="-eps",
            params={"eps": 0.04, "kappa": 0.1},
            bcs={
                "left": [["value", 1.0]],
                "right": [["value", 1.0]],
                "bottom": [["value", -1.0]],
                "top": [["value", -1.0]],
            },
            default_n=24,
            initial_guess="zeros",
            expected_solutions=3,
            symmetries=("neg_rot90",),
            corner_smoothing=0.1,
            nonlinearity_factory=_allen_cahn,
        ),
        ProblemSpec(
            id="bmp",
            title="Breuer-McKenna-Plum model problem",
            dimension=2,
            order=2,
            equation="Lap(u) + u^2 = amplitude sin(pi x) sin(pi y)",
            params={"amplitude": 800.0},
            bcs={e: [["value", 0.0]] for e in ("left", "right", "bottom", "top")},
            default_n=24,
            initial_guess="zeros",
            expected_solutions=4,
            symmetries=("reflect_x", "reflect_y", "diagonal", "antidiagonal"),
            nonlinearity_factory=_bmp,
            source_factory=_bmp_source,
        ),
        ProblemSpec(
            id="henon",
            title="Henon equation",
            dimension=2,
            order=2,
            equation="Lap(u) + u^3 = 0",
            params={},
            bcs={e: [["value", 0.0]] for e in ("left", "right", "bottom", "top")},
            default_n=16,
            initial_guess="sin(1,1,10)",
            symmetries=("negate", "rot90"),
            nonlinearity_factory=_henon,
        ),
    )
}


def catalog() -> list[ProblemSpec]:
    return list(CATALOG.values())


def lookup(problem_id: str) -> ProblemSpec:
    try:
        return CATALOG[problem_id]
    except KeyError:
        raise UnknownProblemError(problem_id) from None


# ---------------------------------------------------------------- TOML config

_OVERRIDABLE = ("default_n", "initial_guess", "expected_solutions")


def spec_from_dict(data: dict) -> ProblemSpec:
    """Catalog entry named by ``data["id"]`` with parameter overrides applied."""
    if "id" not in data:
        raise ConfigError("problem config needs an 'id' naming a catalog entry")
    base = lookup(data["id"])
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be a table")
    spec = base.with_params(**params)
    extra = {k: data[k] for k in _OVERRIDABLE if k in data}
    if "corner_smoothing" in data and base.corner_smoothing is not None:
        extra["corner_smoothing"] = float(data["corner_smoothing"])
    return dataclasses.replace(spec, **extra) if extra else spec


def load_toml(path) -> ProblemSpec:
    try:
        data = tomli.loads(Path(path).read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return spec_from_dict(data.get("problem", data))


def dump_toml(spec: ProblemSpec) -> str:
    return tomli_w.dumps({"problem": spec.to_dict()})


# ---------------------------------------------------------------- builders


def laplacian_coefficient(spec: ProblemSpec) -> float:
    c = spec.laplacian_coeff
    if isinstance(c, str):
        name = c.lstrip("-")
        c = -spec.params[name] if c.startswith("-") else spec.params[name]
    return float(c)


def _second_order_coeffs(spec: ProblemSpec):
    """``(diffusion, sign)`` so that ``-diffusion Lap + sign F_nl = sign f`` on (-1, 1)^d."""
    c = laplacian_coefficient(spec)
    if c == 0:
        raise ValueError("laplacian coefficient must be nonzero")
    sign = -1.0 if c > 0 else 1.0
    return 4.0 * abs(c), sign


def build_system(spec: ProblemSpec, N: int | None = None) -> DiscretizedSystem:
    N = int(N or spec.default_n)
    if not 4 <= N <= 64:
        raise ValueError("N must lie in [4, 64]")
    if spec.order == 4:
        p = spec.params
        return ChannelSystem(p["alpha"], p["Re"], N, p.get("beta_convention", "rederived"))
    if spec.dimension == 1:
        return _build_1d(spec, N)
    return _build_2d(spec, N)


def _build_1d(spec, N):
    diffusion, sign = _second_order_coeffs(spec)
    nl = spec.nonlinearity
    (kl, vl), (kr, vr) = spec.bcs["left"][0], spec.bcs["right"][0]
    kinds, values = (kl, kr), (vl, vr)
    if any(values):
        raise NotImplementedError("1D second-order problems need homogeneous boundary data")
    if kinds == ("value", "value"):
        basis = shen_dirichlet_basis(N)
    elif kinds == ("slope", "value"):
        basis = mixed_bc_basis(N)
    else:
        raise NotImplementedError(f"unsupported boundary conditions {kinds}")
    return Galerkin1DSystem(
        N,
        basis,
        diffusion,
        lambda z: sign * nl.value(z),
        lambda z: sign * nl.grad(z),
        lambda z: sign * nl.hess(z),
        spec.id,
        dict(spec.params),
    )


def _lifting_for(spec):
    """Lifting and value shift for edge data; ``None`` when all edges are zero.

    Bottom/top must share one value ``base``; left/right data become ramps of
    height ``value - base`` that vanish within ``kappa`` of the corners.
    """
    vals = {}
    for e in ("left", "right", "bottom", "top"):
        ((kind, value),) = spec.bcs[e]
        if kind != "value":
            raise NotImplementedError("2D problems take Dirichlet data only")
        vals[e] = float(value)
    if not any(vals.values()):
        return None, 0.0
    if vals["bottom"] != vals["top"]:
        raise NotImplementedError("bottom and top boundary values must agree")
    base = vals["bottom"]
    kappa = spec.params.get("kappa", spec.corner_smoothing)
    if kappa is None:
        raise NotImplementedError("nonzero side data needs corner smoothing")
    lift = make_lifting({"right": vals["right"] - base, "left": vals["left"] - base}, kappa)
    return lift, base


def _build_2d(spec, N):
    diffusion, sign = _second_order_coeffs(spec)
    nl = spec.nonlinearity
    lift, base = _lifting_for(spec)
    source = None
    if spec.source_factory is not None:
        f = spec.source_factory(spec.params)
        # native (0, 1)^2 -> mapped (-1, 1)^2
        source = lambda x, y: sign * f((x + 1) / 2, (y + 1) / 2)  # noqa: E731
    return Galerkin2DSystem(
        N,
        diffusion,
        lambda z: sign * nl.value(z + base),
        lambda z: sign * nl.grad(z + base),
        lambda z: sign * nl.hess(z + base),
        source=source,
        lifting=lift,
        offset=base,
        problem_id=spec.id,
        params=dict(spec.params),
    )


def project_function(system, fun: Callable) -> np.ndarray:
    """Least-squares coefficients of ``fun(x, y)`` on (0, 1)^2 at the quadrature nodes, lifting removed."""
    if not hasattr(system, "g_nodal"):
        raise ConfigError("function-valued initial guesses need a two-dimensional problem")
    r = (system.rule.nodes + 1) / 2
    X, Y = np.meshgrid(r, r, indexing="ij")
    target = vec(np.asarray(fun(X, Y), dtype=float) - system.offset) - system.g_nodal
    return np.linalg.lstsq(system.T, target, rcond=None)[0]


def _saddle(spec: ProblemSpec):
    # two crossing interfaces of width ~ eps along the diagonals, +1 on the left/right edges
    w = 2 * float(spec.params.get("eps", 0.04))
    return lambda x, y: np.tanh((x + y - 1) / w) * np.tanh((x - y) / w)


_NUMBER = r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*"
_FUNCTION_PATTERNS = {
    # A sin(p pi x) sin(q pi y)
    re.compile(rf"sin\({_NUMBER},{_NUMBER},{_NUMBER}\)"): lambda spec, p, q, A: (
        lambda x, y: A * np.sin(p * np.pi * x) * np.sin(q * np.pi * y)
    ),
    re.compile(rf"flat\({_NUMBER}\)"): lambda spec, c: lambda x, y: np.full_like(x, c),
    re.compile(r"saddle"): lambda spec: _saddle(spec),
}


def function_guess(spec: ProblemSpec, name: str):
    """Callable ``u(x, y)`` on (0, 1)^2 for a function-valued guess name, or ``None``."""
    for pattern, make in _FUNCTION_PATTERNS.items():
        m = pattern.fullmatch(name)
        if m:
            return make(spec, *(float(g) for g in m.groups()))
    return None


def initial_guess(spec: ProblemSpec, n: int, name: str | None = None, system=None) -> np.ndarray:
    """Named starting vector in coefficient space.

    Function-valued names (``saddle``, ``flat(c)``, ``sin(p,q,A)``) are
    projected onto ``system`` and need it passed in.
    """
    name = name or spec.initial_guess
    ones = np.ones(n)
    guesses = {
        "zeros": lambda: np.zeros(n),
        "ones": lambda: ones,
        "-ones": lambda: -ones,
        "0.1*ones": lambda: 0.1 * ones,
        "cos(ones)": lambda: np.cos(ones),
        "-cos(ones)": lambda: -np.cos(ones),
    }
    fun = function_guess(spec, name)
    if fun is not None:
        if system is None:
            raise ConfigError(f"initial guess {name!r} needs the discretized system")
        return project_function(system, fun)
    if name not in guesses:
        known = sorted(guesses) + ["flat(c)", "saddle", "sin(p,q,A)"]
        raise ConfigError(f"unknown initial guess {name!r}; choose from {known}")
    return guesses[name]()


# ---------------------------------------------------------------- symmetry


def _transform(name: str, U: np.ndarray) -> np.ndarray:
    """Action on samples ``U[i, j] = u(x_i, y_j)`` of a grid symmetric about 1/2."""
    maps = {
        "reflect_x": lambda V: V[::-1, :],  # about x = 1/2
        "reflect_y": lambda V: V[:, ::-1],  # about y = 1/2
        "diagonal": lambda V: V.T,  # about y = x
        "antidiagonal": lambda V: V[::-1, ::-1].T,  # about y = 1 - x
        "negate": lambda V: -V,
        "rot90": lambda V: np.rot90(V, -1),  # u(1 - y, x)
        "neg_rot90": lambda V: -np.rot90(V, -1),  # -u(1 - y, x)
    }
    if name not in maps:
        raise ValueError(f"unknown symmetry {name!r}; choose from {sorted(maps)}")
    return maps[name](U)


def apply_symmetry(name: str, U) -> np.ndarray:
    return _transform(name, np.asarray(U, dtype=float))


def symmetry_defects(U, names=("reflect_x", "reflect_y", "diagonal", "antidiagonal")) -> dict:
    """``max |u - T(u)|`` for each transform."""
    U = np.asarray(U, dtype=float)
    return {name: float(np.max(np.abs(U - _transform(name, U)))) for name in names}


def pair_defect(U1, U2, name: str = "neg_rot90") -> float:
    """``max |T(u1) - u2|``: how far ``u2`` is from the image of ``u1``."""
    return float(np.max(np.abs(_transform(name, np.asarray(U1, dtype=float)) - np.asarray(U2, dtype=float))))


def check_symmetry(spec: ProblemSpec, system: DiscretizedSystem, x) -> dict:
    """Self-symmetry defect on the sample grid and residual of the mapped solution.

    The mapped solution is refitted to coefficients by least squares on the
    quadrature grid, which is exact when ``T`` preserves the discrete space.
    """
    _, U = system.sample(x)
    report = {}
    for name in spec.symmetries:
        entry = {"defect": float(np.max(np.abs(U - _transform(name, U))))}
        y = _mapped_coefficients(system, x, name)
        if y is not None:
            entry["mapped_residual_inf"] = float(np.max(np.abs(system.residual(y))))
        report[name] = entry
    return report


def _mapped_coefficients(system, x, name):
    if not isinstance(system, Galerkin2DSystem):
        return None
    nodes = system.rule.nodes
    V = system.values_at(x, nodes, nodes)
    W = _transform(name, V) - system.offset
    z = W.reshape(-1, order="F") - system.g_nodal
    return np.linalg.lstsq(system.T, z, rcond=None)[0]
