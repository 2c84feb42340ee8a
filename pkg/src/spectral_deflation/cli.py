"""Command-line driver: ``solve``, ``compare`` and ``catalog``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import tomli

from . import problems
from .deflation import STRATEGIES, DeflationLedger, find_multiple
from .problems import ConfigError, UnknownProblemError
from .trust_region import TrustRegionConfig

log = logging.getLogger("spectral_deflation")

REPORT_COLUMNS = ("label", "round", "n_it", "time_s", "residual_inf", "linf_error", "symmetry_defect")
ROUND_COLUMNS = ("round", "status", "n_it", "time_s", "label")
HESSIAN_FLAGS = {"gn": "gauss_newton", "full": "full"}


def roman(k: int) -> str:
    """1 -> I, 4 -> IV, 9 -> IX."""
    if k < 1:
        raise ValueError("labels start at 1")
    out = []
    for value, glyph in ((1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"),
                         (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")):
        while k >= value:
            out.append(glyph)
            k -= value
    return "".join(out)


def parse_label(text: str) -> int:
    """Zero-based ledger index from a roman label or a 1-based integer."""
    text = text.strip()
    if text.isdigit():
        return int(text) - 1
    for k in range(1, 200):
        if roman(k) == text.upper():
            return k - 1
    raise ConfigError(f"bad solution label {text!r}")


@dataclass
class RunConfig:
    problem: problems.ProblemSpec
    n: int
    budget: int = 3
    strategy: str = "same_guess"
    subset: tuple[int, ...] | None = None
    seed: int = 0
    guesses: tuple[str, ...] = ()
    solver: TrustRegionConfig = field(default_factory=TrustRegionConfig)
    out: Path = Path("run")
    reference_n: int | None = None
    ledger: Path | None = None
    emit: tuple[str, ...] = ("coeffs", "grid", "trace", "report")

    def __post_init__(self):
        if not 4 <= self.n <= 64:
            raise ConfigError("N must lie in [4, 64]")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if self.strategy == "ledger_subset" and not self.subset:
            raise ConfigError("ledger_subset needs --subset")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.reference_n is not None and not self.n < self.reference_n <= 64:
            raise ConfigError("reference N must exceed N and be at most 64")


# ---------------------------------------------------------------- config loading


def _load_problem_arg(arg: str):
    """Catalog id, or a TOML file with [problem] and optional [run]/[solver] tables."""
    path = Path(arg)
    if path.suffix == ".toml" or path.exists():
        try:
            data = tomli.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"no such config file: {arg}") from None
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{arg}: {exc}") from exc
        spec = problems.spec_from_dict(data.get("problem", data))
        return spec, data.get("run", {}), data.get("solver", {})
    return problems.lookup(arg), {}, {}


def _parse_params(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _guess_list(value) -> tuple[str, ...]:
    if value is None:
        return ()
    return (value,) if isinstance(value, str) else tuple(str(v) for v in value)


def build_config(args) -> RunConfig:
    spec, run, solver = _load_problem_arg(args.problem)
    params = _parse_params(args.param)
    if params:
        spec = spec.with_params(**params)

    def pick(flag, key, default):
        value = getattr(args, flag, None)
        return value if value is not None else run.get(key, default)

    solver = dict(solver)
    if args.hessian is not None:
        solver["hessian_mode"] = HESSIAN_FLAGS[args.hessian]
    elif "hessian_mode" in solver:
        solver["hessian_mode"] = HESSIAN_FLAGS.get(solver["hessian_mode"], solver["hessian_mode"])
    if args.max_iterations is not None:
        solver["max_iterations"] = args.max_iterations
    try:
        tr = TrustRegionConfig(**solver)
    except TypeError as exc:
        raise ConfigError(f"bad [solver] table: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    subset = pick("subset", "subset", None)
    if isinstance(subset, str):
        subset = tuple(parse_label(s) for s in subset.split(",") if s.strip())
    elif subset is not None:
        subset = tuple(parse_label(str(s)) for s in subset)
    return RunConfig(
        problem=spec,
        n=int(pick("n", "n", spec.default_n)),
        budget=int(pick("budget", "budget", 3)),
        strategy=pick("strategy", "strategy", "same_guess"),
        subset=subset,
        seed=int(pick("seed", "seed", 0)),
        guesses=_guess_list(pick("guess", "guess", None)),
        solver=tr,
        out=Path(pick("out", "out", "run")),
        reference_n=pick("reference_n", "reference_n", None),
        ledger=Path(led) if (led := pick("ledger", "ledger", None)) else None,
    )


# ---------------------------------------------------------------- output writers


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_grid_csv(path: Path, axes, values) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if len(axes) == 1:
        w.writerow(("x", "u"))
        for x, u in zip(axes[0], values):
            w.writerow((_fmt(x), _fmt(u)))
    else:
        w.writerow(("x", "y", "u"))
        xs, ys = axes
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                w.writerow((_fmt(x), _fmt(y), _fmt(values[i, j])))
    path.write_text(buf.getvalue())


def read_grid_csv(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return header, body


def write_trace_csv(path: Path, trace) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("k", "Q", "gnorm", "h", "ratio", "kind", "accepted"))
    for row in trace:
        w.writerow((row.k, _fmt(row.Q), _fmt(row.gnorm), _fmt(row.h), _fmt(row.ratio), row.kind, int(row.accepted)))
    path.write_text(buf.getvalue())


def _table(rows, columns) -> list[str]:
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    for r in rows:
        cells = []
        for c in columns:
            v = r.get(c)
            if v is None:
                cells.append("-")
            elif isinstance(v, float):
                cells.append(f"{v:.3f}" if c == "time_s" else f"{v:.4e}")
            else:
                cells.append(str(v))
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def format_report(rows, title: str, rounds=None) -> str:
    """Markdown report: one row per solution, then one row per deflation round."""
    lines = [f"# {title}", "", "## Solutions", ""] + _table(rows, REPORT_COLUMNS)
    if rounds is not None:
        lines += ["", "## Rounds", ""] + _table(rounds, ROUND_COLUMNS)
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> list[dict]:
    """Solution rows of a report written by :func:`format_report`."""
    rows = []
    for line in text.splitlines():
        if line.startswith("## Rounds"):
            break
        if line.startswith("|"):
            rows.append(line)
    header = [c.strip() for c in rows[0].strip("|").split("|")]
    return [dict(zip(header, (c.strip() for c in line.strip("|").split("|")))) for line in rows[2:]]


# ---------------------------------------------------------------- solve


def _match(samples_a, samples_b):
    """Greedy nearest pairing by grid L-inf distance; each side used once."""
    pairs = sorted(
        (float(np.max(np.abs(a - b))), i, j) for i, a in enumerate(samples_a) for j, b in enumerate(samples_b)
    )
    used_a, used_b, matched = set(), set(), []
    for d, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matched.append((i, j, d))
    return sorted(matched), sorted(set(range(len(samples_a))) - used_a), sorted(set(range(len(samples_b))) - used_b)


def load_ledger(path: Path, n: int) -> DeflationLedger:
    try:
        ledger = DeflationLedger.from_json(Path(path).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read ledger {path}: {exc}") from exc
    if any(r.shape != (n,) for r in ledger.roots):
        raise ConfigError(f"ledger {path} holds roots of a different size than this system ({n})")
    return ledger


def _chain(system, spec, guesses, cfg: RunConfig, ledger):
    """``budget`` deflation rounds per starting guess, all sharing one ledger."""
    attempts = []
    for guess in guesses:
        x0 = problems.initial_guess(spec, system.n, guess, system)
        batch, ledger = find_multiple(
            system, x0, cfg.strategy, cfg.budget, cfg.solver, seed=cfg.seed, subset=cfg.subset, ledger=ledger
        )
        attempts += [dataclasses.replace(a, round=a.round + len(attempts)) for a in batch]
    return attempts, ledger


def solve(cfg: RunConfig) -> int:
    spec = cfg.problem
    system = problems.build_system(spec, cfg.n)
    guesses = cfg.guesses or (spec.initial_guess,)
    preloaded = load_ledger(cfg.ledger, system.n) if cfg.ledger else None
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    attempts, ledger = _chain(system, spec, guesses, cfg, preloaded)
    elapsed = time.perf_counter() - t0

    ref_samples = None
    if cfg.reference_n:
        ref_system = problems.build_system(spec, cfg.reference_n)
        _, ref_ledger = _chain(ref_system, spec, guesses, cfg, None)
        ref_samples = [ref_system.sample(r)[1] for r in ref_ledger.roots]

    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    common = {
        "problem": spec.id,
        "params": dict(spec.params),
        "N": cfg.n,
        "seed": cfg.seed,
        "strategy": cfg.strategy,
        "budget": cfg.budget,
        "hessian_mode": cfg.solver.hessian_mode,
        "initial_guesses": list(guesses),
    }
    samples = [system.sample(r) for r in ledger.roots]
    errors = {}
    if ref_samples is not None:
        matched, _, _ = _match([s[1] for s in samples], ref_samples)
        errors = {i: d for i, _, d in matched}

    rows, rounds, timing = [], [], []
    for att in attempts:
        if "trace" in cfg.emit:
            write_trace_csv(out / f"trace_round{att.round + 1}.csv", att.outcome.trace)
        label = roman(att.root_index + 1) if att.root_index is not None else None
        rounds.append(
            {
                "round": att.round + 1,
                "status": "duplicate" if att.duplicate else att.outcome.status,
                "n_it": att.outcome.iterations,
                "time_s": att.outcome.wall_time,
                "label": label,
            }
        )
        timing.append({"round": att.round + 1, "wall_time_s": att.outcome.wall_time})
        if att.root_index is None:
            continue
        row = {
            "label": label,
            "round": att.round + 1,
            "n_it": att.outcome.iterations,
            "time_s": att.outcome.wall_time,
            "residual_inf": att.original_residual_inf,
            "linf_error": errors.get(att.root_index),
            "symmetry_defect": None,
        }
        axes, values = samples[att.root_index]
        if spec.symmetries:
            sym = problems.check_symmetry(spec, system, ledger.roots[att.root_index])
            row["symmetry_defect"] = max(v["defect"] for v in sym.values())
        else:
            sym = {}
        if "coeffs" in cfg.emit:
            _write_json(
                out / f"solution_{label}.json",
                {
                    **common,
                    "label": label,
                    "round": att.round + 1,
                    "iterations": att.outcome.iterations,
                    "residual_inf": att.original_residual_inf,
                    "symmetry": sym,
                    "system": system.metadata(),
                    "coefficients": [float(v) for v in ledger.roots[att.root_index]],
                },
            )
        if "grid" in cfg.emit:
            write_grid_csv(out / f"solution_{label}.csv", axes, values)
        rows.append(row)

    ledger.metadata = common
    (out / "ledger.json").write_text(ledger.to_json() + "\n")
    if "report" in cfg.emit:
        title = f"{spec.id} {json.dumps(spec.params, sort_keys=True)} N={cfg.n}"
        (out / "report.md").write_text(format_report(rows, title, rounds))
    _write_json(
        out / "run_metadata.json",
        {
            "started_utc": started.isoformat(),
            "finished_utc": datetime.now(timezone.utc).isoformat(),
            "wall_time_s": elapsed,
            "rounds": timing,
        },
    )
    found = sum(a.root_index is not None for a in attempts)
    log.info("%s: %d solution(s) in %d round(s); output in %s", spec.id, found, len(attempts), out)
    return 0 if found >= 1 else 1


def _sweep_values(text: str):
    key, sep, values = text.partition("=")
    if not sep or not values:
        raise ConfigError("--sweep expects key=v1,v2,...")
    return key, [json.loads(v) for v in values.split(",")]


def run_sweep(cfg: RunConfig, sweep: str, workers: int) -> int:
    """Independent solves per parameter value, each in its own subdirectory."""
    key, values = _sweep_values(sweep)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(len(values), dtype=np.uint64)
    jobs = []
    for value, seed in zip(values, seeds):
        spec = cfg.problem.with_params(**{key: value})
        jobs.append(dataclasses.replace(cfg, problem=spec, seed=int(seed), out=cfg.out / f"{key}={value}"))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        codes = list(pool.map(solve, jobs))
    return 0 if any(c == 0 for c in codes) else 1


# ---------------------------------------------------------------- compare


def compare(dir_a: Path, dir_b: Path, strict: bool = False, stream=None) -> int:
    stream = stream or sys.stdout
    grids = []
    for d in (dir_a, dir_b):
        files = sorted(Path(d).glob("solution_*.csv"), key=lambda p: parse_label(p.stem.split("_", 1)[1]))
        if not files:
            raise ConfigError(f"no solution grids in {d}")
        grids.append([(p.stem.split("_", 1)[1], read_grid_csv(p)) for p in files])
    shapes = {g[1][1].shape for side in grids for g in side}
    if len(shapes) != 1:
        raise ConfigError("runs use different evaluation grids")
    a_vals = [g[1][1][:, -1] for g in grids[0]]
    b_vals = [g[1][1][:, -1] for g in grids[1]]
    matched, left_a, left_b = _match(a_vals, b_vals)
    print("| a | b | linf_diff |", file=stream)
    print("|---|---|---|", file=stream)
    for i, j, d in matched:
        print(f"| {grids[0][i][0]} | {grids[1][j][0]} | {d:.4e} |", file=stream)
    for i in left_a:
        print(f"| {grids[0][i][0]} | unpaired | - |", file=stream)
    for j in left_b:
        print(f"| unpaired | {grids[1][j][0]} | - |", file=stream)
    return 1 if strict and (left_a or left_b) else 0


# ---------------------------------------------------------------- catalog


def print_catalog(stream=None) -> None:
    stream = stream or sys.stdout
    for spec in problems.catalog():
        params = ", ".join(f"{k}={v}" for k, v in spec.params.items())
        print(f"{spec.id:<11} {spec.dimension}D  N={spec.default_n:<3} {spec.equation}  [{params}]", file=stream)


# ---------------------------------------------------------------- entry point


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectral-deflation", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="find multiple solutions of one problem")
    s.add_argument("--problem", required=True, help="catalog id or TOML config path")
    s.add_argument("--n", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--strategy", choices=STRATEGIES)
    s.add_argument("--subset", help="comma-separated solution labels, e.g. I,III")
    s.add_argument("--seed", type=int)
    s.add_argument("--hessian", choices=sorted(HESSIAN_FLAGS))
    s.add_argument(
        "--guess",
        action="append",
        help="named initial guess, e.g. ones, -cos(ones), sin(1,2,40); repeat to chain starts over one ledger",
    )
    s.add_argument("--param", action="append", metavar="KEY=VALUE", help="override a problem parameter")
    s.add_argument("--max-iterations", type=int, dest="max_iterations")
    s.add_argument("--reference-n", type=int, dest="reference_n", help="also solve at this N for L-inf errors")
    s.add_argument("--ledger", help="ledger.json of an earlier run whose roots stay deflated")
    s.add_argument("--out")
    s.add_argument("--sweep", metavar="KEY=V1,V2", help="solve once per parameter value")
    s.add_argument("--workers", type=int, default=2)

    c = sub.add_parser("compare", help="pair solutions of two runs and report grid differences")
    c.add_argument("--a", required=True, type=Path)
    c.add_argument("--b", required=True, type=Path)
    c.add_argument("--strict", action="store_true")

    k = sub.add_parser("catalog", help="list benchmark problems")
    k.add_argument("--export", metavar="ID", help="print a TOML template for one problem")
    for sp in (s, c, k):
        sp.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "catalog":
            if args.export:
                sys.stdout.write(problems.dump_toml(problems.lookup(args.export)))
            else:
                print_catalog()
            return 0
        if args.command == "compare":
            return compare(args.a, args.b, args.strict)
        cfg = build_config(args)
        if args.sweep:
            return run_sweep(cfg, args.sweep, args.workers)
        return solve(cfg)
    except (ConfigError, UnknownProblemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
