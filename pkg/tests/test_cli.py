import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import tomli

from spectral_deflation import problems
from spectral_deflation.cli import (
    REPORT_COLUMNS,
    RunConfig,
    format_report,
    main,
    parse_label,
    parse_report,
    read_grid_csv,
    roman,
)
from spectral_deflation.problems import ConfigError

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def bratu_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("bratu")
    assert run("solve", "--problem", "bratu", "--n", 16, "--budget", 3, "--reference-n", 24, "--out", out) == 0
    return out


def test_solution_files_and_formats(bratu_run):
    names = sorted(p.name for p in bratu_run.iterdir())
    assert names == sorted(
        [
            "ledger.json",
            "report.md",
            "run_metadata.json",
            "solution_I.csv",
            "solution_I.json",
            "solution_II.csv",
            "solution_II.json",
            "trace_round1.csv",
            "trace_round2.csv",
            "trace_round3.csv",
        ]
    )
    header, body = read_grid_csv(bratu_run / "solution_I.csv")
    assert header == ["x", "u"] and body.shape == (101, 2)
    assert body[0, 0] == 0.0 and body[-1, 0] == 1.0
    assert abs(body[0, 1]) <= 1e-14 and abs(body[-1, 1]) <= 1e-14
    meta = json.loads((bratu_run / "solution_II.json").read_text())
    assert meta["seed"] == 0 and meta["label"] == "II" and meta["N"] == 16
    assert meta["system"]["basis"]["name"] == "dirichlet_shen"
    assert len(meta["coefficients"]) == 15 and meta["residual_inf"] <= 1e-11
    trace = (bratu_run / "trace_round1.csv").read_text().splitlines()
    assert trace[0] == "k,Q,gnorm,h,ratio,kind,accepted"
    ledger = json.loads((bratu_run / "ledger.json").read_text())
    assert ledger["metadata"]["seed"] == 0 and len(ledger["roots"]) == 2


def _mask(text):
    out = []
    for line in text.splitlines():
        cells = line.split(" | ")
        if line.startswith("| ") and len(cells) == 7 and cells[0] in ("| I", "| II"):
            cells[3], cells[4], cells[5] = "<t>", "<r>", "<e>"
        elif line.startswith("| ") and len(cells) == 5 and cells[0][2:].isdigit():
            cells[3] = "<t>"
            if cells[1] == "stalled_radius":
                cells[2] = "<n>"
        out.append(" | ".join(cells))
    return "\n".join(out) + "\n"


def test_report_matches_golden_schema(bratu_run):
    text = (bratu_run / "report.md").read_text()
    assert _mask(text) == (GOLDEN / "bratu_report.md").read_text()
    rows = parse_report(text)
    assert [r["label"] for r in rows] == ["I", "II"]
    assert list(rows[0]) == list(REPORT_COLUMNS)
    # self-convergence against the N=24 reference
    assert float(rows[0]["linf_error"]) <= 1e-12 and float(rows[1]["linf_error"]) <= 1e-3


def test_report_round_trip():
    rows = [{"label": "I", "round": 1, "n_it": 3, "time_s": 0.5, "residual_inf": 1e-13}]
    parsed = parse_report(format_report(rows, "t", [{"round": 1, "status": "converged"}]))
    assert parsed == [
        {"label": "I", "round": "1", "n_it": "3", "time_s": "0.500", "residual_inf": "1.0000e-13", "linf_error": "-", "symmetry_defect": "-"}
    ]


def test_outputs_are_byte_identical_across_runs(tmp_path):
    for d in ("a", "b"):
        assert run("solve", "--problem", "power", "--strategy", "perturb_last", "--seed", 11, "--out", tmp_path / d) in (0, 1)
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in (".csv", ".json") and p.stem != "run_metadata")
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_no_solution_exits_one(tmp_path):
    assert run("solve", "--problem", "bratu", "--param", "lam=3.6", "--budget", 1, "--out", tmp_path) == 1
    assert "max_iterations" in (tmp_path / "report.md").read_text() or "stalled" in (tmp_path / "report.md").read_text()


def test_unknown_problem_exits_nonzero_with_ids(capsys, tmp_path):
    assert run("solve", "--problem", "nope", "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert "unknown problem" in err and "bratu" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["--n", "2"],
        ["--budget", "0"],
        ["--strategy", "ledger_subset"],
        ["--seed", "-1"],
        ["--param", "mu=1"],
        ["--param", "lam"],
        ["--reference-n", "8"],
        ["--guess", "random"],
    ],
)
def test_bad_configuration_exits_two(argv, tmp_path):
    assert run("solve", "--problem", "bratu", *argv, "--out", tmp_path) == 2


def test_compare_identical_and_unpaired(bratu_run, tmp_path, capsys):
    assert run("compare", "--a", bratu_run, "--b", bratu_run, "--strict") == 0
    table = capsys.readouterr().out
    assert "| I | I | 0.0000e+00 |" in table and "| II | II | 0.0000e+00 |" in table
    single = tmp_path / "single"
    assert run("solve", "--problem", "bratu", "--budget", 1, "--out", single) == 0
    assert run("compare", "--a", bratu_run, "--b", single) == 0
    assert run("compare", "--a", bratu_run, "--b", single, "--strict") == 1
    assert "unpaired" in capsys.readouterr().out


def test_compare_without_solutions_is_an_error(tmp_path):
    assert run("compare", "--a", tmp_path, "--b", tmp_path) == 2


def test_catalog_listing_and_export(capsys):
    assert run("catalog") == 0
    listing = capsys.readouterr().out
    for spec in problems.catalog():
        assert spec.id in listing
    assert run("catalog", "--export", "allen_cahn") == 0
    data = tomli.loads(capsys.readouterr().out)
    assert data["problem"]["id"] == "allen_cahn" and data["problem"]["params"]["eps"] == 0.04


def test_toml_config_file(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        "[problem]\nid = \"bratu\"\n[problem.params]\nlam = 2.0\n"
        "[run]\nn = 12\nbudget = 2\nseed = 5\n"
        f"out = \"{(tmp_path / 'out').as_posix()}\"\n"
        "[solver]\nhessian_mode = \"full\"\nmax_iterations = 200\n"
    )
    assert run("solve", "--problem", cfg) == 0
    meta = json.loads((tmp_path / "out" / "solution_I.json").read_text())
    assert meta["params"]["lam"] == 2.0 and meta["N"] == 12 and meta["seed"] == 5
    assert meta["hessian_mode"] == "full"
    bad = tmp_path / "bad.toml"
    bad.write_text("[solver]\nunknown_knob = 1\n[problem]\nid = \"bratu\"\n")
    assert run("solve", "--problem", bad) == 2
    assert run("solve", "--problem", tmp_path / "missing.toml") == 2


def test_ledger_restart_keeps_roots_deflated(bratu_run, tmp_path):
    out = tmp_path / "again"
    # both roots preloaded: nothing new can be found
    assert run("solve", "--problem", "bratu", "--budget", 1, "--ledger", bratu_run / "ledger.json", "--out", out) == 1
    assert len(json.loads((out / "ledger.json").read_text())["roots"]) == 2
    assert run("solve", "--problem", "bratu", "--n", 20, "--ledger", bratu_run / "ledger.json", "--out", out) == 2


def test_chained_guesses_share_one_ledger(tmp_path):
    argv = ["solve", "--problem", "bmp", "--n", 16, "--budget", 1, "--out", tmp_path]
    assert run(*argv, "--guess", "zeros", "--guess", "sin(1,1,40)") == 0
    rows = parse_report((tmp_path / "report.md").read_text())
    assert [(r["label"], r["round"]) for r in rows] == [("I", "1"), ("II", "2")]
    meta = json.loads((tmp_path / "solution_II.json").read_text())
    assert meta["initial_guesses"] == ["zeros", "sin(1,1,40)"]


def test_sweep_writes_one_directory_per_value(tmp_path):
    assert run("solve", "--problem", "bratu", "--budget", 2, "--sweep", "lam=1.0,2.0", "--out", tmp_path) == 0
    dirs = sorted(p.name for p in tmp_path.iterdir())
    assert dirs == ["lam=1.0", "lam=2.0"]
    seeds = {json.loads((tmp_path / d / "ledger.json").read_text())["metadata"]["seed"] for d in dirs}
    assert len(seeds) == 2


def test_two_dimensional_grid_output(tmp_path):
    assert run("solve", "--problem", "henon", "--n", 10, "--budget", 1, "--out", tmp_path) == 0
    header, body = read_grid_csv(tmp_path / "solution_I.csv")
    assert header == ["x", "y", "u"] and body.shape == (101 * 101, 3)
    U = body[:, 2].reshape(101, 101)
    assert np.max(np.abs(U[0])) <= 1e-12 and np.max(np.abs(U[:, -1])) <= 1e-12


def test_verbose_flag_position_and_module_entry(tmp_path):
    assert run("-v", "catalog") == 0
    assert run("catalog", "-v") == 0
    proc = subprocess.run([sys.executable, "-m", "spectral_deflation", "catalog"], capture_output=True, text=True)
    assert proc.returncode == 0 and "bmp" in proc.stdout


def test_labels():
    assert [roman(k) for k in (1, 2, 3, 4, 9, 14, 40)] == ["I", "II", "III", "IV", "IX", "XIV", "XL"]
    assert parse_label("iv") == 3 and parse_label("2") == 1
    with pytest.raises(ConfigError):
        parse_label("Q")
    with pytest.raises(ValueError):
        roman(0)


def test_run_config_validation():
    spec = problems.lookup("bratu")
    with pytest.raises(ConfigError):
        RunConfig(spec, 65)
    with pytest.raises(ConfigError):
        RunConfig(spec, 16, seed=2**64)
    assert RunConfig(spec, 16).emit == ("coeffs", "grid", "trace", "report")
