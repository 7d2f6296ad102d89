"""Config parsing, validation, artifacts, and exit codes of the runner."""

import json
import os

import pytest

from blochpump import cli
from blochpump.errors import ParseError, ValidationError

MINIMAL = "[potential]\nfamily = sliding_cosine\n"

OK_INI = """[potential]
family = static
[mesh]
n_k = 16
n_t = 9
[run]
analyses = bands, symmetry
"""

FAIL_INI = """[potential]
family = sliding_cosine
[mesh]
n_k = 16
n_t = 17
[run]
eps = 0.1
analyses = bands, curvature, pump
"""

ROUTES_INI = """[potential]
family = sliding_cosine
[mesh]
n_k = 32
n_t = 17
[run]
eps = 0.1
analyses = bands, curvature, polarize
"""


def test_minimal_config_defaults():
    cfg = cli.parse_config(MINIMAL)
    assert cfg.family == "sliding_cosine"
    assert cfg.n_cut == 9
    assert cfg.n_k == (64,)
    assert cfg.n_t == 64
    assert cfg.bands == 1
    assert cfg.eps == (0.2, 0.1, 0.05)
    assert cfg.substep == 0.05
    assert "bands" in cfg.analyses and "symmetry" in cfg.analyses


def test_full_config_round_trip():
    cfg = cli.parse_config("""[potential]
family = two_harmonic
rho = 0.5
w = 0.25
T = 3.0
[mesh]
n_cut = 7
n_k = 32
n_t = 17
[run]
bands = 2
order = 2
eps = 0.1, 0.05
substep = 0.1
analyses = bands, superadiabatic
out = results
""")
    assert cfg.family == "two_harmonic"
    assert cfg.params == {"rho": 0.5, "w": 0.25, "T": 3.0}
    assert cfg.n_cut == 7
    assert cfg.n_k == (32,)
    assert cfg.n_t == 17
    assert cfg.bands == 2
    assert cfg.order == 2
    assert cfg.eps == (0.1, 0.05)
    assert cfg.substep == 0.1
    assert cfg.analyses == ("bands", "superadiabatic")
    assert cfg.outdir == "results"


def test_parse_error_positions():
    with pytest.raises(ParseError, match="line 1"):
        cli.parse_config("family = static\n")
    with pytest.raises(ParseError, match="line 4"):
        cli.parse_config("[potential]\nfamily = static\n[mesh]\nn_cut = abc\n")
    with pytest.raises(ParseError, match="repeated"):
        cli.parse_config("[potential]\nfamily = static\nv = 1\nv = 2\n")
    with pytest.raises(ParseError, match="repeated"):
        cli.parse_config("[mesh]\nn_k = 8\n[mesh]\nn_t = 9\n")


def test_validation_collects_every_failure():
    text = """[potential]
family = static
[mesh]
n_k = 0
[run]
eps = 0.05, 0.1
substep = 7
analyses = bands, nosuch
[extra]
x = 1
"""
    with pytest.raises(ValidationError) as exc:
        cli.parse_config(text)
    failures = "\n".join(exc.value.failures)
    assert len(exc.value.failures) >= 4
    assert "unknown section [extra]" in failures
    assert "nosuch" in failures
    assert "strictly decreasing" in failures
    assert "substep" in failures


def test_unknown_family_lists_known():
    with pytest.raises(ValidationError, match="sliding_cosine"):
        cli.parse_config("[potential]\nfamily = nosuch\n")


def test_format_repr_round_trips():
    assert cli._fmt(0.6) == "0.59999999999999998"
    assert float(cli._fmt(0.6)) == 0.6
    assert cli._fmt(3) == "3"


def test_run_passes_and_writes_artifacts(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(OK_INI)
    out = tmp_path / "out"
    assert cli.main(["--config", str(cfg), "--out", str(out)]) == 0
    names = sorted(os.listdir(out))
    assert "report.json" in names
    assert "timings.json" in names
    assert "bands.csv" in names
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    assert report["schema"] == 1
    assert set(report["results"]) == {"bands", "symmetry"}
    assert list(report) == sorted(report)
    header = (out / "bands.csv").read_text().splitlines()[0]
    assert header.split(",")[:2] == ["t", "k1"]


def test_run_gate_failure_exits_one(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(FAIL_INI)
    out = tmp_path / "out"
    assert cli.main(["--config", str(cfg), "--out", str(out)]) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is False


def test_run_config_problems_exit_two(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[potential]\nfamily = nosuch\n")
    assert cli.main(["--config", str(cfg)]) == 2
    assert cli.main(["--config", str(tmp_path / "missing.ini")]) == 2


def test_subcommand_restricts_analyses(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(ROUTES_INI)
    out = tmp_path / "out"
    assert cli.main(["curvature", "--config", str(cfg),
                     "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert list(report["results"]) == ["curvature"]
    assert "curvature.csv" in os.listdir(out)


def test_repeated_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(ROUTES_INI)
    out = tmp_path / "out"
    assert cli.main(["--config", str(cfg), "--out", str(out)]) == 0
    watched = ["report.json", "curvature.csv", "polarization.csv"]
    first = {n: (out / n).read_bytes() for n in watched}
    assert cli.main(["--config", str(cfg), "--out", str(out)]) == 0
    for n in watched:
        assert (out / n).read_bytes() == first[n]
