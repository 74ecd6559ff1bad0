"""The belab command line: subcommands, output files and exit codes."""

from __future__ import annotations

import json

import pandas as pd
import pytest
from rich.console import Console

from belab import cli
from belab.config import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_HYPOTHESIS_VIOLATION,
    EXIT_OK,
    EXIT_SOLVER_FAILURE,
    MANIFEST_NAME,
)
from belab.errors import (
    BelabError,
    ConfigError,
    DomainError,
    EnumerationOverflow,
    HypothesisViolation,
    LevelSetError,
    MultiplicityError,
    PreconditionError,
    SolverError,
)
from belab.runner import engine

GROWTH_RUN = """\
scenario = "growth-count"
manifold = "flat-torus"
seed = 5

[params]
m = 1.0

[topology]
s_max = 12
degree_bound = {bound}
"""

HORIZON = """\
n = 3
Lambda = 0.0
kappa = 1.0
lambda_chi = -0.25
C = 0.5
D = 2.0
V = 1.0
"""


@pytest.fixture(autouse=True)
def wide_console(monkeypatch):
    monkeypatch.setattr(cli, "console", Console(width=200))
    monkeypatch.setattr(cli, "err_console", Console(width=200, stderr=True))


@pytest.fixture
def growth_config(tmp_path):
    def write(bound: float):
        path = tmp_path / "growth.toml"
        path.write_text(GROWTH_RUN.format(bound=bound))
        return path

    return write


class TestExitCodes:
    @pytest.mark.parametrize(
        "exc, code",
        [
            (ConfigError("bad", key="params.m"), EXIT_CONFIG_ERROR),
            (DomainError("rho out of range"), EXIT_CONFIG_ERROR),
            (HypothesisViolation("|X| <= C", 2.0), EXIT_HYPOTHESIS_VIOLATION),
            (PreconditionError("u > 0"), EXIT_HYPOTHESIS_VIOLATION),
            (SolverError("no luck", residual=1.0), EXIT_SOLVER_FAILURE),
            (MultiplicityError("two kernels"), EXIT_SOLVER_FAILURE),
            (LevelSetError("empty"), EXIT_SOLVER_FAILURE),
            (EnumerationOverflow("too many"), EXIT_SOLVER_FAILURE),
            (BelabError("other"), EXIT_SOLVER_FAILURE),
        ],
    )
    def test_mapping(self, exc, code):
        assert cli.exit_code_for(exc) == code

    @pytest.mark.parametrize(
        "exc, code",
        [
            (HypothesisViolation("Ric_X^m >= -(n-1) delta g", -0.3), EXIT_HYPOTHESIS_VIOLATION),
            (SolverError("Dirichlet solve", residual=1e-3), EXIT_SOLVER_FAILURE),
            (DomainError("r must be positive"), EXIT_CONFIG_ERROR),
            (ValueError("jobs must be at least 1"), EXIT_CONFIG_ERROR),
        ],
    )
    def test_run_failures(self, monkeypatch, growth_config, capsys, exc, code):
        def explode(*args, **kwargs):
            raise exc

        monkeypatch.setattr(engine, "run_checks", explode)
        assert cli.main(["-q", "run", str(growth_config(3.0))]) == code
        assert "belab run" in capsys.readouterr().err

    def test_config_error_keeps_the_key(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text('scenario = "growth-count"\nmanifold = "flat-torus"\n[params]\nm = -1.0\n')
        assert cli.main(["run", str(path)]) == EXIT_CONFIG_ERROR
        assert "[params.m]" in capsys.readouterr().err

    def test_run_needs_a_config(self):
        assert cli.main(["run"]) == EXIT_CONFIG_ERROR


class TestRun:
    def test_passing_run_writes_reports(self, growth_config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["-q", "run", str(growth_config(3.0)), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "01-growth-count.json").read_text())
        assert report["check_name"] == "growth-count"
        assert report["passed"] is True
        manifest = json.loads((out / MANIFEST_NAME).read_text())
        assert manifest["seed"] == 5
        assert manifest["reports"] == [{"file": "01-growth-count.json", "check_name": "growth-count",
                                        "passed": True}]
        assert "timestamp" in manifest

    def test_failing_check_exits_one(self, growth_config, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["-q", "run", str(growth_config(1.5)), "--out", str(out)]) == EXIT_CHECK_FAILED
        assert json.loads((out / MANIFEST_NAME).read_text())["passed"] is False

    def test_reports_do_not_depend_on_jobs(self, growth_config, tmp_path):
        config = str(growth_config(3.0))
        cli.main(["-q", "run", config, "--out", str(tmp_path / "a")])
        cli.main(["-q", "run", config, "--out", str(tmp_path / "b"), "--jobs", "4"])
        first = (tmp_path / "a" / "01-growth-count.json").read_text()
        assert first == (tmp_path / "b" / "01-growth-count.json").read_text()

    def test_summary_table(self, growth_config, tmp_path, capsys):
        cli.main(["run", str(growth_config(3.0)), "--out", str(tmp_path / "out")])
        assert "all checks passed" in capsys.readouterr().out

    def test_list_suites(self, capsys):
        assert cli.main(["run", "--list-suites"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in ("abresch-gromoll", "segment-inequality", "cheng-yau"):
            assert name in out


class TestTables:
    def test_flat_three_dimensional_model(self, tmp_path):
        path = tmp_path / "tables" / "model.csv"
        args = ["tables", "--d", "3", "--lambda", "0", "--r", "1", "--out", str(path), "--samples", "10"]
        assert cli.main(["-q", *args]) == EXIT_OK
        assert path.read_text().splitlines()[0] == "rho,ell,Hbar,G"
        df = pd.read_csv(path)
        assert len(df) == 10
        assert (df["Hbar"] * df["rho"]).tolist() == pytest.approx([2.0] * 10)
        half = df.loc[df["rho"] == 0.5, "G"].item()
        assert half == pytest.approx(1 / 24 + 2 / 3 - 1 / 2, rel=1e-6)
        assert df["G"].iloc[-1] == pytest.approx(0.0, abs=1e-9)

    def test_rerun_is_byte_identical(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (first, second):
            cli.main(["-q", "tables", "--d", "4", "--lambda", "-0.5", "--r", "2", "--out", str(path)])
        assert first.read_bytes() == second.read_bytes()


class TestHorizon:
    def test_json_report(self, tmp_path):
        hypotheses = tmp_path / "ring.toml"
        hypotheses.write_text(HORIZON)
        out = tmp_path / "ring.json"
        assert cli.main(["-q", "horizon", str(hypotheses), "--json", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["delta_effective"] == pytest.approx(0.25)
        assert doc["betti_ceiling"] == 5

    def test_prints_table(self, tmp_path, capsys):
        hypotheses = tmp_path / "ring.toml"
        hypotheses.write_text(HORIZON)
        assert cli.main(["horizon", str(hypotheses)]) == EXIT_OK
        assert "Betti bound" in capsys.readouterr().out

    def test_missing_key(self, tmp_path):
        hypotheses = tmp_path / "ring.toml"
        hypotheses.write_text(HORIZON.replace("kappa = 1.0\n", ""))
        assert cli.main(["horizon", str(hypotheses)]) == EXIT_CONFIG_ERROR
