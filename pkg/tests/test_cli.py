"""
Tests for the command-line front end, the runner and the acceptance suite.
"""

import json
import math

import pytest

from fracode import special, suite
from fracode.cli import build_parser, main, overrides_from_args
from fracode.output import manifest_path_for, read_table
from fracode.suite import CriterionResult, run_criterion, run_suite


def run_cli(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out), "--reproducible"])
    return code, out


class TestParser:
    """Tests for flag parsing."""

    def test_fractions_accepted(self):
        """Steps may be written as fractions."""
        args = build_parser().parse_args(["solve", "--h", "1/1024", "--lambda", "-2"])
        overrides = overrides_from_args(args)
        assert overrides["solver.h"] == 1.0 / 1024.0
        assert overrides["lambda"] == -2.0
        assert overrides["gamma"] is None

    def test_vector_initial_value(self):
        """--v0 takes several numbers."""
        args = build_parser().parse_args(["solve", "--v0", "0", "1"])
        assert overrides_from_args(args)["v0"] == [0.0, 1.0]

    def test_unknown_command(self):
        """Commands are restricted to the known set."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["integrate"])


class TestCommands:
    """End-to-end runs of single commands."""

    def test_ml(self, tmp_path):
        """ml writes one row with value and regime."""
        code, out = run_cli(tmp_path, "ml", "--alpha", "2", "--z", "-4")
        assert code == 0
        table = read_table(out)
        assert table.column("value")[0] == pytest.approx(-0.4161468365471424, abs=1e-12)
        assert table.column("kind")[0] == "series"
        assert "created_at" not in table.metadata

    def test_linear(self, tmp_path):
        """linear reproduces E_0.5(-1) at t = 1."""
        code, out = run_cli(
            tmp_path, "linear", "--gamma", "0.5", "--lambda", "-1", "--h", "1/64"
        )
        assert code == 0
        table = read_table(out)
        assert table.columns == ["t", "v", "e", "b"]
        assert table.rows[-1][1] == pytest.approx(0.42758357615580700, abs=1e-12)

    def test_solve_reaches_end(self, tmp_path):
        """A decaying problem exits 0 with a residual column."""
        code, out = run_cli(tmp_path, "solve", "--rhs", "neg_identity", "--h", "1/128")
        assert code == 0
        table = read_table(out)
        assert table.columns == ["t", "v", "residual"]
        assert len(table.rows) == 129

    def test_solve_blowup_is_partial(self, tmp_path):
        """Blow-up exits 2 and still writes the surviving rows."""
        code, out = run_cli(
            tmp_path, "solve", "--rhs", "square", "--gamma", "0.5", "--h", "1/64", "--t-end", "4"
        )
        assert code == 2
        table = read_table(out)
        assert 0 < len(table.rows) < 257
        assert table.metadata["blowup_bracket"] is not None
        manifest = json.loads(manifest_path_for(out).read_text())
        assert manifest["partial"] is True
        assert manifest["exit_code"] == 2

    def test_picard_within_horizon(self, tmp_path):
        """Picard runs when t_end stays below the existence horizon."""
        code, out = run_cli(
            tmp_path, "solve", "--method", "picard", "--box-radius", "2",
            "--h", "1/1024", "--t-end", "1/32",
        )
        assert code == 0
        table = read_table(out)
        assert table.metadata["parameters"]["solver"]["box_radius"] == 2.0
        assert table.metadata["report"]["method"] == "picard"

    def test_picard_past_horizon(self, tmp_path, capsys):
        """Picard past the horizon is a precondition failure."""
        code, _ = run_cli(tmp_path, "solve", "--method", "picard")
        assert code == 1
        assert "existence horizon" in capsys.readouterr().err

    def test_compare(self, tmp_path):
        """Ordered data under f = v stay ordered."""
        code, out = run_cli(
            tmp_path, "compare", "--rhs", "identity", "--v0", "1", "--sub-v0", "0.5",
            "--h", "1/64",
        )
        assert code == 0
        table = read_table(out)
        assert table.metadata["holds"] is True
        assert all(gap >= 0.0 for gap in table.column("gap"))

    def test_compare_precondition(self, tmp_path, capsys):
        """Misordered initial data exit 1 with one error line."""
        code, _ = run_cli(
            tmp_path, "compare", "--rhs", "identity", "--v0", "1", "--sub-v0", "2"
        )
        assert code == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert err[-1].startswith("error: ")

    def test_oscillator(self, tmp_path):
        """Closed-form oscillator with a fitted slope."""
        code, out = run_cli(tmp_path, "oscillator", "--gamma", "0.25", "--t-end", "50")
        assert code == 0
        table = read_table(out)
        assert table.metadata["mode"] == "closed_form"
        assert table.column("E")[0] == pytest.approx(0.5)
        assert table.metadata["fitted_slope"] < 0.0

    def test_laplace(self, tmp_path):
        """laplace reports both sides of the transform rule."""
        code, out = run_cli(
            tmp_path, "laplace", "--gamma", "0.5", "--phi", "t", "--h", "1/4096", "--s", "30"
        )
        assert code == 0
        row = read_table(out).rows[0]
        assert row[3] <= 1e-2

    def test_bad_gamma_exits_1(self, tmp_path, capsys):
        """Invalid configuration exits 1 and names the field."""
        code, out = run_cli(tmp_path, "solve", "--gamma", "1.5")
        assert code == 1
        assert "error: gamma" in capsys.readouterr().err
        assert not out.exists()

    def test_json_format(self, tmp_path):
        """--format json writes a JSON table."""
        code, out = run_cli(tmp_path, "ml", "--format", "json", name="ml.json")
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["columns"][0] == "alpha"
        assert payload["metadata"]["parameters"]["command"] == "ml"


class TestSuite:
    """Tests for the acceptance suite."""

    def test_single_criterion(self):
        """Criteria return named results."""
        result = run_criterion("06_existence_horizon")
        assert result.passed
        assert result.name == "06_existence_horizon"
        assert result.model_dump()["status"] == "PASS"

    def test_oscillator_decay_criterion(self):
        """The decay fit on [10, 200] runs through the asymptotic regime."""
        result = run_criterion("09_oscillator_decay")
        assert result.passed, result.message

    def test_exception_is_failure(self, monkeypatch):
        """A criterion that raises is reported as FAIL."""

        def broken():
            raise RuntimeError("boom")

        monkeypatch.setitem(suite.CRITERIA, "99_broken", broken)
        result = run_criterion("99_broken")
        assert result.status == "FAIL"
        assert math.isnan(result.measured)
        assert "boom" in result.message

    def test_gamma_mutation_detected(self, monkeypatch):
        """A perturbed Lanczos table breaks the semigroup law."""
        patched = list(special.LANCZOS_COEFFICIENTS)
        patched[1] *= 1.01
        monkeypatch.setattr(special, "LANCZOS_COEFFICIENTS", tuple(patched))
        assert run_criterion("02_semigroup").status == "FAIL"

    def test_failing_suite_exits_2(self, tmp_path, monkeypatch):
        """Any failed criterion makes the suite exit 2."""
        monkeypatch.setattr(
            suite,
            "CRITERIA",
            {
                "01_ok": lambda: CriterionResult("PASS", 0.0, 1.0, "ok"),
                "02_bad": lambda: CriterionResult("FAIL", 2.0, 1.0, "bad"),
            },
        )
        code, out = run_cli(tmp_path, "suite")
        assert code == 2
        table = read_table(out)
        assert table.column("criterion") == ["01_ok", "02_bad"]
        assert table.metadata["failed"] == ["02_bad"]

    def test_full_suite_passes(self):
        """Every shipped criterion passes."""
        results = run_suite(workers=4)
        assert [r.name for r in results] == sorted(suite.CRITERIA)
        failed = {r.name: r.message for r in results if not r.passed}
        assert failed == {}
