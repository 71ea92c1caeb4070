"""Tests for the run configuration and the five subcommands."""
import csv
import json

import pytest

from loopforge.commands.companions import companion_report, run_companions
from loopforge.commands.cs import run_cs
from loopforge.commands.flow import FLOW_COLUMNS, flow_run, run_flow
from loopforge.commands.run_config import CompanionMap, FieldKind, load_config
from loopforge.commands.torsion import run_torsion, torsion_table
from loopforge.commands.verify import build_report, run_verify
from loopforge.constants import EXIT_FAILURE, EXIT_OK
from loopforge.errors import ConfigError
from loopforge.reports.models import SuiteEntry
from loopforge.services.algebra import AlgebraTag
from loopforge.services.numerics import ScalarMode


class TestLoadConfig:
    """INI parsing, validation and flag overrides."""

    def test_defaults(self):
        config = load_config()
        assert config.run.algebra == AlgebraTag.O
        assert config.run.mode == ScalarMode.EXACT
        assert config.fields.kind == FieldKind.RANDOM
        assert config.companions.map == CompanionMap.IDENTITY

    def test_file_values(self, write_config):
        path = write_config("[run]\nalgebra = H\nseed = 9\nsuites = loop, tangent\n\n"
                            "[domain]\ndimension = 2\n\n[tolerances]\nloop = 1e-3\n")
        config = load_config(path)
        assert config.run.algebra == AlgebraTag.H
        assert config.run.seed == 9
        assert config.run.suites == ["loop", "tangent"]
        assert config.domain.dimension == 2
        assert config.tolerances == {"loop": 1e-3}

    def test_flags_override_file(self, write_config):
        path = write_config("[run]\nalgebra = H\nseed = 9\n")
        config = load_config(path, {"run": {"seed": 4, "algebra": None}})
        assert config.run.seed == 4
        assert config.run.algebra == AlgebraTag.H

    @pytest.mark.parametrize("text", [
        "[run]\ncolour = blue\n",
        "[telemetry]\nenabled = yes\n",
        "[run]\nalgebra = R\n",
        "[run]\nsamples = 0\n",
        "[domain]\ndimension = 4\n",
        "no section header\n",
    ])
    def test_invalid_files(self, write_config, text):
        with pytest.raises(ConfigError):
            load_config(write_config(text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.ini")

    def test_error_exit_code(self, write_config):
        with pytest.raises(ConfigError) as info:
            load_config(write_config("[run]\ncolour = blue\n"))
        assert info.value.exit_code == 2


class TestTolerances:
    """Re-judging entries against overridden tolerances."""

    def entries(self):
        return [SuiteEntry.check("left-bol", "loop", 1e-9, 1e-10),
                SuiteEntry.check("flexible", "loop", 1e-9, 1e-10),
                SuiteEntry.info("phi-lambda", "phi", 0.375)]

    def test_no_overrides_is_identity(self):
        entries = self.entries()
        assert load_config().apply_tolerances(entries) == entries

    def test_identity_key_beats_suite_key(self, write_config):
        config = load_config(write_config("[tolerances]\nloop = 1e-8\nleft-bol = 1e-12\n"))
        judged = {e.identity: e for e in config.apply_tolerances(self.entries())}
        assert not judged["left-bol"].passed
        assert judged["flexible"].passed
        assert judged["phi-lambda"].report_only

    def test_global_tol(self):
        judged = load_config(tol=1e-6).apply_tolerances(self.entries())
        assert all(e.passed for e in judged)
        assert judged[0].tolerance == 1e-6


class TestVerify:

    def test_passing_run(self, tmp_path, single_thread):
        out = tmp_path / "report.json"
        config = load_config(overrides={"run": {"suites": "loop", "samples": 20},
                                        "output": {"path": out}})
        assert run_verify(config) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert report["failed"] == []
        assert {e["suite"] for e in report["entries"]} == {"loop"}

    def test_corrupted_table_fails(self, tmp_path, broken_octonions, single_thread):
        config = load_config(overrides={"run": {"suites": "loop", "samples": 20},
                                        "output": {"path": tmp_path / "r.json"}})
        assert run_verify(config, algebra=broken_octonions) == EXIT_FAILURE
        report = build_report(config, algebra=broken_octonions)
        assert "loop/left-alternative" in report.failed


class TestTorsion:

    def test_zero_configuration(self, tmp_path):
        out = tmp_path / "fields.csv"
        config = load_config(overrides={"fields": {"kind": "zero"}, "domain": {"points": 5},
                                        "output": {"path": out}})
        assert run_torsion(config) == EXIT_OK
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert len(rows) == 5
        t_columns = [c for c in rows[0] if c.startswith("T_")]
        assert len(t_columns) == 3 * 7
        assert all(float(row[c]) == 0.0 for row in rows for c in t_columns)

    def test_complex_anchor(self):
        """For the complex numbers Fhat equals the exterior derivative of T."""
        config = load_config(overrides={"run": {"algebra": "C"}, "domain": {"points": 8}})
        header, rows, worst = torsion_table(config)
        fhat = [i for i, c in enumerate(header) if c.startswith("Fhat_")]
        dt = [i for i, c in enumerate(header) if c.startswith("dT_")]
        assert len(fhat) == len(dt) == 3
        for row in rows:
            assert all(abs(row[f] - row[d]) < 1e-8 for f, d in zip(fhat, dt))
        assert worst < 1e-8

    def test_csv_to_stdout(self, capsys):
        config = load_config(overrides={"fields": {"kind": "constant"}, "domain": {"points": 2}})
        assert run_torsion(config) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("point,x0,x1,x2,T_0_0")
        assert len(lines) == 3


class TestFlow:

    def test_zero_configuration_converges_immediately(self, tmp_path):
        out, summary = tmp_path / "flow.csv", tmp_path / "summary.json"
        config = load_config(overrides={"run": {"algebra": "H"}, "fields": {"kind": "zero"},
                                        "flow": {"grid": 8}, "output": {"path": out, "summary": summary}})
        assert run_flow(config) == EXIT_OK
        assert out.read_text().strip() == ",".join(FLOW_COLUMNS)
        data = json.loads(summary.read_text())
        assert data["converged"] is True
        assert data["iterations"] == 0

    def test_iteration_cap(self, tmp_path):
        config = load_config(overrides={"run": {"algebra": "H"}, "fields": {"max_frequency": 1},
                                        "flow": {"grid": 8, "max_iterations": 3}})
        records, summary = flow_run(config)
        assert len(records) == 3
        assert not summary.converged
        assert summary.monotone


class TestCs:

    def test_requires_three_dimensions(self):
        config = load_config(overrides={"domain": {"dimension": 2}})
        with pytest.raises(ConfigError):
            run_cs(config)

    @pytest.mark.slow
    def test_report(self, tmp_path, single_thread):
        out = tmp_path / "cs.json"
        config = load_config(overrides={"domain": {"points": 4}, "output": {"path": out}})
        assert run_cs(config) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["name"] == "chern-simons"
        assert report["variation_residual"] <= 1e-5


class TestCompanions:

    def test_identity_gives_nucleus(self):
        report = companion_report(load_config())
        assert report.dimension == 1
        assert report.nucleus_dimension == 1
        assert report.basis == [["1", "0", "0", "0", "0", "0", "0", "0"]]
        assert report.contains_expected

    def test_quaternion_identity(self):
        report = companion_report(load_config(overrides={"run": {"algebra": "H"}}))
        assert report.dimension == report.nucleus_dimension == 4

    def test_conjugation_contains_cube(self, tmp_path):
        out = tmp_path / "companions.json"
        config = load_config(overrides={"companions": {"map": "conjugation"}, "output": {"path": out}})
        assert run_companions(config) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["dimension"] == 1
        assert report["contains_expected"] is True
        assert all("/" in v or v.lstrip("-").isdigit() for v in report["expected_companion"])
