"""End-to-end tests of the command line: exit codes and reproducible outputs."""
import json

import pytest

from loopforge.config import settings
from loopforge.main import build_parser, main


class TestExitCodes:
    """0 pass, 1 failure, 2 configuration error."""

    def test_verify_passes(self, tmp_path, single_thread):
        out = tmp_path / "report.json"
        assert main(["verify", "--suites", "loop", "--samples", "20", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["passed"] is True

    def test_impossible_tolerance_fails(self, tmp_path, single_thread):
        """Float residuals are never exactly zero, so a zero-width gate fails."""
        out = tmp_path / "report.json"
        code = main(["verify", "--algebra", "O", "--mode", "float", "--suites", "loop",
                     "--samples", "20", "--tol", "1e-300", "--out", str(out)])
        assert code == 1
        assert json.loads(out.read_text())["failed"]

    def test_unknown_suite(self, tmp_path):
        assert main(["verify", "--suites", "loop,bogus", "--out", str(tmp_path / "r.json")]) == 2

    def test_unknown_config_key(self, write_config, tmp_path):
        path = write_config("[run]\nalgebra = O\nfavourite = 7\n")
        assert main(["verify", "--config", str(path), "--out", str(tmp_path / "r.json")]) == 2

    def test_cs_in_two_dimensions(self, write_config):
        path = write_config("[domain]\ndimension = 2\n")
        assert main(["cs", "--config", str(path)]) == 2

    def test_bad_flag_value(self):
        with pytest.raises(SystemExit) as info:
            main(["verify", "--algebra", "R"])
        assert info.value.code == 2

    def test_companions_to_stdout(self, capsys):
        assert main(["companions", "--algebra", "O", "--map", "identity"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["dimension"] == 1


class TestReproducibility:
    """Same configuration and seed give byte-identical files."""

    @pytest.mark.parametrize("argv", [
        ["verify", "--algebra", "H", "--suites", "loop,pseudoauto", "--samples", "10"],
        ["torsion", "--algebra", "O", "--points", "6", "--grid", "8"],
        ["companions", "--algebra", "O", "--map", "conjugation", "--seed", "11"],
    ])
    def test_repeat_runs(self, tmp_path, monkeypatch, argv):
        first, second = tmp_path / "a.out", tmp_path / "b.out"
        monkeypatch.setattr(settings, "LOOPFORGE_THREADS", 1)
        assert main(argv + ["--out", str(first)]) == 0
        monkeypatch.setattr(settings, "LOOPFORGE_THREADS", 4)
        assert main(argv + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["torsion", "--points", "3", "--seed", "1", "--out", str(first)])
        main(["torsion", "--points", "3", "--seed", "2", "--out", str(second)])
        assert first.read_bytes() != second.read_bytes()


class TestParser:

    def test_flow_flags_reach_flow_section(self):
        args = build_parser().parse_args(["flow", "--grid", "8", "--dimension", "1", "--metric", "killing"])
        assert args.grid == 8
        assert args.dimension == 1
        assert args.metric == "killing"

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
