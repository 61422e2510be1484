"""
Tests for the fabricsim command line
"""
import pytest

from src.scenario.catalog import get_scenario
from src.scenario.cli import build_parser, is_catalog_name, main, parse_sweep, sweep_points
from src.scenario.parser import parse
from src.utils.error_handler import ModelError, ValidationError


@pytest.fixture
def p2p_path(test_data_dir):
    return str(test_data_dir / "point_to_point.yaml")


class TestArguments:
    def test_run_arguments(self):
        args = build_parser().parse_args(
            ["run", "fc_congestion", "--seed", "3", "--param", "alpha=0.5", "--param", "fc=false"]
        )
        assert args.target == "fc_congestion"
        assert args.seed == 3
        assert args.param == ["alpha=0.5", "fc=false"]
        assert args.out is None

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_parse_sweep(self):
        assert parse_sweep("alpha=0.5, 0.9") == ("alpha", ["0.5", "0.9"])
        with pytest.raises(ValidationError):
            parse_sweep("alpha")
        with pytest.raises(ValidationError):
            parse_sweep("alpha=")

    def test_catalog_names_and_files(self):
        assert is_catalog_name("fc_congestion")
        assert not is_catalog_name("fc_congestion.yaml")
        assert not is_catalog_name("data/scenarios/point_to_point.yaml")


class TestCommands:
    def test_list(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert "saturation_sweep" in out
        assert "fig1_scaled" in out
        assert "probe.csv" in out

    def test_validate(self, p2p_path, capsys):
        assert main(["validate", p2p_path]) == 0
        assert "valid (1 switches, 2 nodes: host=2)" in capsys.readouterr().out

    def test_validate_reports_located_problems(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("name: bad\nrun_length: 1ms\ncolour: blue\n")
        assert main(["validate", str(path)]) == 1
        assert "line 3: colour: unknown key" in capsys.readouterr().err

    def test_render(self, capsys):
        assert main(["render", "fc_congestion", "--param", "alpha=0.5"]) == 0
        rendered = parse(capsys.readouterr().out)
        assert rendered == get_scenario("fc_congestion", {"alpha": "0.5"})

    def test_render_unknown_scenario(self, capsys):
        assert main(["render", "warp_drive"]) == 1
        assert "Unknown scenario 'warp_drive'" in capsys.readouterr().err


@pytest.mark.integration
class TestRun:
    def test_run_file(self, p2p_path, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", p2p_path, "--out", str(out), "--param", "run_length=2ms"]) == 0
        assert (out / "flows.csv").exists()
        assert (out / "counters.csv").exists()
        assert "point_to_point (seed 1)" in capsys.readouterr().out

    def test_seed_override(self, p2p_path, tmp_path, capsys):
        assert main(["run", p2p_path, "--out", str(tmp_path), "--seed", "5", "--param", "run_length=1ms"]) == 0
        assert "(seed 5)" in capsys.readouterr().out

    def test_default_output_directory(self, p2p_path, tmp_path):
        assert main(["run", p2p_path, "--param", "run_length=1ms"]) == 0
        assert (tmp_path / "results" / "point_to_point" / "flows.csv").exists()

    def test_sweep_over_a_file(self, p2p_path, tmp_path):
        code = main([
            "run", p2p_path, "--out", str(tmp_path), "--param", "run_length=1ms",
            "--sweep", "sources.0.offered_load=0.1,0.2", "--workers", "1",
        ])
        assert code == 0
        assert (tmp_path / "sources.0.offered_load=0.1" / "flows.csv").exists()
        assert (tmp_path / "sources.0.offered_load=0.2" / "flows.csv").exists()

    def test_sweep_over_a_catalog_knob(self, tmp_path):
        points = sweep_points("fc_congestion", {"run_length": "1ms"}, "alpha", ["0.5", "0.9"], tmp_path)
        docs = [doc for doc, _, _ in points]
        assert [doc.sources[0].offered_load for doc in docs] == [0.5, 0.9]
        assert [out.name for _, out, _ in points] == ["alpha=0.5", "alpha=0.9"]

    def test_unknown_scenario_is_invalid_input(self, capsys):
        assert main(["run", "warp_drive"]) == 1
        assert "Valid scenarios" in capsys.readouterr().err

    def test_invalid_override_is_invalid_input(self, p2p_path, capsys):
        assert main(["run", p2p_path, "--param", "sources.9.offered_load=0.1"]) == 1
        assert "no such parameter" in capsys.readouterr().err

    def test_model_fault_is_fatal(self, p2p_path, tmp_path, mocker, capsys):
        mocker.patch("src.scenario.runner.execute", side_effect=ModelError("queue underflow", actor="sw"))
        assert main(["run", p2p_path, "--out", str(tmp_path)]) == 2
        assert "queue underflow" in capsys.readouterr().err

    def test_unexpected_failure_is_fatal(self, p2p_path, mocker, capsys):
        mocker.patch("src.scenario.cli.resolve", side_effect=RuntimeError("boom"))
        assert main(["run", p2p_path]) == 2
        assert "boom" in capsys.readouterr().err
