import json

import pytest
import yaml

from ..app import console
from ..config import ConfigManager
from ..core.tensor import NumericalError
from ..pipeline import StageError
from ..pipeline.selfcheck import CheckResult
from ..pipeline.utils import format_system_info, get_system_info
from .test_pipeline import tiny_config


@pytest.fixture
def config_file(tmp_path, monkeypatch):
    """A small YAML configuration with every directory under tmp_path"""
    monkeypatch.setenv("ARTIGEN_LOG_DIR", str(tmp_path / "logs"))
    path = tmp_path / "artigen.yaml"
    path.write_text(yaml.safe_dump(ConfigManager.to_dict(tiny_config(tmp_path))))
    return str(path)


def test_parser_knows_every_command():
    parser = console.build_parser()
    for command in console.COMMANDS:
        argv = [command]
        if command == "generate":
            argv.append("laptop_lid")
        elif command == "eval":
            argv += ["gen", "ref"]
        elif command == "export":
            argv.append("graph.json")
        assert parser.parse_args(argv).command == command


def test_training_flags_reach_the_trained_stage():
    args = console.build_parser().parse_args(
        ["train-extract", "--iterations", "7", "--lr", "0.01", "--no-hypergraph", "--loss-terms", "exist"])
    config = ConfigManager.from_args(args)
    assert config.extractor.iterations == 7 and config.extractor.lr == 0.01
    assert config.extractor.use_hypergraph is False
    assert (config.extractor.lambda_matrix, config.extractor.lambda_bbox) == (0.0, 0.0)
    assert config.diffusion.iterations == 3000

    args = console.build_parser().parse_args(["train-diffuse", "--iterations", "9", "--T", "50"])
    config = ConfigManager.from_args(args)
    assert config.diffusion.iterations == 9 and config.diffusion.T == 50
    assert config.extractor.iterations == 3000


def test_synth_command(config_file, tmp_path):
    assert console.run(["synth", "--config", config_file, "--count", "4"]) == console.EXIT_OK
    manifest = json.loads((tmp_path / "data" / "manifest.json").read_text())
    assert manifest["count"] == 4


def test_bad_input_exits_with_one(config_file, tmp_path):
    assert console.run(["generate", "a spaceship", "--config", config_file]) == console.EXIT_USER_ERROR
    assert console.run(["generate", "laptop_lid", "--config", config_file]) == console.EXIT_USER_ERROR
    assert console.run(["export", str(tmp_path / "none.json"), "--config", config_file]) == console.EXIT_USER_ERROR
    assert console.run(["synth", "--config", str(tmp_path / "missing.yaml")]) == console.EXIT_USER_ERROR


@pytest.mark.parametrize("error,code", [
    (NumericalError("loss is nan"), console.EXIT_NUMERICAL),
    (StageError("sample", 0, NumericalError("nan at t=3")), console.EXIT_NUMERICAL),
    (StageError("ingest", 1, ValueError("bad cloud")), console.EXIT_USER_ERROR),
    (KeyError("laptop"), console.EXIT_USER_ERROR),
])
def test_exit_codes(monkeypatch, config_file, error, code):
    def failing(pipeline, args):
        raise error

    monkeypatch.setitem(console.COMMANDS, "synth", failing)
    assert console.run(["synth", "--config", config_file]) == code


def test_failed_selfcheck_exits_with_two(monkeypatch, config_file):
    monkeypatch.setattr(console, "run_selfcheck",
                        lambda: [CheckResult("gradients", True, "ok"), CheckResult("inversion", False, "off by 1")])
    assert console.run(["selfcheck", "--config", config_file]) == console.EXIT_NUMERICAL
    monkeypatch.setattr(console, "run_selfcheck", lambda: [CheckResult("gradients", True, "ok")])
    assert console.run(["selfcheck", "--config", config_file]) == console.EXIT_OK


@pytest.mark.slow
def test_selfcheck_passes(config_file):
    seen = []
    results = console.run_selfcheck(on_result=seen.append)
    assert len(results) >= 5 and seen == results
    assert all(r.passed for r in results), [r.detail for r in results if not r.passed]
    assert console.run(["selfcheck", "--config", config_file]) == console.EXIT_OK


def test_system_info_text():
    text = format_system_info(get_system_info())
    assert text.startswith("System Information:")
    assert "cores" in text


@pytest.mark.slow
def test_end_to_end(config_file, tmp_path):
    """synth, train both networks, generate, evaluate and export through the CLI"""
    assert console.run(["synth", "--config", config_file]) == 0
    assert console.run(["train-extract", "--config", config_file]) == 0
    assert console.run(["train-diffuse", "--config", config_file]) == 0
    out = tmp_path / "gen"
    assert console.run(["generate", "a 3D cabinet model type 1", "--count", "3", "--urdf",
                        "--config", config_file, "--output", str(out)]) == 0
    generated = json.loads((out / "generation.json").read_text())
    assert generated["label"] == "cabinet_door"

    assert len(generated["samples"]) == 3
    for sample in generated["samples"]:
        assert (sample["json"] is not None) == (sample["urdf"] is not None) == sample["valid"]
    valid = [s for s in generated["samples"] if s["valid"]]
    assert all(s["edges"] == s["parts"] - 1 and (out / s["urdf"]).exists() for s in valid)

    report_dir = tmp_path / "report"
    assert console.run(["eval", str(tmp_path / "data"), str(tmp_path / "data"), "--config", config_file,
                        "--output", str(report_dir)]) == 0
    report = json.loads((report_dir / "eval_report.json").read_text())
    assert report["summary"]["mmd"]["mean"] == 0.0
    assert report["summary"]["cov"]["mean"] == 1.0

    graph = tmp_path / "data" / "graphs" / "00000.json"
    assert console.run(["export", str(graph), "--config", config_file]) == 0
    assert graph.with_suffix(".urdf").exists()
