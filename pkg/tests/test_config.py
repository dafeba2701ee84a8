from pathlib import Path

import pytest

from branchsim.exceptions import ConfigurationError, FileOperationError
from branchsim.harness.config import (
    DEFAULT_TRIALS,
    Experiment,
    InterpretationChoice,
    build_config,
    load_config,
    read_config_file,
)
from branchsim.interpretations import Interpretation
from branchsim.protocols import DeutschMode, Scenario
from utils.env_config import DEFAULT_SEED, resolve_default_seed, resolve_log_level


@pytest.fixture
def config_file(tmp_path):
    def write(text: str) -> Path:
        path = tmp_path / "run.conf"
        path.write_text(text, encoding="utf-8")
        return path

    return write


def test_defaults_per_experiment():
    cfg = load_config("disaster")
    assert cfg.trials == DEFAULT_TRIALS[Experiment.DISASTER] == 100_000
    assert cfg.seed == DEFAULT_SEED
    assert cfg.out == Path("disaster.csv")
    assert cfg.summary_path == Path("disaster.csv.summary.csv")
    assert cfg.interpretation.interpretations == (Interpretation.MWI, Interpretation.COLLAPSE)


def test_file_values_are_parsed(config_file):
    path = config_file(
        "# cycle under test\n"
        "p=0.2\n"
        "q = 0.5\n"
        "scenario=correlated_backup\n"
        "seed=0x10\n"
        "p_list=0.1, 0.2 0.3\n"
        "mode=environment_dump\n"
    )
    cfg = load_config("sweep", config_path=path)
    assert (cfg.p, cfg.q, cfg.seed) == (0.2, 0.5, 16)
    assert cfg.scenario is Scenario.CORRELATED
    assert cfg.mode is DeutschMode.ENVIRONMENT_DUMP
    assert cfg.p_list == (0.1, 0.2, 0.3)
    assert cfg.sources["p"] == "file"


def test_precedence_flag_over_file_over_environment(config_file, monkeypatch):
    monkeypatch.setenv("BRANCHSIM_SEED", "7")
    assert load_config("deutsch").seed == 7
    path = config_file("seed=8\ntrials=50\n")
    assert load_config("deutsch", config_path=path).seed == 8
    cfg = load_config("deutsch", config_path=path, flags={"seed": 9, "trials": None})
    assert (cfg.seed, cfg.trials) == (9, 50)
    assert cfg.sources == {"seed": "flag", "out": "environment", "trials": "file"}


def test_output_directory_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("BRANCHSIM_OUTPUT_DIR", str(tmp_path / "results"))
    assert load_config("sweep").out == tmp_path / "results" / "sweep.csv"


def test_unknown_key(config_file):
    with pytest.raises(ConfigurationError, match="colour"):
        read_config_file(config_file("colour=blue\n"))


def test_empty_value(config_file):
    with pytest.raises(ConfigurationError):
        read_config_file(config_file("p=\n"))


def test_file_values_are_taken_literally(config_file, monkeypatch):
    monkeypatch.setenv("HOME", "/home/someone")
    path = config_file("out=${HOME}/x.csv\n")
    assert read_config_file(path) == {"out": "${HOME}/x.csv"}
    assert load_config("deutsch", config_path=path).out == Path("${HOME}/x.csv")


def test_missing_file(tmp_path):
    with pytest.raises(FileOperationError):
        load_config("disaster", config_path=tmp_path / "absent.conf")


@pytest.mark.parametrize(
    "values",
    [
        {"p": "1.5"},
        {"q": "-0.1"},
        {"trials": "0"},
        {"trials": "many"},
        {"seed": str(1 << 64)},
        {"confidence": "1"},
        {"interpretation": "bohm"},
        {"basis": "y"},
        {"p_list": ""},
        {"workers": "0"},
        {"macrostate_count": "1"},
    ],
)
def test_invalid_values(values):
    with pytest.raises(ConfigurationError):
        build_config("disaster", values)


def test_flag_types_are_checked():
    with pytest.raises(ConfigurationError):
        build_config("disaster", {"trials": 2.5})
    cfg = build_config("disaster", {"p": 1, "interpretation": InterpretationChoice.MWI})
    assert cfg.p == 1.0


def test_bad_environment_seed(monkeypatch):
    monkeypatch.setenv("BRANCHSIM_SEED", "-4")
    with pytest.raises(ValueError):
        resolve_default_seed()
    with pytest.raises(ConfigurationError):
        load_config("verify")


def test_log_level_resolution(monkeypatch):
    assert resolve_log_level() == 30
    monkeypatch.setenv("BRANCHSIM_LOG_LEVEL", "debug")
    assert resolve_log_level() == 10
    assert resolve_log_level(cli_value="error") == 40
    assert resolve_log_level(cli_value="chatty") == 30
