import io

import pytest

from src.core.types import Strategy
from src.utils.config import (
    DEFAULT_EXPERIMENT_PATH,
    ConfigManager,
    ExperimentConfigManager,
    ExperimentSettings,
)
from src.utils.helpers import (
    CliErrorHandler,
    ErrorType,
    InvalidConfig,
    IoFailure,
    MissingProbMap,
)


def test_missing_settings_file_falls_back_to_defaults(tmp_path):
    settings = ConfigManager(tmp_path / "absent.yaml").settings()
    assert settings.acquisition.budget == 50
    assert settings.acquisition.n_batches == 5
    assert settings.pool.train_fraction == 0.8
    assert settings.preprocess.dedup_percentile == 50.0


def test_settings_file_and_env_override(tmp_path, monkeypatch):
    path = tmp_path / "settings.yaml"
    path.write_text("acquisition:\n  budget: 20\nlogging:\n  level: INFO\n", encoding="utf-8")
    monkeypatch.setenv("FRAMESEL_SETTINGS", str(path))
    monkeypatch.setenv("FRAMESEL_LOG_LEVEL", "debug")
    settings = ConfigManager().settings()
    assert settings.acquisition.budget == 20
    assert settings.logging.level == "DEBUG"


def test_invalid_settings_name_the_field(tmp_path):
    path = tmp_path / "settings.yaml"
    path.write_text("pool:\n  train_fraction: 1.5\n", encoding="utf-8")
    with pytest.raises(InvalidConfig) as exc:
        ConfigManager(path).settings()
    assert exc.value.details["field"] == "pool.train_fraction"
    path.write_text("[unclosed", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        ConfigManager(path)


def test_default_experiment_config():
    config = ExperimentConfigManager(DEFAULT_EXPERIMENT_PATH).experiment()
    assert config.task.n_videos == 5 and config.task.frames_per_video == 120
    assert config.task.num_classes == 8
    assert config.experiment.rounds == 3
    assert config.experiment.seeds == list(range(20))
    assert config.experiment.strategies == [Strategy.RANDOM, Strategy.ENTROPY,
                                            Strategy.EUCLIDEAN, Strategy.COSINE]
    assert len(config.report.class_names) == 8


def test_experiment_settings_validation():
    with pytest.raises(ValueError):
        ExperimentSettings(seeds=[])
    with pytest.raises(ValueError):
        ExperimentSettings(strategies=["all"])
    with pytest.raises(ValueError):
        ExperimentSettings(budget=2, n_batches=5)
    cfg = ExperimentSettings(budget=10, n_batches=2).acquisition_config(Strategy.ENTROPY)
    assert (cfg.strategy, cfg.budget, cfg.n_batches) == (Strategy.ENTROPY, 10, 2)


def test_error_handler_exit_codes():
    stream = io.StringIO()
    handler = CliErrorHandler(stream)
    assert handler.handle_error("select", IoFailure("cannot write", {"path": "x"})) == 1
    assert handler.handle_error("select", MissingProbMap("no map", {"frame": "1:2"})) == 2
    assert handler.handle_error("select", PermissionError("denied")) == 1
    lines = stream.getvalue().splitlines()
    assert lines[0] == "error: cannot write (path=x)"
    assert lines[2] == "error: no map (frame=1:2)"
    with pytest.raises(KeyError):
        handler.handle_error("select", KeyError("bug"))


def test_error_types():
    assert IoFailure("x").error_type is ErrorType.IO_ERROR
    assert InvalidConfig("x").error_type is ErrorType.CONFIG_ERROR
    assert MissingProbMap("x").error_type is ErrorType.ARTIFACT_ERROR
