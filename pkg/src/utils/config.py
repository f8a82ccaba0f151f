import logging
import os
from pathlib import Path
from typing import Dict, Any, List, Optional, Type, TypeVar

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.acquisition.strategies import AcquisitionConfig, Strategy
from src.preprocess.filtering import PreprocessConfig
from src.simulator.task import SyntheticTaskConfig
from src.utils.helpers import InvalidConfig

DEFAULT_SETTINGS_PATH = Path(__file__).resolve().parents[2] / "config" / "settings.yaml"
DEFAULT_EXPERIMENT_PATH = Path(__file__).resolve().parents[2] / "config" / "experiment.yaml"

ModelT = TypeVar("ModelT", bound=BaseModel)


class LoggingSettings(BaseModel):
    level: str = "INFO"
    format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class AcquisitionDefaults(BaseModel):
    budget: int = Field(default=50, gt=0)
    n_batches: int = Field(default=5, gt=0)
    metric_epsilon: float = Field(default=1e-12, gt=0)


class PoolDefaults(BaseModel):
    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    test_video: Optional[int] = Field(default=None, ge=0)


class Settings(BaseModel):
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    acquisition: AcquisitionDefaults = Field(default_factory=AcquisitionDefaults)
    pool: PoolDefaults = Field(default_factory=PoolDefaults)
    preprocess: PreprocessConfig = Field(
        default_factory=lambda: PreprocessConfig(dedup_percentile=50.0))


class ReportSettings(BaseModel):
    class_names: List[str] = Field(default_factory=list)
    classes: List[int] = Field(default_factory=list)


class ExperimentSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    strategies: List[Strategy] = Field(
        default_factory=lambda: [Strategy.RANDOM, Strategy.ENTROPY,
                                 Strategy.EUCLIDEAN, Strategy.COSINE])
    rounds: int = Field(default=3, ge=0)
    seeds: List[int] = Field(default_factory=lambda: list(range(20)))
    budget: int = Field(default=50, gt=0)
    n_batches: int = Field(default=5, gt=0)
    metric_epsilon: float = Field(default=1e-12, gt=0)
    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    temperature: float = Field(default=1.0, gt=0)
    include_all_data: bool = True
    test_video: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentSettings":
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if any(seed < 0 or seed >= 2 ** 64 for seed in self.seeds):
            raise ValueError("seeds must be 64-bit unsigned integers")
        if Strategy.ALL in self.strategies:
            raise ValueError("'all' is the anchor; enable it with include_all_data")
        if Strategy.ENTROPY in self.strategies and self.budget < self.n_batches:
            raise ValueError("entropy batching needs budget >= n_batches")
        return self

    def acquisition_config(self, strategy: Strategy) -> AcquisitionConfig:
        return AcquisitionConfig(strategy=strategy, budget=self.budget,
                                 n_batches=self.n_batches,
                                 metric_epsilon=self.metric_epsilon)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: SyntheticTaskConfig = Field(default_factory=SyntheticTaskConfig)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)
    report: ReportSettings = Field(default_factory=ReportSettings)


class ConfigManager:
    def __init__(self, config_path: Optional[os.PathLike] = None):
        self.config_path = Path(config_path or os.getenv("FRAMESEL_SETTINGS")
                                or DEFAULT_SETTINGS_PATH)
        self.logger = logging.getLogger(__name__)
        self.config = self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from YAML"""
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f)
        except FileNotFoundError:
            self.logger.debug(f"{self.config_path} not found, using defaults")
            return self.get_default_config()
        except yaml.YAMLError as e:
            raise InvalidConfig("configuration is not valid YAML",
                                {"path": str(self.config_path), "reason": str(e)})
        if loaded is None:
            return self.get_default_config()
        if not isinstance(loaded, dict):
            raise InvalidConfig("configuration must be a mapping",
                                {"path": str(self.config_path)})
        return loaded

    def get_default_config(self) -> Dict[str, Any]:
        """Return default configuration"""
        return {}

    def parse(self, model: Type[ModelT]) -> ModelT:
        return parse_model(model, self.config, source=str(self.config_path))

    def settings(self) -> Settings:
        settings = self.parse(Settings)
        level = os.getenv("FRAMESEL_LOG_LEVEL")
        if level:
            settings.logging.level = level.upper()
        return settings


class ExperimentConfigManager(ConfigManager):
    def __init__(self, config_path: Optional[os.PathLike] = None):
        super().__init__(config_path or DEFAULT_EXPERIMENT_PATH)

    def experiment(self) -> ExperimentConfig:
        return self.parse(ExperimentConfig)


def parse_model(model: Type[ModelT], document: Dict[str, Any], source: str = "<config>") -> ModelT:
    try:
        return model.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise InvalidConfig(f"invalid configuration: {first['msg']}",
                            {"path": source, "field": field})


def configure_logging(settings: LoggingSettings) -> None:
    logging.basicConfig(level=getattr(logging, settings.level.upper(), logging.INFO),
                        format=settings.format, force=True)
