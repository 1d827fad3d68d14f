"""Configuration models for trainers and experiments"""

from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union
import json
import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.errors import ConfigError
from app.core.milp_solver import DEFAULT_NODE_LIMIT

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

TrainerName = Literal["hinge", "zero_one", "majority"]
ALL_TRAINERS: Tuple[str, ...] = ("hinge", "zero_one", "majority")


class Settings:
    """Process-wide defaults read from the environment"""

    def __init__(self):
        self.log_level = os.getenv("RESILIENT_LOG_LEVEL", "INFO").upper()
        self.output_dir = os.getenv("RESILIENT_OUTPUT_DIR", "results")
        self.jobs = int(os.getenv("RESILIENT_JOBS", "1"))
        self.node_limit = int(os.getenv("RESILIENT_NODE_LIMIT", str(DEFAULT_NODE_LIMIT)))


class TrainConfig(BaseModel):
    """Solver knobs shared by the three trainers"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    big_m: float = Field(1000.0, gt=0)
    weight_bound: float = Field(100.0, gt=0)
    regularization: float = Field(0.0, ge=0)
    node_limit: int = Field(default_factory=lambda: Settings().node_limit, ge=1)
    scaling: Literal["robust", "minmax", "none"] = "robust"


class GaussianSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian"] = "gaussian"
    mean_pos: List[float]
    mean_neg: List[float]
    cov_pos: Optional[List[List[float]]] = None
    cov_neg: Optional[List[List[float]]] = None
    n_pos: int = Field(20, ge=1)
    n_neg: int = Field(80, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_dimensions(self):
        if len(self.mean_pos) != len(self.mean_neg):
            raise ValueError("mean_pos and mean_neg must have the same length")
        return self


class CsvSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["csv"] = "csv"
    path: str
    label_column: int = 0  # 1-based; 0 selects the last column
    positive_value: str = "1"
    feature_columns: Tuple[int, int] = (40, 99)  # 1-based inclusive
    header: bool = False
    subsample_fraction: float = Field(1.0, gt=0, le=1)
    subsample_seed: int = 0
    target_counts: Optional[Tuple[int, int]] = None


class SurrogateSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["surrogate"] = "surrogate"
    n_pos: int = 37
    n_neg: int = 49
    p: int = 60
    seed: int = 0


DataSource = Annotated[Union[GaussianSource, CsvSource, SurrogateSource], Field(discriminator="kind")]


class AttackSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["none", "point", "overlap", "shift"] = "none"
    alpha_pos: int = Field(0, ge=0)
    alpha_neg: int = Field(0, ge=0)
    sigma: float = Field(100.0, gt=0)
    target_v: float = Field(1.0, gt=0, le=1)
    max_iters: int = Field(200, ge=1)
    attack_trainer: Optional[TrainerName] = None
    seed: int = 0

    @model_validator(mode="after")
    def _check_point_budget(self):
        if self.kind == "point" and (self.alpha_pos, self.alpha_neg) not in ((1, 0), (0, 1)):
            raise ValueError("A point attack uses budget (1, 0) or (0, 1)")
        return self

    @property
    def label(self) -> str:
        return f"{self.kind}({self.alpha_pos},{self.alpha_neg})"


class TrialSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_datasets: int = Field(1, ge=1)
    n_attacks_per_dataset: int = Field(1, ge=1)


class SweepSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha_max: int = Field(9, ge=0)
    full_scale: bool = False


class ExperimentConfig(BaseModel):
    """Declarative description of one experiment run"""
    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    source: Optional[DataSource] = None
    trainers: List[TrainerName] = Field(default_factory=lambda: list(ALL_TRAINERS))
    attacks: List[AttackSettings] = Field(default_factory=lambda: [AttackSettings()])
    trials: TrialSettings = Field(default_factory=TrialSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)
    region_counts: Optional[Tuple[int, int]] = None
    region_resolution: int = Field(21, ge=2)
    output_dir: str = Field(default_factory=lambda: Settings().output_dir)
    seed: int = 0
    jobs: int = Field(default_factory=lambda: Settings().jobs, ge=1)

    @field_validator("trainers")
    @classmethod
    def _unique_trainers(cls, value):
        if len(set(value)) != len(value):
            raise ValueError("Trainer list has duplicates")
        return value


def load_experiment_config(path: Union[str, Path], **overrides) -> ExperimentConfig:
    """Read a JSON experiment file and apply non-None flag overrides"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config {path}: {e}") from e
    if isinstance(config.source, CsvSource):
        csv_path = Path(config.source.path)
        if not csv_path.is_absolute() and not csv_path.exists():
            csv_path = path.parent / csv_path
        if not csv_path.exists():
            raise ConfigError(f"Dataset file not found: {csv_path}")
        config.source.path = str(csv_path)
    logger.info(f"Loaded experiment config '{config.name}' from {path}")
    return config
