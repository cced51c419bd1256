import os
from ._compat import StrEnum, tomllib
from pathlib import Path

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    model_validator,
)

from .errors import ConfigError
from .executor import ExecutorConfig, TaskSpec

DEFAULT_CONFIG = Path("mrforge.toml")

ENDPOINT_ENV = "MRFORGE_ENDPOINT"
API_KEY_ENV = "MRFORGE_API_KEY"


class Algorithm(StrEnum):
    SINGLE_GA = "single_ga"
    NSGA2 = "nsga2"
    SPEA2 = "spea2"
    MOEAD = "moead"
    RANDOM = "random"


class RandomMetric(StrEnum):
    EFFECTIVENESS_ONLY = "effectiveness_only"
    SCALARIZED = "scalarized"


class SearchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    population_size: int = Field(100, ge=1)
    crossover_rate: float = Field(0.6, ge=0, le=1)
    mutation_rate: float = Field(0.3, ge=0, le=1)
    # MR_Add, MR_Delete, MR_Replace, Comb_Add, Comb_Delete, Comb_Replace
    mutation_op_weights: list[float] = Field(
        default_factory=lambda: [1 / 6] * 6, min_length=6, max_length=6
    )
    max_iterations: int = Field(1200, ge=1, le=2000)
    fitness_delta_threshold: float = Field(1e-4, ge=0)
    # consecutive generations below the delta threshold before stopping
    patience: int = Field(50, ge=1)
    group_min: int = Field(3, ge=1)
    group_max: int = Field(30, ge=1)
    max_combo_depth: int = Field(4, ge=1)
    weights: tuple[float, float] = (0.5, 0.5)
    inputs_per_iteration: int = Field(50, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)

    # CombGen
    selection_probability: float = Field(0.5, gt=0, le=1)
    and_probability: float = Field(0.5, ge=0, le=1)
    mr_intensities: list[int] = Field(
        default_factory=lambda: [1, 2, 4], min_length=1
    )

    elite_capacity: int = Field(20, ge=1)
    moead_neighborhood: int = Field(20, ge=2)
    moead_replacement_limit: int = Field(2, ge=1)
    random_metric: RandomMetric = RandomMetric.SCALARIZED

    @model_validator(mode="after")
    def check_consistency(self):
        if self.group_min > self.group_max:
            raise ValueError("group_min must not exceed group_max")
        if any(w < 0 for w in self.mutation_op_weights):
            raise ValueError("mutation_op_weights must be non-negative")
        if abs(sum(self.mutation_op_weights) - 1) >= 1e-9:
            raise ValueError("mutation_op_weights must sum to 1")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if any(i < 1 for i in self.mr_intensities):
            raise ValueError("mr_intensities must be positive")
        return self


class FitnessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sim_threshold: float = Field(0.70, ge=0, le=1)
    # upper bound of input+output tokens of a single execution, used for
    # the default normalization range of C_token
    per_exec_token_ceiling: int = Field(128, ge=1)
    # fixes the perturbed text of every (CmbMR, input) pair
    perturbation_seed: int = Field(0, ge=0, lt=2**64)
    embedding_dimension: int = Field(512, ge=8)
    trace: bool = False


class AnalysisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(0.05, gt=0, lt=1)
    alternative: str = Field("two-sided", pattern="^(two-sided|less|greater)$")
    top_n: int = Field(5, ge=1)
    planted: list[str] = []


class TaskConfig(TaskSpec):
    corpus: str | None = None


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    algorithms: list[Algorithm] = Field(
        default_factory=lambda: list(Algorithm), min_length=1
    )
    repetitions: int = Field(30, ge=1)
    tasks: list[str] = Field(min_length=1)
    model_id: str = "surrogate"
    corpus_path: str | None = None
    cache_path: Path | None = None
    output_dir: Path = Path("work/runs")
    # repetitions run in parallel
    jobs: int = Field(1, ge=1)


class Config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    plan: ExperimentPlan
    search: SearchConfig = Field(default_factory=SearchConfig)
    fitness: FitnessConfig = Field(default_factory=FitnessConfig)
    executor: ExecutorConfig = Field(default_factory=ExecutorConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    tasks: dict[str, TaskConfig] = {}

    @model_validator(mode="after")
    def check_tasks(self):
        for task_id in self.plan.tasks:
            if task_id not in self.tasks:
                raise ValueError(f"plan references unknown task '{task_id}'")
            if not self.tasks[task_id].corpus and not self.plan.corpus_path:
                raise ValueError(f"task '{task_id}' has no corpus")
        for task_id, task in self.tasks.items():
            if task.task_id != task_id:
                raise ValueError(
                    f"task table '{task_id}' declares task_id "
                    f"'{task.task_id}'"
                )
        return self

    def corpus_for(self, task_id: str) -> str:
        return self.tasks[task_id].corpus or self.plan.corpus_path


def parse_config(data: dict) -> Config:
    # task ids default to their table name
    for task_id, task in data.get("tasks", {}).items():
        task.setdefault("task_id", task_id)
    try:
        config = Config.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration:\n{e}") from e
    if endpoint := os.environ.get(ENDPOINT_ENV):
        config.executor.endpoint = endpoint
    if api_key := os.environ.get(API_KEY_ENV):
        config.executor.api_key = api_key
    return config


def read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"configuration file '{path}' not found")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"configuration file '{path}' is not TOML: {e}")


def load_config(
    path: Path = DEFAULT_CONFIG, overrides: dict | None = None
) -> Config:
    """Load and validate ``path``; ``overrides`` maps sections to values."""
    data = read_toml(path)
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update(values)
    return parse_config(data)


def load_analysis_config(path: Path = DEFAULT_CONFIG) -> AnalysisConfig:
    if not Path(path).exists():
        return AnalysisConfig()
    try:
        return AnalysisConfig.model_validate(
            read_toml(path).get("analysis", {})
        )
    except ValidationError as e:
        raise ConfigError(f"invalid analysis configuration:\n{e}") from e
