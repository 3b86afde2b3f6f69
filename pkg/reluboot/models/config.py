"""Run configurations, one pydantic record per subcommand."""

from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..constants import (
    CI_METHODS,
    DEFAULT_ALPHA,
    DEFAULT_B,
    DEFAULT_B_TILDE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DEPTH,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LOG_POWER,
    DEFAULT_WIDTH,
    GRADCHECK_TOLERANCE,
    PI_METHODS,
    VARIANCE_KINDS,
)
from ..utils.validation import validate_bootstrap_counts
from .network import FitSettings, TrainConfig
from .results import CiConfig


def _split_list(value):
    """Accept "a,b,c" from flags and key=value files as well as real lists."""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def _check_members(values: List[str], allowed, what: str) -> List[str]:
    unknown = [v for v in values if v not in allowed]
    if unknown:
        raise ValueError(f"Unknown {what}: {', '.join(unknown)} (allowed: {', '.join(allowed)})")
    return values


class RunConfig(BaseModel):
    """Fields every subcommand shares."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(0, ge=0, lt=2**64, description="Master seed")
    output: Optional[Path] = Field(None, description="Result file")
    threads: Optional[int] = Field(None, ge=1, description="Worker threads (default RELUBOOT_THREADS or 1)")


class FitParams(RunConfig):
    """Network and optimizer settings shared by the fitting subcommands."""

    depth: int = Field(DEFAULT_DEPTH, ge=1)
    width: int = Field(DEFAULT_WIDTH, ge=1)
    epochs: int = Field(DEFAULT_EPOCHS, ge=0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0)

    def fit_settings(self) -> FitSettings:
        train = TrainConfig(epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate)
        return FitSettings(
            depth=self.depth, width=self.width,
            var_depth=self.depth, var_width=self.width,
            train=train, var_train=train,
        )


class GradcheckRunConfig(RunConfig):
    archs: List[Tuple[int, int, int]] = Field(
        default_factory=lambda: [(2, 1, 4), (2, 2, 8), (5, 2, 8)],
        description="(input_dim, depth, width) triples",
    )
    seeds: int = Field(3, ge=1, description="Checks per architecture, seeds seed..seed+seeds-1")
    samples: int = Field(8, ge=1, description="Random inputs per check")
    tolerance: float = Field(GRADCHECK_TOLERANCE, gt=0)

    @field_validator("archs", mode="before")
    @classmethod
    def parse_archs(cls, v):
        # "2x1x4,2x2x8" on the command line
        if isinstance(v, str):
            return [tuple(int(p) for p in item.split("x")) for item in _split_list(v)]
        return v


class SimulateVarianceRunConfig(FitParams):
    scenario: int = Field(1, ge=1, le=5)
    n: int = Field(2000, ge=2)
    trials: int = Field(10, ge=1)
    strategy: Literal["full", "split"] = "full"
    estimators: List[str] = Field(default_factory=lambda: ["residual", "direct"])

    @field_validator("estimators", mode="before")
    @classmethod
    def parse_estimators(cls, v):
        return _check_members(_split_list(v), VARIANCE_KINDS, "estimators")


class CiParams(FitParams):
    """Bootstrap settings shared by ci-benchmark and real-data."""

    B: int = Field(DEFAULT_B, ge=2)
    B_tilde: int = Field(DEFAULT_B_TILDE, ge=1)
    A_n: Optional[float] = Field(None, gt=0)
    log_power: float = Field(DEFAULT_LOG_POWER, gt=0)
    standard_resamples: Optional[int] = Field(None, ge=2)

    @model_validator(mode="after")
    def check_counts(self):
        is_valid, error_msg = validate_bootstrap_counts(self.B, self.B_tilde)
        if not is_valid:
            raise ValueError(error_msg)
        return self

    def ci_config(self, alpha: float = DEFAULT_ALPHA) -> CiConfig:
        return CiConfig(
            alpha=alpha,
            B=self.B,
            B_tilde=self.B_tilde,
            A_n=self.A_n,
            log_power=self.log_power,
            fit=self.fit_settings(),
            standard_resamples=self.standard_resamples,
            rng_seed=self.seed,
        )


class CiBenchmarkRunConfig(CiParams):
    scenario: int = Field(1, ge=1, le=5)
    n: int = Field(5000, ge=8)
    alpha: float = Field(DEFAULT_ALPHA, gt=0, lt=1)
    methods: List[str] = Field(default_factory=lambda: ["nn"])
    datasets: int = Field(5, ge=1)
    new_points: int = Field(20, ge=1)
    diagnostics: Optional[Path] = Field(None, description="JSON file for per-dataset robust interval diagnostics")

    @field_validator("methods", mode="before")
    @classmethod
    def parse_methods(cls, v):
        return _check_members(_split_list(v), CI_METHODS, "CI methods")


class RealDataRunConfig(CiParams):
    data: Optional[Path] = Field(None, description="CSV path; default is the bundled stand-in")
    features: List[str] = Field(default_factory=lambda: ["MedInc", "AveOccup", "Population"])
    target: str = "MedHouseVal"
    log_target: bool = True
    train_size: int = Field(150, ge=8)
    splits: int = Field(5, ge=1)
    alphas: List[float] = Field(default_factory=lambda: [0.05, 0.1])
    methods: List[str] = Field(default_factory=lambda: list(PI_METHODS))
    ci_methods: List[str] = Field(default_factory=lambda: ["nn", "nn_emp", "naive"])
    ci_output: Optional[Path] = Field(None, description="CI-length CSV; default derives from output")

    @field_validator("features", mode="before")
    @classmethod
    def parse_features(cls, v):
        return _split_list(v)

    @field_validator("alphas", mode="before")
    @classmethod
    def parse_alphas(cls, v):
        return [float(a) for a in _split_list(v)]

    @field_validator("methods", mode="before")
    @classmethod
    def parse_methods(cls, v):
        return _check_members(_split_list(v), PI_METHODS, "PI methods")

    @field_validator("ci_methods", mode="before")
    @classmethod
    def parse_ci_methods(cls, v):
        return _check_members(_split_list(v), CI_METHODS, "CI methods")

    @field_validator("alphas")
    @classmethod
    def check_alphas(cls, v):
        if not v or any(not 0.0 < a < 1.0 for a in v):
            raise ValueError(f"alphas must lie in (0, 1), got {v}")
        return v


class MakeScenarioCsvRunConfig(RunConfig):
    scenario: int = Field(1, ge=1, le=5)
    n: int = Field(1000, ge=1)
    output: Path = Field(..., description="CSV path for the drawn sample")
