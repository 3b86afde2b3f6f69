"""Pydantic models for interval configurations and experiment reports."""

import math
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..constants import DEFAULT_ALPHA, DEFAULT_B, DEFAULT_B_TILDE, DEFAULT_LOG_POWER
from ..utils.validation import validate_bootstrap_counts
from .data import FittedMean
from .network import FitSettings


class CiConfig(BaseModel):
    """Settings of the robust bootstrap interval."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(DEFAULT_ALPHA, gt=0, lt=1, description="Miscoverage level")
    B: int = Field(DEFAULT_B, ge=2, description="Replicates used for the a1 quantile")
    B_tilde: int = Field(DEFAULT_B_TILDE, ge=1, description="Replicates averaged into the center")
    A_n: Optional[float] = Field(None, gt=0, description="Clip bound; None means max |y_i|")
    a0_variant: Literal["theoretical", "empirical", "homoscedastic"] = "theoretical"
    b_variant: Literal["theoretical", "empirical"] = "theoretical"
    log_power: float = Field(DEFAULT_LOG_POWER, gt=0, description="s in 100 log^s n")
    fit: FitSettings = Field(default_factory=FitSettings)
    replicate_fit: Optional[FitSettings] = Field(None, description="Replicate fits; None reuses fit")
    standard_resamples: Optional[int] = Field(None, ge=2, description="Standard bootstrap refits; None means B + B_tilde")
    rng_seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def check_counts(self):
        is_valid, error_msg = validate_bootstrap_counts(self.B, self.B_tilde)
        if not is_valid:
            raise ValueError(error_msg)
        return self

    @property
    def replicate_settings(self) -> FitSettings:
        return self.replicate_fit or self.fit


class CiDiagnostics(BaseModel):
    """Every ingredient of the half-width, so Delta can be recomputed."""

    model_config = ConfigDict(frozen=True)

    n: int
    a1: float
    a2_term: float = Field(..., description="A_n^2 sqrt(32[log(8/alpha)+log B_tilde]/n)")
    a3_term: float = Field(..., description="A_n sqrt(8[log(64/alpha)+log B_tilde]/n)")
    mean_g: float = Field(..., description="Mean of g-hat^(B+1) over I4")
    a0: float = Field(..., ge=0)
    a_alpha: float = Field(..., ge=0)
    b_alpha: float = Field(..., ge=0)


class CiResult(BaseModel):
    """Center ensemble plus half-width Delta(alpha)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float
    B: int
    B_tilde: int
    A_n: float
    a0_variant: str
    b_variant: str
    half_width: float = Field(..., ge=0)
    diagnostics: CiDiagnostics
    center_members: List[FittedMean] = Field(..., description="Replicates B+1..B+B_tilde")

    @model_validator(mode="after")
    def check_members(self):
        if len(self.center_members) != self.B_tilde:
            raise ValueError(f"Expected {self.B_tilde} center members, got {len(self.center_members)}")
        return self

    def recomputed_half_width(self) -> float:
        d = self.diagnostics
        return 2.0 * math.sqrt(d.a_alpha / (self.alpha * self.B_tilde)) + d.b_alpha

    def interval(self, xs: np.ndarray) -> "Interval":
        """center(x) +/- half_width on the rows of xs."""
        from ..tools.bootstrap_ci import ci_interval

        return ci_interval(self, xs)


class Interval(BaseModel):
    """Pointwise lower/upper endpoints."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lower: np.ndarray
    upper: np.ndarray
    details: Optional[Dict] = Field(None, description="Construction diagnostics, when the builder reports them")

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, values: np.ndarray) -> np.ndarray:
        return (self.lower <= values) & (values <= self.upper)


def mean_std(values: List[float]) -> tuple:
    array = np.asarray(values, dtype=np.float64)
    mean = float(array.mean()) if array.size else float("nan")
    std = float(array.std(ddof=1)) if array.size > 1 else 0.0
    return mean, std


class TrialReport(BaseModel):
    """Variance-MSE results of one estimator over repeated trials."""

    scenario: int
    n: int
    strategy: str
    estimator: str
    mses: List[float]
    mean: float
    std: float = Field(..., description="Sample standard deviation (divisor trials - 1)")

    @classmethod
    def from_values(cls, scenario: int, n: int, strategy: str, estimator: str, mses: List[float]) -> "TrialReport":
        mean, std = mean_std(mses)
        return cls(scenario=scenario, n=n, strategy=strategy, estimator=estimator, mses=list(mses), mean=mean, std=std)


class CoverageReport(BaseModel):
    """Coverage and PRange of one interval method on one scenario."""

    scenario: int
    n: int
    alpha: float
    method: str
    coverage: float = Field(..., ge=0, le=1)
    prange: float = Field(..., ge=0)
    per_dataset_coverage: List[float]
    per_dataset_prange: List[float]
    mean_half_width: float = Field(0.0, ge=0, description="Average of (upper - lower) / 2")
    degenerate: bool = Field(False, description="True when f* was constant on some evaluation set")
    diagnostics: List[Dict] = Field(default_factory=list, description="Per-dataset interval diagnostics")


class RealDataReport(BaseModel):
    """Prediction-interval coverage and confidence-interval length per split."""

    train_size: int
    splits: int
    alphas: List[float]
    pi_records: List[Dict] = Field(default_factory=list, description="split, method, alpha, coverage")
    ci_records: List[Dict] = Field(default_factory=list, description="split, method, alpha, length")

    def pi_summary(self) -> Dict[str, Dict[float, tuple]]:
        """{method: {alpha: (mean, std)}} over splits."""
        return _summarize(self.pi_records, "coverage")

    def ci_summary(self) -> Dict[str, Dict[float, tuple]]:
        return _summarize(self.ci_records, "length")


def _summarize(records: List[Dict], key: str) -> Dict[str, Dict[float, tuple]]:
    grouped: Dict[str, Dict[float, List[float]]] = {}
    for record in records:
        grouped.setdefault(record["method"], {}).setdefault(record["alpha"], []).append(record[key])
    return {
        method: {alpha: mean_std(values) for alpha, values in by_alpha.items()}
        for method, by_alpha in grouped.items()
    }
