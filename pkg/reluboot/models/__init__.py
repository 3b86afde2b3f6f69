"""Pydantic models for ReluBoot."""

from .network import (
    AdamState,
    FitSettings,
    Network,
    NetworkArch,
    TrainConfig,
)
from .data import (
    Dataset,
    EmpiricalDistribution,
    FittedMean,
    FittedVariance,
    ScalingParams,
    ScenarioSpec,
    SplitIndices,
    SyntheticSample,
    TabularDataset,
)
from .results import (
    CiConfig,
    CiDiagnostics,
    CiResult,
    CoverageReport,
    Interval,
    RealDataReport,
    TrialReport,
)

__all__ = [
    "AdamState",
    "FitSettings",
    "Network",
    "NetworkArch",
    "TrainConfig",
    "Dataset",
    "EmpiricalDistribution",
    "FittedMean",
    "FittedVariance",
    "ScalingParams",
    "ScenarioSpec",
    "SplitIndices",
    "SyntheticSample",
    "TabularDataset",
    "CiConfig",
    "CiDiagnostics",
    "CiResult",
    "CoverageReport",
    "Interval",
    "RealDataReport",
    "TrialReport",
]
