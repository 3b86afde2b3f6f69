"""Utility modules for ReluBoot."""

from .seeding import derive_seed, make_rng
from .validation import (
    DatasetFormatError,
    DegenerateDistributionError,
    DimensionMismatchError,
    MissingContextError,
    StageError,
    TrainingDivergedError,
    ValidationError,
)

__all__ = [
    "derive_seed",
    "make_rng",
    "DatasetFormatError",
    "DegenerateDistributionError",
    "DimensionMismatchError",
    "MissingContextError",
    "StageError",
    "TrainingDivergedError",
    "ValidationError",
]
