"""Exception types and argument validation with constraint checking."""

import math
from typing import Optional, Sequence, Tuple

from ..constants import (
    ERROR_MESSAGES,
    MIN_SPLIT_SIZE,
    STRATEGIES,
)


class ValidationError(ValueError):
    """Custom validation error with detailed messages."""
    pass


class DimensionMismatchError(ValidationError):
    """Array shapes disagree with each other or with the network architecture."""

    def __init__(self, where: str, expected, actual):
        self.where = where
        self.expected = expected
        self.actual = actual
        super().__init__(
            ERROR_MESSAGES["dimension_mismatch"].format(where=where, expected=expected, actual=actual)
        )


class MissingContextError(ValidationError):
    """A correction-term variant was asked for without the inputs it needs."""

    def __init__(self, variant: str, missing: str):
        self.variant = variant
        self.missing = missing
        super().__init__(ERROR_MESSAGES["missing_context"].format(variant=variant, missing=missing))


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, loss: float, replicate: Optional[int] = None):
        self.epoch = epoch
        self.loss = loss
        self.replicate = replicate
        message = ERROR_MESSAGES["training_diverged"].format(epoch=epoch, loss=loss)
        if replicate is not None:
            message = f"Replicate {replicate}: {message}"
        super().__init__(message)

    def for_replicate(self, replicate: int) -> "TrainingDivergedError":
        return TrainingDivergedError(self.epoch, self.loss, replicate=replicate)


class DegenerateDistributionError(ValueError):
    """Standardized residuals cannot be formed (zero spread)."""

    def __init__(self, detail: str):
        super().__init__(ERROR_MESSAGES["degenerate_distribution"].format(detail=detail))


class DatasetFormatError(ValueError):
    """A tabular file could not be parsed; carries the offending location."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        super().__init__(message)


class StageError(RuntimeError):
    """Wraps a pipeline failure with the label of the stage that raised it."""

    def __init__(self, stage: str, error: BaseException):
        self.stage = stage
        self.error = error
        super().__init__(ERROR_MESSAGES["stage_failed"].format(stage=stage, error=error))


def validate_alpha(alpha: float) -> Tuple[bool, Optional[str]]:
    """
    Validate a miscoverage level.

    Args:
        alpha: Level to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(alpha, (int, float)) or not math.isfinite(alpha) or not 0.0 < alpha < 1.0:
        return False, ERROR_MESSAGES["invalid_alpha"].format(alpha=alpha)
    return True, None


def validate_bootstrap_counts(B: int, B_tilde: int) -> Tuple[bool, Optional[str]]:
    """
    Validate the bootstrap replicate counts (B_tilde < B, both positive).

    Returns:
        Tuple of (is_valid, error_message)
    """
    if B < 1 or B_tilde < 1 or B_tilde >= B:
        return False, ERROR_MESSAGES["invalid_bootstrap_counts"].format(B=B, B_tilde=B_tilde)
    return True, None


def validate_clip_bound(bound: float) -> Tuple[bool, Optional[str]]:
    """Check that a clipping bound is a positive finite real."""
    if not math.isfinite(bound) or bound <= 0:
        return False, ERROR_MESSAGES["non_positive_bound"].format(bound=bound)
    return True, None


def validate_split_size(n: int) -> Tuple[bool, Optional[str]]:
    """Check that n observations can be cut into four non-trivial blocks."""
    if n < MIN_SPLIT_SIZE:
        return False, ERROR_MESSAGES["split_too_small"].format(n=n, minimum=MIN_SPLIT_SIZE)
    return True, None


def validate_choice(what: str, value: str, allowed: Sequence[str]) -> Tuple[bool, Optional[str]]:
    """Check membership of a string flag in an allowed set."""
    if value not in allowed:
        return False, ERROR_MESSAGES["invalid_variant"].format(
            what=what, value=value, allowed=", ".join(allowed)
        )
    return True, None


def validate_strategy(strategy: str) -> Tuple[bool, Optional[str]]:
    return validate_choice("strategy", strategy, STRATEGIES)


def require(result: Tuple[bool, Optional[str]]) -> None:
    """Raise ValidationError when a validator reports a failure."""
    is_valid, error_msg = result
    if not is_valid:
        raise ValidationError(error_msg)
