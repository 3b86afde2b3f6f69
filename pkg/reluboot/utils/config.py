"""Run-configuration resolution: defaults < key=value file < command-line flags."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from ..constants import ERROR_MESSAGES
from .validation import ValidationError

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


def normalize_key(key: str) -> str:
    """'B-tilde' and 'batch-size' style keys map onto field names."""
    return key.strip().replace("-", "_")


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Parse a flat key=value file (comments with #, optional quotes).

    Raises:
        ValidationError: if the file does not exist
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Config file not found: '{path}'")
    values = {normalize_key(k): v for k, v in dotenv_values(path).items() if v is not None}
    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values


def load_environment(env_file: Optional[Union[str, Path]] = None) -> bool:
    """Pick up RELUBOOT_* variables from a .env file without overriding the real environment."""
    return load_dotenv(env_file, override=False) if env_file else load_dotenv(override=False)


def resolve_config(
    model: Type[M],
    command: str,
    file_values: Optional[Dict[str, Any]] = None,
    flag_values: Optional[Dict[str, Any]] = None,
) -> M:
    """
    Merge settings and validate them before any compute.

    Flags left at None do not override the file; keys the model does not
    know are rejected.
    """
    merged: Dict[str, Any] = dict(file_values or {})
    merged.update({normalize_key(k): v for k, v in (flag_values or {}).items() if v is not None})
    try:
        return model(**merged)
    except PydanticValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ValidationError(ERROR_MESSAGES["invalid_config"].format(command=command, error=details)) from e
