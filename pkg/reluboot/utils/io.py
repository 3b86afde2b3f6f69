"""Tabular ingestion, min-max scaling and result persistence."""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import aiofiles
import numpy as np
import pandas as pd

from ..constants import ERROR_MESSAGES
from ..models import ScalingParams, SyntheticSample, TabularDataset
from .validation import DatasetFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def load_csv(path: PathLike, feature_cols: Sequence[str], target_col: str) -> TabularDataset:
    """
    Read a headered, comma-separated numeric table.

    Args:
        path: CSV file with a header row
        feature_cols: Columns used as covariates, in order
        target_col: Response column

    Returns:
        TabularDataset with raw (unscaled) values

    Raises:
        DatasetFormatError: missing file, unknown column or unparsable cell;
            rows are numbered from 1 for the first data row
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError(ERROR_MESSAGES["file_not_found"].format(path=path))

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    wanted = list(feature_cols) + [target_col]
    for column in wanted:
        if column not in frame.columns:
            raise DatasetFormatError(
                ERROR_MESSAGES["unknown_column"].format(column=column, path=path, available=", ".join(frame.columns)),
                column=column,
            )

    values = {}
    for column in wanted:
        parsed = pd.to_numeric(frame[column].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(parsed))
        if bad.size:
            row = int(bad[0]) + 1
            raise DatasetFormatError(
                ERROR_MESSAGES["malformed_cell"].format(
                    value=frame[column].iloc[bad[0]], row=row, column=column, path=path
                ),
                row=row,
                column=column,
            )
        values[column] = parsed

    logger.info(f"Loaded {len(frame)} rows from {path}")
    return TabularDataset(
        features=np.column_stack([values[c] for c in feature_cols]),
        target=values[target_col],
        feature_names=list(feature_cols),
        target_name=target_col,
        source=str(path),
    )


def minmax_columns(array: np.ndarray) -> Tuple[np.ndarray, ScalingParams]:
    """Scale every column to [0,1]; constant columns become zeros and are flagged."""
    array = np.atleast_2d(np.asarray(array, dtype=np.float64))
    mins = array.min(axis=0)
    maxs = array.max(axis=0)
    spans = maxs - mins
    constant = spans <= 0.0
    scaled = np.zeros_like(array)
    live = ~constant
    scaled[:, live] = (array[:, live] - mins[live]) / spans[live]
    return np.clip(scaled, 0.0, 1.0), ScalingParams(mins=mins, maxs=maxs, constant=[bool(c) for c in constant])


def minmax_scale(table: TabularDataset) -> TabularDataset:
    """Min-max scale the features of a table, recording the parameters."""
    scaled, params = minmax_columns(table.features)
    for name, flag in zip(table.feature_names, params.constant):
        if flag:
            logger.warning(f"Feature '{name}' is constant; mapped to 0")
    return table.model_copy(update={"features": scaled, "scaling": params})


def inverse_minmax(scaled: np.ndarray, params: ScalingParams) -> np.ndarray:
    """Undo minmax_columns; constant columns return their single value."""
    scaled = np.atleast_2d(np.asarray(scaled, dtype=np.float64))
    return params.mins + scaled * (params.maxs - params.mins)


def log_target(table: TabularDataset) -> TabularDataset:
    """Replace the target by log(y); every response must be positive."""
    bad = np.flatnonzero(table.target <= 0.0)
    if bad.size:
        raise DatasetFormatError(
            ERROR_MESSAGES["non_positive_target"].format(column=table.target_name, row=int(bad[0]) + 1),
            row=int(bad[0]) + 1,
            column=table.target_name,
        )
    return table.model_copy(update={"target": np.log(table.target), "log_target": True})


def prepare_table(
    path: PathLike,
    feature_cols: Sequence[str],
    target_col: str,
    take_log: bool = False,
) -> TabularDataset:
    """load_csv, optional log target, then min-max scaled features."""
    table = load_csv(path, feature_cols, target_col)
    if take_log:
        table = log_target(table)
    return minmax_scale(table)


def format_value(value) -> str:
    """Full round-trip text for numbers, str() for everything else."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(rows: Iterable[Dict], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    return buffer.getvalue()


async def write_csv_rows(path: PathLike, rows: Iterable[Dict], columns: Sequence[str]) -> Path:
    """Write rows in a fixed column order with round-trip float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
        await f.write(render_csv(rows, columns))
    logger.info(f"Wrote {path}")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


async def write_json_record(path: PathLike, record: Dict) -> Path:
    """Write one JSON object with sorted keys (floats keep full precision)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")
    return path


def sample_rows(sample: SyntheticSample) -> Tuple[List[Dict], List[str]]:
    """Rows x_1..x_d, y, f_star, g_star of a synthetic sample."""
    d = sample.dataset.d
    columns = [f"x_{j}" for j in range(1, d + 1)] + ["y", "f_star", "g_star"]
    rows = []
    for i in range(sample.dataset.n):
        row = {f"x_{j + 1}": float(sample.dataset.xs[i, j]) for j in range(d)}
        row.update(y=float(sample.dataset.ys[i]), f_star=float(sample.f_values[i]), g_star=float(sample.g_values[i]))
        rows.append(row)
    return rows, columns


async def export_sample_csv(sample: SyntheticSample, path: PathLike) -> Path:
    """Dump a synthetic sample for cross-implementation comparison."""
    rows, columns = sample_rows(sample)
    return await write_csv_rows(path, rows, columns)


def bundled_dataset_path(name: str = "housing_standin.csv") -> Optional[Path]:
    """Path of a CSV shipped inside the package, if present."""
    candidate = Path(__file__).resolve().parent.parent / "data" / name
    return candidate if candidate.is_file() else None
