"""Artifact file manager for run outputs (CSV series, snapshots, meta records)."""

import json
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)


def format_number(value: float) -> str:
    """Format a float with 17 significant digits so it round-trips exactly."""
    return f"{float(value):.17g}"


def write_csv(
    path: Path | str,
    header: Sequence[str],
    columns: Sequence[Sequence[float] | np.ndarray],
) -> Path:
    """Write equal-length numeric columns as a CSV file with LF line endings.

    Args:
        path: Destination file. Parent directories are created.
        header: Column names, written as the first line.
        columns: One sequence per header entry.

    Returns:
        Path of the written file.

    Raises:
        ValueError: If the column count or lengths do not match.
    """
    if len(header) != len(columns):
        raise ValueError(f"{len(header)} header names for {len(columns)} columns")
    arrays = [np.asarray(col, dtype=float) for col in columns]
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"Columns have different lengths: {sorted(lengths)}")

    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in zip(*arrays, strict=True):
        lines.append(",".join(format_number(v) for v in row))
    with file_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    logger.debug("Wrote %s (%d rows)", file_path, len(lines) - 1)
    return file_path


def write_table(
    path: Path | str,
    header: Sequence[str],
    rows: Sequence[Sequence[str | float | int | None]],
) -> Path:
    """Write rows that mix text and numbers; ``None`` becomes an empty cell."""

    def cell(value: str | float | int | None) -> str:
        if value is None:
            return ""
        if isinstance(value, str):
            return value
        return format_number(value)

    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"Row has {len(row)} cells for {len(header)} columns")
        lines.append(",".join(cell(v) for v in row))
    with file_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return file_path


def read_csv(path: Path | str) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV written by :func:`write_csv`.

    Returns:
        The header names and a 2-D array with one row per data line.

    Raises:
        ValueError: If the file is missing, empty or not numeric.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ValueError(f"CSV file not found: {file_path}")

    lines = [ln for ln in file_path.read_text(encoding="utf-8").splitlines() if ln]
    if not lines:
        raise ValueError(f"CSV file is empty: {file_path}")

    header = [name.strip() for name in lines[0].split(",")]
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    except ValueError as e:
        raise ValueError(f"Non-numeric value in {file_path}: {e}") from e
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def write_meta(path: Path | str, record: dict[str, Any]) -> Path:
    """Write a JSON meta record with sorted keys and LF line endings."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(record, indent=2, sort_keys=True, default=_jsonable)
    with file_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    return file_path


def read_meta(path: Path | str) -> dict[str, Any]:
    """Read a meta record written by :func:`write_meta`."""
    return json.loads(Path(path).read_text(encoding="utf-8"))


def snapshot_filename(t: float) -> str:
    """File name for a snapshot recorded at time ``t``."""
    return f"snapshot_{t:.6f}.csv"


def _jsonable(value: Any) -> Any:
    # numpy scalars, arrays, enums and pydantic models in meta records
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"Cannot serialize {type(value).__name__}")
