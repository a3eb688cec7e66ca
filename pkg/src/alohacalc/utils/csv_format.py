"""Locale-independent CSV output for tables and curves."""

import csv
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

SIGNIFICANT_DIGITS = 12


def format_value(value: Any) -> str:
    """
    Format one CSV cell.

    Integers are written verbatim; floats use 12 significant digits through
    Python's own formatting, which never consults the locale.
    """
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        as_float = float(value)
        if as_float.is_integer() and not isinstance(value, float) and math.isfinite(as_float):
            return str(int(as_float))
        return format(as_float, f".{SIGNIFICANT_DIGITS}g")
    return str(value)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a CSV file with `\\n` line endings.

    Args:
        path: Destination file (parent directories are created)
        header: Column names
        rows: Row values, formatted with `format_value`

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: Path | str, comment: str | None = None) -> tuple[list[str], list[list[str]]]:
    """
    Read a CSV file into (header, rows) of stripped strings.

    Blank lines are skipped, and so are lines starting with `comment` when it is given.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        rows = [
            [cell.strip() for cell in row]
            for row in reader
            if row and any(cell.strip() for cell in row)
        ]
    if comment:
        rows = [row for row in rows if not row[0].startswith(comment)]
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    return rows[0], rows[1:]
