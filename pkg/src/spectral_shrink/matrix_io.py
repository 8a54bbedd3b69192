"""Plain CSV matrix files: row-major, comma separated, shortest round-trip floats."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = ["MatrixParseError", "read_matrix", "write_matrix", "format_float", "write_csv_rows"]


class MatrixParseError(DomainError):
    def __init__(self, path: str, line: int, column: int, message: str) -> None:
        self.path, self.line, self.column = path, line, column
        super().__init__(f"{path}:{line}:{column}: {message}")


def format_float(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips
    return repr(float(x))


def read_matrix(path: str | Path, header: bool = False) -> np.ndarray:
    """Read a numeric CSV matrix; blank lines are skipped, ragged rows rejected."""
    path = str(path)
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            if not line.strip():
                continue
            fields = line.rstrip("\r\n").split(",")
            row = []
            for col, cell in enumerate(fields, start=1):
                text = cell.strip()
                try:
                    value = float(text)
                except ValueError:
                    raise MatrixParseError(path, lineno, col, f"not a number: {text!r}") from None
                if not np.isfinite(value):
                    raise MatrixParseError(path, lineno, col, f"non-finite value {text!r}")
                row.append(value)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise MatrixParseError(path, lineno, len(row), f"expected {width} columns, found {len(row)}")
            rows.append(row)
    if not rows:
        raise MatrixParseError(path, 1, 1, "empty matrix")
    return np.array(rows, dtype=float)


def write_matrix(path: str | Path, m: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    buf = io.StringIO()
    for row in m:
        buf.write(",".join(format_float(x) for x in row))
        buf.write("\n")
    Path(path).write_text(buf.getvalue())


def write_csv_rows(path: str | Path, columns: list[str], rows: list[dict]) -> None:
    """Write dict rows; floats use the shortest round-trip form, None is empty."""

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return format_float(v)
        return str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([cell(row.get(c)) for c in columns])
