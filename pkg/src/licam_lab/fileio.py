"""File I/O helpers: atomic writes, single-header CSV, provenance JSON.

All numeric output uses ``repr`` floats (shortest round-trip, decimal
point, no separators) so golden files compare bit-exactly across runs.
Every write goes through a temp file plus rename; a killed run never
leaves a truncated file under the final name.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError

__all__ = [
    "atomic_write_text",
    "write_csv",
    "read_csv",
    "write_json",
    "sha256_digest",
]


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to ``path`` via a same-directory temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.",
                                    suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "nan"
    value = float(value)
    return repr(value)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    """Write a single-header CSV atomically."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise DataFormatError(
                f"row width {len(row)} does not match header width {len(header)}"
            )
        lines.append(",".join(_format_cell(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str | Path, expected_header: list[str],
             min_rows: int = 1) -> np.ndarray:
    """Read a numeric CSV with an exact expected header.

    Returns a float array of shape (n, len(header)).  Raises
    DataFormatError for a missing file, wrong header, non-numeric cells
    or too few rows.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DataFormatError(
            f"{path}: empty file, expected header {','.join(expected_header)!r}"
        )
    header = [cell.strip() for cell in lines[0].split(",")]
    if header != expected_header:
        raise DataFormatError(
            f"{path}: header {','.join(header)!r} does not match required "
            f"{','.join(expected_header)!r}"
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(expected_header):
            raise DataFormatError(f"{path}:{lineno}: expected "
                                  f"{len(expected_header)} columns")
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: non-numeric cell") from exc
    if len(rows) < min_rows:
        raise DataFormatError(
            f"{path}: need at least {min_rows} data rows, found {len(rows)}"
        )
    return np.asarray(rows, dtype=float)


def write_json(path: str | Path, payload: dict) -> None:
    """Write a JSON document atomically with stable key order."""
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True,
                                       allow_nan=True) + "\n")


def sha256_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
