"""Read and write labeled trace files (gem5-derived CSV).

File contract: first line is a comma-separated header containing one column
per schema feature plus a ``label`` column, in any order; each subsequent
line is one sampling interval. Cells are decimal reals (integers and
scientific notation accepted; NaN/Inf rejected), labels are 0 or 1. Input
may use LF or CRLF line endings and must be UTF-8; output always uses LF.
Columns are permuted into canonical schema order on read, so reordering the
columns of an input file never changes the resulting trace.

Values round-trip exactly: floats are written with the shortest decimal
representation that re-parses to a bit-identical double.

Labels are trusted as ground truth supplied upstream; how attack intervals
were attributed is outside this module's scope.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .errors import TraceFormatError, TraceValidationError
from .trace import FeatureSchema, WorkloadTrace, validate_trace

LABEL_COLUMN = "label"


def read_header(path: Path) -> list[str]:
    """Return the raw header column names of a trace CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
    if not first:
        raise TraceFormatError(f"{path}: file is empty")
    return [c.strip() for c in first.rstrip("\r\n").split(",")]


def _check_header(columns: list[str], schema: FeatureSchema, path: Path) -> None:
    if columns.count(LABEL_COLUMN) != 1:
        raise TraceFormatError(
            f"{path}: header must contain the {LABEL_COLUMN!r} column exactly once"
        )
    seen = set()
    for name in columns:
        if name in seen:
            raise TraceFormatError(f"{path}: duplicate column {name!r}")
        seen.add(name)
    features = [c for c in columns if c != LABEL_COLUMN]
    missing = [n for n in schema.names if n not in features]
    if missing:
        raise TraceFormatError(f"{path}: missing feature column(s) {missing}")
    extra = [n for n in features if n not in schema.names]
    if extra:
        raise TraceFormatError(f"{path}: unknown extra column(s) {extra}")


def _raise_at_bad_cell(path: Path, columns: list[str]) -> None:
    """Slow path after a parse failure: name the first offending cell."""
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    for name in columns:
        for i, cell in enumerate(raw[name].tolist()):
            try:
                value = float(cell)
            except ValueError:
                raise TraceFormatError(
                    f"{path}: non-numeric cell {cell!r} in column {name!r} at row {i}"
                ) from None
            if not np.isfinite(value):
                raise TraceFormatError(
                    f"{path}: non-finite cell {cell!r} in column {name!r} at row {i}"
                )
    raise TraceFormatError(f"{path}: malformed numeric data")


def read_trace(path: str | Path, schema: FeatureSchema) -> WorkloadTrace:
    """Parse *path* into a validated trace in canonical column order.

    The workload id is the file stem. Raises :class:`TraceFormatError` for
    structural problems (missing/extra columns, non-numeric cells, labels
    outside {0, 1}) and :class:`TraceValidationError` for domain violations,
    each citing the offending row.
    """
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"{path}: no such file")
    columns = read_header(path)
    _check_header(columns, schema, path)
    try:
        frame = pd.read_csv(
            path,
            dtype=np.float64,
            keep_default_na=False,
            na_values=[],
            float_precision="round_trip",
        )
    except ValueError:
        _raise_at_bad_cell(path, columns)
        raise  # unreachable; _raise_at_bad_cell always raises
    if frame.shape[0] < 1:
        raise TraceValidationError(f"{path.stem}: trace must contain at least one row")

    raw_labels = frame[LABEL_COLUMN].to_numpy()
    bad = ~np.isin(raw_labels, (0.0, 1.0))
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise TraceFormatError(
            f"{path}: label value {raw_labels[row]} at row {row} is outside {{0, 1}}"
        )
    matrix = frame[list(schema.names)].to_numpy(dtype=np.float64)
    non_finite = ~np.isfinite(matrix)
    if non_finite.any():
        r, c = np.argwhere(non_finite)[0]
        raise TraceFormatError(
            f"{path}: non-finite cell in column {schema.names[c]!r} at row {r}"
        )
    trace = WorkloadTrace(path.stem, matrix, raw_labels.astype(np.int64))
    return validate_trace(trace, schema)


def write_trace(trace: WorkloadTrace, path: str | Path, schema: FeatureSchema) -> None:
    """Write a validated trace as canonical-order CSV (LF line endings).

    ``read_trace(write_trace(t))`` is identity when the file stem equals the
    workload id. The trace is re-validated before anything is written.
    """
    validate_trace(trace, schema)
    path = Path(path)
    frame = pd.DataFrame(trace.values, columns=list(schema.names), copy=False)
    frame[LABEL_COLUMN] = trace.labels
    frame.to_csv(path, index=False, lineterminator="\n")
