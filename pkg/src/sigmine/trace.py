"""Core domain types shared by every pipeline stage.

A labeled workload trace is a matrix of performance-counter readings (one row
per sampling interval, one column per microarchitectural feature) plus a
per-interval binary label: 1 for intervals where an attack was active, 0 for
benign intervals. The trace model is agnostic to the sampling granularity;
mixing traces recorded at different sampling intervals is the caller's
responsibility.

All types are immutable after construction (backing arrays are marked
read-only) and safe to share across concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaMismatchError, TraceValidationError

#: Canonical feature set observed to react to flush+fault activity, in the
#: fixed column order every matrix in the pipeline is aligned to.
DEFAULT_FEATURE_NAMES = (
    "l1i_cache_misses",
    "branch_mispredictions",
    "incorrect_conditional_branches",
    "total_executed_branches",
    "fetch_stalls",
    "tlb_accesses",
    "total_load_instructions",
    "total_store_instructions",
)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered list of feature names defining column order for all matrices.

    Mining item identifiers are column indices into this order, which makes
    rule sets portable across input files with reordered columns.
    """

    names: tuple[str, ...] = DEFAULT_FEATURE_NAMES

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 1:
            raise TraceValidationError("schema needs at least one feature")
        if any(not n for n in self.names):
            raise TraceValidationError("schema feature names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise TraceValidationError("schema feature names must be unique")

    @property
    def q(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaMismatchError(f"unknown feature {name!r}") from None


DEFAULT_SCHEMA = FeatureSchema()


@dataclass(frozen=True, eq=False)
class WorkloadTrace:
    """One workload file: a p x q counter matrix plus per-interval labels.

    Construction only normalizes array types and checks that the pieces are
    mutually consistent in shape; full domain validation (finiteness,
    non-negativity, binary labels, schema width) is done by
    :func:`validate_trace` so that malformed inputs can be reported with
    precise row/column locations at the ingestion boundary.
    """

    workload_id: str
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels)
        if values.ndim != 2:
            raise TraceValidationError(
                f"{self.workload_id}: values must be a 2-D matrix, got ndim={values.ndim}"
            )
        if labels.ndim != 1:
            raise TraceValidationError(
                f"{self.workload_id}: labels must be a 1-D vector, got ndim={labels.ndim}"
            )
        if labels.shape[0] != values.shape[0]:
            raise TraceValidationError(
                f"{self.workload_id}: {labels.shape[0]} labels for {values.shape[0]} rows"
            )
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "labels", _readonly(labels.astype(np.int64)))

    @property
    def p(self) -> int:
        """Number of sampling intervals (rows)."""
        return self.values.shape[0]

    @property
    def q(self) -> int:
        """Number of feature columns."""
        return self.values.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorkloadTrace):
            return NotImplemented
        return (
            self.workload_id == other.workload_id
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class FeatureStats:
    """Per-feature mean and population standard deviation of one workload.

    Computed over all rows of the file regardless of label (the flagging
    stage runs before any label is consulted). Population convention:
    stddev divides by p, not p-1, so a constant column has stddev exactly 0.
    """

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        stddev = np.asarray(self.stddev, dtype=np.float64)
        if mean.ndim != 1 or stddev.ndim != 1 or mean.shape != stddev.shape:
            raise TraceValidationError("stats mean/stddev must be 1-D vectors of equal length")
        if np.any(stddev < 0):
            raise TraceValidationError("stddev entries must be >= 0")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "stddev", _readonly(stddev))

    @property
    def q(self) -> int:
        return self.mean.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.stddev, other.stddev
        )


@dataclass(frozen=True, eq=False)
class FlagMatrix:
    """Binary trigger flags for one workload plus per-row triggered counts.

    ``flags[i, j]`` is 1 when feature j exceeded its threshold in interval i
    ("triggered"), ``triggered_counts[i]`` is the popcount of row i, and
    ``labels`` is carried through from the source trace.
    """

    workload_id: str
    flags: np.ndarray
    triggered_counts: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        flags = np.asarray(self.flags, dtype=np.uint8)
        counts = np.asarray(self.triggered_counts, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if flags.ndim != 2:
            raise TraceValidationError("flags must be a 2-D matrix")
        if np.any(flags > 1):
            raise TraceValidationError("flags must be binary")
        if counts.shape != (flags.shape[0],) or labels.shape != (flags.shape[0],):
            raise TraceValidationError("triggered_counts/labels length must match flag rows")
        if not np.array_equal(counts, flags.sum(axis=1, dtype=np.int64)):
            raise TraceValidationError("triggered_counts inconsistent with flags")
        object.__setattr__(self, "flags", _readonly(flags))
        object.__setattr__(self, "triggered_counts", _readonly(counts))
        object.__setattr__(self, "labels", _readonly(labels))

    @classmethod
    def from_flags(
        cls, workload_id: str, flags: np.ndarray, labels: np.ndarray
    ) -> "FlagMatrix":
        flags = np.asarray(flags, dtype=np.uint8)
        return cls(workload_id, flags, flags.sum(axis=1, dtype=np.int64), labels)

    @property
    def p(self) -> int:
        return self.flags.shape[0]

    @property
    def q(self) -> int:
        return self.flags.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlagMatrix):
            return NotImplemented
        return (
            self.workload_id == other.workload_id
            and self.flags.shape == other.flags.shape
            and np.array_equal(self.flags, other.flags)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class MiningDataset:
    """Row-concatenation of filtered flag matrices: the mining input.

    ``provenance`` records, per source workload and in input order, how many
    rows survived instance filtering and were contributed.
    """

    transactions: np.ndarray
    labels: np.ndarray
    provenance: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        txns = np.asarray(self.transactions, dtype=np.uint8)
        labels = np.asarray(self.labels, dtype=np.int64)
        if txns.ndim != 2:
            raise TraceValidationError("transactions must be a 2-D matrix")
        if np.any(txns > 1):
            raise TraceValidationError("transactions must be binary")
        if labels.shape != (txns.shape[0],):
            raise TraceValidationError("labels length must match transaction rows")
        provenance = tuple((str(w), int(n)) for w, n in self.provenance)
        if provenance and sum(n for _, n in provenance) != txns.shape[0]:
            raise TraceValidationError("provenance row counts do not sum to K")
        object.__setattr__(self, "transactions", _readonly(txns))
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "provenance", provenance)

    @property
    def k(self) -> int:
        """Number of transactions."""
        return self.transactions.shape[0]

    @property
    def q(self) -> int:
        return self.transactions.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MiningDataset):
            return NotImplemented
        return (
            self.transactions.shape == other.transactions.shape
            and np.array_equal(self.transactions, other.transactions)
            and np.array_equal(self.labels, other.labels)
            and self.provenance == other.provenance
        )


def validate_trace(trace: WorkloadTrace, schema: FeatureSchema) -> WorkloadTrace:
    """Check every trace invariant against *schema* and return the trace.

    Raises :class:`TraceValidationError` naming the first offending row (and
    column where applicable); raises :class:`SchemaMismatchError` on width
    mismatch.
    """
    wid = trace.workload_id
    if trace.p < 1:
        raise TraceValidationError(f"{wid}: trace must contain at least one row")
    if trace.q != schema.q:
        raise SchemaMismatchError(
            f"{wid}: row 0 has {trace.q} values, schema expects {schema.q}"
        )
    bad = ~np.isfinite(trace.values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise TraceValidationError(f"{wid}: non-finite value at row {r}, column {c}")
    neg = trace.values < 0
    if neg.any():
        r, c = np.argwhere(neg)[0]
        raise TraceValidationError(
            f"{wid}: negative counter value at row {r}, column {c}"
        )
    bad_label = (trace.labels != 0) & (trace.labels != 1)
    if bad_label.any():
        r = int(np.argwhere(bad_label)[0][0])
        raise TraceValidationError(
            f"{wid}: label {trace.labels[r]} at row {r} is outside {{0, 1}}"
        )
    return trace
