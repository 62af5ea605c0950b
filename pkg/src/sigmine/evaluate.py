"""Confusion-matrix metrics, stage timings, and the test-case protocol.

A test case names a set of labeled trace files. Evaluating it against a rule
set means, per file: compute that file's own statistics and flag it (timed as
statistical preprocessing, SPP), classify every instance with the supplied
rules (timed as Test), then score the concatenated predictions. No instance
is dropped at evaluation time; the triggered-count filter is a training-only
step, and dropping hard attack rows here would fabricate recall.

Timings are wall-clock per stage, normalized to milliseconds per 1000
processed instances. Rule-generation (RG) timing rows carry no metrics and
test-case rows carry no RG time; absent values render as dashes.

Degenerate-metric conventions, chosen so all-benign smoke runs stay
meaningful: precision is 1.0 when tp+fp = 0, recall is 1.0 when tp+fn = 0,
and f1 is 0.0 when precision+recall = 0.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import detector, ingest, preprocess
from .errors import SchemaMismatchError, TraceFormatError
from .mining import RuleSet
from .preprocess import PreprocessConfig
from .trace import WorkloadTrace


@dataclass(frozen=True)
class EvalReport:
    """One comparison-table row: confusion counts, metrics, and timings.

    Timing fields are milliseconds per 1000 samples. Fields that do not
    apply to a row (e.g. metrics on a rule-generation timing row, RG time on
    a test-case row) are None.
    """

    test_case_id: str
    tp: int | None = None
    fp: int | None = None
    tn: int | None = None
    fn: int | None = None
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    spp_time_per_1k: float | None = None
    test_time_per_1k: float | None = None
    rg_time_per_1k: float | None = None


def score(
    det: detector.Detection | np.ndarray, labels: np.ndarray, test_case_id: str = ""
) -> EvalReport:
    """Confusion counts and the four standard metrics (timings unset).

    Accepts either a Detection or a bare prediction vector.
    """
    pred = det.predicted if isinstance(det, detector.Detection) else np.asarray(det, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != pred.shape:
        raise SchemaMismatchError(
            f"{pred.shape[0]} predictions scored against {labels.shape[0]} labels"
        )
    tp = int(np.count_nonzero((pred == 1) & (labels == 1)))
    fp = int(np.count_nonzero((pred == 1) & (labels == 0)))
    tn = int(np.count_nonzero((pred == 0) & (labels == 0)))
    fn = int(np.count_nonzero((pred == 0) & (labels == 1)))
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return EvalReport(test_case_id, tp, fp, tn, fn, accuracy, precision, recall, f1)


@dataclass(frozen=True)
class TestCaseSpec:
    """A named evaluation scenario over a fixed list of trace files."""

    __test__ = False  # not a pytest class, despite the name

    test_case_id: str
    trace_paths: tuple[Path, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "trace_paths", tuple(Path(p) for p in self.trace_paths))


def split_trace(
    trace: WorkloadTrace, train_fraction: float, seed: int
) -> tuple[WorkloadTrace, WorkloadTrace]:
    """Seeded instance-level shuffle split into train/test sub-traces.

    Indices within each part are re-sorted so the sub-traces keep the
    original interval order. Workload ids get ``_train``/``_test`` suffixes.
    """
    if not 0 < train_fraction < 1:
        raise SchemaMismatchError(f"train_fraction must be in (0,1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(trace.p)
    n_train = round(trace.p * train_fraction)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return (
        WorkloadTrace(f"{trace.workload_id}_train", trace.values[train_idx], trace.labels[train_idx]),
        WorkloadTrace(f"{trace.workload_id}_test", trace.values[test_idx], trace.labels[test_idx]),
    )


def run_test_case(
    tc: TestCaseSpec, rules: RuleSet, cfg: PreprocessConfig
) -> EvalReport:
    """Evaluate one test case's trace files against an existing rule set."""
    for p in tc.trace_paths:
        if not p.exists():
            raise TraceFormatError(f"{tc.test_case_id}: missing trace file {p}")
    schema = rules.schema
    spp_seconds = 0.0
    test_seconds = 0.0
    predictions = []
    labels = []
    for p in tc.trace_paths:
        trace = ingest.read_trace(p, schema)
        t0 = time.perf_counter()
        fm = preprocess.flag(trace, preprocess.compute_stats(trace), cfg)
        spp_seconds += time.perf_counter() - t0
        t0 = time.perf_counter()
        det = detector.classify(fm, rules)
        test_seconds += time.perf_counter() - t0
        predictions.append(det.predicted)
        labels.append(trace.labels)
    all_pred = np.concatenate(predictions)
    all_labels = np.concatenate(labels)
    n = all_pred.shape[0]
    base = score(all_pred, all_labels, tc.test_case_id)
    return EvalReport(
        tc.test_case_id,
        base.tp,
        base.fp,
        base.tn,
        base.fn,
        base.accuracy,
        base.precision,
        base.recall,
        base.f1,
        spp_time_per_1k=ms_per_1k(spp_seconds, n),
        test_time_per_1k=ms_per_1k(test_seconds, n),
    )


def ms_per_1k(seconds: float, samples: int) -> float:
    """Normalize a stage wall time to milliseconds per 1000 samples."""
    return seconds * 1000.0 / (samples / 1000.0)


# ---------------------------------------------------------------------------
# Rendering and serialization


def _fmt_pct(v: float | None) -> str:
    return "-" if v is None else f"{100.0 * v:.2f}%"


def _fmt_ms(v: float | None) -> str:
    return "-" if v is None else f"{v:.2f}ms"


def compare_table(reports: Sequence[EvalReport]) -> str:
    """Aligned text table over report rows, dash for missing cells."""
    if not reports:
        raise SchemaMismatchError("need at least one report to compare")
    header = [
        "Model",
        "Accuracy",
        "Precision",
        "Recall",
        "F1 Score",
        "RG Time/1K",
        "SPP Time/1K",
        "Test Time/1K",
    ]
    rows = [header]
    for r in reports:
        rows.append(
            [
                r.test_case_id,
                _fmt_pct(r.accuracy),
                _fmt_pct(r.precision),
                _fmt_pct(r.recall),
                _fmt_pct(r.f1),
                _fmt_ms(r.rg_time_per_1k),
                _fmt_ms(r.spp_time_per_1k),
                _fmt_ms(r.test_time_per_1k),
            ]
        )
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(len(header))))
    return "\n".join(lines) + "\n"


def compare_csv(reports: Sequence[EvalReport]) -> str:
    """Machine-readable counterpart of :func:`compare_table` (raw values)."""
    if not reports:
        raise SchemaMismatchError("need at least one report to compare")
    cols = [
        "test_case_id",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "rg_time_per_1k",
        "spp_time_per_1k",
        "test_time_per_1k",
    ]
    lines = [",".join(cols)]
    for r in reports:
        d = asdict(r)
        lines.append(",".join("" if d[c] is None else repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in cols))
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(asdict(report), indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> EvalReport:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return EvalReport(**payload)
    except (TypeError, ValueError, json.JSONDecodeError) as exc:
        raise TraceFormatError(f"{path}: malformed report file: {exc}") from None
