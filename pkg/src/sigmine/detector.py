"""Apply a rule set to flagged traces: per-instance attack/benign decisions.

A rule fires on an instance when every feature in its antecedent is triggered
there (subset match). An instance is classified as attack when at least one
rule fires (any-match disjunction: the standard rule-based-classifier
combination, which favors recall); benign is the default class. The firing
rule indices are recorded per instance so a detection can always be explained
in terms of the named features that caused it.

Note that rule confidence is a per-rule training quantity while the
prediction is a disjunction over all rules, so no per-rule precision
guarantee transfers to the combined detector output.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaMismatchError, TraceFormatError
from .mining import RuleSet
from .trace import FlagMatrix


@dataclass(frozen=True, eq=False)
class Detection:
    """Per-instance predictions plus the rule indices that fired."""

    predicted: np.ndarray
    fired_rules: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        predicted = np.asarray(self.predicted, dtype=np.int64)
        fired_rules = tuple(tuple(f) for f in self.fired_rules)
        if predicted.ndim != 1 or len(fired_rules) != predicted.shape[0]:
            raise SchemaMismatchError("predicted/fired_rules lengths differ")
        fired_any = np.fromiter(
            (bool(f) for f in fired_rules), dtype=bool, count=predicted.shape[0]
        )
        mismatch = fired_any != (predicted == 1)
        if mismatch.any():
            i = int(np.argwhere(mismatch)[0][0])
            raise SchemaMismatchError(
                f"instance {i}: predicted={predicted[i]} but "
                f"{len(fired_rules[i])} rules fired"
            )
        predicted.setflags(write=False)
        object.__setattr__(self, "predicted", predicted)
        object.__setattr__(self, "fired_rules", fired_rules)

    @property
    def p(self) -> int:
        return self.predicted.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Detection):
            return NotImplemented
        return (
            np.array_equal(self.predicted, other.predicted)
            and self.fired_rules == other.fired_rules
        )


def classify(fm: FlagMatrix, rs: RuleSet) -> Detection:
    """Classify every row of *fm* under *rs* (any-match semantics)."""
    if fm.q != rs.schema.q:
        raise SchemaMismatchError(
            f"{fm.workload_id}: flags have q={fm.q} but rules expect q={rs.schema.q}"
        )
    fired_matrix = np.zeros((fm.p, len(rs.rules)), dtype=bool)
    flags = fm.flags.astype(bool)
    for r, rule in enumerate(rs.rules):
        cols = sorted(rule.antecedent)
        fired_matrix[:, r] = flags[:, cols].all(axis=1)
    predicted = fired_matrix.any(axis=1).astype(np.int64)
    fired: list[tuple[int, ...]] = [()] * fm.p
    for i in np.flatnonzero(predicted):
        fired[i] = tuple(int(r) for r in np.flatnonzero(fired_matrix[i]))
    return Detection(predicted, tuple(fired))


def write_detection_csv(
    det: Detection, path: str | Path, labels: np.ndarray | None = None
) -> None:
    """Export one row per instance: index, prediction, true label (when
    known, else blank), and the firing rule indices joined by semicolons."""
    lines = ["row,predicted,label,fired_rules"]
    for i in range(det.p):
        label = "" if labels is None else str(int(labels[i]))
        fired = ";".join(str(r) for r in det.fired_rules[i])
        lines.append(f"{i},{int(det.predicted[i])},{label},{fired}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def read_detection_csv(path: str | Path) -> tuple[Detection, np.ndarray | None]:
    """Parse a detection CSV back into a Detection plus labels (or None)."""
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"{path}: no such file")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "row,predicted,label,fired_rules":
        raise TraceFormatError(f"{path}: not a detection CSV")
    predicted, labels, fired = [], [], []
    have_labels = True
    for line in lines[1:]:
        try:
            _, pred, label, rules = line.split(",")
            predicted.append(int(pred))
            if label == "":
                have_labels = False
            else:
                labels.append(int(label))
            fired.append(tuple(int(r) for r in rules.split(";") if r))
        except ValueError as exc:
            raise TraceFormatError(f"{path}: bad detection line {line!r}: {exc}") from None
    det = Detection(np.asarray(predicted, dtype=np.int64), tuple(fired))
    return det, (np.asarray(labels, dtype=np.int64) if have_labels else None)
