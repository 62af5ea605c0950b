"""Statistical preprocessing: per-workload stats, sigma flagging, instance
filtering, and concatenation into the mining dataset.

The stage is configurable on two points where "exceeds 3 standard deviations"
admits more than one reading:

* flag rule -- ``MEAN_PLUS_K_SIGMA`` (default) flags ``x > mean + k*stddev``;
  ``K_SIGMA_ABSOLUTE`` flags ``x > k*stddev`` with no mean term.
* trigger threshold -- ``AT_LEAST_Q_MINUS_3`` (default) keeps an attack row
  when its triggered count t satisfies ``t >= q - 3``;
  ``STRICTLY_GREATER_Q_MINUS_3`` requires ``t > q - 3``.

Statistics are per workload file, over all rows regardless of label, with the
population convention (divide by p). Consequently attack-heavy files inflate
the per-column mean and sigma, which raises the flag threshold; flagging can
only single out attack intervals when they are a minority of the file (no
more than roughly one row in ten can ever exceed mean + 3 sigma, whatever
the data).

Instance filtering is a TRAINING-ONLY step: at evaluation time every instance
of a test trace is classified and nothing is dropped. Test traces are flagged
against their own per-file statistics, not the training statistics.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, SchemaMismatchError, TraceFormatError
from .trace import FeatureStats, FlagMatrix, MiningDataset, WorkloadTrace


class FlagRuleMode(enum.Enum):
    MEAN_PLUS_K_SIGMA = "mean_plus_k_sigma"
    K_SIGMA_ABSOLUTE = "k_sigma_absolute"


class TriggerThresholdMode(enum.Enum):
    AT_LEAST_Q_MINUS_3 = "at_least_q_minus_3"
    STRICTLY_GREATER_Q_MINUS_3 = "strictly_greater_q_minus_3"


@dataclass(frozen=True)
class PreprocessConfig:
    sigma_multiplier: float = 3.0
    trigger_threshold_mode: TriggerThresholdMode = TriggerThresholdMode.AT_LEAST_Q_MINUS_3
    flag_rule_mode: FlagRuleMode = FlagRuleMode.MEAN_PLUS_K_SIGMA

    def __post_init__(self) -> None:
        if not self.sigma_multiplier > 0:
            raise ConfigError(f"sigma_multiplier must be > 0, got {self.sigma_multiplier}")


def compute_stats(trace: WorkloadTrace) -> FeatureStats:
    """Per-column mean and population standard deviation over all rows."""
    return FeatureStats(
        mean=trace.values.mean(axis=0),
        stddev=trace.values.std(axis=0),  # ddof=0: population convention
    )


def flag(trace: WorkloadTrace, stats: FeatureStats, cfg: PreprocessConfig) -> FlagMatrix:
    """Flag each cell that exceeds its per-feature threshold.

    The threshold vector is computed in float64 exactly as
    ``stats.mean + cfg.sigma_multiplier * stats.stddev`` (default mode) or
    ``cfg.sigma_multiplier * stats.stddev`` (absolute mode), and cells are
    compared with a strict ``>``. This expression order is part of the
    contract: an independent per-cell evaluation of the same expression
    produces bit-identical flags. A constant column (stddev 0) therefore
    yields no flags in the default mode, since ``x > mean`` is false at
    equality.
    """
    if stats.q != trace.q:
        raise SchemaMismatchError(
            f"{trace.workload_id}: stats have {stats.q} features, trace has {trace.q}"
        )
    if cfg.flag_rule_mode is FlagRuleMode.MEAN_PLUS_K_SIGMA:
        threshold = stats.mean + cfg.sigma_multiplier * stats.stddev
    else:
        threshold = cfg.sigma_multiplier * stats.stddev
    flags = (trace.values > threshold[np.newaxis, :]).astype(np.uint8)
    return FlagMatrix.from_flags(trace.workload_id, flags, trace.labels)


def filter_instances(fm: FlagMatrix, cfg: PreprocessConfig, q: int) -> FlagMatrix:
    """Drop attack-labeled rows whose triggered count misses the threshold.

    Benign rows (label 0) are always kept unchanged; an attack row (label 1)
    is kept when ``t >= q - 3`` (default mode) or ``t > q - 3`` (strict
    mode). Row order is preserved. The retained row count is the p* recorded
    in provenance when matrices are concatenated.
    """
    if q != fm.q:
        raise SchemaMismatchError(f"{fm.workload_id}: q={q} but flags have {fm.q} columns")
    t = fm.triggered_counts
    if cfg.trigger_threshold_mode is TriggerThresholdMode.AT_LEAST_Q_MINUS_3:
        keep_attack = t >= q - 3
    else:
        keep_attack = t > q - 3
    keep = (fm.labels == 0) | keep_attack
    return FlagMatrix(
        fm.workload_id, fm.flags[keep], fm.triggered_counts[keep], fm.labels[keep]
    )


def concatenate(filtered: Sequence[FlagMatrix]) -> MiningDataset:
    """Stack filtered flag matrices, in input order, into the mining dataset."""
    if not filtered:
        raise ConfigError("concatenate needs at least one flag matrix")
    q = filtered[0].q
    for fm in filtered[1:]:
        if fm.q != q:
            raise SchemaMismatchError(
                f"{fm.workload_id}: q={fm.q} differs from first input q={q}"
            )
    return MiningDataset(
        transactions=np.concatenate([fm.flags for fm in filtered], axis=0),
        labels=np.concatenate([fm.labels for fm in filtered]),
        provenance=tuple((fm.workload_id, fm.p) for fm in filtered),
    )


# ---------------------------------------------------------------------------
# Inspection formats


def write_flag_matrix(fm: FlagMatrix, path: str | Path) -> None:
    """Export flags as CSV with columns f0..f{q-1}, t, label (LF endings)."""
    path = Path(path)
    frame = pd.DataFrame(fm.flags, columns=[f"f{j}" for j in range(fm.q)], copy=False)
    frame["t"] = fm.triggered_counts
    frame["label"] = fm.labels
    frame.to_csv(path, index=False, lineterminator="\n")


def read_flag_matrix(path: str | Path) -> FlagMatrix:
    """Parse a flag-matrix CSV written by :func:`write_flag_matrix`."""
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"{path}: no such file")
    frame = pd.read_csv(path, dtype=np.int64, keep_default_na=False, na_values=[])
    cols = list(frame.columns)
    q = len(cols) - 2
    if q < 1 or cols != [f"f{j}" for j in range(q)] + ["t", "label"]:
        raise TraceFormatError(f"{path}: expected columns f0..f{{q-1}}, t, label; got {cols}")
    return FlagMatrix(
        path.stem,
        frame.iloc[:, :q].to_numpy(dtype=np.uint8),
        frame["t"].to_numpy(),
        frame["label"].to_numpy(),
    )


def write_mining_dataset(ds: MiningDataset, path: str | Path) -> None:
    payload = {
        "provenance": [[w, n] for w, n in ds.provenance],
        "labels": ds.labels.tolist(),
        "transactions": ds.transactions.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def read_mining_dataset(path: str | Path) -> MiningDataset:
    path = Path(path)
    if not path.exists():
        raise TraceFormatError(f"{path}: no such file")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return MiningDataset(
            transactions=np.asarray(payload["transactions"], dtype=np.uint8),
            labels=np.asarray(payload["labels"], dtype=np.int64),
            provenance=tuple((w, n) for w, n in payload["provenance"]),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise TraceFormatError(f"{path}: malformed mining dataset file: {exc}") from None
