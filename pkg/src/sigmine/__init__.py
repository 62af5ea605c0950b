"""Interpretable detection of flush+fault-style microarchitectural attacks
from labeled performance-counter traces: per-workload 3-sigma flagging
followed by size-constrained association rule mining, plus a detector,
evaluation harness, and synthetic trace generator."""

from .detector import Detection, classify
from .errors import (
    ConfigError,
    RuleFileError,
    SchemaMismatchError,
    SigmineError,
    TraceFormatError,
    TraceValidationError,
)
from .evaluate import EvalReport, TestCaseSpec, run_test_case, score, split_trace
from .ingest import read_trace, write_trace
from .mining import (
    AssociationRule,
    MiningConfig,
    RuleSet,
    generate_rules,
    load_rules,
    mine_frequent_itemsets,
    mine_rules,
    save_rules,
)
from .preprocess import (
    FlagRuleMode,
    PreprocessConfig,
    TriggerThresholdMode,
    compute_stats,
    concatenate,
    filter_instances,
    flag,
)
from .synth import SynthConfig, generate, generate_test_case
from .trace import (
    DEFAULT_SCHEMA,
    FeatureSchema,
    FeatureStats,
    FlagMatrix,
    MiningDataset,
    WorkloadTrace,
    validate_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AssociationRule",
    "ConfigError",
    "DEFAULT_SCHEMA",
    "Detection",
    "EvalReport",
    "FeatureSchema",
    "FeatureStats",
    "FlagMatrix",
    "FlagRuleMode",
    "MiningConfig",
    "MiningDataset",
    "PreprocessConfig",
    "RuleFileError",
    "RuleSet",
    "SchemaMismatchError",
    "SigmineError",
    "SynthConfig",
    "TestCaseSpec",
    "TraceFormatError",
    "TraceValidationError",
    "TriggerThresholdMode",
    "WorkloadTrace",
    "classify",
    "compute_stats",
    "concatenate",
    "filter_instances",
    "flag",
    "generate",
    "generate_rules",
    "generate_test_case",
    "load_rules",
    "mine_frequent_itemsets",
    "mine_rules",
    "read_trace",
    "run_test_case",
    "save_rules",
    "score",
    "split_trace",
    "validate_trace",
    "write_trace",
]
