import numpy as np
import pytest

from sigmine.errors import SchemaMismatchError, TraceValidationError
from sigmine.trace import (
    DEFAULT_FEATURE_NAMES,
    FeatureSchema,
    FlagMatrix,
    MiningDataset,
    WorkloadTrace,
    validate_trace,
)

from .conftest import random_trace


def test_default_schema_is_the_canonical_eight():
    schema = FeatureSchema()
    assert schema.q == 8
    assert schema.names == (
        "l1i_cache_misses",
        "branch_mispredictions",
        "incorrect_conditional_branches",
        "total_executed_branches",
        "fetch_stalls",
        "tlb_accesses",
        "total_load_instructions",
        "total_store_instructions",
    )


@pytest.mark.parametrize(
    "names",
    [(), ("a", "a"), ("a", "")],
)
def test_schema_rejects_bad_name_lists(names):
    with pytest.raises(TraceValidationError):
        FeatureSchema(names)


def test_schema_index_of():
    schema = FeatureSchema()
    assert schema.index_of("fetch_stalls") == 4
    with pytest.raises(SchemaMismatchError):
        schema.index_of("nonesuch")


def test_valid_trace_accepted(schema8):
    values = np.zeros((3, 8))
    trace = WorkloadTrace("t", values, [0, 1, 0])
    assert validate_trace(trace, schema8) is trace
    assert trace.p == 3 and trace.q == 8


def test_width_mismatch_cites_row_zero(schema8):
    trace = WorkloadTrace("t", np.zeros((3, 7)), [0, 1, 0])
    with pytest.raises(SchemaMismatchError, match="row 0 has 7 values"):
        validate_trace(trace, schema8)


def test_negative_value_cites_position(schema8):
    values = np.zeros((3, 8))
    values[2, 4] = -1.0
    with pytest.raises(TraceValidationError, match="row 2, column 4"):
        validate_trace(WorkloadTrace("t", values, [0, 0, 0]), schema8)


def test_non_finite_value_rejected(schema8):
    values = np.zeros((2, 8))
    values[1, 3] = np.nan
    with pytest.raises(TraceValidationError, match="row 1, column 3"):
        validate_trace(WorkloadTrace("t", values, [0, 0]), schema8)


def test_bad_label_rejected(schema8):
    with pytest.raises(TraceValidationError, match="row 1"):
        validate_trace(WorkloadTrace("t", np.zeros((2, 8)), [0, 2]), schema8)


def test_empty_trace_rejected(schema8):
    with pytest.raises(TraceValidationError, match="at least one row"):
        validate_trace(WorkloadTrace("t", np.zeros((0, 8)), []), schema8)


def test_label_length_mismatch_rejected():
    with pytest.raises(TraceValidationError, match="2 labels for 3 rows"):
        WorkloadTrace("t", np.zeros((3, 8)), [0, 1])


def test_trace_arrays_immutable():
    trace = random_trace(np.random.default_rng(0))
    with pytest.raises(ValueError):
        trace.values[0, 0] = 1.0
    with pytest.raises(ValueError):
        trace.labels[0] = 1


def test_trace_equality():
    rng = np.random.default_rng(1)
    t = random_trace(rng)
    same = WorkloadTrace(t.workload_id, t.values.copy(), t.labels.copy())
    assert t == same
    other = WorkloadTrace("other", t.values, t.labels)
    assert t != other


def test_flag_matrix_counts_recomputed_from_flags():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p, q = int(rng.integers(1, 30)), int(rng.integers(1, 10))
        flags = rng.integers(0, 2, size=(p, q)).astype(np.uint8)
        labels = rng.integers(0, 2, size=p)
        fm = FlagMatrix.from_flags("w", flags, labels)
        assert np.array_equal(fm.triggered_counts, fm.flags.sum(axis=1))
        assert fm.triggered_counts.min() >= 0
        assert fm.triggered_counts.max() <= q


def test_flag_matrix_rejects_inconsistent_counts():
    flags = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    with pytest.raises(TraceValidationError, match="inconsistent"):
        FlagMatrix("w", flags, [1, 1], [0, 0])


def test_flag_matrix_rejects_non_binary():
    with pytest.raises(TraceValidationError, match="binary"):
        FlagMatrix("w", np.array([[2, 0]]), [2], [0])


def test_mining_dataset_provenance_must_sum_to_k():
    txns = np.zeros((4, 3), dtype=np.uint8)
    with pytest.raises(TraceValidationError, match="provenance"):
        MiningDataset(txns, [0, 0, 0, 0], (("a", 1), ("b", 1)))
    ds = MiningDataset(txns, [0, 0, 1, 0], (("a", 1), ("b", 3)))
    assert ds.k == 4 and ds.q == 3
