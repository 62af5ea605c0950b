import numpy as np
import pytest

from sigmine.errors import ConfigError, SchemaMismatchError
from sigmine.preprocess import (
    FlagRuleMode,
    PreprocessConfig,
    TriggerThresholdMode,
    compute_stats,
    concatenate,
    filter_instances,
    flag,
    read_flag_matrix,
    read_mining_dataset,
    write_flag_matrix,
    write_mining_dataset,
)
from sigmine.trace import FeatureStats, FlagMatrix, WorkloadTrace

from .conftest import random_trace

LITERAL = PreprocessConfig(flag_rule_mode=FlagRuleMode.K_SIGMA_ABSOLUTE)
STRICT = PreprocessConfig(
    trigger_threshold_mode=TriggerThresholdMode.STRICTLY_GREATER_Q_MINUS_3
)


def column_trace(*columns, labels=None):
    values = np.array(columns, dtype=float).T
    if labels is None:
        labels = np.zeros(values.shape[0], dtype=int)
    return WorkloadTrace("w", values, labels)


def test_config_rejects_non_positive_sigma():
    with pytest.raises(ConfigError):
        PreprocessConfig(sigma_multiplier=0.0)
    with pytest.raises(ConfigError):
        PreprocessConfig(sigma_multiplier=-1.0)


def test_stats_constant_column():
    stats = compute_stats(column_trace([2, 2, 2, 2]))
    assert stats.mean[0] == 2.0
    assert stats.stddev[0] == 0.0


def test_stats_population_convention():
    # sum of squared deviations is 90 over 10 rows: variance 9, sigma 3
    stats = compute_stats(column_trace([0] * 9 + [10]))
    assert stats.mean[0] == 1.0
    assert stats.stddev[0] == 3.0


def test_stats_identical_columns_get_identical_stats():
    col = [1, 5, 2, 8, 3]
    stats = compute_stats(column_trace(col, col))
    assert stats.mean[0] == stats.mean[1]
    assert stats.stddev[0] == stats.stddev[1]


def test_stats_ignore_labels():
    trace0 = column_trace([1, 2, 3, 4])
    trace1 = column_trace([1, 2, 3, 4], labels=[1, 0, 1, 1])
    assert compute_stats(trace0) == compute_stats(trace1)


def test_flag_constant_column_never_flags():
    trace = column_trace([7, 7, 7])
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    assert not fm.flags.any()


def test_flag_single_outlier_column():
    # mu = 0.1, sigma = sqrt(0.99) ~ 0.99499, mu + 3 sigma ~ 3.085
    trace = column_trace([0] * 99 + [10])
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    assert fm.flags[:99, 0].sum() == 0
    assert fm.flags[99, 0] == 1


def test_flag_all_features_exceeding_gives_full_count():
    rng = np.random.default_rng(3)
    base = rng.normal(100, 5, size=(50, 8))
    base[7] = 1e6  # every feature of row 7 far above mu + 3 sigma
    trace = WorkloadTrace("w", np.abs(base), np.zeros(50, dtype=int))
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    assert fm.triggered_counts[7] == 8


def test_flag_oracle_default_and_literal_modes():
    rng = np.random.default_rng(4)
    for _ in range(300):
        trace = random_trace(rng, q=int(rng.integers(1, 9)))
        stats = compute_stats(trace)
        for cfg in (PreprocessConfig(), LITERAL):
            fm = flag(trace, stats, cfg)
            for i in range(trace.p):
                for j in range(trace.q):
                    if cfg.flag_rule_mode is FlagRuleMode.MEAN_PLUS_K_SIGMA:
                        threshold = stats.mean[j] + cfg.sigma_multiplier * stats.stddev[j]
                    else:
                        threshold = cfg.sigma_multiplier * stats.stddev[j]
                    assert fm.flags[i, j] == (trace.values[i, j] > threshold)


def test_flag_scale_covariance_default_mode():
    rng = np.random.default_rng(5)
    cfg = PreprocessConfig()
    for _ in range(50):
        trace = random_trace(rng)
        c = float(rng.uniform(0.05, 50.0))
        scaled = WorkloadTrace("w", trace.values * c, trace.labels)
        before = flag(trace, compute_stats(trace), cfg)
        after = flag(scaled, compute_stats(scaled), cfg)
        assert np.array_equal(before.flags, after.flags)


def test_flag_shift_invariance_default_mode():
    rng = np.random.default_rng(6)
    cfg = PreprocessConfig()
    for _ in range(50):
        trace = random_trace(rng)
        shift = float(rng.uniform(0.0, 1000.0))
        shifted = WorkloadTrace("w", trace.values + shift, trace.labels)
        before = flag(trace, compute_stats(trace), cfg)
        after = flag(shifted, compute_stats(shifted), cfg)
        assert np.array_equal(before.flags, after.flags)


def test_flag_q_mismatch():
    trace = column_trace([1, 2, 3])
    stats = FeatureStats(np.zeros(4), np.ones(4))
    with pytest.raises(SchemaMismatchError):
        flag(trace, stats, PreprocessConfig())


def make_fm(flags, labels):
    flags = np.asarray(flags, dtype=np.uint8)
    return FlagMatrix.from_flags("w", flags, np.asarray(labels))


def test_filter_keeps_attack_row_at_threshold():
    # q=8, label 1, t=5: kept under the default "at least q-3" reading
    row = [1, 1, 1, 1, 1, 0, 0, 0]
    fm = make_fm([row], [1])
    assert filter_instances(fm, PreprocessConfig(), 8).p == 1
    # strict algorithm-literal mode needs t > 5
    assert filter_instances(fm, STRICT, 8).p == 0


def test_filter_discards_below_both_thresholds():
    row = [1, 1, 1, 1, 0, 0, 0, 0]  # t = 4
    fm = make_fm([row], [1])
    assert filter_instances(fm, PreprocessConfig(), 8).p == 0
    assert filter_instances(fm, STRICT, 8).p == 0


def test_filter_always_keeps_benign_rows():
    fm = make_fm([[0] * 8, [1] * 8, [0] * 8], [0, 0, 0])
    out = filter_instances(fm, PreprocessConfig(), 8)
    assert out.p == 3
    assert np.array_equal(out.flags, fm.flags)


def test_filter_contract_on_random_matrices():
    rng = np.random.default_rng(8)
    for _ in range(200):
        p, q = int(rng.integers(1, 40)), int(rng.integers(1, 10))
        fm = make_fm(rng.integers(0, 2, size=(p, q)), rng.integers(0, 2, size=p))
        for cfg in (PreprocessConfig(), STRICT):
            out = filter_instances(fm, cfg, q)
            assert out.p <= fm.p
            # every retained attack row meets its threshold
            att = out.labels == 1
            if cfg.trigger_threshold_mode is TriggerThresholdMode.AT_LEAST_Q_MINUS_3:
                assert (out.triggered_counts[att] >= q - 3).all()
            else:
                assert (out.triggered_counts[att] > q - 3).all()
            # benign rows preserved verbatim, order preserved
            assert np.array_equal(out.flags[out.labels == 0], fm.flags[fm.labels == 0])
            # retained rows appear in original relative order
            kept_rows = [tuple(r) for r in out.flags]
            source_rows = [tuple(r) for r in fm.flags]
            it = iter(enumerate(source_rows))
            for row in kept_rows:
                assert any(row == r for _, r in it)


def test_concatenate_counts_and_provenance():
    rng = np.random.default_rng(9)
    a = make_fm(rng.integers(0, 2, (10, 8)), rng.integers(0, 2, 10))
    b = FlagMatrix.from_flags("b", rng.integers(0, 2, (15, 8)).astype(np.uint8), rng.integers(0, 2, 15))
    ds = concatenate([a, b])
    assert ds.k == 25
    assert ds.provenance == (("w", 10), ("b", 15))
    assert np.array_equal(ds.transactions[:10], a.flags)
    assert np.array_equal(ds.transactions[10:], b.flags)


def test_concatenate_single_input_is_identity():
    rng = np.random.default_rng(10)
    a = make_fm(rng.integers(0, 2, (6, 5)), rng.integers(0, 2, 6))
    ds = concatenate([a])
    assert np.array_equal(ds.transactions, a.flags)
    assert np.array_equal(ds.labels, a.labels)


def test_concatenate_q_mismatch_and_empty():
    a = make_fm(np.zeros((2, 8)), [0, 0])
    b = make_fm(np.zeros((2, 7)), [0, 0])
    with pytest.raises(SchemaMismatchError):
        concatenate([a, b])
    with pytest.raises(ConfigError):
        concatenate([])


def test_flag_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    fm = FlagMatrix.from_flags(
        "fmx", rng.integers(0, 2, (12, 8)).astype(np.uint8), rng.integers(0, 2, 12)
    )
    path = tmp_path / "fmx.csv"
    write_flag_matrix(fm, path)
    assert read_flag_matrix(path) == fm


def test_mining_dataset_json_round_trip(tmp_path):
    rng = np.random.default_rng(12)
    ds = concatenate(
        [
            FlagMatrix.from_flags(
                f"w{i}", rng.integers(0, 2, (5, 6)).astype(np.uint8), rng.integers(0, 2, 5)
            )
            for i in range(3)
        ]
    )
    path = tmp_path / "ds.json"
    write_mining_dataset(ds, path)
    assert read_mining_dataset(path) == ds
