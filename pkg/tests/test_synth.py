import numpy as np
import pytest

from sigmine.errors import ConfigError
from sigmine.preprocess import PreprocessConfig, compute_stats, filter_instances, flag
from sigmine.synth import SynthConfig, generate, generate_test_case

SMALL = SynthConfig(seed=31, n_benign=800, n_attack=760, n_transient=40)


def test_determinism_same_seed_same_trace():
    cfg = SynthConfig(seed=123, n_benign=200, n_attack=50, n_transient=10)
    assert generate(cfg) == generate(cfg)
    assert generate(cfg) != generate(SynthConfig(seed=124, n_benign=200, n_attack=50, n_transient=10))


def test_test_case_emission_deterministic():
    a = generate_test_case(2, SMALL)
    b = generate_test_case(2, SMALL)
    assert all(x == y for x, y in zip(a, b))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"attack_shift": 2.0},
        {"attack_shift": 3.0},
        {"n_attack": -1},
        {"stress_trigger_prob": 1.5},
        {"attack_density": 0.0},
        {"attack_noise_scale": 0.0},
        {"transient_triggered_range": (0, 4)},
        {"transient_triggered_range": (6, 9)},
        {"benign_base_std": (1.0,) * 7},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SynthConfig(**kwargs)


def test_pure_benign_flag_rate_matches_gaussian_tail():
    # With no attacks and no stress, flags come only from the one-sided
    # 3-sigma Gaussian tail: P(Z > 3) ~ 0.00135 per cell.
    cfg = SynthConfig(seed=42, n_benign=20000, n_attack=0, n_transient=0, stress_trigger_prob=0.0)
    trace = generate(cfg)
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    rate = fm.flags.mean()
    assert 0.0005 < rate < 0.0025


def test_attack_rows_trigger_nearly_all_features():
    # Low-density composition: elevation must clear the file's own threshold.
    cfg = SynthConfig(seed=43, n_benign=15000, n_attack=950, n_transient=50)
    trace = generate(cfg)
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    attack_counts = fm.triggered_counts[trace.labels == 1]
    # transient rows elevate only q-3..q-1 features by design, so check the
    # q-1 floor against the attack budget rather than all label-1 rows
    n_high = int((attack_counts >= cfg.q - 1).sum())
    assert n_high >= 0.99 * cfg.n_attack


def test_benign_rows_never_exceed_half_the_features():
    cfg = SynthConfig(seed=44, n_benign=20000, n_attack=0, n_transient=0, stress_trigger_prob=0.02)
    trace = generate(cfg)
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    # construction cap is floor(q/2); allow one extra noise flag
    assert fm.triggered_counts.max() <= cfg.q // 2 + 1


def test_attack_instances_survive_filtering():
    pre = PreprocessConfig()
    for trace in generate_test_case(1, SMALL):
        fm = flag(trace, compute_stats(trace), pre)
        kept = filter_instances(fm, pre, SMALL.q)
        n_label1 = int(trace.labels.sum())
        if n_label1 == 0:
            continue
        kept_label1 = int(kept.labels.sum())
        assert kept_label1 >= 0.99 * n_label1


def test_transient_rows_trigger_within_range():
    cfg = SynthConfig(seed=45, n_benign=20000, n_attack=0, n_transient=1000, stress_trigger_prob=0.0)
    trace = generate(cfg)
    fm = flag(trace, compute_stats(trace), PreprocessConfig())
    # label-1 rows here are all transient: counts should sit in q-3..q-1
    # (plus the odd noise flag)
    counts = fm.triggered_counts[trace.labels == 1]
    assert counts.min() >= cfg.q - 3 - 1
    assert counts.max() <= cfg.q - 1 + 1
    assert np.median(counts) in (5, 6, 7)


def test_tc1_composition():
    traces = generate_test_case(1, SMALL)
    assert [t.workload_id for t in traces] == ["operating_system", "fault_variant_run"]
    os_trace, attack_trace = traces
    assert os_trace.p == SMALL.n_benign
    assert os_trace.labels.sum() == 0
    n_label1 = int(attack_trace.labels.sum())
    assert n_label1 == SMALL.n_attack + SMALL.n_transient
    density = n_label1 / attack_trace.p
    assert abs(density - SMALL.attack_density) < 0.005


def test_tc2_and_tc3_names():
    assert [t.workload_id for t in generate_test_case(2, SMALL)] == [
        "aes",
        "sha512",
        "dhrystone",
        "norx",
    ]
    assert [t.workload_id for t in generate_test_case(3, SMALL)] == [
        "qsort",
        "prime",
        "miniz",
    ]


def test_tc4_emits_all_seven_benchmarks():
    traces = generate_test_case(4, SMALL)
    assert [t.workload_id for t in traces] == [
        "aes",
        "sha512",
        "dhrystone",
        "norx",
        "qsort",
        "prime",
        "miniz",
    ]
    for t in traces:
        assert t.labels.sum() > 0  # every benchmark run carries attack windows


def test_unknown_test_case_rejected():
    with pytest.raises(ConfigError):
        generate_test_case(5, SMALL)


def test_values_are_non_negative():
    trace = generate(SynthConfig(seed=46, n_benign=5000, n_attack=200, n_transient=20))
    assert trace.values.min() >= 0.0


def test_all_zero_counts_rejected():
    with pytest.raises(ConfigError, match="nothing to generate"):
        generate(SynthConfig(n_benign=0, n_attack=0, n_transient=0))
