"""Seeded generator of labeled synthetic counter traces.

The generator emulates the qualitative behavior the detection pipeline
expects from real captures: attack intervals elevate most or all features
far past the flag line, transient intervals at attack-window edges elevate
only q-3 .. q-1 features, and benign intervals occasionally elevate up to
half the features under stress (never more, by construction).

Per-feature noise is Gaussian around configured baselines. Real counters are
not Gaussian, but the pipeline only consumes threshold crossings, so the
distribution shape beyond the tail rate is immaterial.

A construction constraint worth being explicit about: flag thresholds are
computed from each file's own statistics over all of its rows, so elevated
rows themselves inflate the per-column mean and sigma. No more than roughly
one row in ten can ever sit above mean + 3 sigma, whatever the elevation
(one-sided Chebyshev), and reliable flagging in practice needs elevated rows
to stay under ~7% of the file. Attack-bearing traces therefore embed their
labeled attack instances in a benign background at ``attack_density``
(default 6.2%), the way a real capture of an attack run interleaves attack
bursts with idle intervals. With the default 6-sigma shift this leaves the
elevated cells several noise standard deviations above the inflated
threshold, which is what guarantees that attack instances survive training
filtering and are recalled at test time.

All randomness for one trace comes from a single seeded generator
(numpy PCG64); a fixed seed gives byte-identical traces for a fixed numpy
version. Fixtures intended to outlive numpy upgrades or cross language
boundaries should be shared as exported CSV rather than by re-generation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .trace import DEFAULT_FEATURE_NAMES, WorkloadTrace

#: The two flush+fault flavors. They differ only by parameter preset: the
#: return-based variant induces a weaker fetch-stall elevation than the
#: fault-based one (no fault handling in the fetch stage), low enough that
#: the fetch-stall column stays under the flag line.
ATTACK_VARIANTS = ("fault", "return")

_FETCH_STALLS_INDEX = DEFAULT_FEATURE_NAMES.index("fetch_stalls")
_RETURN_FETCH_STALL_FACTOR = 0.6

#: Per-benchmark baseline scale factors, keyed by rv8 workload name. Flagging
#: is scale-covariant, so these only make the traces visibly distinct.
_BENCHMARK_SCALE = {
    "operating_system": 1.0,
    "aes": 1.0,
    "sha512": 1.15,
    "dhrystone": 1.3,
    "norx": 1.45,
    "qsort": 1.6,
    "prime": 1.75,
    "miniz": 1.9,
}

#: Trace composition per evaluation scenario: benign-only workloads and
#: (benchmark, variants) attack runs.
TEST_CASE_BENCHMARKS: dict[int, tuple[str, ...]] = {
    2: ("aes", "sha512", "dhrystone", "norx"),
    3: ("qsort", "prime", "miniz"),
    4: ("aes", "sha512", "dhrystone", "norx", "qsort", "prime", "miniz"),
}


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one synthetic trace / test-case family.

    ``n_benign`` sizes a benign-only workload; ``n_attack``/``n_transient``
    are the labeled attack-interval budget of an attack run. The benign
    background rows of an attack run are derived from ``attack_density``
    (label-1 fraction of the file) rather than configured directly.
    """

    seed: int = 7
    q: int = 8
    n_benign: int = 5700
    n_attack: int = 5415
    n_transient: int = 285
    benign_base_mean: tuple[float, ...] | None = None
    benign_base_std: tuple[float, ...] | None = None
    attack_shift: float = 6.0
    attack_noise_scale: float = 0.05
    stress_trigger_prob: float = 0.005
    transient_triggered_range: tuple[int, int] | None = None
    attack_density: float = 0.062

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        for name in ("n_benign", "n_attack", "n_transient"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.attack_shift > 3:
            raise ConfigError(
                f"attack_shift must be > 3 to clear the flag threshold, got {self.attack_shift}"
            )
        if not 0 <= self.stress_trigger_prob <= 1:
            raise ConfigError("stress_trigger_prob must be in [0, 1]")
        if not 0 < self.attack_density < 1:
            raise ConfigError("attack_density must be in (0, 1)")
        if not self.attack_noise_scale > 0:
            raise ConfigError("attack_noise_scale must be > 0")
        if self.benign_base_mean is not None:
            mean = tuple(float(v) for v in self.benign_base_mean)
            if len(mean) != self.q or any(v < 0 for v in mean):
                raise ConfigError("benign_base_mean needs q non-negative entries")
            object.__setattr__(self, "benign_base_mean", mean)
        if self.benign_base_std is not None:
            std = tuple(float(v) for v in self.benign_base_std)
            if len(std) != self.q or any(v <= 0 for v in std):
                raise ConfigError("benign_base_std needs q positive entries")
            object.__setattr__(self, "benign_base_std", std)
        lo, hi = self.triggered_range
        if not 1 <= lo <= hi <= self.q:
            raise ConfigError(
                f"transient_triggered_range must satisfy 1 <= lo <= hi <= q, got ({lo}, {hi})"
            )

    @property
    def triggered_range(self) -> tuple[int, int]:
        if self.transient_triggered_range is not None:
            lo, hi = self.transient_triggered_range
            return int(lo), int(hi)
        return max(1, self.q - 3), max(1, self.q - 1)

    def baselines(self, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        if self.benign_base_mean is not None:
            mean = np.asarray(self.benign_base_mean, dtype=np.float64)
        else:
            mean = 2000.0 * (1.0 + np.arange(self.q, dtype=np.float64))
        if self.benign_base_std is not None:
            std = np.asarray(self.benign_base_std, dtype=np.float64)
        else:
            std = 0.05 * mean
        return mean * scale, std * scale


def _variant_shifts(cfg: SynthConfig, variant: str) -> np.ndarray:
    if variant not in ATTACK_VARIANTS:
        raise ConfigError(f"unknown attack variant {variant!r}, expected one of {ATTACK_VARIANTS}")
    shifts = np.full(cfg.q, cfg.attack_shift, dtype=np.float64)
    if variant == "return" and cfg.q > _FETCH_STALLS_INDEX:
        shifts[_FETCH_STALLS_INDEX] = cfg.attack_shift * _RETURN_FETCH_STALL_FACTOR
    return shifts


def _split_evenly(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def generate(
    cfg: SynthConfig,
    workload_id: str = "synthetic",
    variants: Sequence[str] = ("fault",),
    baseline_scale: float = 1.0,
    rng: np.random.Generator | None = None,
) -> WorkloadTrace:
    """Build one labeled trace with the configured block counts.

    The trace holds ``n_benign`` benign rows, ``n_attack`` attack rows and
    ``n_transient`` transient rows (both label 1), the attack budget split
    evenly across *variants*, with all rows shuffled together. Deterministic
    for a fixed seed. Note the counts are taken literally here; use
    :func:`generate_test_case` for compositions whose label-1 density is
    calibrated for downstream flagging.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    q = cfg.q
    mean, std = cfg.baselines(baseline_scale)
    noise_std = cfg.attack_noise_scale * std
    lo, hi = cfg.triggered_range
    cap = q // 2

    blocks: list[np.ndarray] = []
    labels: list[np.ndarray] = []

    if cfg.n_benign:
        benign = rng.normal(mean, std, size=(cfg.n_benign, q))
        if cfg.stress_trigger_prob > 0:
            stressed = rng.random((cfg.n_benign, q)) < cfg.stress_trigger_prob
            over = np.flatnonzero(stressed.sum(axis=1) > cap)
            for i in over:
                chosen = np.flatnonzero(stressed[i])
                keep = rng.choice(chosen, size=cap, replace=False)
                stressed[i] = False
                stressed[i, keep] = True
            n_cells = int(stressed.sum())
            elevated = (
                mean[np.newaxis, :]
                + cfg.attack_shift * std[np.newaxis, :]
                + rng.normal(0.0, 1.0, size=(cfg.n_benign, q)) * noise_std[np.newaxis, :]
            )
            if n_cells:
                benign[stressed] = elevated[stressed]
        blocks.append(benign)
        labels.append(np.zeros(cfg.n_benign, dtype=np.int64))

    attack_per_variant = _split_evenly(cfg.n_attack, len(variants))
    transient_per_variant = _split_evenly(cfg.n_transient, len(variants))
    for variant, n_att, n_tr in zip(variants, attack_per_variant, transient_per_variant):
        shifts = _variant_shifts(cfg, variant)
        if n_att:
            rows = (
                mean[np.newaxis, :]
                + shifts[np.newaxis, :] * std[np.newaxis, :]
                + rng.normal(0.0, 1.0, size=(n_att, q)) * noise_std[np.newaxis, :]
            )
            blocks.append(rows)
            labels.append(np.ones(n_att, dtype=np.int64))
        if n_tr:
            rows = rng.normal(mean, std, size=(n_tr, q))
            sizes = rng.integers(lo, hi + 1, size=n_tr)
            for i in range(n_tr):
                chosen = rng.choice(q, size=int(sizes[i]), replace=False)
                rows[i, chosen] = (
                    mean[chosen]
                    + shifts[chosen] * std[chosen]
                    + rng.normal(0.0, 1.0, size=sizes[i]) * noise_std[chosen]
                )
            blocks.append(rows)
            labels.append(np.ones(n_tr, dtype=np.int64))

    if not blocks:
        raise ConfigError("all block counts are zero; nothing to generate")
    values = np.concatenate(blocks, axis=0)
    y = np.concatenate(labels)
    order = rng.permutation(values.shape[0])
    return WorkloadTrace(workload_id, np.maximum(values[order], 0.0), y[order])


def _attack_run_config(cfg: SynthConfig, n_attack: int, n_transient: int) -> SynthConfig:
    """Config for one attack run: benign background derived from density."""
    label1 = n_attack + n_transient
    filler = round(label1 * (1.0 - cfg.attack_density) / cfg.attack_density)
    return replace(cfg, n_benign=filler, n_attack=n_attack, n_transient=n_transient)


def generate_test_case(tc_id: int, cfg: SynthConfig) -> list[WorkloadTrace]:
    """Emit the traces of one evaluation scenario.

    Test case 1 is one benign operating-system trace (``n_benign`` rows)
    plus one fault-variant attack run carrying the full
    ``n_attack``/``n_transient`` budget. Test cases 2-4 emit one attack run
    per rv8 benchmark, each interleaving both attack variants with half the
    label-1 budget. Per-trace rng streams are spawned from
    ``(seed, tc_id, trace_index)`` so traces are independent and the whole
    emission is deterministic for a fixed seed.
    """
    if tc_id == 1:
        specs = [("operating_system", None), ("fault_variant_run", ("fault",))]
    elif tc_id in TEST_CASE_BENCHMARKS:
        specs = [(name, ATTACK_VARIANTS) for name in TEST_CASE_BENCHMARKS[tc_id]]
    else:
        raise ConfigError(f"unknown test case id {tc_id}, expected 1..4")

    traces = []
    for idx, (name, variants) in enumerate(specs):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, tc_id, idx)))
        scale = _BENCHMARK_SCALE.get(name, 1.0)
        if variants is None:
            run_cfg = replace(cfg, n_attack=0, n_transient=0)
            variants = ("fault",)
        else:
            budget_scale = 1 if tc_id == 1 else 2
            run_cfg = _attack_run_config(
                cfg, cfg.n_attack // budget_scale, cfg.n_transient // budget_scale
            )
        traces.append(
            generate(run_cfg, workload_id=name, variants=variants, baseline_scale=scale, rng=rng)
        )
    return traces
