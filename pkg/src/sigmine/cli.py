"""Command-line pipeline: synth -> preprocess -> mine -> detect -> eval.

Every command writes a JSON manifest next to its outputs recording the
command, all parameter values, and the input/output paths, so any artifact
can be regenerated from its manifest. Outputs are deterministic given the
manifest (timing fields inside evaluation reports excepted). Errors are
reported on stderr with a nonzero exit code; data goes to files only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import detector, evaluate, ingest, mining, preprocess, synth
from .errors import SchemaMismatchError, SigmineError
from .mining import MiningConfig
from .preprocess import FlagRuleMode, PreprocessConfig, TriggerThresholdMode
from .trace import DEFAULT_SCHEMA, FeatureSchema

TRAIN_FRACTION = 0.7


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one command's outputs."""

    command: str
    seed: int | None = None
    parameters: dict = field(default_factory=dict)
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _schema_from_args(args: argparse.Namespace) -> FeatureSchema:
    if getattr(args, "features", None):
        return FeatureSchema(tuple(n.strip() for n in args.features.split(",")))
    return DEFAULT_SCHEMA


def _preprocess_config(args: argparse.Namespace) -> PreprocessConfig:
    return PreprocessConfig(
        sigma_multiplier=args.sigma,
        trigger_threshold_mode=TriggerThresholdMode(args.trigger_threshold),
        flag_rule_mode=FlagRuleMode(args.flag_rule),
    )


def _mining_config(args: argparse.Namespace) -> MiningConfig:
    return MiningConfig(
        min_support=args.min_support,
        min_confidence=args.min_confidence,
        min_antecedent_size=args.phi_min,
        max_antecedent_size=args.phi_max,
    )


def _synth_config(args: argparse.Namespace) -> synth.SynthConfig:
    return synth.SynthConfig(
        seed=args.seed,
        n_benign=args.n_benign,
        n_attack=args.n_attack,
        n_transient=args.n_transient,
        attack_shift=args.attack_shift,
        stress_trigger_prob=args.stress_trigger_prob,
        attack_density=args.attack_density,
    )


def _add_preprocess_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, default=3.0, help="sigma multiplier (default 3)")
    p.add_argument(
        "--flag-rule",
        choices=[m.value for m in FlagRuleMode],
        default=FlagRuleMode.MEAN_PLUS_K_SIGMA.value,
        help="flag when x > mean + k*sigma (default) or x > k*sigma",
    )
    p.add_argument(
        "--trigger-threshold",
        choices=[m.value for m in TriggerThresholdMode],
        default=TriggerThresholdMode.AT_LEAST_Q_MINUS_3.value,
        help="keep attack rows with t >= q-3 (default) or t > q-3",
    )


def _add_mining_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-support", type=float, default=0.05)
    p.add_argument("--min-confidence", type=float, default=0.90)
    p.add_argument("--phi-min", type=int, default=None, help="min antecedent size (default q-3)")
    p.add_argument("--phi-max", type=int, default=None, help="max antecedent size (default q)")


def _add_synth_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n-benign", type=int, default=5700)
    p.add_argument("--n-attack", type=int, default=5415)
    p.add_argument("--n-transient", type=int, default=285)
    p.add_argument("--attack-shift", type=float, default=6.0)
    p.add_argument("--stress-trigger-prob", type=float, default=0.005)
    p.add_argument("--attack-density", type=float, default=0.062)


def _preprocess_mode_params(args: argparse.Namespace) -> dict:
    return {
        "sigma": args.sigma,
        "flag_rule_mode": args.flag_rule,
        "trigger_threshold_mode": args.trigger_threshold,
    }


# ---------------------------------------------------------------------------
# Commands


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _synth_config(args)
    outputs = []
    for trace in synth.generate_test_case(args.test_case, cfg):
        path = out_dir / f"{trace.workload_id}.csv"
        ingest.write_trace(trace, path, DEFAULT_SCHEMA)
        outputs.append(str(path))
    RunManifest(
        "synth",
        seed=cfg.seed,
        parameters={"test_case": args.test_case, **asdict(cfg)},
        outputs=tuple(outputs),
    ).write(out_dir / "synth_manifest.json")
    print(f"wrote {len(outputs)} trace(s) to {out_dir}")
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = _schema_from_args(args)
    cfg = _preprocess_config(args)
    outputs = []
    for trace_path in args.trace:
        trace = ingest.read_trace(trace_path, schema)
        fm = preprocess.flag(trace, preprocess.compute_stats(trace), cfg)
        if not args.no_filter:
            fm = preprocess.filter_instances(fm, cfg, schema.q)
        path = out_dir / f"{trace.workload_id}.flags.csv"
        preprocess.write_flag_matrix(fm, path)
        outputs.append(str(path))
        print(f"{trace.workload_id}: {trace.p} rows in, {fm.p} rows out")
    RunManifest(
        "preprocess",
        parameters={**_preprocess_mode_params(args), "no_filter": args.no_filter},
        inputs=tuple(str(p) for p in args.trace),
        outputs=tuple(outputs),
    ).write(out_dir / "preprocess_manifest.json")
    return 0


def cmd_mine(args: argparse.Namespace) -> int:
    schema = _schema_from_args(args)
    pre_cfg = _preprocess_config(args)
    mine_cfg = _mining_config(args)
    filtered = []
    for trace_path in args.trace:
        trace = ingest.read_trace(trace_path, schema)
        fm = preprocess.flag(trace, preprocess.compute_stats(trace), pre_cfg)
        filtered.append(preprocess.filter_instances(fm, pre_cfg, schema.q))
    ds = preprocess.concatenate(filtered)
    rules = mining.mine_rules(ds, mine_cfg, schema, source=args.source)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    mining.save_rules(rules, out)
    RunManifest(
        "mine",
        parameters={
            **_preprocess_mode_params(args),
            "min_support": args.min_support,
            "min_confidence": args.min_confidence,
            "phi_min": args.phi_min,
            "phi_max": args.phi_max,
            "source": args.source,
        },
        inputs=tuple(str(p) for p in args.trace),
        outputs=(str(out),),
    ).write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"mined {len(rules)} rule(s) from {ds.k} transactions -> {out}")
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    rules = mining.load_rules(args.rules)
    header = [c for c in ingest.read_header(Path(args.trace)) if c != ingest.LABEL_COLUMN]
    if len(header) != rules.schema.q:
        raise SchemaMismatchError(
            f"rule file expects q={rules.schema.q} features but "
            f"{args.trace} has q={len(header)}"
        )
    trace = ingest.read_trace(args.trace, rules.schema)
    cfg = _preprocess_config(args)
    fm = preprocess.flag(trace, preprocess.compute_stats(trace), cfg)
    det = detector.classify(fm, rules)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    detector.write_detection_csv(det, out, labels=trace.labels)
    RunManifest(
        "detect",
        parameters=_preprocess_mode_params(args),
        inputs=(str(args.rules), str(args.trace)),
        outputs=(str(out),),
    ).write(out.with_suffix(out.suffix + ".manifest.json"))
    n_attack = int(det.predicted.sum())
    print(f"{trace.workload_id}: {n_attack}/{trace.p} instances classified as attack -> {out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rules = mining.load_rules(args.rules)
    cfg = _preprocess_config(args)
    tc = evaluate.TestCaseSpec(args.test_case_id, tuple(Path(p) for p in args.trace))
    report = evaluate.run_test_case(tc, rules, cfg)
    report_path = out_dir / f"{args.test_case_id.replace(' ', '_').lower()}.json"
    evaluate.write_report(report, report_path)
    RunManifest(
        "eval",
        parameters={**_preprocess_mode_params(args), "test_case_id": args.test_case_id},
        inputs=(str(args.rules), *map(str, args.trace)),
        outputs=(str(report_path),),
    ).write(out_dir / "eval_manifest.json")
    print(evaluate.compare_table([report]), end="")
    return 0


def cmd_repro(args: argparse.Namespace) -> int:
    """Four-test-case reproduction on synthetic traces.

    Generates all four scenarios, splits test case 1 at instance level
    (70% mining / 30% hold-out), mines rules on the training split only,
    and evaluates every test case with those rules.
    """
    out_dir = Path(args.out_dir)
    schema = DEFAULT_SCHEMA
    synth_cfg = _synth_config(args)
    pre_cfg = _preprocess_config(args)
    mine_cfg = _mining_config(args)

    # Synthetic traces for all four test cases.
    trace_paths: dict[int, list[Path]] = {}
    for tc_id in (1, 2, 3, 4):
        tc_dir = out_dir / "traces" / f"tc{tc_id}"
        tc_dir.mkdir(parents=True, exist_ok=True)
        trace_paths[tc_id] = []
        for trace in synth.generate_test_case(tc_id, synth_cfg):
            path = tc_dir / f"{trace.workload_id}.csv"
            ingest.write_trace(trace, path, schema)
            trace_paths[tc_id].append(path)

    # Test case 1: instance-level split; rules come from the 70% side only.
    split_dir = out_dir / "traces" / "tc1_split"
    split_dir.mkdir(parents=True, exist_ok=True)
    train_paths, test_paths = [], []
    for path in trace_paths[1]:
        trace = ingest.read_trace(path, schema)
        train, test = evaluate.split_trace(trace, TRAIN_FRACTION, synth_cfg.seed)
        for sub, bucket in ((train, train_paths), (test, test_paths)):
            sub_path = split_dir / f"{sub.workload_id}.csv"
            ingest.write_trace(sub, sub_path, schema)
            bucket.append(sub_path)

    train_traces = [ingest.read_trace(p, schema) for p in train_paths]
    t0 = time.perf_counter()
    filtered = [
        preprocess.filter_instances(
            preprocess.flag(t, preprocess.compute_stats(t), pre_cfg), pre_cfg, schema.q
        )
        for t in train_traces
    ]
    ds = preprocess.concatenate(filtered)
    spp_train_seconds = time.perf_counter() - t0
    n_train = sum(t.p for t in train_traces)

    t0 = time.perf_counter()
    rules = mining.mine_rules(ds, mine_cfg, schema, source="test case 1 training split")
    rg_seconds = time.perf_counter() - t0
    rules_path = out_dir / "rules" / "test_case_1.rules"
    rules_path.parent.mkdir(parents=True, exist_ok=True)
    mining.save_rules(rules, rules_path)

    reports = [
        evaluate.EvalReport(
            "RG",
            rg_time_per_1k=evaluate.ms_per_1k(rg_seconds, ds.k),
            spp_time_per_1k=evaluate.ms_per_1k(spp_train_seconds, n_train),
        )
    ]
    case_files = {1: test_paths, 2: trace_paths[2], 3: trace_paths[3], 4: trace_paths[4]}
    for tc_id in (1, 2, 3, 4):
        tc = evaluate.TestCaseSpec(f"Test Case {tc_id}", tuple(case_files[tc_id]))
        reports.append(evaluate.run_test_case(tc, rules, pre_cfg))

    # Per-trace detection CSVs, for inspection and byte-level comparison.
    det_outputs = []
    for tc_id in (1, 2, 3, 4):
        det_dir = out_dir / "detections" / f"tc{tc_id}"
        det_dir.mkdir(parents=True, exist_ok=True)
        for path in case_files[tc_id]:
            trace = ingest.read_trace(path, schema)
            fm = preprocess.flag(trace, preprocess.compute_stats(trace), pre_cfg)
            det = detector.classify(fm, rules)
            det_path = det_dir / f"{trace.workload_id}.csv"
            detector.write_detection_csv(det, det_path, labels=trace.labels)
            det_outputs.append(str(det_path))

    reports_dir = out_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    report_files = []
    for report in reports:
        path = reports_dir / f"{report.test_case_id.replace(' ', '_').lower()}.json"
        evaluate.write_report(report, path)
        report_files.append(str(path))
    table = evaluate.compare_table(reports)
    (reports_dir / "comparison.txt").write_text(table, encoding="utf-8")
    (reports_dir / "comparison.csv").write_text(
        evaluate.compare_csv(reports), encoding="utf-8"
    )

    RunManifest(
        "repro",
        seed=synth_cfg.seed,
        parameters={
            **{k: v for k, v in asdict(synth_cfg).items()},
            **_preprocess_mode_params(args),
            "min_support": args.min_support,
            "min_confidence": args.min_confidence,
            "phi_min": args.phi_min,
            "phi_max": args.phi_max,
            "train_fraction": TRAIN_FRACTION,
        },
        outputs=tuple(
            [str(p) for paths in trace_paths.values() for p in paths]
            + [str(p) for p in train_paths + test_paths]
            + [str(rules_path)]
            + det_outputs
            + report_files
        ),
    ).write(out_dir / "repro_manifest.json")
    print(table, end="")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigmine",
        description=(
            "Learn and apply interpretable attack-detection rules over "
            "labeled performance-counter traces"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic test-case traces")
    p.add_argument("--test-case", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--out-dir", required=True)
    _add_synth_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="flag traces and filter training instances")
    p.add_argument("--trace", nargs="+", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--features", default=None, help="comma-separated schema override")
    p.add_argument(
        "--no-filter", action="store_true", help="skip instance filtering (test-time view)"
    )
    _add_preprocess_args(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("mine", help="mine association rules from training traces")
    p.add_argument("--trace", nargs="+", required=True)
    p.add_argument("--out", required=True, help="rule file to write")
    p.add_argument("--features", default=None, help="comma-separated schema override")
    p.add_argument("--source", default="", help="provenance note stored in the rule file")
    _add_preprocess_args(p)
    _add_mining_args(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("detect", help="classify one trace with a rule file")
    p.add_argument("--rules", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True, help="detection CSV to write")
    _add_preprocess_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a rule file against test-case traces")
    p.add_argument("--rules", required=True)
    p.add_argument("--trace", nargs="+", required=True)
    p.add_argument("--test-case-id", required=True)
    p.add_argument("--out-dir", required=True)
    _add_preprocess_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "repro", help="full synthetic four-test-case run with test case 1 rules"
    )
    p.add_argument("--out-dir", required=True)
    _add_synth_args(p)
    _add_preprocess_args(p)
    _add_mining_args(p)
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SigmineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
