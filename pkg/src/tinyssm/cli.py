"""Command-line entry points for the engine.

Verbs:
  gen      write synthetic bundles, feature files, and reference dumps
  run      classify a feature file with a weight bundle
  compare  fidelity between scan paths or against an external dump
  plan     print a buffer plan, operator schedule, or peak-RAM summary
  bench    wall-clock both scan paths on one batch

Exit status: 0 on success, 1 when a comparison fails its consistency
checks, 2 for usage, file, or format problems.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import bundle_io, harness, memory_planner, model_zoo
from .errors import EngineError
from .tensor_core import argmax

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_USAGE = 2


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_model(args):
    if getattr(args, "bundle", None):
        return bundle_io.read_bundle(args.bundle)
    config = model_zoo.preset_config(args.preset)
    if getattr(args, "pooling", None):
        config = dataclasses.replace(config, pooling=args.pooling)
    return config, model_zoo.synth_params(config, args.seed)


def _dump_matrices(traces, at):
    if at == "mamba_out":
        return [t.mamba_out for t in traces]
    return [t.logits.reshape(1, -1) for t in traces]


def _cmd_gen(args) -> int:
    if not (args.bundle or args.features or args.dump):
        raise EngineError("gen: nothing to do; pass --bundle, --features, or --dump")
    config = model_zoo.preset_config(args.preset)
    if args.pooling:
        config = dataclasses.replace(config, pooling=args.pooling)
    params = model_zoo.synth_params(config, args.seed)
    samples = model_zoo.synth_features(config, args.seed + 1, args.n)
    if args.bundle:
        bundle_io.write_bundle(args.bundle, config, params)
    if args.features:
        bundle_io.write_features(args.features, samples)
    if args.dump:
        traces = harness.run_samples(params, config, samples, scan="reference")
        labels = [argmax(t.logits) for t in traces]
        bundle_io.write_features(args.dump, _dump_matrices(traces, args.at), labels)
    return EXIT_OK


def _cmd_run(args) -> int:
    config, params = bundle_io.read_bundle(args.bundle)
    samples, _ = bundle_io.read_features(args.features)
    traces = harness.run_samples(params, config, samples, scan=args.scan, jobs=args.jobs)
    preds = [argmax(t.logits) for t in traces]
    lines = []
    for i, (pred, trace) in enumerate(zip(preds, traces)):
        logits = "\t".join(repr(float(v)) for v in trace.logits)
        lines.append(f"{i}\t{pred}\t{logits}")
    _emit("\n".join(lines) + "\n", args.out)
    if args.dump:
        bundle_io.write_features(args.dump, _dump_matrices(traces, args.at), preds)
    return EXIT_OK


def _cmd_compare(args) -> int:
    config, params = bundle_io.read_bundle(args.bundle)
    samples, _ = bundle_io.read_features(args.features)
    if args.mode == "fused_vs_reference":
        report = harness.compare_fused_vs_reference(
            params, config, samples, at=args.at, jobs=args.jobs
        )
    else:
        if not args.dump:
            raise EngineError("compare: --mode engine_vs_dump needs --dump")
        dumped, dump_labels = bundle_io.read_features(args.dump)
        report = harness.compare_engine_vs_dump(
            params, config, samples, dumped, dump_labels, at=args.at, jobs=args.jobs
        )
    _emit(report.to_text(), args.report)
    ok = report.agreement == 1.0
    if args.max_avg_err is not None and report.avg_mean_err > args.max_avg_err:
        ok = False
    if args.max_worst is not None and report.worst_linf > args.max_worst:
        ok = False
    return EXIT_OK if ok else EXIT_INCONSISTENT


def _cmd_plan(args) -> int:
    config, _ = (
        bundle_io.read_bundle(args.bundle)
        if args.bundle
        else (model_zoo.preset_config(args.preset), None)
    )
    if args.format == "report":
        text = memory_planner.format_plan_report(
            memory_planner.peak_ram_report(config, inplace=args.inplace)
        )
    else:
        schedule = memory_planner.build_schedule(
            config, variant=args.variant, inplace=args.inplace
        )
        if args.format == "schedule":
            text = memory_planner.format_schedule(schedule)
        else:
            plan = memory_planner.plan_offsets(
                memory_planner.derive_lifetimes(schedule), strategy=args.strategy
            )
            text = memory_planner.format_plan(plan)
    _emit(text, args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    config, params = _load_model(args)
    if args.features:
        samples, _ = bundle_io.read_features(args.features)
    else:
        samples = model_zoo.synth_features(config, args.seed + 1, args.n)
    result = harness.bench_paths(params, config, samples, repeats=args.repeats)
    _emit(result.to_text(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tinyssm", description="fp32 Mamba classifier engine and planner"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    presets = sorted(("kws3", "kws10", "har"))

    p = sub.add_parser("gen", help="write synthetic bundle, features, and dump files")
    p.add_argument("--preset", choices=presets, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=16, help="number of feature samples")
    p.add_argument("--pooling", choices=model_zoo.POOLING_MODES, default=None)
    p.add_argument("--bundle", help="weight bundle output path")
    p.add_argument("--features", help="feature file output path")
    p.add_argument("--dump", help="reference activation dump output path")
    p.add_argument("--at", choices=harness.COMPARE_POINTS, default="mamba_out")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="classify a feature file")
    p.add_argument("--bundle", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--scan", choices=model_zoo.SCAN_PATHS, default="fused")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="prediction output path (default stdout)")
    p.add_argument("--dump", help="activation dump output path")
    p.add_argument("--at", choices=harness.COMPARE_POINTS, default="mamba_out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="fidelity between paths or against a dump")
    p.add_argument("--mode", choices=harness.COMPARE_MODES, required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--dump", help="dump file (engine_vs_dump mode)")
    p.add_argument("--at", choices=harness.COMPARE_POINTS, default="mamba_out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", help="report output path (default stdout)")
    p.add_argument("--max-avg-err", type=float, default=None)
    p.add_argument("--max-worst", type=float, default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("plan", help="buffer plan, schedule, or peak-RAM summary")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=presets)
    group.add_argument("--bundle")
    p.add_argument("--variant", choices=memory_planner.SCAN_VARIANTS, default="fused")
    p.add_argument(
        "--strategy", choices=memory_planner.PLAN_STRATEGIES, default="lifetime_reuse"
    )
    p.add_argument("--inplace", action="store_true")
    p.add_argument("--format", choices=("plan", "schedule", "report"), default="report")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("bench", help="wall-clock both scan paths")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=presets)
    group.add_argument("--bundle")
    p.add_argument("--features", help="feature file (default: synthetic)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EngineError, OSError, ValueError) as exc:
        print(f"tinyssm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
