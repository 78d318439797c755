"""Command-line interface.

Subcommands: ``vtlp``, ``tempo``, ``speed`` perturb single files; ``factors``
estimates speaker factors from CTM alignments; ``plan`` expands a manifest
into augmentation jobs; ``run`` executes a plan on a worker pool;
``summarize`` reports hours; ``sat-demo`` runs the synthetic
speaker-adaptive-training comparison.
"""

import argparse
import sys

import numpy as np

from .alignments import (
    DEFAULT_SILENCE_LABELS,
    build_factor_table,
    load_factor_table,
    parse_ctm,
    save_factor_table,
    speaker_stats,
)
from .audio import read_wav, write_wav
from .nnet import NetworkConfig
from .pipeline import (
    GLOBAL_FACTOR_SETS,
    build_plan,
    load_manifest,
    load_plan,
    parse_config,
    perturb_buffer,
    run_plan,
    save_manifest,
    save_plan,
    summarize,
)
from .sat import evaluate_loss, make_synthetic_speakers, train_sat


def _perturb_file(args, method: str) -> int:
    buffer = read_wav(args.input)
    overrides = {}
    if method == "vtlp":
        overrides["vtlp"] = {"boundary_hz": args.boundary_hz}
    elif method == "tempo":
        rate = buffer.sample_rate_hz
        overrides["tempo"] = {
            "frame_len": int(round(args.frame_ms * rate / 1000.0)),
            "tolerance": int(round(args.tolerance_ms * rate / 1000.0)),
        }
    out = perturb_buffer(buffer, method, args.factor, overrides)
    write_wav(out, args.output)
    print(f"{args.input} -> {args.output} ({method} {args.factor:g}, "
          f"{len(out)} samples)")
    return 0


def _cmd_factors(args) -> int:
    silence = frozenset(args.silence.split(",")) if args.silence else DEFAULT_SILENCE_LABELS
    control = speaker_stats(parse_ctm(args.control), silence)
    targets = speaker_stats(parse_ctm(args.dysarthric), silence)
    table = build_factor_table(control, targets)
    save_factor_table(table, args.output)
    print(f"reference mean phone duration: {table.reference_duration:.6f} s")
    for speaker in sorted(table.entries):
        print(f"{speaker}\t{table.entries[speaker]:.6f}")
    return 0


def _cmd_plan(args) -> int:
    config = parse_config(args.config)
    manifest = load_manifest(args.manifest)
    method = config.get("method", "speed")
    dys_mult = int(config.get("dys_multiplicity", "0"))
    ctl_mult = int(config.get("ctl_multiplicity", "0"))
    dys_factors = GLOBAL_FACTOR_SETS[dys_mult] if dys_mult else None
    table = None
    if "factor_table" in config:
        table = load_factor_table(config["factor_table"])
    plan = build_plan(manifest, method, dys_factors, table, ctl_mult)
    save_plan(plan, args.output)
    print(f"{len(plan)} jobs -> {args.output}")
    return 0


def _cmd_run(args) -> int:
    plan = load_plan(args.plan)
    result = run_plan(plan, args.output_dir, workers=args.workers)
    save_manifest(result.records, args.manifest_out)
    print(f"{len(result.records)} outputs written to {args.output_dir}")
    for output_id, message in result.failures:
        print(f"FAILED {output_id}: {message}", file=sys.stderr)
    return 0 if result.ok else 1


def _cmd_summarize(args) -> int:
    manifest = load_manifest(args.manifest)
    summary = summarize(manifest)
    print(f"total hours: {summary.total_hours:.4f}")
    for group in sorted(summary.hours_by_group):
        print(f"  group {group}: {summary.hours_by_group[group]:.4f} h")
    for method in sorted(summary.hours_by_method):
        print(f"  method {method}: {summary.hours_by_method[method]:.4f} h")
    return 0


def _cmd_sat_demo(args) -> int:
    config = NetworkConfig(input_dim=12, hidden_dims=(24,) * 6 + (16,),
                           bottleneck_dim=8, dropout_rate=0.1,
                           n_triphone_targets=8, n_monophone_targets=4)
    rng = np.random.default_rng(args.seed)
    gains = {
        "spkA": np.ones(config.input_dim),
        "spkB": rng.uniform(0.4, 1.8, config.input_dim),
    }
    batches = make_synthetic_speakers(config, gains, seed=args.seed)
    _, _, hist_si = train_sat(batches, config, epochs=args.epochs, seed=args.seed,
                              use_lhuc=False)
    _, _, hist_sat = train_sat(batches, config, epochs=args.epochs, seed=args.seed,
                               update_lhuc=True)
    print(f"speaker-independent final loss: {hist_si.epoch_loss[-1]:.6f}")
    print(f"speaker-adaptive   final loss: {hist_sat.epoch_loss[-1]:.6f}")
    return 0 if hist_sat.epoch_loss[-1] <= hist_si.epoch_loss[-1] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechaug",
                                     description="Speech audio augmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vtlp", help="warp the spectral envelope of one file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--alpha", type=float, required=True, dest="factor")
    p.add_argument("--boundary-hz", type=float, default=4800.0)
    p.set_defaults(func=lambda a: _perturb_file(a, "vtlp"))

    p = sub.add_parser("tempo", help="change duration, keep pitch (WSOLA)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--factor", type=float, required=True)
    p.add_argument("--frame-ms", type=float, default=32.0)
    p.add_argument("--tolerance-ms", type=float, default=8.0)
    p.set_defaults(func=lambda a: _perturb_file(a, "tempo"))

    p = sub.add_parser("speed", help="resample in time (duration and pitch change)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--factor", type=float, required=True)
    p.set_defaults(func=lambda a: _perturb_file(a, "speed"))

    p = sub.add_parser("factors", help="speaker factors from CTM alignments")
    p.add_argument("--control", required=True, help="CTM file of control speakers")
    p.add_argument("--dysarthric", required=True, help="CTM file of target speakers")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--silence", default=None,
                   help="comma-separated silence labels (default sil,sp,spn,nsn)")
    p.set_defaults(func=_cmd_factors)

    p = sub.add_parser("plan", help="expand a manifest into augmentation jobs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("run", help="execute a plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--manifest-out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("summarize", help="hours per group and method")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("sat-demo", help="synthetic speaker-adaptive training check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=6)
    p.set_defaults(func=_cmd_sat_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
