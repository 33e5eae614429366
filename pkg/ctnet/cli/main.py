#!/usr/bin/env python3
"""
ctnet command line.

Every subcommand prints a human-readable report on stdout (or the report's
JSON with --json), logs to stderr, and exits 0 on success, 1 when a check
fails and 2 on a usage, config, shape or file error.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel

from ctnet import __version__
from ctnet.analysis.cost import count_cost
from ctnet.analysis.receptive_field import predict_extent, probe_rf
from ctnet.analysis.tables import TABLES, run_table
from ctnet.analysis.verification import SUITES, run_suite
from ctnet.config import config
from ctnet.core.autograd import TrainConfig
from ctnet.core.tensor.io import load_tensor
from ctnet.error_handling import CheckFailed, ConfigInvalid, CTNetError, exit_code_for
from ctnet.net.config import (
    BlockTemplate,
    Connection,
    NetSpec,
    Preset,
    Variant,
    load_net_config,
)
from ctnet.net.network import build_ct_block
from ctnet.net.presets import as_preset
from ctnet.train.synthetic import TASKS, SyntheticTask
from ctnet.train.trainer import train

logger = logging.getLogger(__name__)

EPILOG = """
Examples:
  ctnet analyze --config configs/tsn_r50.cfg --frames 8 --res 256
  ctnet analyze --table 3e
  ctnet verify equivalence --trials 100
  ctnet probe-rf --k 2 --kernel 3 --expect 5,5,5
  ctnet train-toy --task direction4 --preset ctnet --epochs 20 --out metrics.csv

Exit codes:
  0  success
  1  a check failed (table tolerance, verify case, --expect, divergence)
  2  usage, config, shape or file error

Environment variables:
  CTNET_SEED                          # Default --seed (default: 42)
  CTNET_LOG_LEVEL                     # Default --log-level (default: INFO)
  CTNET_DEBUG                         # NaN/Inf assertions after every op
  CTNET_DTYPE                         # Storage dtype of saved tensors
  CTNET_OUTPUT_DIR                    # Base directory for relative --out paths
"""


def _triple(value: str) -> List[int]:
    try:
        parts = [int(v) for v in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected t,h,w integers, got {value!r}")
    if len(parts) != 3 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"expected three positive integers, got {value!r}")
    return parts


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Architecture config file ([net] / [block] sections)")
    parser.add_argument(
        "--seed",
        type=int,
        default=config.seed,
        help=f"Seed of the single random generator per command (default: {config.seed})"
    )
    parser.add_argument("--out", help="Write the report to this path")
    parser.add_argument("--json", action="store_true", help="Print the report as JSON instead of text")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=config.log_level,
        help=f"Logging level (default: {config.log_level})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctnet",
        description="ctnet - channel-tensorized video convolutions: cost model, checks and toy training",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"ctnet {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="Count MACs and parameters of a network")
    _add_shared(analyze)
    analyze.add_argument("--frames", type=int, help="Input frames (default: from config, 8)")
    analyze.add_argument("--res", type=int, help="Input resolution (default: from config, 256)")
    analyze.add_argument("--params", action="store_true", help="Print the per-layer MAC and parameter breakdown")
    analyze.add_argument("--true-flops", action="store_true", help="Report 2 x MACs instead of MACs")
    analyze.add_argument(
        "--table",
        choices=sorted(TABLES),
        help="Run an ablation cost sweep and compare with the published numbers"
    )

    verify = commands.add_parser("verify", help="Run a randomized property suite")
    _add_shared(verify)
    verify.add_argument("suite", choices=SUITES, help="Property suite to run")
    verify.add_argument("--trials", type=int, default=10, help="Number of random cases (default: 10)")
    verify.add_argument("--input", help="CTN1 tensor file added as an extra equivalence case")

    probe = commands.add_parser("probe-rf", help="Measure the interact field of one CT-Module")
    _add_shared(probe)
    probe.add_argument("--k", type=int, help="Number of channel sub-dimensions (default: from config, 2)")
    probe.add_argument("--kernel", default="3", help="Kernel token per sub-op: 3, 5/1 or 3x3x3 (default: 3)")
    probe.add_argument(
        "--connection",
        choices=[c.value for c in Connection],
        help="Spatial/temporal wiring inside each sub-op (default: parallel)"
    )
    probe.add_argument("--channels", type=int, help="Module width C (default: 2^max(K,3))")
    probe.add_argument("--dims", type=_triple, help="Probe cube t,h,w (default: 9,9,9 or larger)")
    probe.add_argument("--input", help="CTN1 tensor file whose shape sets channels and probe dims")
    probe.add_argument("--expect", type=_triple, help="Expected extents t,h,w; a mismatch exits 1")

    toy = commands.add_parser("train-toy", help="Train a toy network on a synthetic video task")
    _add_shared(toy)
    toy.add_argument("--task", choices=list(TASKS), default="direction4", help="Synthetic task (default: direction4)")
    toy.add_argument(
        "--preset",
        choices=[p.value for p in Preset],
        default=Preset.CTNET.value,
        help="Block preset of the toy network (default: ctnet)"
    )
    toy.add_argument("--epochs", type=int, default=TrainConfig.epochs, help=f"Epochs (default: {TrainConfig.epochs})")
    toy.add_argument("--lr", type=float, default=TrainConfig.lr, help=f"Base learning rate (default: {TrainConfig.lr})")
    toy.add_argument(
        "--batch-size",
        type=int,
        default=TrainConfig.batch_size,
        help=f"Mini-batch size (default: {TrainConfig.batch_size})"
    )
    toy.add_argument("--freeze-bn", action="store_true", help="Keep BN in eval mode while training")
    toy.add_argument("--save-weights", help="Directory for the final weights (CTN1 files + weights.json)")
    return parser


def _emit(report: BaseModel, text: str, args: argparse.Namespace) -> None:
    payload = report.model_dump_json(indent=2)
    print(payload if args.json else text)
    if args.out:
        path = Path(config.resolve_output(args.out))
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(payload)
        logger.info(f"📊 Report written to {path}")


def _load_spec(args: argparse.Namespace) -> NetSpec:
    return load_net_config(args.config) if args.config else NetSpec.r50()


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.table:
        report = run_table(args.table, args.frames or 8, args.res or 256, args.true_flops)
        _emit(report, report.render(), args)
        if not report.passed:
            raise CheckFailed(f"Table {args.table} has rows outside tolerance", {"table": args.table})
        logger.info(f"✅ Table {args.table} within tolerance")
        return 0

    spec = _load_spec(args)
    report = count_cost(spec, args.frames, args.res, args.true_flops)
    _emit(report, report.render(per_layer=args.params), args)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    tensor = load_tensor(args.input) if args.input else None
    logger.info(f"🚀 verify {args.suite}: seed={args.seed} trials={args.trials}")
    report = run_suite(args.suite, args.seed, args.trials, input_tensor=tensor)
    _emit(report, report.render(), args)
    if not report.passed:
        raise CheckFailed(
            f"{len(report.failures)} of {len(report.cases)} {args.suite} case(s) failed",
            {"suite": args.suite, "seeds": [c.seed for c in report.failures]},
        )
    logger.info(f"✅ {len(report.cases)} case(s) passed")
    return 0


def cmd_probe_rf(args: argparse.Namespace) -> int:
    template = load_net_config(args.config).block if args.config else BlockTemplate()
    k = args.k if args.k is not None else template.k
    if k < 1:
        raise ConfigInvalid(f"--k must be >= 1, got {k}")
    changes = {"preset": Preset.CTNET, "k": k, "kernels": (args.kernel,) * k}
    if k != template.k:
        changes.update(factorization="balanced", sizes=None)
    if args.connection:
        changes["connection"] = Connection(args.connection)
    template = replace(template, **changes)

    channels = args.channels or 2 ** max(k, 3)
    dims = args.dims
    if args.input:
        shape = load_tensor(args.input).shape
        channels, dims = shape[1], list(shape[2:])
    cfg = template.resolve(channels, Variant.SIMPLE)
    if dims is None:
        dims = [max(9, p + 2) for p in predict_extent(cfg)]

    report = probe_rf(build_ct_block(cfg), dims, args.expect)
    _emit(report, report.render(), args)
    if not report.passed:
        target = "--expect" if report.expected not in (None, report.extents) else "the prediction"
        raise CheckFailed(
            f"Interact field {report.extents} does not match {target}",
            {"measured": report.extents, "predicted": report.predicted, "expected": report.expected},
        )
    return 0


def cmd_train_toy(args: argparse.Namespace) -> int:
    task = SyntheticTask(name=args.task)
    preset = as_preset(args.preset)
    if args.config:
        spec = load_net_config(args.config).with_block(preset=preset)
    else:
        spec = NetSpec.toy(preset, classes=task.classes)
    cfg = TrainConfig(
        epochs=args.epochs,
        warmup_epochs=min(TrainConfig.warmup_epochs, max(args.epochs - 1, 0)),
        lr=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        freeze_bn=args.freeze_bn,
    )
    out_csv = config.resolve_output(args.out) if args.out else None
    report = train(spec, cfg, task, out_csv, args.save_weights, dtype=config.dtype)
    text = report.to_csv() + f"final val_acc: {report.final_val_acc:.4f}"
    print(report.model_dump_json(indent=2) if args.json else text)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "probe-rf": cmd_probe_rf,
    "train-toy": cmd_train_toy,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the ctnet CLI."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    config.seed = args.seed
    config.log_level = args.log_level
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logging.getLogger().setLevel(getattr(logging, args.log_level))

    try:
        return COMMANDS[args.command](args)
    except CTNetError as e:
        logger.error(f"❌ {e.code}: {e.message}")
        print(f"error: {e.code}: {e.message}", file=sys.stderr)
        return exit_code_for(e)
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
