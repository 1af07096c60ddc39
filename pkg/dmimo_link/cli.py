"""
Command-line front end.

    python main.py mse-sweep --config runs/fig5.env --out results/mse.csv
    python main.py design-training --out training.txt
"""
import argparse
import asyncio
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from . import descriptions
from .config import configure_logging, get_runner, load_config
from .errors import DmimoError
from .experiments.results import RunResult
from .experiments.sweeps import (
    best_threshold,
    run_ber_sweep,
    run_block_protocol,
    run_design_training,
    run_interference_sweep,
    run_mse_sweep,
    search_threshold,
)
from .physics.equalization import DetectorKind
from .utils import format_training_sequences, save_training_sequences

logger = logging.getLogger(__name__)

COMMANDS = {
    "mse-sweep": descriptions.MSE_SWEEP_DESC,
    "ber-sweep": descriptions.BER_SWEEP_DESC,
    "block-protocol": descriptions.BLOCK_PROTOCOL_DESC,
    "threshold-search": descriptions.THRESHOLD_SEARCH_DESC,
    "interference-sweep": descriptions.INTERFERENCE_SWEEP_DESC,
    "design-training": descriptions.DESIGN_TRAINING_DESC,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmimo",
        description=descriptions.PROGRAM_DESC,
        epilog=descriptions.COLUMNS_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in COMMANDS.items():
        cmd = sub.add_parser(name, help=desc, description=desc)
        cmd.add_argument("--config", help=descriptions.CONFIG_HELP)
        cmd.add_argument("--seed", type=int, help=descriptions.SEED_HELP)
        cmd.add_argument("--out", help=descriptions.OUT_HELP)
        cmd.add_argument("--trials", type=int, help=descriptions.TRIALS_HELP)
        cmd.add_argument("--detector", choices=[k.value for k in DetectorKind], help=descriptions.DETECTOR_HELP)
        cmd.add_argument("--workers", type=int, help=descriptions.WORKERS_HELP)
    return parser


def _emit(result: RunResult, out: Optional[str]) -> None:
    text = result.to_csv(out)
    if out is None:
        sys.stdout.write(text)


async def _run_async(command: str, cfg) -> RunResult:
    runner = get_runner(cfg.workers)
    try:
        if command == "mse-sweep":
            return await run_mse_sweep(cfg, runner)
        if command == "ber-sweep":
            return await run_ber_sweep(cfg, runner)
        if command == "block-protocol":
            return await run_block_protocol(cfg, runner)
        result = await search_threshold(cfg, runner=runner)
        logger.info("Threshold with minimum BER: %.4f", best_threshold(result))
        return result
    finally:
        runner.close()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        cfg = load_config(args.config, seed=args.seed, workers=args.workers)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials, trial_cap=max(cfg.trial_cap, args.trials))
        if args.detector is not None:
            cfg = replace(cfg, detectors=(DetectorKind(args.detector),))

        if args.command == "design-training":
            bits = run_design_training(cfg).sequences.bits
            if args.out:
                save_training_sequences(args.out, bits)
            else:
                sys.stdout.write(format_training_sequences(bits))
            return 0
        if args.command == "interference-sweep":
            _emit(run_interference_sweep(cfg), args.out)
            return 0
        _emit(asyncio.run(_run_async(args.command, cfg)), args.out)
        return 0
    except DmimoError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return 2


__all__ = ["build_parser", "main"]
