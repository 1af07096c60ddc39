"""
Harness operations: every sweep the CLI exposes.

Each Monte Carlo sweep walks cfg.sweep_values along cfg.sweep_axis, builds one
frozen task per point and hands (task, trial) pairs to the TrialRunner.
Outcomes are reduced in trial order, so the rows do not depend on the number
of workers.
"""
import functools
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import DEFAULT_H_GRID, REFERENCE_TRAINING_2X2, ExperimentConfig, get_runner
from ..errors import ConfigError
from ..physics.channel import CirTaps, build_cir, external_noise, interference_metric
from ..physics.equalization import DetectorKind, check_causality
from ..physics.estimation import (
    MlOptions,
    TrainingSet,
    crb,
    crb_per_receiver,
    design_training,
    training_for_length,
)
from ..physics.geometry import initial_positions
from ..physics.mimo_model import OffsetMode, assign_offsets
from ..utils import interval_is_tight, load_training_sequences, to_db, wilson_interval
from .results import RunResult, SweepPoint
from .runner import TrialRunner
from .trials import BlockTask, MseTask, TrialOutcome, block_trial, mse_trial

logger = logging.getLogger(__name__)

LINEAR_DETECTORS = (DetectorKind.ZF_DFE, DetectorKind.MMSE_DFE)


def nominal_channel(cfg: ExperimentConfig, mode: Optional[OffsetMode] = None) -> CirTaps:
    """L-tap model channel at the nominal geometry."""
    schedule = assign_offsets(cfg.offset_mode if mode is None else mode, cfg.diffusion.t_int, cfg.m)
    return build_cir(initial_positions(cfg.d, cfg.h, cfg.m), schedule, cfg.diffusion)


@functools.lru_cache(maxsize=32)
def _designed(m: int, k1: int, l_taps: int, d: float, h: float, diffusion, mode: OffsetMode,
              beam_width: int) -> np.ndarray:
    schedule = assign_offsets(mode, diffusion.t_int, m)
    prior = build_cir(initial_positions(d, h, m), schedule, diffusion)
    incumbents = [np.array(REFERENCE_TRAINING_2X2)] if (m, k1) == (2, len(REFERENCE_TRAINING_2X2[0])) else None
    return design_training(k1, m, l_taps, prior, beam_width=beam_width, incumbents=incumbents).sequences.bits


def base_training(cfg: ExperimentConfig) -> TrainingSet:
    """K1-symbol training: loaded from TRAINING_FILE, else designed on the nominal channel."""
    if cfg.training_file:
        bits = load_training_sequences(cfg.training_file)
        if bits.shape[0] != cfg.m:
            raise ConfigError(f"{cfg.training_file} holds {bits.shape[0]} sequences, M={cfg.m}")
        return TrainingSet.from_bits(bits, cfg.diffusion.l_taps)
    bits = _designed(cfg.m, cfg.k1, cfg.diffusion.l_taps, cfg.d, cfg.h, cfg.diffusion,
                     OffsetMode(cfg.offset_mode), cfg.beam_width)
    return TrainingSet.from_bits(bits, cfg.diffusion.l_taps)


def run_design_training(cfg: ExperimentConfig) -> TrainingSet:
    training = base_training(cfg)
    logger.info("Training for M=%d, K1=%d: pooled CRB %.6e", cfg.m, training.k, crb(nominal_channel(cfg), training))
    return training


def _ml_options(cfg: ExperimentConfig) -> MlOptions:
    return MlOptions(tol=cfg.ml_tol, max_iter=cfg.ml_max_iter)


async def _collect(runner: TrialRunner, plugin: Any, sweep: str, index: int,
                   fn: Callable, task: Any, cfg: ExperimentConfig,
                   done: Optional[Callable[[List[TrialOutcome]], bool]] = None) -> List[TrialOutcome]:
    """Run batches of cfg.trials until `done` says stop (one batch when None) or trial_cap."""
    outcomes: List[TrialOutcome] = []
    while True:
        start = len(outcomes)
        stop = min(start + cfg.trials, cfg.trial_cap)
        batch = await runner.map(fn, task, range(start, stop))
        for outcome in batch:
            if not outcome.ok and plugin is not None:
                await plugin.on_trial_error_callback(sweep, index, outcome.trial,
                                                     error_type=outcome.error_type, error=outcome.error)
        outcomes.extend(batch)
        if done is None or len(outcomes) >= cfg.trial_cap or done(outcomes):
            return outcomes


async def _sweep(name: str, cfg: ExperimentConfig, axis: str, points: Sequence[Tuple[int, Any, Any]],
                 evaluate: Callable, runner: Optional[TrialRunner], plugin: Any) -> RunResult:
    runner = runner or get_runner(cfg.workers)
    if plugin is None:
        plugin = getattr(runner, "plugin", None)
    result = RunResult(name, axis)
    if plugin is not None:
        await plugin.before_sweep_callback(name, axis, len(points), cfg.seed)
    try:
        for index, value, point_cfg in points:
            if plugin is not None:
                await plugin.before_point_callback(name, index, axis, value)
            point = await evaluate(index, value, point_cfg, runner, plugin)
            if plugin is not None:
                point.wall_time = await plugin.after_point_callback(
                    name, index, point.metrics, trials=point.trials, failures=point.failures)
            result.add(point)
    except Exception as exc:
        if plugin is not None:
            await plugin.on_error_callback(name, exc)
        raise
    if plugin is not None:
        await plugin.after_sweep_callback(name, result)
    return result


def _mean_db(values: List[float]) -> float:
    return to_db(float(np.mean(values))) if values else float("nan")


async def run_mse_sweep(cfg: ExperimentConfig, runner: Optional[TrialRunner] = None,
                        plugin: Any = None) -> RunResult:
    """MSE of ML and LS channel estimates against both CRBs, per sweep value (usually K_tot)."""
    base = base_training(cfg)

    async def evaluate(index, value, point_cfg, runner, plugin):
        if point_cfg.k_tot % point_cfg.m:
            raise ConfigError(f"K_TOT={point_cfg.k_tot} must be a multiple of M={point_cfg.m}")
        if point_cfg.k_train < point_cfg.diffusion.l_taps:
            raise ConfigError(f"K_TOT={point_cfg.k_tot} gives fewer than L training symbols per transmitter")
        model = nominal_channel(point_cfg)
        training = training_for_length(base, point_cfg.k_train)
        task = MseTask(point_cfg.seed, index, model, training, _ml_options(point_cfg), point_cfg.sampling)
        outcomes = await _collect(runner, plugin, "mse-sweep", index, mse_trial, task, point_cfg)
        ok = [o for o in outcomes if o.ok]
        metrics = {
            "mse_ml_db": _mean_db([o.mse_ml for o in ok]),
            "mse_ls_db": _mean_db([o.mse_ls for o in ok]),
            "crb_db": to_db(crb_per_receiver(model, training)),
            "crb_pooled_db": to_db(crb(model, training)),
        }
        return SweepPoint(value, metrics, len(outcomes), len(outcomes) - len(ok))

    return await _sweep("mse-sweep", cfg, cfg.sweep_axis, cfg.points(), evaluate, runner, plugin)


def _detector_labels(cfg: ExperimentConfig, kinds: Sequence[DetectorKind]):
    return tuple((DetectorKind(kind).value, cfg.detector_config(kind)) for kind in kinds)


def block_task(cfg: ExperimentConfig, index: int, estimated_csi: bool,
               kinds: Optional[Sequence[DetectorKind]] = None,
               thresholds: Sequence[float] = ()) -> BlockTask:
    """Frozen per-point task for block simulations; validates the block layout."""
    check_causality(cfg.diffusion.t_int, cfg.d, cfg.diffusion.d_coef)
    if cfg.block_length % cfg.m or cfg.k_tot % cfg.m:
        raise ConfigError(f"BLOCK_LENGTH={cfg.block_length} and K_TOT={cfg.k_tot} must be multiples of M={cfg.m}")
    if cfg.k_tot >= cfg.block_length:
        raise ConfigError(f"K_TOT={cfg.k_tot} must be smaller than BLOCK_LENGTH={cfg.block_length}")
    if estimated_csi and 0 < cfg.k_train < cfg.diffusion.l_taps:
        raise ConfigError(f"K_TOT={cfg.k_tot} gives fewer than L training symbols per transmitter")
    schedule = assign_offsets(cfg.offset_mode, cfg.diffusion.t_int, cfg.m)
    topology = initial_positions(cfg.d, cfg.h, cfg.m)
    return BlockTask(
        seed=cfg.seed,
        point=index,
        topology=topology,
        schedule=schedule,
        params=cfg.diffusion,
        mobility=cfg.mobility,
        model=build_cir(topology, schedule, cfg.diffusion),
        ex_noise=external_noise(topology, schedule, cfg.diffusion),
        base_training=base_training(cfg) if cfg.k_tot > 0 else None,
        k_train=cfg.k_train,
        n_symbols=cfg.symbols_per_block,
        detectors=_detector_labels(cfg, kinds or cfg.detectors),
        estimator=cfg.estimator,
        ml_options=_ml_options(cfg),
        estimated_csi=estimated_csi,
        sampling=cfg.sampling,
        thresholds=tuple(thresholds),
    )


def _totals(outcomes: List[TrialOutcome]) -> Tuple[Dict[str, np.ndarray], Dict[str, int], int, int]:
    """Summed bit errors, packet errors, payload bits and successful trials."""
    errors: Dict[str, np.ndarray] = {}
    packets: Dict[str, int] = {}
    bits = 0
    ok = 0
    for outcome in outcomes:
        if not outcome.ok:
            continue
        ok += 1
        bits += outcome.payload_bits
        for label, count in outcome.bit_errors.items():
            errors[label] = errors.get(label, 0) + count
            packets[label] = packets.get(label, 0) + int(count[0] > 0)
    return errors, packets, bits, ok


def _ber_done(cfg: ExperimentConfig):
    if cfg.sampling == "mean":
        return None

    def done(outcomes: List[TrialOutcome]) -> bool:
        errors, _, bits, _ = _totals(outcomes)
        return bool(errors) and all(interval_is_tight(int(e[0]), bits) for e in errors.values())

    return done


def _ber_metrics(outcomes: List[TrialOutcome], cfg: ExperimentConfig, packets_too: bool) -> Dict[str, float]:
    errors, packets, bits, ok = _totals(outcomes)
    total = len(outcomes)
    metrics: Dict[str, float] = {}
    for label, _ in _detector_labels(cfg, cfg.detectors):
        count = int(errors.get(label, np.zeros(1))[0])
        low, high = wilson_interval(count, bits)
        metrics[f"ber_{label}"] = count / bits if bits else float("nan")
        metrics[f"ber_{label}_lo"] = low
        metrics[f"ber_{label}_hi"] = high
        if packets_too:
            # Trials that could not estimate or equalize lose their packet
            lost = packets.get(label, 0) + (total - ok)
            p_s = lost / total if total else float("nan")
            metrics[f"per_{label}"] = p_s
            metrics[f"eta_{label}"] = (cfg.block_length - cfg.k_tot) / cfg.block_length * (1.0 - p_s)
    return metrics


async def run_ber_sweep(cfg: ExperimentConfig, runner: Optional[TrialRunner] = None,
                        plugin: Any = None) -> RunResult:
    """BER of every configured detector along the sweep axis with Wilson 95% intervals."""

    async def evaluate(index, value, point_cfg, runner, plugin):
        task = block_task(point_cfg, index, estimated_csi=point_cfg.csi == "estimated")
        outcomes = await _collect(runner, plugin, "ber-sweep", index, block_trial, task, point_cfg,
                                  _ber_done(point_cfg))
        metrics = _ber_metrics(outcomes, point_cfg, packets_too=False)
        failures = sum(1 for o in outcomes if not o.ok)
        return SweepPoint(value, metrics, len(outcomes), failures)

    return await _sweep("ber-sweep", cfg, cfg.sweep_axis, cfg.points(), evaluate, runner, plugin)


async def run_block_protocol(cfg: ExperimentConfig, runner: Optional[TrialRunner] = None,
                             plugin: Any = None) -> RunResult:
    """
    Block-type transmission: training prefix, estimate, decode the payload.

    Every block restarts from the initial positions and the transceivers move
    every T_c through training and payload. A packet fails on any payload bit
    error. K_tot = 0 decodes with the known nominal channel.
    """

    async def evaluate(index, value, point_cfg, runner, plugin):
        task = block_task(point_cfg, index, estimated_csi=point_cfg.k_tot > 0)
        outcomes = await _collect(runner, plugin, "block-protocol", index, block_trial, task, point_cfg,
                                  _ber_done(point_cfg))
        metrics = _ber_metrics(outcomes, point_cfg, packets_too=True)
        failures = sum(1 for o in outcomes if not o.ok)
        return SweepPoint(value, metrics, len(outcomes), failures)

    return await _sweep("block-protocol", cfg, cfg.sweep_axis, cfg.points(), evaluate, runner, plugin)


def _linear_detector(cfg: ExperimentConfig) -> DetectorKind:
    for kind in cfg.detectors:
        if DetectorKind(kind) in LINEAR_DETECTORS:
            return DetectorKind(kind)
    raise ConfigError("threshold search needs a zf or mmse detector in DETECTORS")


async def search_threshold(cfg: ExperimentConfig, grid: Optional[Sequence[float]] = None,
                           runner: Optional[TrialRunner] = None, plugin: Any = None) -> RunResult:
    """BER for every comparator level on the grid, all decoded from the same blocks."""
    grid = tuple(sorted(float(xi) for xi in (grid or cfg.threshold_grid)))
    if any(not 0.0 < xi < 1.0 for xi in grid):
        raise ConfigError("threshold grid values must lie in (0, 1)")
    kind = _linear_detector(cfg)
    label = kind.value
    task = block_task(cfg, 0, estimated_csi=cfg.csi == "estimated", kinds=(kind,), thresholds=grid)
    runner = runner or get_runner(cfg.workers)
    if plugin is None:
        plugin = getattr(runner, "plugin", None)

    if plugin is not None:
        await plugin.before_sweep_callback("threshold-search", "threshold", len(grid), cfg.seed)
        await plugin.before_point_callback("threshold-search", 0, "threshold", list(grid))
    outcomes = await _collect(runner, plugin, "threshold-search", 0, block_trial, task, cfg)
    errors, _, bits, ok = _totals(outcomes)
    counts = errors.get(label, np.zeros(len(grid), dtype=np.int64))
    wall_time = None
    if plugin is not None:
        wall_time = await plugin.after_point_callback("threshold-search", 0, None,
                                                      trials=len(outcomes), failures=len(outcomes) - ok)

    result = RunResult("threshold-search", "threshold")
    for xi, count in zip(grid, counts):
        low, high = wilson_interval(int(count), bits)
        metrics = {
            f"ber_{label}": int(count) / bits if bits else float("nan"),
            f"ber_{label}_lo": low,
            f"ber_{label}_hi": high,
        }
        result.add(SweepPoint(xi, metrics, len(outcomes), len(outcomes) - ok, wall_time))
    if plugin is not None:
        await plugin.after_sweep_callback("threshold-search", result)
    return result


def best_threshold(result: RunResult) -> float:
    """Grid value with the lowest BER; ties go to the smallest value."""
    ber_column = next(name for name in result.to_frame().columns if name.startswith("ber_") and name.count("_") == 1)
    values = np.array(result.column(result.axis), dtype=float)
    bers = np.array(result.column(ber_column), dtype=float)
    order = np.argsort(values, kind="stable")
    return float(values[order][int(np.nanargmin(bers[order]))])


async def run_threshold_search(cfg: ExperimentConfig, grid: Optional[Sequence[float]] = None,
                               runner: Optional[TrialRunner] = None, plugin: Any = None) -> float:
    """BER-minimizing comparator level over the grid."""
    return best_threshold(await search_threshold(cfg, grid, runner, plugin))


def run_interference_sweep(cfg: ExperimentConfig) -> RunResult:
    """Maximum normalized mean interference per (h, offset mode), from the model means only."""
    h_values = cfg.sweep_values if cfg.sweep_axis == "h" else DEFAULT_H_GRID
    result = RunResult("interference-sweep", "h")
    for h in h_values:
        for mode in cfg.offset_modes:
            point_cfg = cfg.at("h", h)
            metric = interference_metric(nominal_channel(point_cfg, OffsetMode(mode)))
            result.add(SweepPoint(float(h), {"mode": int(mode), "metric": metric}, 0, 0))
    logger.info("Interference sweep: %d rows over %d spacings", len(result.points), len(h_values))
    return result


__all__ = [
    "nominal_channel",
    "base_training",
    "run_design_training",
    "block_task",
    "run_mse_sweep",
    "run_ber_sweep",
    "run_block_protocol",
    "search_threshold",
    "best_threshold",
    "run_threshold_search",
    "run_interference_sweep",
]
