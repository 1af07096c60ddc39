"""
Picklable per-trial workers.

Every worker takes a frozen task (everything shared by the trials of one
sweep point) and a trial index, builds its own random stream from
(seed, point, trial), and returns a TrialOutcome. Estimation and equalization
failures are returned as failure records instead of being raised.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import DomainError, EqualizerError, EstimabilityError
from ..physics.channel import CirTaps, DiffusionParams, OffsetSchedule, build_simulation_cir, sample_block
from ..physics.equalization import DetectorConfig, Receiver
from ..physics.estimation import (
    MlOptions,
    TrainingSet,
    ls_estimate,
    ml_estimate,
    training_for_length,
)
from ..physics.geometry import MobilityParams, Topology, brownian_step
from ..physics.mimo_model import SymbolBlock, causal_conv_matrix, mean_output, random_block
from ..utils import trial_rng

logger = logging.getLogger(__name__)


@dataclass
class TrialOutcome:
    trial: int
    ok: bool = True
    error_type: Optional[str] = None
    error: Optional[str] = None
    mse_ml: float = float("nan")
    mse_ls: float = float("nan")
    bit_errors: Dict[str, np.ndarray] = field(default_factory=dict)
    payload_bits: int = 0

    @classmethod
    def failure(cls, trial: int, exc: Exception) -> "TrialOutcome":
        return cls(trial, ok=False, error_type=type(exc).__name__, error=str(exc))


@dataclass(frozen=True)
class MseTask:
    """Training observations for the estimator comparison."""
    seed: int
    point: int
    model: CirTaps
    training: TrainingSet
    ml_options: MlOptions
    sampling: str = "poisson"


def mse_trial(task: MseTask, trial: int) -> TrialOutcome:
    """Draw Y ~ Poisson(C̄·S) and score both estimators against C̄."""
    rng = trial_rng(task.seed, task.point, trial)
    if task.sampling == "mean":
        y = mean_output(task.model, task.training.conv)
    else:
        y = sample_block(task.model, task.training.matrix, rng)
    try:
        ls = ls_estimate(y, task.training, truth=task.model)
        ml = ml_estimate(y, task.training, task.ml_options, truth=task.model)
    except (EstimabilityError, DomainError) as exc:
        return TrialOutcome.failure(trial, exc)
    return TrialOutcome(trial, mse_ml=ml.mse, mse_ls=ls.mse)


@dataclass(frozen=True)
class BlockTask:
    """
    One block-type transmission setting.

    Attributes:
        topology: positions at the start of every block
        schedule: release offsets
        params: channel constants
        mobility: Brownian transceiver motion
        model: L-tap channel at the nominal geometry (the known-CSI channel)
        ex_noise: external noise mean, fixed by the nominal geometry
        base_training: K1-symbol sequences tiled into the training prefix
        k_train: training symbols per transmitter (0 = known CSI)
        n_symbols: symbols per transmitter per block
        detectors: (label, config) pairs decoded on every block
        thresholds: extra comparator levels decoded with the first linear
            detector (threshold search); empty otherwise
        estimated_csi: decode with the estimate instead of the model
    """
    seed: int
    point: int
    topology: Topology
    schedule: OffsetSchedule
    params: DiffusionParams
    mobility: MobilityParams
    model: CirTaps
    ex_noise: np.ndarray
    base_training: Optional[TrainingSet]
    k_train: int
    n_symbols: int
    detectors: Tuple[Tuple[str, DetectorConfig], ...]
    estimator: str = "ml"
    ml_options: MlOptions = field(default_factory=MlOptions)
    estimated_csi: bool = False
    sampling: str = "poisson"
    thresholds: Tuple[float, ...] = ()

    @property
    def segment(self) -> int:
        """Symbols per coherence interval T_c."""
        return max(1, int(round(self.mobility.t_c / self.params.t_int)))


def simulate_block(task: BlockTask, rng: np.random.Generator) -> Tuple[SymbolBlock, np.ndarray]:
    """Transmit training + random payload and return the symbols and the M×K counts.

    The transceivers start from task.topology and take one Brownian step every
    T_c; each coherence interval is observed through the L'-tap channel of the
    current geometry.
    """
    m = task.topology.m
    parts = []
    if task.k_train > 0:
        parts.append(training_for_length(task.base_training, task.k_train).sequences.bits)
    parts.append(random_block(m, task.n_symbols - task.k_train, task.params.p_one, rng).bits)
    block = SymbolBlock(np.hstack(parts))

    if task.sampling == "mean":
        conv = causal_conv_matrix(block, task.model.l_taps)
        return block, mean_output(task.model, conv)

    conv = causal_conv_matrix(block, task.params.l_prime)
    if task.mobility.is_static:
        channel = build_simulation_cir(task.topology, task.schedule, task.params, task.ex_noise)
        return block, sample_block(channel, conv.columns, rng)

    counts = np.empty((m, task.n_symbols))
    topology = task.topology
    step = task.segment
    for start in range(0, task.n_symbols, step):
        if start > 0:
            topology = brownian_step(topology, task.mobility, rng)
        channel = build_simulation_cir(topology, task.schedule, task.params, task.ex_noise)
        stop = min(start + step, task.n_symbols)
        counts[:, start:stop] = sample_block(channel, conv.columns[:, start:stop], rng)
    return block, counts


def estimate_channel(task: BlockTask, block: SymbolBlock, counts: np.ndarray) -> CirTaps:
    """Estimate C̄ from the training prefix, using observations k = L..K."""
    l_taps = task.model.l_taps
    training = TrainingSet.from_bits(block.bits[:, : task.k_train], l_taps)
    y = counts[:, l_taps - 1: task.k_train]
    if task.estimator == "ls":
        return ls_estimate(y, training).c_hat
    return ml_estimate(y, training, task.ml_options).c_hat


def block_trial(task: BlockTask, trial: int) -> TrialOutcome:
    """Simulate one block and count payload bit errors for every detector.

    bit_errors maps each detector label to a length-1 array, or to one entry
    per threshold when task.thresholds is set.
    """
    rng = trial_rng(task.seed, task.point, trial)
    block, counts = simulate_block(task, rng)
    payload = block.bits[:, task.k_train:]
    y_payload = counts[:, task.k_train:]
    tail = block.bits[:, : task.k_train] if task.k_train > 0 else None
    try:
        if task.estimated_csi and task.k_train > 0:
            channel = estimate_channel(task, block, counts)
        else:
            channel = task.model
        errors: Dict[str, np.ndarray] = {}
        for label, config in task.detectors:
            if task.thresholds:
                counts_per_xi = []
                for xi in task.thresholds:
                    receiver = Receiver(channel, DetectorConfig(config.kind, xi, config.p_one, config.ls_limit))
                    decided = receiver.decode(y_payload, tail).bits
                    counts_per_xi.append(int(np.count_nonzero(decided != payload)))
                errors[label] = np.array(counts_per_xi, dtype=np.int64)
            else:
                decided = Receiver(channel, config).decode(y_payload, tail).bits
                errors[label] = np.array([np.count_nonzero(decided != payload)], dtype=np.int64)
    except (EstimabilityError, EqualizerError, DomainError) as exc:
        return TrialOutcome.failure(trial, exc)
    return TrialOutcome(trial, bit_errors=errors, payload_bits=int(payload.size))


__all__ = [
    "TrialOutcome",
    "MseTask",
    "mse_trial",
    "BlockTask",
    "simulate_block",
    "estimate_channel",
    "block_trial",
]
