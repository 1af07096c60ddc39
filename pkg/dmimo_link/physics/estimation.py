"""
Channel estimation from training observations.

Observations follow the Poisson linear model Y ~ Poisson(C̄·S) where S is the
global training matrix built exactly like the data convolutional matrix. This
module holds the log-likelihood, the Fisher information and Cramér-Rao bounds,
the constrained ML and clipped LS estimators, and the CRB-driven search for
training sequences.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from ..errors import ComplexityError, ConstraintError, DomainError, EstimabilityError, SizeError
from .channel import CirTaps
from .mimo_model import ConvMatrix, SymbolBlock, build_conv_matrix

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
MAX_ENUMERATION_BITS = 24


@dataclass(frozen=True)
class TrainingSet:
    """Per-transmitter training sequences and their convolutional matrix S."""
    sequences: SymbolBlock
    conv: ConvMatrix

    @classmethod
    def from_bits(cls, bits, l_taps: int) -> "TrainingSet":
        block = bits if isinstance(bits, SymbolBlock) else SymbolBlock(bits)
        return cls(block, build_conv_matrix(block, l_taps))

    @property
    def m(self) -> int:
        return self.sequences.m

    @property
    def k(self) -> int:
        return self.sequences.k_total

    @property
    def l_taps(self) -> int:
        return self.conv.l_taps

    @property
    def matrix(self) -> np.ndarray:
        return self.conv.columns


@dataclass(frozen=True)
class EstimateReport:
    """Result of one estimator run.

    Attributes:
        c_hat: estimated channel, all entries >= 0
        mse: squared Frobenius error to the true channel, NaN when unknown
        iterations: fixed-point iterations used (0 for LS)
        converged: False when the iteration cap was hit first
    """
    c_hat: CirTaps
    mse: float = math.nan
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True)
class MlOptions:
    tol: float = 1e-9
    max_iter: int = 10_000
    check_monotone: bool = False
    initial: Optional[np.ndarray] = None


@dataclass(frozen=True)
class TrainingConstraints:
    """Feasibility rules for a single training sequence of length K1.

    Defaults are at most K1/2 ones and at most L+1 consecutive zeros.
    """
    max_ones: Optional[int] = None
    max_zero_run: Optional[int] = None

    def resolve(self, k1: int, l_taps: int) -> tuple:
        max_ones = k1 // 2 if self.max_ones is None else self.max_ones
        max_zero_run = l_taps + 1 if self.max_zero_run is None else self.max_zero_run
        return max_ones, max_zero_run


def _check_shapes(y: np.ndarray, flat: np.ndarray, s: np.ndarray) -> None:
    if flat.shape[1] != s.shape[0]:
        raise SizeError(f"channel has {flat.shape[1]} columns, S has {s.shape[0]} rows")
    if y.shape != (flat.shape[0], s.shape[1]):
        raise SizeError(f"Y must be {flat.shape[0]}x{s.shape[1]}, got {y.shape}")


def _inverse_trace(fisher: np.ndarray) -> float:
    try:
        cond = np.linalg.cond(fisher)
    except np.linalg.LinAlgError as exc:
        raise EstimabilityError(f"Fisher information is not invertible: {exc}") from exc
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise EstimabilityError(f"Fisher information is singular (cond={cond:.3e}); training insufficient")
    return float(np.trace(np.linalg.inv(fisher)))


def _means(c: CirTaps, s: TrainingSet) -> np.ndarray:
    flat = c.flat
    if flat.shape[1] != s.matrix.shape[0]:
        raise SizeError(f"channel has {flat.shape[1]} columns, S has {s.matrix.shape[0]} rows")
    means = flat @ s.matrix
    if np.any(means <= 0):
        raise EstimabilityError("Fisher information needs strictly positive means C̄_i·S[k]")
    return means


def log_likelihood(y: np.ndarray, c: CirTaps, s: TrainingSet) -> float:
    """Poisson log-likelihood Σ_i Σ_k [−μ + y·ln μ − ln y!] with μ = C̄_i·S[k].

    A zero mean paired with a positive count gives −inf.
    """
    y = np.asarray(y, dtype=float)
    flat = c.flat
    _check_shapes(y, flat, s.matrix)
    mean = flat @ s.matrix
    return float(np.sum(-mean + xlogy(y, mean) - gammaln(y + 1.0)))


def fisher_information(c: CirTaps, s: TrainingSet) -> np.ndarray:
    """Pooled (ML+1)×(ML+1) matrix Σ_i Σ_k S[k]S[k]ᵀ / (C̄_i·S[k])."""
    weights = (1.0 / _means(c, s)).sum(axis=0)
    return (s.matrix * weights) @ s.matrix.T


def crb(c: CirTaps, s: TrainingSet) -> float:
    """tr of the inverse pooled Fisher information.

    Raises:
        EstimabilityError: when the Fisher matrix is singular
    """
    return _inverse_trace(fisher_information(c, s))


def crb_per_receiver(c: CirTaps, s: TrainingSet) -> float:
    """Σ_i tr(F_i⁻¹), the bound on ‖Ĉ − C̄‖² when every receiver row is estimated on its own."""
    means = _means(c, s)
    total = 0.0
    for row in means:
        total += _inverse_trace((s.matrix / row) @ s.matrix.T)
    return total


def estimate_mse(c_hat: CirTaps, c_true: CirTaps) -> float:
    """Squared Frobenius distance ‖Ĉ − C̄‖²."""
    a, b = c_hat.flat, c_true.flat
    if a.shape != b.shape:
        raise SizeError(f"channel shapes differ: {a.shape} vs {b.shape}")
    return float(np.sum((a - b) ** 2))


def _unconstrained_ls(y: np.ndarray, s: np.ndarray) -> np.ndarray:
    gram = s @ s.T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise EstimabilityError(f"S·Sᵀ is singular (cond={cond:.3e}); training insufficient")
    return np.linalg.solve(gram, s @ y.T).T


def ls_estimate(y: np.ndarray, s: TrainingSet, truth: Optional[CirTaps] = None) -> EstimateReport:
    """Ĉ = Y·Sᵀ(S·Sᵀ)⁻¹ with negative entries clipped to zero."""
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    if s.matrix.shape[0] != m * s.l_taps + 1:
        raise SizeError(f"S has {s.matrix.shape[0]} rows, expected {m * s.l_taps + 1}")
    if y.shape[1] != s.matrix.shape[1]:
        raise SizeError(f"Y has {y.shape[1]} columns, S has {s.matrix.shape[1]}")
    c_hat = CirTaps.from_flat(np.maximum(_unconstrained_ls(y, s.matrix), 0.0), s.l_taps)
    mse = estimate_mse(c_hat, truth) if truth is not None else math.nan
    return EstimateReport(c_hat, mse, 0, True)


def _row_loglik(y: np.ndarray, mean: np.ndarray) -> float:
    return float(np.sum(-mean + xlogy(y, mean)))


def ml_estimate(y: np.ndarray, s: TrainingSet, opts: Optional[MlOptions] = None,
                truth: Optional[CirTaps] = None) -> EstimateReport:
    """Non-negative Poisson ML estimate by multiplicative fixed-point iteration.

    Each step applies C ← C ⊙ [(Y ⊘ C·S)·Sᵀ] ⊘ [1·Sᵀ]; receiver rows are
    independent problems solved together in matrix form. Iterates stay
    non-negative and the likelihood never decreases.

    Args:
        y: M×n observation block
        s: training set whose matrix has n columns
        opts: tolerance, iteration cap, monotonicity assertion and an
            optional M×(ML+1) starting point
        truth: true channel, used only to fill in the report's mse

    Returns:
        EstimateReport; converged is False when max_iter was reached
    """
    opts = opts or MlOptions()
    y = np.asarray(y, dtype=float)
    s_mat = s.matrix
    m = y.shape[0]
    if s_mat.shape[0] != m * s.l_taps + 1 or y.shape[1] != s_mat.shape[1]:
        raise SizeError(f"Y {y.shape} does not match S {s_mat.shape}")
    if np.any(y < 0):
        raise DomainError("counts must be non-negative")

    col_sums = s_mat.sum(axis=1)
    if np.any(col_sums <= 0):
        raise EstimabilityError("a regressor never switches on in the training")

    if opts.initial is not None:
        current = np.array(opts.initial, dtype=float)
    else:
        current = np.maximum(_unconstrained_ls(y, s_mat), 0.0)
    floor = max(float(y.mean()), 1.0) * 1e-3
    current = np.where(current > 0, current, floor)

    previous_ll = _row_loglik(y, current @ s_mat) if opts.check_monotone else None
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        # 0/0 -> 0: a receiver that counted nothing settles at the all-zero row
        mean = current @ s_mat
        ratio = np.divide(y, mean, out=np.zeros_like(y), where=mean > 0)
        updated = current * (ratio @ s_mat.T) / col_sums
        change = np.linalg.norm(updated - current) / max(np.linalg.norm(current), np.finfo(float).tiny)
        current = updated
        if opts.check_monotone:
            ll = _row_loglik(y, current @ s_mat)
            if ll < previous_ll - 1e-9 * abs(previous_ll):
                raise RuntimeError(f"log-likelihood decreased at iteration {iterations}: {previous_ll} -> {ll}")
            previous_ll = ll
        if change < opts.tol:
            converged = True
            break

    if not converged:
        logger.debug("ML iteration hit max_iter=%d without reaching tol=%g", opts.max_iter, opts.tol)
    c_hat = CirTaps.from_flat(np.maximum(current, 0.0), s.l_taps)
    mse = estimate_mse(c_hat, truth) if truth is not None else math.nan
    return EstimateReport(c_hat, mse, iterations, converged)


def concat_training(base: TrainingSet, reps: int) -> TrainingSet:
    """Repeat every transmitter's sequence `reps` times."""
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    return TrainingSet.from_bits(np.tile(base.sequences.bits, (1, reps)), base.l_taps)


def training_for_length(base: TrainingSet, k: int) -> TrainingSet:
    """Concatenate the base sequences and truncate to k symbols per transmitter."""
    if k < base.l_taps:
        raise SizeError(f"training length {k} shorter than L={base.l_taps}")
    reps = -(-k // base.k)
    return TrainingSet.from_bits(np.tile(base.sequences.bits, (1, reps))[:, :k], base.l_taps)


def enumerate_sequences(k1: int, constraints: TrainingConstraints, l_taps: int) -> np.ndarray:
    """All feasible binary sequences of length k1 in lexicographic order."""
    if k1 > MAX_ENUMERATION_BITS:
        raise ComplexityError(f"k1={k1} too large for exhaustive enumeration (limit {MAX_ENUMERATION_BITS})")
    if k1 < l_taps:
        raise SizeError(f"k1={k1} shorter than L={l_taps}")
    max_ones, max_zero_run = constraints.resolve(k1, l_taps)
    codes = np.arange(2 ** k1, dtype=np.int64)
    shifts = np.arange(k1 - 1, -1, -1, dtype=np.int64)
    bits = ((codes[:, None] >> shifts) & 1).astype(np.int8)

    run = np.zeros(len(codes), dtype=np.int64)
    longest = np.zeros(len(codes), dtype=np.int64)
    for column in bits.T:
        run = np.where(column == 0, run + 1, 0)
        np.maximum(longest, run, out=longest)

    feasible = (bits.sum(axis=1) <= max_ones) & (longest <= max_zero_run)
    return bits[feasible]


def _lag_stack(sequences: np.ndarray, l_taps: int) -> np.ndarray:
    """(N, L, K1-L+1) stack of delayed copies, lag 0 first."""
    k1 = sequences.shape[1]
    return np.stack([sequences[:, l_taps - 1 - lag: k1 - lag] for lag in range(l_taps)], axis=1).astype(float)


def _batched_inverse_trace(fisher: np.ndarray) -> np.ndarray:
    result = np.full(fisher.shape[0], np.inf)
    cond = np.linalg.cond(fisher)
    ok = np.isfinite(cond) & (cond < CONDITION_LIMIT)
    if np.any(ok):
        result[ok] = np.trace(np.linalg.inv(fisher[ok]), axis1=1, axis2=2)
    return result


def _single_link_crb(lags: np.ndarray, taps: np.ndarray, noise: float) -> np.ndarray:
    n = lags.shape[0]
    regressors = np.concatenate([lags, np.ones((n, 1, lags.shape[2]))], axis=1)
    params = np.append(taps, noise)
    means = np.einsum("p,Npn->Nn", params, regressors)
    fisher = np.einsum("Npn,Nqn,Nn->Npq", regressors, regressors, 1.0 / means)
    return _batched_inverse_trace(fisher)


def _tuple_crb(lag_stacks: Sequence[np.ndarray], flat: np.ndarray, choice: np.ndarray) -> np.ndarray:
    """Pooled CRB for a batch of index tuples (T, M)."""
    m = len(lag_stacks)
    l_taps = lag_stacks[0].shape[1]
    n = lag_stacks[0].shape[2]
    t = choice.shape[0]
    s = np.empty((t, m * l_taps + 1, n))
    for j, stack in enumerate(lag_stacks):
        s[:, j: m * l_taps: m, :] = stack[choice[:, j]]
    s[:, -1, :] = 1.0
    means = np.einsum("ip,Tpn->Tin", flat, s)
    weights = (1.0 / means).sum(axis=1)
    fisher = np.einsum("Tpn,Tqn,Tn->Tpq", s, s, weights)
    return _batched_inverse_trace(fisher)


def design_training(k1: int, m: int, l_taps: int, c_prior: CirTaps,
                    constraints: Optional[TrainingConstraints] = None,
                    beam_width: int = 64, max_tuples: int = 65_536,
                    incumbents: Optional[Sequence[np.ndarray]] = None,
                    chunk: int = 4096) -> TrainingSet:
    """Pick the M-tuple of feasible length-k1 sequences with the smallest pooled CRB.

    Every feasible sequence is scored on its own link with the prior CIR. The
    best `beam_width` per transmitter (fewer when the cross product would
    exceed `max_tuples`) are combined, and every tuple is scored with the full
    CRB. Incumbent tuples always join the search. Ties go to the
    lexicographically smallest tuple.
    """
    constraints = constraints or TrainingConstraints()
    if c_prior.m != m or c_prior.l_taps != l_taps:
        raise SizeError(f"prior CIR is {c_prior.m}x{c_prior.l_taps}, expected {m}x{l_taps}")
    if beam_width < 1 or max_tuples < 1:
        raise DomainError("beam_width and max_tuples must be >= 1")

    candidates = enumerate_sequences(k1, constraints, l_taps)
    if len(candidates) == 0:
        raise ConstraintError(f"no sequence of length {k1} satisfies {constraints.resolve(k1, l_taps)}")

    incumbent_rows = []
    for tup in incumbents or ():
        tup = np.asarray(tup, dtype=np.int8)
        if tup.shape != (m, k1):
            raise SizeError(f"incumbent must be {m}x{k1}, got {tup.shape}")
        incumbent_rows.append(tup)

    width = max(1, min(beam_width, int(math.floor(max_tuples ** (1.0 / m) + 1e-9))))
    lags = _lag_stack(candidates, l_taps)
    beams = []
    for j in range(m):
        score = _single_link_crb(lags, c_prior.taps[:, j, j], float(c_prior.noise[j]))
        order = np.argsort(score, kind="stable")
        order = order[np.isfinite(score[order])][:width]
        pool = [candidates[i] for i in order]
        known = {row.tobytes() for row in pool}
        for tup in incumbent_rows:
            if tup[j].tobytes() not in known:
                pool.append(tup[j])
                known.add(tup[j].tobytes())
        if not pool:
            raise ConstraintError(f"no estimable single-link training for transmitter {j}")
        pool.sort(key=lambda row: row.tolist())
        beams.append(np.array(pool))

    lag_stacks = [_lag_stack(beam, l_taps) for beam in beams]
    flat = c_prior.flat
    best_score = math.inf
    best_choice = None
    indices = itertools.product(*(range(len(beam)) for beam in beams))
    while True:
        batch = np.array(list(itertools.islice(indices, chunk)), dtype=np.int64)
        if batch.size == 0:
            break
        scores = _tuple_crb(lag_stacks, flat, batch.reshape(-1, m))
        i = int(np.argmin(scores))
        # product() walks tuples in lexicographic order, so the first strict minimum wins ties
        if scores[i] < best_score:
            best_score = float(scores[i])
            best_choice = batch[i]

    if best_choice is None:
        raise ConstraintError("every candidate tuple gives a singular Fisher information")
    bits = np.stack([beams[j][best_choice[j]] for j in range(m)])
    logger.debug("designed training with pooled CRB %.6e over beams of %s", best_score, [len(b) for b in beams])
    return TrainingSet.from_bits(bits, l_taps)


__all__ = [
    "CONDITION_LIMIT",
    "TrainingSet",
    "EstimateReport",
    "MlOptions",
    "TrainingConstraints",
    "log_likelihood",
    "fisher_information",
    "crb",
    "crb_per_receiver",
    "estimate_mse",
    "ls_estimate",
    "ml_estimate",
    "concat_training",
    "training_for_length",
    "enumerate_sequences",
    "design_training",
]
