"""
Decision-feedback equalization in the mean with ZF, MMSE and exhaustive LS detection.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import ComplexityError, DomainError, EqualizerError, SizeError
from .channel import CirTaps, peak_time
from .mimo_model import SymbolBlock

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
LS_EXHAUSTIVE_LIMIT = 16


class DetectorKind(str, Enum):
    ZF_DFE = "zf"
    MMSE_DFE = "mmse"
    LS_DFE = "ls"


@dataclass(frozen=True)
class DetectorConfig:
    """Detector selection.

    Attributes:
        kind: ZF-DFE, MMSE-DFE or LS-DFE
        threshold: comparator level ξ for the linear detectors, in (0, 1)
        p_one: Prob{x = 1} used for the noise covariance
        ls_limit: largest M the exhaustive LS detector accepts
    """
    kind: DetectorKind = DetectorKind.ZF_DFE
    threshold: float = 0.4
    p_one: float = 0.5
    ls_limit: int = LS_EXHAUSTIVE_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind(self.kind))
        if not 0.0 < self.threshold < 1.0:
            raise DomainError(f"threshold must be in (0, 1), got {self.threshold}")
        if not 0.0 <= self.p_one <= 1.0:
            raise DomainError(f"p_one must be in [0, 1], got {self.p_one}")


@dataclass(frozen=True)
class DecodeState:
    """The L-1 most recent decisions, history[0] being x̂[k-1]."""
    history: np.ndarray
    k: int = 0

    def __post_init__(self):
        history = np.array(self.history, dtype=np.int8)
        if history.ndim != 2:
            raise SizeError(f"history must be (L-1, M), got {history.shape}")
        if not np.all((history == 0) | (history == 1)):
            raise DomainError("history entries must be binary")
        history.setflags(write=False)
        object.__setattr__(self, "history", history)

    @classmethod
    def initial(cls, m: int, l_taps: int, tail: Optional[np.ndarray] = None) -> "DecodeState":
        """Start-of-payload state.

        Args:
            tail: M×n known symbols preceding the payload in time order (for
                instance the end of the training); zeros when omitted
        """
        history = np.zeros((l_taps - 1, m), dtype=np.int8)
        if tail is not None and l_taps > 1:
            tail = np.asarray(tail, dtype=np.int8)
            if tail.ndim != 2 or tail.shape[0] != m:
                raise SizeError(f"tail must be M×n with M={m}, got {tail.shape}")
            recent = tail[:, ::-1].T[: l_taps - 1]
            history[: recent.shape[0]] = recent
        return cls(history)

    def push(self, decision: np.ndarray) -> "DecodeState":
        if self.history.shape[0] == 0:
            return replace(self, k=self.k + 1)
        history = np.vstack([np.asarray(decision, dtype=np.int8)[None, :], self.history[:-1]])
        return DecodeState(history, self.k + 1)


def noise_covariance(cir: CirTaps, p_one: float) -> np.ndarray:
    """Unconditional diagonal covariance diag(C̄·P), P = p·1 with the noise entry set to 1."""
    if not 0.0 <= p_one <= 1.0:
        raise DomainError(f"p_one must be in [0, 1], got {p_one}")
    flat = cir.flat
    weights = np.full(flat.shape[1], float(p_one))
    weights[-1] = 1.0
    return np.diag(flat @ weights)


def dfe_feedback(y_k: np.ndarray, cir: CirTaps, state: DecodeState) -> np.ndarray:
    """y*[k] = y[k] − Σ_{ℓ≥1} C̄[ℓ]·x̂[k−ℓ] − v̄. May be negative."""
    y_k = np.asarray(y_k, dtype=float)
    if y_k.shape != (cir.m,):
        raise SizeError(f"y[k] must have length {cir.m}, got {y_k.shape}")
    if state.history.shape != (cir.l_taps - 1, cir.m):
        raise SizeError(f"history must be {(cir.l_taps - 1, cir.m)}, got {state.history.shape}")
    interference = np.einsum("lij,lj->i", cir.taps[1:], state.history.astype(float))
    return y_k - interference - cir.noise


def zf_filter(c0: np.ndarray) -> np.ndarray:
    """C̄[0]⁻¹.

    Raises:
        EqualizerError: when C̄[0] is singular or its condition number exceeds 1e12
    """
    c0 = np.asarray(c0, dtype=float)
    if c0.ndim != 2 or c0.shape[0] != c0.shape[1]:
        raise SizeError(f"C̄[0] must be square, got {c0.shape}")
    cond = np.linalg.cond(c0)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise EqualizerError(f"C̄[0] is ill-conditioned (cond={cond:.3e})")
    return np.linalg.inv(c0)


def mmse_filter(c0: np.ndarray, c_omega: np.ndarray) -> np.ndarray:
    """C̄[0]ᵀ(C̄[0]C̄[0]ᵀ + C_ω)⁻¹."""
    c0 = np.asarray(c0, dtype=float)
    c_omega = np.asarray(c_omega, dtype=float)
    if c0.ndim != 2 or c0.shape[0] != c0.shape[1] or c_omega.shape != c0.shape:
        raise SizeError(f"C̄[0] and C_ω must be square and equal-sized, got {c0.shape}, {c_omega.shape}")
    inner = c0 @ c0.T + c_omega
    try:
        factor = cho_factor(inner)
    except LinAlgError as exc:
        raise EqualizerError(f"C̄[0]C̄[0]ᵀ + C_ω is not positive definite: {exc}") from exc
    # inner is symmetric, so c0ᵀ·inner⁻¹ = (inner⁻¹·c0)ᵀ
    return cho_solve(factor, c0).T


def threshold_detect(x_star: np.ndarray, xi: float) -> np.ndarray:
    """1 where x* >= ξ, else 0."""
    return (np.asarray(x_star, dtype=float) >= xi).astype(np.int8)


def _binary_candidates(m: int, limit: int) -> np.ndarray:
    if m > limit:
        raise ComplexityError(f"exhaustive LS detection over 2^{m} vectors exceeds limit M <= {limit}")
    return np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.int8)


def ls_detect(y_star: np.ndarray, c0: np.ndarray, limit: int = LS_EXHAUSTIVE_LIMIT,
              candidates: Optional[np.ndarray] = None) -> np.ndarray:
    """argmin over binary x of ‖y* − C̄[0]·x‖²; ties go to the smallest binary value.

    Args:
        candidates: the 2^M binary vectors in lexicographic order, reused
            across calls; enumerated here when omitted
    """
    c0 = np.asarray(c0, dtype=float)
    if candidates is None:
        candidates = _binary_candidates(c0.shape[1], limit)
    residual = np.asarray(y_star, dtype=float)[None, :] - candidates @ c0.T
    return candidates[int(np.argmin(np.einsum("ni,ni->n", residual, residual)))].copy()


def check_causality(t_int: float, d: float, d_coef: float) -> None:
    """Reject bit intervals shorter than the peak time d²/(6D)."""
    tau = peak_time(d, d_coef)
    if t_int < tau:
        raise EqualizerError(f"T_int={t_int:.3e}s is shorter than the peak time {tau:.3e}s; DFE would be non-causal")


@dataclass
class Receiver:
    """DFE receiver with its filter precomputed for one channel (true or estimated)."""
    cir: CirTaps
    config: DetectorConfig
    _filter: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _candidates: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        c0 = self.cir.taps[0]
        kind = self.config.kind
        if kind is DetectorKind.ZF_DFE:
            self._filter = zf_filter(c0)
        elif kind is DetectorKind.MMSE_DFE:
            self._filter = mmse_filter(c0, noise_covariance(self.cir, self.config.p_one))
        else:
            self._candidates = _binary_candidates(self.cir.m, self.config.ls_limit)

    def detect(self, y_star: np.ndarray) -> np.ndarray:
        if self._filter is not None:
            return threshold_detect(self._filter @ y_star, self.config.threshold)
        return ls_detect(y_star, self.cir.taps[0], self.config.ls_limit, self._candidates)

    def decode(self, y: np.ndarray, initial_history: Optional[np.ndarray] = None) -> SymbolBlock:
        """Decide a whole M×K block sequentially in k."""
        y = np.asarray(y, dtype=float)
        m = self.cir.m
        if y.ndim != 2 or y.shape[0] != m:
            raise SizeError(f"observations must be M×K with M={m}, got {y.shape}")
        state = DecodeState.initial(m, self.cir.l_taps, initial_history)
        decisions = np.zeros(y.shape, dtype=np.int8)
        for k in range(y.shape[1]):
            x_hat = self.detect(dfe_feedback(y[:, k], self.cir, state))
            decisions[:, k] = x_hat
            state = state.push(x_hat)
        return SymbolBlock(decisions)


def decode_block(y: np.ndarray, cir: CirTaps, cfg: DetectorConfig,
                 initial_history: Optional[np.ndarray] = None) -> SymbolBlock:
    """Sequential DFE decode of an M×K observation block.

    Args:
        y: counts, column k observed at symbol k
        cir: channel the receiver believes in (true or estimated)
        cfg: detector selection
        initial_history: known symbols preceding the block in time order;
            zeros when omitted
    """
    return Receiver(cir, cfg).decode(y, initial_history)


__all__ = [
    "CONDITION_LIMIT",
    "LS_EXHAUSTIVE_LIMIT",
    "DetectorKind",
    "DetectorConfig",
    "DecodeState",
    "noise_covariance",
    "dfe_feedback",
    "zf_filter",
    "mmse_filter",
    "threshold_detect",
    "ls_detect",
    "check_causality",
    "Receiver",
    "decode_block",
]
