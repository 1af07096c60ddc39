"""
Binary symbol blocks, time-interleaving offsets and the global convolutional matrix.
"""
import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ..errors import DomainError, SizeError, UnsupportedModeError
from .channel import CirTaps, OffsetSchedule

logger = logging.getLogger(__name__)


class OffsetMode(IntEnum):
    """Release schedules within a bit interval."""
    SIMULTANEOUS = 1
    HALF = 2
    QUARTER = 3


@dataclass(frozen=True)
class SymbolBlock:
    """M×K OOK symbols; bits[j, k] is x_j[k]."""
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits)
        if bits.ndim == 1:
            bits = bits[None, :]
        if bits.ndim != 2 or bits.shape[0] < 1:
            raise SizeError(f"bits must be an M×K matrix, got shape {bits.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise DomainError("symbols must be 0 or 1")
        bits = bits.astype(np.int8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def m(self) -> int:
        return self.bits.shape[0]

    @property
    def k_total(self) -> int:
        return self.bits.shape[1]

    def ones(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class ConvMatrix:
    """Stacked regressors; column k is X[k] = [x[k]; x[k-1]; ...; x[k-L+1]; 1]."""
    columns: np.ndarray
    l_taps: int

    @property
    def m(self) -> int:
        return (self.columns.shape[0] - 1) // self.l_taps

    @property
    def n_columns(self) -> int:
        return self.columns.shape[1]


def _stack(bits: np.ndarray, l_taps: int, start: int) -> np.ndarray:
    k = bits.shape[1]
    rows = [bits[:, start - lag: k - lag] for lag in range(l_taps)]
    rows.append(np.ones((1, k - start), dtype=bits.dtype))
    return np.vstack(rows).astype(float)


def build_conv_matrix(block: SymbolBlock, l_taps: int) -> ConvMatrix:
    """Global convolutional matrix X = [X[L], ..., X[K]] with K-L+1 columns.

    Raises:
        SizeError: when the block is shorter than the channel memory
    """
    if l_taps < 1:
        raise DomainError(f"l_taps must be >= 1, got {l_taps}")
    if block.k_total < l_taps:
        raise SizeError(f"block length {block.k_total} shorter than L={l_taps}")
    return ConvMatrix(_stack(block.bits, l_taps, l_taps - 1), l_taps)


def causal_conv_matrix(block: SymbolBlock, l_taps: int) -> ConvMatrix:
    """K columns X[1..K], symbols before the block taken as silent."""
    if l_taps < 1:
        raise DomainError(f"l_taps must be >= 1, got {l_taps}")
    padded = np.hstack([np.zeros((block.m, l_taps - 1), dtype=block.bits.dtype), block.bits])
    return ConvMatrix(_stack(padded, l_taps, l_taps - 1), l_taps)


def mean_output(cir: CirTaps, conv: ConvMatrix) -> np.ndarray:
    """Ȳ = C̄·X."""
    flat = cir.flat
    if flat.shape[1] != conv.columns.shape[0]:
        raise SizeError(
            f"CIR has {flat.shape[1]} columns but X has {conv.columns.shape[0]} rows"
        )
    return flat @ conv.columns


def assign_offsets(mode, t_int: float, m: int) -> OffsetSchedule:
    """Offsets for the given TIL mode.

    Mode 2 delays every odd-indexed transmitter by T_int/2, which covers the
    2×2 case and generalizes to any M. Mode 3 staggers four transmitters by
    T_int/4.
    """
    mode = OffsetMode(int(mode))
    if t_int <= 0:
        raise DomainError(f"t_int must be > 0, got {t_int}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if mode is OffsetMode.SIMULTANEOUS:
        return OffsetSchedule.zeros(m)
    if mode is OffsetMode.HALF:
        return OffsetSchedule((np.arange(m) % 2) * (t_int / 2.0))
    if m != 4:
        raise UnsupportedModeError(f"offset mode 3 is defined for M=4 only, got M={m}")
    return OffsetSchedule(np.arange(4) * (t_int / 4.0))


def random_block(m: int, k: int, p_one: float, rng: np.random.Generator) -> SymbolBlock:
    """I.i.d. Bernoulli(p_one) symbols."""
    if not 0.0 <= p_one <= 1.0:
        raise DomainError(f"p_one must be in [0, 1], got {p_one}")
    return SymbolBlock((rng.random((m, k)) < p_one).astype(np.int8))


__all__ = [
    "OffsetMode",
    "SymbolBlock",
    "ConvMatrix",
    "build_conv_matrix",
    "causal_conv_matrix",
    "mean_output",
    "assign_offsets",
    "random_block",
]
