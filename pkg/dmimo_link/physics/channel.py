"""
Mean diffusion channel of the D-MIMO link and Poisson molecule counting.

The global mean channel C̄ = [C̄[0], ..., C̄[L-1], v̄] is held by CirTaps. Taps are
computed from the free-space diffusion kernel evaluated at the receiver center
and multiplied by the receiver volume.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, SizeError
from .geometry import Topology, distance_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiffusionParams:
    """Physical and modelling constants of the diffusive link.

    Attributes:
        n_release: molecules released per bit 1 (N)
        d_coef: molecule diffusion coefficient D in m²/s
        rx_radius: radius of the spherical receiver in meters
        t_int: bit interval T_int in seconds
        l_taps: channel memory L used by estimators and detectors
        l_prime: taps L' simulated before the tail is dropped
        p_one: Prob{x = 1}
        v_ex_fraction: external noise mean as a fraction of c̄_ii[0]
    """
    n_release: float = 1e5
    d_coef: float = 1e-9
    rx_radius: float = 50e-9
    t_int: float = 2e-4
    l_taps: int = 3
    l_prime: int = 10
    p_one: float = 0.5
    v_ex_fraction: float = 0.05

    def __post_init__(self):
        if self.n_release < 1:
            raise DomainError(f"n_release must be >= 1, got {self.n_release}")
        if self.d_coef <= 0 or self.rx_radius <= 0 or self.t_int <= 0:
            raise DomainError("d_coef, rx_radius and t_int must be > 0")
        if not 1 <= self.l_taps <= self.l_prime:
            raise DomainError(f"need 1 <= l_taps <= l_prime, got {self.l_taps}, {self.l_prime}")
        if not 0.0 <= self.p_one <= 1.0:
            raise DomainError(f"p_one must be in [0, 1], got {self.p_one}")
        if self.v_ex_fraction < 0:
            raise DomainError(f"v_ex_fraction must be >= 0, got {self.v_ex_fraction}")

    @property
    def rx_volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.rx_radius ** 3


@dataclass(frozen=True)
class OffsetSchedule:
    """Per-transmitter release offsets T_off,j within a bit interval.

    Construction rejects negative offsets only; `validate` checks the length M
    and T_off,j < T_int when the taps are built.
    """
    offsets: np.ndarray

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=float).reshape(-1)
        if np.any(offsets < 0):
            raise DomainError("offsets must be >= 0")
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def zeros(cls, m: int) -> "OffsetSchedule":
        return cls(np.zeros(m))

    def validate(self, t_int: float, m: int) -> None:
        if self.offsets.shape != (m,):
            raise SizeError(f"expected {m} offsets, got {self.offsets.shape[0]}")
        if np.any(self.offsets >= t_int):
            raise DomainError(f"offsets must lie in [0, {t_int}), got {self.offsets.tolist()}")


@dataclass(frozen=True)
class CirTaps:
    """Mean CIR taps (L, M, M) plus mean noise vector (M,)."""
    taps: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float)
        noise = np.array(self.noise, dtype=float).reshape(-1)
        if taps.ndim != 3 or taps.shape[1] != taps.shape[2] or taps.shape[0] < 1:
            raise SizeError(f"taps must be (L, M, M), got {taps.shape}")
        if noise.shape != (taps.shape[1],):
            raise SizeError(f"noise must have length {taps.shape[1]}, got {noise.shape}")
        if not (np.all(np.isfinite(taps)) and np.all(np.isfinite(noise))):
            raise DomainError("CIR entries must be finite")
        if np.any(taps < 0) or np.any(noise < 0):
            raise DomainError("CIR entries must be non-negative")
        taps.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "noise", noise)

    @property
    def m(self) -> int:
        return self.taps.shape[1]

    @property
    def l_taps(self) -> int:
        return self.taps.shape[0]

    @property
    def flat(self) -> np.ndarray:
        """The M×(ML+1) global channel matrix [C̄[0], ..., C̄[L-1], v̄]."""
        return np.hstack([*self.taps, self.noise[:, None]])

    @classmethod
    def from_flat(cls, matrix: np.ndarray, l_taps: int) -> "CirTaps":
        """Inverse of `flat`; the trailing column becomes the noise vector."""
        matrix = np.asarray(matrix, dtype=float)
        m = matrix.shape[0]
        if matrix.shape != (m, m * l_taps + 1):
            raise SizeError(f"flat CIR must be {m}x{m * l_taps + 1}, got {matrix.shape}")
        taps = matrix[:, :-1].reshape(m, l_taps, m).transpose(1, 0, 2)
        return cls(taps, matrix[:, -1])


def concentration(distance, t, params: DiffusionParams):
    """Mean local concentration N/(4πDt)^{3/2}·exp(−r²/(4Dt)); zero before the release."""
    distance = np.asarray(distance, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(distance < 0):
        raise DomainError("distance must be >= 0")
    positive = t > 0
    t_safe = np.where(positive, t, 1.0)
    value = params.n_release / (4.0 * math.pi * params.d_coef * t_safe) ** 1.5 * np.exp(
        -distance ** 2 / (4.0 * params.d_coef * t_safe)
    )
    result = np.where(positive, value, 0.0)
    return float(result) if result.ndim == 0 else result


def peak_time(distance: float, d_coef: float) -> float:
    """τ_max = r²/(6D), the instant of maximum concentration at distance r."""
    if distance <= 0 or d_coef <= 0:
        raise DomainError(f"distance and d_coef must be > 0, got {distance}, {d_coef}")
    return distance ** 2 / (6.0 * d_coef)


def cir_tap(distance, elapsed, params: DiffusionParams):
    """Expected molecules inside the receiver `elapsed` seconds after a release."""
    if np.any(np.asarray(distance) <= 0):
        raise DomainError("Tx/Rx points coincide (distance = 0)")
    return concentration(distance, elapsed, params) * params.rx_volume


def sampling_instants(topology: Topology, schedule: OffsetSchedule, params: DiffusionParams) -> np.ndarray:
    """Rx_i samples at the nominal peak time shifted by its paired transmitter's offset."""
    return peak_time(topology.nominal_d, params.d_coef) + schedule.offsets


def tap_profile(topology: Topology, schedule: OffsetSchedule, params: DiffusionParams,
                n_taps: int) -> np.ndarray:
    """Taps 0..n_taps-1 as an (n_taps, M, M) array.

    Entry [ℓ, i, j] is cir_tap(‖Rx_i − Tx_j‖, τ_s,i + ℓ·T_int − T_off,j).
    """
    m = topology.m
    schedule.validate(params.t_int, m)
    distances = distance_matrix(topology)
    tau = sampling_instants(topology, schedule, params)
    lags = np.arange(n_taps, dtype=float)[:, None, None] * params.t_int
    elapsed = tau[None, :, None] + lags - schedule.offsets[None, None, :]
    return cir_tap(distances[None, :, :], elapsed, params)


def external_noise(topology: Topology, schedule: OffsetSchedule, params: DiffusionParams) -> np.ndarray:
    """v̄_ex,i = v_ex_fraction · c̄_ii[0]."""
    first = tap_profile(topology, schedule, params, 1)[0]
    return params.v_ex_fraction * np.diag(first).copy()


def truncation_noise(topology: Topology, schedule: OffsetSchedule, params: DiffusionParams) -> np.ndarray:
    """v̄_i = p·Σ_j Σ_{ℓ=L}^{L'-1} c̄_ij[ℓ] + v_ex_fraction·c̄_ii[0]."""
    profile = tap_profile(topology, schedule, params, params.l_prime)
    tail = profile[params.l_taps:].sum(axis=(0, 2))
    return params.p_one * tail + params.v_ex_fraction * np.diag(profile[0])


def build_cir(topology: Topology, schedule: OffsetSchedule, params: DiffusionParams) -> CirTaps:
    """L-tap model channel with the truncation noise folded into v̄."""
    profile = tap_profile(topology, schedule, params, params.l_taps)
    return CirTaps(profile, truncation_noise(topology, schedule, params))


def build_simulation_cir(topology: Topology, schedule: OffsetSchedule, params: DiffusionParams,
                         ex_noise=None) -> CirTaps:
    """L'-tap channel used to draw observations; only external noise is left in v̄.

    Args:
        ex_noise: external noise vector to reuse (e.g. fixed by the nominal
            geometry while the transceivers move); computed from `topology`
            when omitted
    """
    profile = tap_profile(topology, schedule, params, params.l_prime)
    if ex_noise is None:
        ex_noise = external_noise(topology, schedule, params)
    return CirTaps(profile, ex_noise)


def interference_metric(cir: CirTaps) -> float:
    """Maximum normalized mean interference max_i (C̄_i·1 − c̄_ii[0]) / c̄_ii[0]."""
    direct = np.diag(cir.taps[0])
    if np.any(direct <= 0):
        raise DomainError("paired tap c̄_ii[0] must be > 0 to normalize interference")
    totals = cir.flat.sum(axis=1)
    return float(np.max((totals - direct) / direct))


def sample_block(cir: CirTaps, columns: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw a whole observation block Y ~ Poisson(C̄·X), independent per entry."""
    columns = np.asarray(columns, dtype=float)
    flat = cir.flat
    if columns.ndim != 2 or columns.shape[0] != flat.shape[1]:
        raise SizeError(f"X must have {flat.shape[1]} rows, got shape {columns.shape}")
    mean = flat @ columns
    if np.any(mean < 0):
        raise RuntimeError(f"negative Poisson mean {mean.min()}")
    return rng.poisson(mean)


def sample_received(cir: CirTaps, x_vec: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw y[k] ~ Poisson(C̄·X[k]) independently per receiver."""
    x_vec = np.asarray(x_vec, dtype=float).reshape(-1)
    if x_vec.shape[0] != cir.flat.shape[1]:
        raise SizeError(f"X[k] must have length {cir.flat.shape[1]}, got {x_vec.shape[0]}")
    return sample_block(cir, x_vec[:, None], rng)[:, 0]


__all__ = [
    "DiffusionParams",
    "OffsetSchedule",
    "CirTaps",
    "concentration",
    "peak_time",
    "cir_tap",
    "sampling_instants",
    "tap_profile",
    "external_noise",
    "truncation_noise",
    "build_cir",
    "build_simulation_cir",
    "interference_metric",
    "sample_received",
    "sample_block",
]
