"""
Transceiver placement and mobility for the D-MIMO link.

Positions are plain numpy arrays of shape (M, 3) in meters. Every operation
returns a new Topology; inputs are never mutated.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import k as BOLTZMANN

from ..errors import DomainError, SizeError

logger = logging.getLogger(__name__)

# Water at room temperature
WATER_VISCOSITY = 1e-3
ROOM_TEMPERATURE = 298.0


@dataclass(frozen=True)
class Topology:
    """Positions of M transmitters and M receivers.

    Attributes:
        tx_positions: (M, 3) transmitter centers in meters
        rx_positions: (M, 3) receiver centers in meters
        nominal_d: paired Tx-Rx distance d used for the sampling instant
        nominal_h: gate inter-distance h
    """
    tx_positions: np.ndarray
    rx_positions: np.ndarray
    nominal_d: float
    nominal_h: float

    def __post_init__(self):
        tx = np.array(self.tx_positions, dtype=float)
        rx = np.array(self.rx_positions, dtype=float)
        if tx.ndim != 2 or tx.shape[1] != 3 or rx.shape != tx.shape or tx.shape[0] < 1:
            raise SizeError(
                f"tx/rx positions must both be (M, 3) with M >= 1, got {tx.shape} and {rx.shape}"
            )
        if not (np.all(np.isfinite(tx)) and np.all(np.isfinite(rx))):
            raise DomainError("positions must be finite")
        if not (self.nominal_d > 0 and self.nominal_h > 0):
            raise DomainError(f"nominal_d and nominal_h must be > 0, got {self.nominal_d}, {self.nominal_h}")
        tx.setflags(write=False)
        rx.setflags(write=False)
        object.__setattr__(self, "tx_positions", tx)
        object.__setattr__(self, "rx_positions", rx)

    @property
    def m(self) -> int:
        return self.tx_positions.shape[0]

    def moved(self, tx_positions: np.ndarray, rx_positions: np.ndarray) -> "Topology":
        """Same nominal geometry, new instantaneous positions."""
        return Topology(tx_positions, rx_positions, self.nominal_d, self.nominal_h)


@dataclass(frozen=True)
class MobilityParams:
    """Brownian mobility of the transceivers.

    Attributes:
        d_x: transceiver diffusion coefficient D_X in m²/s (0 = static channel)
        t_c: channel coherence time T_c in seconds
        r_x: transceiver radius in meters (informational unless d_x is derived)
    """
    d_x: float = 0.0
    t_c: float = 2e-3
    r_x: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.d_x < 0:
            raise DomainError(f"d_x must be >= 0, got {self.d_x}")
        if self.t_c <= 0:
            raise DomainError(f"t_c must be > 0, got {self.t_c}")

    @property
    def is_static(self) -> bool:
        return self.d_x == 0


def stokes_einstein(radius: float, viscosity: float = WATER_VISCOSITY,
                    temperature: float = ROOM_TEMPERATURE) -> float:
    """Diffusion coefficient k_B·T / (6π·η·r) of a sphere in m²/s."""
    if radius <= 0 or viscosity <= 0 or temperature <= 0:
        raise DomainError(
            f"radius, viscosity and temperature must be > 0, got {radius}, {viscosity}, {temperature}"
        )
    return BOLTZMANN * temperature / (6.0 * math.pi * viscosity * radius)


def mobility_from_radius(r_x: float, t_c: float, viscosity: float = WATER_VISCOSITY,
                         temperature: float = ROOM_TEMPERATURE) -> MobilityParams:
    """Build MobilityParams whose D_X follows Stokes-Einstein for radius r_x."""
    return MobilityParams(d_x=stokes_einstein(r_x, viscosity, temperature), t_c=t_c, r_x=r_x)


def initial_positions(d: float, h: float, m: int) -> Topology:
    """Place Tx_j at (0, (j-1)h, 0) and Rx_i at (d, (i-1)h, 0).

    Args:
        d: paired transmitter-receiver distance in meters
        h: spacing between adjacent gates in meters
        m: number of links M

    Returns:
        Topology at t=0 for a block
    """
    if d <= 0 or h <= 0:
        raise DomainError(f"d and h must be > 0, got {d}, {h}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    y = np.arange(m, dtype=float) * h
    tx = np.column_stack([np.zeros(m), y, np.zeros(m)])
    rx = np.column_stack([np.full(m, float(d)), y, np.zeros(m)])
    return Topology(tx, rx, float(d), float(h))


def distance_matrix(topology: Topology) -> np.ndarray:
    """M×M matrix whose (i, j) entry is ‖Rx_i − Tx_j‖."""
    diff = topology.rx_positions[:, None, :] - topology.tx_positions[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def brownian_step(topology: Topology, params: MobilityParams, rng: np.random.Generator) -> Topology:
    """Displace every coordinate of every transceiver by N(0, 2·D_X·T_c)."""
    if params.is_static:
        return topology.moved(topology.tx_positions.copy(), topology.rx_positions.copy())
    sigma = math.sqrt(2.0 * params.d_x * params.t_c)
    m = topology.m
    # One draw of shape (2, M, 3): transmitters first, then receivers
    delta = rng.normal(0.0, sigma, size=(2, m, 3))
    return topology.moved(topology.tx_positions + delta[0], topology.rx_positions + delta[1])


def brownian_walk(topology: Topology, params: MobilityParams, rng: np.random.Generator,
                  steps: int) -> Topology:
    """Apply `steps` consecutive Brownian steps."""
    current = topology
    for _ in range(steps):
        current = brownian_step(current, params, rng)
    return current


__all__ = [
    "WATER_VISCOSITY",
    "ROOM_TEMPERATURE",
    "Topology",
    "MobilityParams",
    "stokes_einstein",
    "mobility_from_radius",
    "initial_positions",
    "distance_matrix",
    "brownian_step",
    "brownian_walk",
]
