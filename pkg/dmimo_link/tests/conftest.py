import numpy as np
import pytest

from dmimo_link.config import ExperimentConfig
from dmimo_link.physics.channel import CirTaps, DiffusionParams, OffsetSchedule, build_cir
from dmimo_link.physics.geometry import initial_positions

# Reference 2x2 channel at d=400 nm, h=200 nm, T_int=0.2 ms
REFERENCE_C0 = [[60.21, 41.58], [41.58, 60.21]]
REFERENCE_C1 = [[9.11, 8.71], [8.71, 9.11]]
REFERENCE_C2 = [[3.83, 3.74], [3.74, 3.83]]
REFERENCE_NOISE = [10.29, 10.29]


@pytest.fixture
def reference_cir() -> CirTaps:
    return CirTaps(np.array([REFERENCE_C0, REFERENCE_C1, REFERENCE_C2]), np.array(REFERENCE_NOISE))


@pytest.fixture
def params() -> DiffusionParams:
    return DiffusionParams()


@pytest.fixture
def topology():
    return initial_positions(400e-9, 200e-9, 2)


@pytest.fixture
def model_cir(topology, params) -> CirTaps:
    return build_cir(topology, OffsetSchedule.zeros(2), params)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_config() -> ExperimentConfig:
    """Cheap harness setting: short blocks, few trials, a fixed training file-free design."""
    return ExperimentConfig(
        k_tot=32,
        block_length=100,
        trials=8,
        trial_cap=16,
        seed=7,
        sweep_axis="h",
        sweep_values=(100e-9, 200e-9),
        ml_max_iter=500,
        ml_tol=1e-7,
    )
