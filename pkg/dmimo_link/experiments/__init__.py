from .results import RunResult, SweepPoint
from .runner import TrialRunner
from .sweeps import (
    best_threshold,
    run_ber_sweep,
    run_block_protocol,
    run_design_training,
    run_interference_sweep,
    run_mse_sweep,
    run_threshold_search,
    search_threshold,
)

__all__ = [
    "RunResult",
    "SweepPoint",
    "TrialRunner",
    "best_threshold",
    "run_ber_sweep",
    "run_block_protocol",
    "run_design_training",
    "run_interference_sweep",
    "run_mse_sweep",
    "run_threshold_search",
    "search_threshold",
]
