# Shared configuration for the simulator modules
import logging
import logging.handlers
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import dotenv_values

from .errors import ConfigError
from .physics.channel import DiffusionParams
from .physics.equalization import DetectorConfig, DetectorKind
from .physics.geometry import ROOM_TEMPERATURE, WATER_VISCOSITY, MobilityParams, mobility_from_radius
from .physics.mimo_model import OffsetMode
from .utils import parse_float_list

LOG_FORMAT = "%(asctime)s|%(filename)s:%(lineno)s|%(levelname)s|%(name)s|%(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def configure_logging(log_dir: Optional[str] = None, level: Optional[str] = None,
                      console_level: int = logging.INFO) -> Path:
    """
    Install the rotating file handler and the console handler on the root logger.

    Safe to call more than once; handlers are only added the first time.
    Environment overrides: DMIMO_LOG_DIR, DMIMO_LOG_LEVEL.

    Returns:
        Path of the log file
    """
    logs_dir = Path(log_dir or os.getenv("DMIMO_LOG_DIR", "logs"))
    log_file_path = logs_dir / "dmimo.log"
    if getattr(configure_logging, "_configured", False):
        return log_file_path

    logs_dir.mkdir(parents=True, exist_ok=True)
    # Log rotation: max 10MB per file, keep 5 backup files
    log_handler = logging.handlers.RotatingFileHandler(
        filename=str(log_file_path),
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding="utf-8",
    )
    log_formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)
    log_handler.setFormatter(log_formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel((level or os.getenv("DMIMO_LOG_LEVEL", "DEBUG")).upper())
    root_logger.addHandler(log_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(console_level)
    console_handler.setFormatter(log_formatter)
    root_logger.addHandler(console_handler)

    configure_logging._configured = True
    logging.getLogger(__name__).debug("Logging configured with rotation (10MB, 5 backups) at %s", log_file_path)
    return log_file_path


# Reference 2x2 training pair for K1=16, L=3
REFERENCE_TRAINING_2X2 = (
    (1, 1, 1, 0, 0, 0, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1),
    (1, 1, 1, 0, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1),
)

DEFAULT_THRESHOLD_GRID = tuple(round(0.1 + 0.05 * i, 2) for i in range(17))
DEFAULT_H_GRID = tuple(25e-9 * i for i in range(1, 17))

# Axes a sweep may vary; the value is applied through ExperimentConfig.at()
SWEEP_AXES = ("d", "h", "m", "n_release", "t_int", "p_one", "k_tot", "block_length", "d_x", "t_c", "threshold")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one sweep needs, in SI units.

    Attributes:
        d, h, m: nominal geometry (paired distance, gate spacing, link count)
        diffusion: channel constants and model orders L, L'
        mobility: transceiver diffusion D_X and coherence time T_c
        detectors: detectors decoded in every trial
        k1: base training length designed by exhaustive search
        k_tot: pilot bits per block over all transmitters (0 = known CSI)
        block_length: bits per block B over all transmitters
        trials: trials per batch; BER sweeps add batches until the
            confidence rule or trial_cap stops them
        csi: "true" decodes with the model channel, "estimated" with the
            channel estimated from the training prefix
        sampling: "poisson" draws counts, "mean" uses the model means
    """
    d: float = 400e-9
    h: float = 200e-9
    m: int = 2
    diffusion: DiffusionParams = field(default_factory=DiffusionParams)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    viscosity: float = WATER_VISCOSITY
    temperature: float = ROOM_TEMPERATURE
    detectors: Tuple[DetectorKind, ...] = (DetectorKind.ZF_DFE, DetectorKind.MMSE_DFE, DetectorKind.LS_DFE)
    threshold: float = 0.4
    k1: int = 16
    k_tot: int = 128
    block_length: int = 600
    trials: int = 1000
    trial_cap: int = 100_000
    seed: int = 2024
    workers: int = 1
    sweep_axis: str = "k_tot"
    sweep_values: Tuple[float, ...] = (32.0, 64.0, 128.0, 256.0)
    offset_mode: OffsetMode = OffsetMode.SIMULTANEOUS
    offset_modes: Tuple[OffsetMode, ...] = (OffsetMode.SIMULTANEOUS, OffsetMode.HALF)
    csi: str = "true"
    estimator: str = "ml"
    sampling: str = "poisson"
    beam_width: int = 64
    ml_tol: float = 1e-9
    ml_max_iter: int = 10_000
    training_file: Optional[str] = None
    threshold_grid: Tuple[float, ...] = DEFAULT_THRESHOLD_GRID

    def __post_init__(self):
        if self.d <= 0 or self.h <= 0:
            raise ConfigError(f"D and H must be > 0, got {self.d}, {self.h}")
        if self.m < 1:
            raise ConfigError(f"M must be >= 1, got {self.m}")
        if self.trials < 1 or self.trial_cap < self.trials:
            raise ConfigError(f"need 1 <= TRIALS <= TRIAL_CAP, got {self.trials}, {self.trial_cap}")
        if self.workers < 1:
            raise ConfigError(f"WORKERS must be >= 1, got {self.workers}")
        if self.k_tot < 0 or self.block_length < 1:
            raise ConfigError(f"K_TOT must be >= 0 and BLOCK_LENGTH >= 1, got {self.k_tot}, {self.block_length}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"THRESHOLD must be in (0, 1), got {self.threshold}")
        if self.csi not in ("true", "estimated"):
            raise ConfigError(f"CSI must be true or estimated, got {self.csi!r}")
        if self.estimator not in ("ls", "ml"):
            raise ConfigError(f"ESTIMATOR must be ls or ml, got {self.estimator!r}")
        if self.sampling not in ("poisson", "mean"):
            raise ConfigError(f"SAMPLING must be poisson or mean, got {self.sampling!r}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"SWEEP_AXIS must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if not self.detectors:
            raise ConfigError("DETECTORS must name at least one detector")
        if any(not 0.0 < xi < 1.0 for xi in self.threshold_grid):
            raise ConfigError("THRESHOLD_GRID values must lie in (0, 1)")

    @property
    def k_train(self) -> int:
        """Training symbols per transmitter, K = K_tot / M."""
        return self.k_tot // self.m

    @property
    def symbols_per_block(self) -> int:
        return self.block_length // self.m

    def detector_config(self, kind: DetectorKind, threshold: Optional[float] = None) -> DetectorConfig:
        return DetectorConfig(kind, self.threshold if threshold is None else threshold, self.diffusion.p_one)

    def at(self, axis: str, value: float) -> "ExperimentConfig":
        """Copy of this config with one sweep axis set to value."""
        if axis in ("d", "h"):
            return replace(self, **{axis: float(value)})
        if axis in ("m", "k_tot", "block_length"):
            return replace(self, **{axis: int(round(value))})
        if axis == "threshold":
            return replace(self, threshold=float(value))
        if axis in ("n_release", "p_one"):
            return replace(self, diffusion=replace(self.diffusion, **{axis: float(value)}))
        if axis == "t_int":
            # Simulated memory keeps the same duration; detectors keep L taps
            base = self.diffusion
            l_prime = max(base.l_taps, int(math.ceil(base.l_prime * base.t_int / float(value) - 1e-9)))
            return replace(self, diffusion=replace(base, t_int=float(value), l_prime=l_prime))
        if axis in ("d_x", "t_c"):
            return replace(self, mobility=replace(self.mobility, **{axis: float(value)}))
        raise ConfigError(f"unknown sweep axis {axis!r}")

    def points(self):
        """(index, value, config) for every sweep value."""
        return [(i, value, self.at(self.sweep_axis, value)) for i, value in enumerate(self.sweep_values)]


def _int(value: str) -> int:
    return int(float(value))


def _detectors(value: str) -> Tuple[DetectorKind, ...]:
    return tuple(DetectorKind(part.strip().lower()) for part in value.split(",") if part.strip())


def _modes(value: str) -> Tuple[OffsetMode, ...]:
    return tuple(OffsetMode(int(part)) for part in value.split(",") if part.strip())


def _lower(value: str) -> str:
    return value.strip().lower()


# Schema: file key -> (section, field name, parser)
CONFIG_SCHEMA: Dict[str, Tuple[str, str, Any]] = {
    "D": ("top", "d", float),
    "H": ("top", "h", float),
    "M": ("top", "m", _int),
    "N_RELEASE": ("diffusion", "n_release", float),
    "D_COEF": ("diffusion", "d_coef", float),
    "RX_RADIUS": ("diffusion", "rx_radius", float),
    "T_INT": ("diffusion", "t_int", float),
    "L_TAPS": ("diffusion", "l_taps", _int),
    "L_PRIME": ("diffusion", "l_prime", _int),
    "P_ONE": ("diffusion", "p_one", float),
    "V_EX_FRACTION": ("diffusion", "v_ex_fraction", float),
    "D_X": ("mobility", "d_x", float),
    "R_X": ("mobility", "r_x", float),
    "T_C": ("mobility", "t_c", float),
    "VISCOSITY": ("top", "viscosity", float),
    "TEMPERATURE": ("top", "temperature", float),
    "DETECTORS": ("top", "detectors", _detectors),
    "THRESHOLD": ("top", "threshold", float),
    "K1": ("top", "k1", _int),
    "K_TOT": ("top", "k_tot", _int),
    "BLOCK_LENGTH": ("top", "block_length", _int),
    "TRIALS": ("top", "trials", _int),
    "TRIAL_CAP": ("top", "trial_cap", _int),
    "SEED": ("top", "seed", _int),
    "WORKERS": ("top", "workers", _int),
    "SWEEP_AXIS": ("top", "sweep_axis", _lower),
    "SWEEP_VALUES": ("top", "sweep_values", parse_float_list),
    "OFFSET_MODE": ("top", "offset_mode", lambda v: OffsetMode(_int(v))),
    "OFFSET_MODES": ("top", "offset_modes", _modes),
    "CSI": ("top", "csi", _lower),
    "ESTIMATOR": ("top", "estimator", _lower),
    "SAMPLING": ("top", "sampling", _lower),
    "BEAM_WIDTH": ("top", "beam_width", _int),
    "ML_TOL": ("top", "ml_tol", float),
    "ML_MAX_ITER": ("top", "ml_max_iter", _int),
    "TRAINING_FILE": ("top", "training_file", str),
    "THRESHOLD_GRID": ("top", "threshold_grid", parse_float_list),
}


def config_from_mapping(values: Dict[str, Any]) -> ExperimentConfig:
    """
    Build an ExperimentConfig from flat KEY=value pairs (keys case-insensitive).

    Raises:
        ConfigError: on unknown keys or unparsable values
    """
    sections: Dict[str, Dict[str, Any]] = {"top": {}, "diffusion": {}, "mobility": {}}
    for raw_key, raw_value in values.items():
        key = raw_key.strip().upper()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {raw_key!r}")
        if raw_value is None or str(raw_value).strip() == "":
            continue
        section, name, parser = CONFIG_SCHEMA[key]
        try:
            sections[section][name] = parser(str(raw_value).strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw_value!r} ({exc})") from exc

    top = sections["top"]
    mobility = sections["mobility"]
    diffusion = sections["diffusion"]
    if "t_c" not in mobility and "t_int" in diffusion:
        mobility["t_c"] = 10.0 * diffusion["t_int"]
    try:
        if "d_x" not in mobility and mobility.get("r_x") is not None:
            motion = mobility_from_radius(
                mobility["r_x"],
                mobility.get("t_c", MobilityParams.t_c),
                top.get("viscosity", WATER_VISCOSITY),
                top.get("temperature", ROOM_TEMPERATURE),
            )
        else:
            motion = MobilityParams(**mobility)
        return ExperimentConfig(
            diffusion=DiffusionParams(**diffusion),
            mobility=motion,
            **top,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """
    Load a flat key-value config file (dotenv syntax) and apply overrides.

    Args:
        path: config file; defaults only when None
        overrides: ExperimentConfig field values (None values are ignored),
            e.g. from CLI flags

    Returns:
        ExperimentConfig
    """
    values: Dict[str, Any] = {}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        values = dict(dotenv_values(path))
    cfg = config_from_mapping(values)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        try:
            cfg = replace(cfg, **overrides)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
    logging.getLogger(__name__).debug("Loaded config from %s: %s", path or "defaults", cfg)
    return cfg


# Initialize runner (singleton, lazy initialization to avoid circular imports)
def get_runner(workers: int = 1):
    """Get or create the TrialRunner with the logging plugin attached."""
    runner = getattr(get_runner, "_runner", None)
    if runner is None or runner.workers != workers:
        from .experiments.runner import TrialRunner
        from .logging_plugin import logging_plugin

        if runner is not None:
            runner.close()
        runner = TrialRunner(workers=workers, plugin=logging_plugin)
        get_runner._runner = runner
    return runner


__all__ = [
    "LOG_FORMAT",
    "configure_logging",
    "REFERENCE_TRAINING_2X2",
    "DEFAULT_THRESHOLD_GRID",
    "DEFAULT_H_GRID",
    "SWEEP_AXES",
    "ExperimentConfig",
    "CONFIG_SCHEMA",
    "config_from_mapping",
    "load_config",
    "get_runner",
]
