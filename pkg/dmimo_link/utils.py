"""
Small helpers shared by the harness and the CLI: training-sequence text files,
dB conversion, binomial confidence intervals, per-trial random streams and
config value parsing.
"""
import logging
import math
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .errors import ConfigError, DomainError, SizeError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def load_training_sequences(path: PathLike) -> np.ndarray:
    """
    Read training sequences stored one transmitter per line as 0/1 characters.

    Blank lines and lines starting with '#' are skipped; spaces inside a line
    are ignored.

    Args:
        path: text file to read

    Returns:
        M×K int8 matrix
    """
    rows: List[List[int]] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip().replace(" ", "")
        if not line or line.startswith("#"):
            continue
        if set(line) - {"0", "1"}:
            raise DomainError(f"{path}:{line_no}: training rows may only contain 0 and 1")
        rows.append([int(ch) for ch in line])
    if not rows:
        raise SizeError(f"{path}: no training sequences found")
    if len({len(row) for row in rows}) != 1:
        raise SizeError(f"{path}: all training rows must have the same length")
    return np.array(rows, dtype=np.int8)


def format_training_sequences(bits: np.ndarray) -> str:
    bits = np.asarray(bits)
    return "".join("".join(str(int(b)) for b in row) + "\n" for row in bits)


def save_training_sequences(path: PathLike, bits: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_training_sequences(bits), encoding="utf-8")
    logger.info("Wrote %d training sequences to %s", np.asarray(bits).shape[0], path)
    return path


def to_db(value: float) -> float:
    """10·log10(value); -inf for zero, NaN for negative or NaN input."""
    if value is None or math.isnan(value) or value < 0:
        return math.nan
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


def wilson_interval(errors: int, total: int, alpha: float = 0.05) -> Tuple[float, float]:
    """Two-sided Wilson score interval for an error probability."""
    if total <= 0:
        return 0.0, 1.0
    low, high = proportion_confint(errors, total, alpha=alpha, method="wilson")
    return float(low), float(high)


def interval_is_tight(errors: int, total: int, rel_width: float = 0.2, alpha: float = 0.05) -> bool:
    """True once the interval half-width is below rel_width times the estimate."""
    if total <= 0 or errors <= 0:
        return False
    low, high = wilson_interval(errors, total, alpha)
    return (high - low) / 2.0 < rel_width * (errors / total)


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    """Independent stream for one Monte Carlo trial of one sweep point."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(point), int(trial)]))


def parse_float_list(text: Union[str, Sequence[float]]) -> Tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(part) for part in str(text).split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def parse_bool(text: Union[str, bool, None], default: bool = False) -> bool:
    if text is None:
        return default
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


__all__ = [
    "load_training_sequences",
    "format_training_sequences",
    "save_training_sequences",
    "to_db",
    "wilson_interval",
    "interval_is_tight",
    "trial_rng",
    "parse_float_list",
    "parse_bool",
]
