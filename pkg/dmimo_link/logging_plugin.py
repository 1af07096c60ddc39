"""
Logging plugin for the D-MIMO sweep harness.

The harness calls these hooks around every sweep, every sweep point and every
failed trial. Records are plain text by default or one JSON object per line
when JSON logging is enabled, which keeps them easy to parse from logs/dmimo.log.
"""
import json
import logging
import os
import time
import traceback
from typing import Any, Dict, Optional

from .utils import parse_bool

logger = logging.getLogger(__name__)


class SweepLoggingPlugin:
    """
    Logging plugin that captures sweep lifecycle events.

    This plugin logs:
    - Sweep start/end with timing
    - Sweep point start/end with timing and a metric summary
    - Trials that failed (singular training, ill-conditioned equalizer)
    """

    def __init__(self, name: str = "SweepLoggingPlugin", use_json_logging: bool = False):
        """
        Initialize the logging plugin.

        Args:
            name: Plugin name
            use_json_logging: If True, records are emitted as JSON objects
        """
        self.name = name
        self.logger = logging.getLogger("dmimo_link.plugin")
        self.use_json_logging = use_json_logging

        # Track execution times
        self._sweep_start_times: Dict[str, float] = {}
        self._point_start_times: Dict[str, float] = {}

        self.logger.debug(f"Initialized {name} (JSON logging: {use_json_logging})")

    def _emit(self, level: int, event: str, message: str, **fields: Any) -> None:
        if self.use_json_logging:
            log_data = {"event": event, **fields, "timestamp": time.time()}
            self.logger.log(level, json.dumps(log_data, default=str))
        else:
            self.logger.log(level, message)

    async def before_sweep_callback(self, sweep: str, axis: str, n_points: int, seed: int, **kwargs):
        """Called before a sweep starts."""
        self._sweep_start_times[sweep] = time.perf_counter()
        self._emit(
            logging.INFO, "sweep_started",
            f"Sweep started: sweep={sweep}, axis={axis}, points={n_points}, seed={seed}",
            sweep=sweep, axis=axis, points=n_points, seed=seed,
        )

    async def after_sweep_callback(self, sweep: str, result: Any = None, **kwargs) -> Optional[float]:
        """Called after a sweep completes; returns its wall time in seconds."""
        start_time = self._sweep_start_times.pop(sweep, None)
        execution_time = time.perf_counter() - start_time if start_time is not None else None
        rows = len(getattr(result, "points", []) or [])
        message = f"Sweep completed: sweep={sweep}, rows={rows}"
        if execution_time is not None:
            message += f", execution_time={execution_time:.3f}s"
        self._emit(
            logging.INFO, "sweep_completed", message,
            sweep=sweep, rows=rows,
            execution_time_seconds=round(execution_time, 3) if execution_time is not None else None,
        )
        return execution_time

    async def before_point_callback(self, sweep: str, index: int, axis: str, value: Any, **kwargs):
        """Called before a sweep point is simulated."""
        self._point_start_times[f"{sweep}:{index}"] = time.perf_counter()
        self._emit(
            logging.INFO, "point_started",
            f"Point started: sweep={sweep}, index={index}, {axis}={value}",
            sweep=sweep, index=index, axis=axis, value=value,
        )

    async def after_point_callback(self, sweep: str, index: int, metrics: Optional[Dict[str, Any]] = None,
                                   trials: int = 0, failures: int = 0, **kwargs) -> Optional[float]:
        """Called after a sweep point completes; returns its wall time in seconds."""
        start_time = self._point_start_times.pop(f"{sweep}:{index}", None)
        execution_time = time.perf_counter() - start_time if start_time is not None else None
        summary = self._summarize_metrics(metrics)
        message = f"Point completed: sweep={sweep}, index={index}, trials={trials}, failures={failures}"
        if execution_time is not None:
            message += f", execution_time={execution_time:.3f}s"
        if summary:
            message += f", metrics={summary}"
        self._emit(
            logging.INFO, "point_completed", message,
            sweep=sweep, index=index, trials=trials, failures=failures,
            execution_time_seconds=round(execution_time, 3) if execution_time is not None else None,
            metrics=metrics,
        )
        return execution_time

    async def on_trial_error_callback(self, sweep: str, index: int, trial: int,
                                      error_type: str = "UnknownError", error: str = "", **kwargs):
        """Called for every trial that returned a failure record."""
        self._emit(
            logging.WARNING, "trial_error",
            f"Trial failed: sweep={sweep}, index={index}, trial={trial}, error_type={error_type}, error={error}",
            sweep=sweep, index=index, trial=trial, error_type=error_type, error_message=error,
        )

    async def on_error_callback(self, sweep: str, error: Exception = None, **kwargs):
        """Called when a sweep aborts."""
        error_type = type(error).__name__ if error else "UnknownError"
        error_msg = str(error) if error else "Unknown error"
        if self.use_json_logging:
            log_data = {
                "event": "error",
                "sweep": sweep,
                "error_type": error_type,
                "error_message": error_msg,
                "traceback": traceback.format_exc() if error else None,
                "timestamp": time.time(),
            }
            self.logger.error(json.dumps(log_data))
        else:
            self.logger.error(
                f"Error in sweep: sweep={sweep}, error_type={error_type}, error={error_msg}",
                exc_info=error,
            )

    def _summarize_metrics(self, metrics: Optional[Dict[str, Any]]) -> Optional[str]:
        """Short metric summary, at most five entries."""
        if not metrics:
            return None
        parts = []
        for key in list(metrics)[:5]:
            value = metrics[key]
            parts.append(f"{key}={value:.4g}" if isinstance(value, float) else f"{key}={value}")
        return ", ".join(parts)


# Create a singleton instance for easy import
# DMIMO_JSON_LOGS=true switches to structured JSON records
logging_plugin = SweepLoggingPlugin(
    use_json_logging=parse_bool(os.getenv("DMIMO_JSON_LOGS"))
)

__all__ = ["SweepLoggingPlugin", "logging_plugin"]
