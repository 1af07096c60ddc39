from .config import ExperimentConfig, load_config
from .logging_plugin import SweepLoggingPlugin, logging_plugin

__all__ = ["ExperimentConfig", "load_config", "logging_plugin", "SweepLoggingPlugin"]
