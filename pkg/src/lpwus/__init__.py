"""LP-WUS / LP-SS physical-layer library and link-level simulator."""

from .config import (LpWusConfig, LpSsConfig, ValidationResult, Violation,
                     validate, load_config, save_config)
from .errors import LpwusError, ConfigError, MoSkippedError

__version__ = "0.1.0"

__all__ = [
    "LpWusConfig", "LpSsConfig", "ValidationResult", "Violation",
    "validate", "load_config", "save_config",
    "LpwusError", "ConfigError", "MoSkippedError",
    "__version__",
]
