"""Multiplexed dispersive readout: circuit network, cavity filter, readout simulation,
state classification and measurement-induced dephasing."""

__version__ = "0.1.0"

from .classify import GMMStateClassifier  # noqa: E402
from .config import DeviceConfig, load_config, save_config  # noqa: E402
from .exceptions import ConfigError, FitError, NumericError, PlotError, RemuxError  # noqa: E402

__all__ = ["__version__", "GMMStateClassifier", "DeviceConfig", "load_config", "save_config", "RemuxError",
           "ConfigError", "NumericError", "FitError", "PlotError"]
