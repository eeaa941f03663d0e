"""Edge-to-cloud offloading simulator for serverless function requests."""

from .config import ConfigError, SimConfig, load_config
from .controller import LatencyRatioStrategy, OffloadConfig, OffloadState, control_step
from .experiment import ExperimentMatrix, export, sweep
from .simulation import RunResult, Simulation, run

__all__ = [
    "ConfigError",
    "ExperimentMatrix",
    "LatencyRatioStrategy",
    "OffloadConfig",
    "OffloadState",
    "RunResult",
    "SimConfig",
    "Simulation",
    "control_step",
    "export",
    "load_config",
    "run",
    "sweep",
]

__version__ = "0.1.0"
