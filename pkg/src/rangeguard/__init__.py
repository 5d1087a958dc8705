"""Range-only guardian-drone estimation and encirclement simulator."""
from .config import ConfigError, ScenarioConfig, load_config
from .controller import Zone
from .estimator import GateError
from .runner import NumericalError, TrajectoryLog, export, import_log, run_scenario

__all__ = [
    "ConfigError", "GateError", "NumericalError", "ScenarioConfig", "TrajectoryLog",
    "Zone", "export", "import_log", "load_config", "run_scenario",
]
