"""Discrete-event simulator and strategy library for energy- and deadline-aware
computation offloading in mobile edge clouds."""

from .config import ConfigError, ScenarioConfig, load_and_validate
from .core_model import CostEstimate, DeviceProfile, HostSnapshot, JobRecord, JobSpec, Role, deadline_met
from .sim_engine import RunResult, run
from .strategies import decide, parse_strategy

__all__ = [
    "ConfigError",
    "CostEstimate",
    "DeviceProfile",
    "HostSnapshot",
    "JobRecord",
    "JobSpec",
    "Role",
    "RunResult",
    "ScenarioConfig",
    "decide",
    "deadline_met",
    "load_and_validate",
    "parse_strategy",
    "run",
]
