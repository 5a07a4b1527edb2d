"""Deterministic simulator for pseudonym lifecycles of 5G-connected vehicles.

Vehicles obtain pseudonymous authorization tickets from a simulated 5G
service-based core, rotate their broadcast identifiers under configurable
change policies, and a passive eavesdropper tries to re-link the resulting
trajectories. The package quantifies that privacy/safety trade-off.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig, load_scenario
from .engine import RunResult, run_scenario

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "load_scenario",
    "RunResult",
    "run_scenario",
    "__version__",
]
