"""Replica placement simulator for heterogeneous Skip Graph storage."""

from .config import ScenarioConfig, load_config
from .harness import run_scenario, simulate, sweep

__all__ = ["ScenarioConfig", "load_config", "run_scenario", "simulate", "sweep"]
