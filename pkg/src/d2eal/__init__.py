"""Decentralized expert-assisted learning fusion for cooperative target tracking."""

from .config import ConfigError, ScenarioConfig, load_config, benchmark_scenario, parse_config
from .harness import (
    CampaignError,
    NumericalFailure,
    compare_strategies,
    monte_carlo,
    run_once,
    scalability_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "CampaignError",
    "ConfigError",
    "NumericalFailure",
    "ScenarioConfig",
    "__version__",
    "compare_strategies",
    "load_config",
    "monte_carlo",
    "benchmark_scenario",
    "parse_config",
    "run_once",
    "scalability_sweep",
]
