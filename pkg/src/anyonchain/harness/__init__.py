"""Preset-driven experiment runner and command line interface."""
from .config import ConfigError, ExperimentConfig, PRESETS, load_config, validate_config
from .runner import DimensionCeilingError, RunManifest, run_experiment

__all__ = ["ConfigError", "DimensionCeilingError", "ExperimentConfig", "PRESETS",
           "RunManifest", "load_config", "run_experiment", "validate_config"]
