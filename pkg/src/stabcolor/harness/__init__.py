"""Experiment configuration, sweeps, exports and the acceptance battery."""

from .config import ConfigError, ExperimentConfig, build_config
from .experiment import ExperimentResult, run_experiment
from .export import export_dot

__all__ = ["ConfigError", "ExperimentConfig", "ExperimentResult", "build_config", "export_dot", "run_experiment"]
