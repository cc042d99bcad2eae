"""Experiment harness: instance generators, the seeded runner and the CLI."""
from .config import ExperimentConfig, load_config
from .example31 import run_example_3_1
from .generators import gen_detection_instance, gen_regression_instance
from .runner import TrialRecord, run_experiment, run_snbr_sweep, run_trial

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "gen_detection_instance",
    "gen_regression_instance",
    "load_config",
    "run_example_3_1",
    "run_experiment",
    "run_snbr_sweep",
    "run_trial",
]
