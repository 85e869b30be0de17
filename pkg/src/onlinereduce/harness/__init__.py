"""Experiment configs, the run loop, sweeps, property checks and the CLI."""
from .config import ExperimentConfig, derive_seed, load_config, parse_config
from .run import CSV_HEADER, CurveRow, LossCurve, SweepFailure, run_experiment, sweep
from .verify import CheckResult, verify_suite

__all__ = ["ExperimentConfig", "derive_seed", "load_config", "parse_config", "CSV_HEADER",
           "CurveRow", "LossCurve", "SweepFailure", "run_experiment", "sweep", "CheckResult",
           "verify_suite"]
