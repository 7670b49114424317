"""Config-driven experiments: build, solve, check, fit, report."""
from .config import ALL_CHECKS, load_config, validate_config
from .runner import ExperimentReport, emit_plotdata, load_report, run, run_config, sweep

__all__ = ["ALL_CHECKS", "ExperimentReport", "emit_plotdata", "load_config", "load_report",
           "run", "run_config", "sweep", "validate_config"]
