"""Experiment harness: configuration, sweeps and result files."""

from .config import ConfigError, ExperimentSpec, parse_config
from .output import CSV_HEADER, emit_csv, emit_plotdata, read_csv
from .sweep import ResultRow, run_sweep

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "ExperimentSpec",
    "ResultRow",
    "emit_csv",
    "emit_plotdata",
    "parse_config",
    "read_csv",
    "run_sweep",
]
