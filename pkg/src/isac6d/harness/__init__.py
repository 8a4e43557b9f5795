"""Experiment driver: configuration, Monte Carlo sweeps, reports and the CLI."""

from .config import ConfigError, SimConfig, config_from_mapping, load_config, save_config
from .report import COLUMNS, read_report, write_report
from .sweep import (RmseReport, RmseRow, TrialFailure, run_sweep, run_trial, simulate_trial,
                    trial_seed, trial_streams, trial_symbols)
from .validate import CheckResult, run_invariants
