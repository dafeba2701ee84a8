"""Experiment configuration, seeded Monte Carlo runs, statistics and the CLI."""

from .config import (
    DEFAULT_TRIALS,
    Experiment,
    ExperimentConfig,
    InterpretationChoice,
    build_config,
    load_config,
    read_config_file,
)
from .experiments import (
    ExperimentResult,
    SummaryRow,
    TrialRecord,
    render_summary,
    run_experiment,
    run_trials,
    sweep,
    write_csv,
)
from .seeding import derive_trial_seed, trial_rng
from .stats import Proportion, wilson_interval

__all__ = [
    "DEFAULT_TRIALS",
    "Experiment",
    "ExperimentConfig",
    "ExperimentResult",
    "InterpretationChoice",
    "Proportion",
    "SummaryRow",
    "TrialRecord",
    "build_config",
    "derive_trial_seed",
    "load_config",
    "read_config_file",
    "render_summary",
    "run_experiment",
    "run_trials",
    "sweep",
    "trial_rng",
    "wilson_interval",
    "write_csv",
]
