"""Experiment configuration, drivers and result artifacts."""

from trsearch.harness.ablation import AblationResult, run_ablation
from trsearch.harness.compare import compare
from trsearch.harness.config import (
    ABLATION_KINDS,
    AblationSettings,
    ExperimentConfig,
    NamedOptimizer,
    load_config,
    parse_config,
)
from trsearch.harness.experiment import ExperimentResult, run_experiment

__all__ = [
    "ABLATION_KINDS",
    "AblationResult",
    "AblationSettings",
    "ExperimentConfig",
    "ExperimentResult",
    "NamedOptimizer",
    "compare",
    "load_config",
    "parse_config",
    "run_ablation",
    "run_experiment",
]
