"""Benchmark harness: configs, experiments and the ``nystrom-bench`` CLI."""
from .config import ExperimentConfig, MethodSpec, load_config, parse_config, parse_method
from .experiments import (
    BoundsReport,
    ErrorCurve,
    EmbeddingRun,
    run_embedding_experiment,
    run_error_experiment,
    verify_bounds,
)

__all__ = [
    "BoundsReport",
    "EmbeddingRun",
    "ErrorCurve",
    "ExperimentConfig",
    "MethodSpec",
    "load_config",
    "parse_config",
    "parse_method",
    "run_embedding_experiment",
    "run_error_experiment",
    "verify_bounds",
]
