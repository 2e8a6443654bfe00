"""Subspace one-class classification: SVDD, SSVDD and graph-embedded
subspace SVDD with kernelization through the non-linear projection trick."""
from .dataio import (
    NormStats,
    ResampleSpec,
    TransactionTable,
    fit_norm_stats,
    load_table,
    normalize,
    resample,
    split,
)
from .errors import ConvergenceError, DataError, NumericalError, OccError, UsageError
from .evaluation import ConfusionCounts, grid_search, metrics, run_benchmark
from .persistence import load_model, save_model
from .subspace import TrainConfig, TrainedModel, predict, train
from .svdd import SphereModel, fit_sphere, solve_dual
from .variants import ModelSpec, format_spec, parse_spec

__version__ = "0.1.0"

__all__ = [
    "NormStats",
    "ResampleSpec",
    "TransactionTable",
    "fit_norm_stats",
    "load_table",
    "normalize",
    "resample",
    "split",
    "ConvergenceError",
    "DataError",
    "NumericalError",
    "OccError",
    "UsageError",
    "ConfusionCounts",
    "grid_search",
    "metrics",
    "run_benchmark",
    "load_model",
    "save_model",
    "TrainConfig",
    "TrainedModel",
    "predict",
    "train",
    "SphereModel",
    "fit_sphere",
    "solve_dual",
    "ModelSpec",
    "format_spec",
    "parse_spec",
]
