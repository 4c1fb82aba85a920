"""Adaptive amplitude-phase normalization for non-stationary forecasting."""

from .config import ExperimentConfig
from .data import Dataset, SynthSpec, generate_synthetic, load_csv, split_standardize
from .estimator import TimeApnForecaster
from .series import SeriesTensor, WindowPair, make_windows, validate
from .train import TrainState, build_state, evaluate, train_model

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "SeriesTensor",
    "SynthSpec",
    "TimeApnForecaster",
    "TrainState",
    "WindowPair",
    "build_state",
    "evaluate",
    "generate_synthetic",
    "load_csv",
    "make_windows",
    "split_standardize",
    "train_model",
    "validate",
    "__version__",
]
