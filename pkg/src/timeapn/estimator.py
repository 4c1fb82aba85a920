"""Scikit-learn style forecaster facade.

`TimeApnForecaster` wraps the whole pipeline behind fit/predict with
constructor hyperparameters, so it clones and composes like any other
estimator. `fit` takes a channels x timesteps series, standardizes it
internally, and runs the configured training protocol; `predict` maps a
look-back window (or a stack of them) to the forecast horizon on the
original scale.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import ExperimentConfig
from .data import STD_FLOOR
from .series import SeriesTensor, make_windows, validate
from .train import build_state, predict_batch, train_model

__all__ = ["TimeApnForecaster"]


class TimeApnForecaster(BaseEstimator):
    """Forecaster with reversible amplitude/phase normalization.

    Parameters mirror the experiment configuration; ``norm`` selects the
    pipeline: "timeapn" (two-stage), "revin" (instance-normalized
    baseline), or "none" (bare backbone).
    """

    def __init__(
        self,
        lookback: int = 96,
        horizon: int = 96,
        window_half_width: int = 12,
        backbone: str = "linear",
        norm: str = "timeapn",
        batch_size: int = 32,
        epochs_stage1: int = 30,
        epochs_stage2: int = 30,
        learning_rate: float = 1e-3,
        seed: int = 0,
        alpha_init: float = 1.0,
        beta_init: float = 1.0,
        mean_hidden: int = 128,
        fm_hidden: int = 256,
        phase_channels: int = 32,
        patience: int = 5,
        val_fraction: float = 0.1,
    ):
        self.lookback = lookback
        self.horizon = horizon
        self.window_half_width = window_half_width
        self.backbone = backbone
        self.norm = norm
        self.batch_size = batch_size
        self.epochs_stage1 = epochs_stage1
        self.epochs_stage2 = epochs_stage2
        self.learning_rate = learning_rate
        self.seed = seed
        self.alpha_init = alpha_init
        self.beta_init = beta_init
        self.mean_hidden = mean_hidden
        self.fm_hidden = fm_hidden
        self.phase_channels = phase_channels
        self.patience = patience
        self.val_fraction = val_fraction

    def _make_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            lookback=self.lookback,
            horizon=self.horizon,
            window_half_width=self.window_half_width,
            batch_size=self.batch_size,
            epochs_stage1=self.epochs_stage1,
            epochs_stage2=self.epochs_stage2,
            learning_rate=self.learning_rate,
            seed=self.seed,
            alpha_init=self.alpha_init,
            beta_init=self.beta_init,
            backbone=self.backbone,
            norm=self.norm,
            mean_hidden=self.mean_hidden,
            fm_hidden=self.fm_hidden,
            phase_channels=self.phase_channels,
            patience=self.patience,
        )

    def fit(self, X, y=None):
        """Train on a channels x timesteps series (1-D means one channel)."""
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")
        series = SeriesTensor(np.asarray(X, dtype=np.float64))
        validate(series)
        config = self._make_config()
        need = config.lookback + config.horizon
        n = series.length
        cut = n - int(n * self.val_fraction) if self.val_fraction else n
        if cut < need:
            raise ValueError(
                f"series of length {n} too short for lookback {config.lookback} "
                f"plus horizon {config.horizon} after the validation holdout"
            )
        self.mean_ = series.data[:, :cut].mean(axis=1)
        self.std_ = np.maximum(series.data[:, :cut].std(axis=1), STD_FLOOR)
        z = (series.data - self.mean_[:, None]) / self.std_[:, None]
        train_part = SeriesTensor(z[:, :cut])
        val_part = SeriesTensor(z[:, cut:]) if n - cut >= need else None
        train_pairs = make_windows(train_part, config.lookback, config.horizon)
        val_pairs = (
            make_windows(val_part, config.lookback, config.horizon)
            if val_part is not None
            else None
        )
        self.n_channels_ = series.channels
        self.state_ = build_state(config, series.channels)
        train_model(self.state_, train_pairs, val_pairs)
        return self

    def predict(self, X):
        """Forecast horizons for a [C, L] window or an [n, C, L] stack."""
        check_is_fitted(self, "state_")
        arr = np.asarray(X, dtype=np.float64)
        single = arr.ndim <= 2
        if arr.ndim == 1:
            arr = arr[None, None, :]
        elif arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.shape[1] != self.n_channels_ or arr.shape[2] != self.lookback:
            raise ValueError(
                f"expected windows of shape [{self.n_channels_}, {self.lookback}], "
                f"got {arr.shape[1:]}"
            )
        z = (arr - self.mean_[None, :, None]) / self.std_[None, :, None]
        out = predict_batch(self.state_, z)
        out = out * self.std_[None, :, None] + self.mean_[None, :, None]
        return out[0] if single else out
