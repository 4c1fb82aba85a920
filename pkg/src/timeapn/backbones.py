"""Pluggable forecasting backbones and the RevIN-style baseline wrapper.

A backbone maps a [C, L] stationary window to a [C, T] horizon with
weights shared across channels (channels ride the batch axis). The
RevIN baseline z-scores each channel by its own window statistics,
forecasts, and inverts with the same statistics plus a learnable
per-channel affine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tensor, as_tensor, matmul, relu, reshape
from .series import SeriesTensor

__all__ = [
    "LinearFM",
    "MlpFM",
    "RevInBaseline",
    "build_backbone",
    "forecast",
    "forecast_graph",
    "revin_wrap",
    "revin_wrap_graph",
]

REVIN_STD_FLOOR = 1e-5


@dataclass
class LinearFM:
    """Channel-shared affine map from look-back to horizon."""

    w: Parameter  # [L, T]
    b: Parameter  # [T]

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def forward(self, x: Tensor) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.w.shape[0]:
            raise ValueError(
                f"backbone expects lookback {self.w.shape[0]}, got {x.shape[-1]}"
            )
        return x @ self.w + self.b


@dataclass
class MlpFM:
    """Two affine layers with a rectifier, widths L -> H -> T."""

    w1: Parameter
    b1: Parameter
    w2: Parameter
    b2: Parameter

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, x: Tensor) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.w1.shape[0]:
            raise ValueError(
                f"backbone expects lookback {self.w1.shape[0]}, got {x.shape[-1]}"
            )
        return relu(x @ self.w1 + self.b1) @ self.w2 + self.b2


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def build_backbone(
    kind: str, rng: np.random.Generator, lookback: int, horizon: int, hidden: int = 256
):
    if kind == "linear":
        return LinearFM(
            w=Parameter(_uniform(rng, (lookback, horizon), lookback), "fm.w"),
            b=Parameter(np.zeros(horizon), "fm.b"),
        )
    if kind == "mlp":
        return MlpFM(
            w1=Parameter(_uniform(rng, (lookback, hidden), lookback), "fm.w1"),
            b1=Parameter(np.zeros(hidden), "fm.b1"),
            w2=Parameter(_uniform(rng, (hidden, horizon), hidden), "fm.w2"),
            b2=Parameter(np.zeros(horizon), "fm.b2"),
        )
    raise ValueError(f"unknown backbone {kind!r}")


def forecast_graph(model, x: Tensor) -> Tensor:
    return model.forward(x)


def forecast(model, x: SeriesTensor) -> SeriesTensor:
    """Forward a [C, L] window through the backbone to a [C, T] horizon."""
    out = model.forward(as_tensor(x.data))
    return SeriesTensor(out.value, x.channel_names)


@dataclass
class RevInBaseline:
    """Instance normalization wrapper with a learnable per-channel affine."""

    model: LinearFM | MlpFM
    gamma: Parameter  # [C]
    delta: Parameter  # [C]

    def parameters(self) -> list[Parameter]:
        return [*self.model.parameters(), self.gamma, self.delta]

    @classmethod
    def wrap(cls, model, channels: int) -> "RevInBaseline":
        return cls(
            model=model,
            gamma=Parameter(np.ones(channels), "revin.gamma"),
            delta=Parameter(np.zeros(channels), "revin.delta"),
        )


def _window_stats(data: np.ndarray):
    m = data.mean(axis=-1, keepdims=True)
    sd = np.sqrt(data.var(axis=-1, keepdims=True))
    return m, np.maximum(sd, REVIN_STD_FLOOR)


def revin_wrap_graph(baseline: RevInBaseline, x: np.ndarray) -> Tensor:
    """Normalize -> forecast -> de-normalize for a stack of window rows.

    ``x`` is a [B*C, L] array whose rows cycle through the C channels;
    window statistics are treated as constants (no gradient), matching
    the detached-statistics convention of instance normalization.
    """
    c = baseline.gamma.shape[0]
    rows = x.shape[0]
    if rows % c != 0:
        raise ValueError(f"{rows} rows do not tile {c} channels")
    m, sd = _window_stats(x)
    tile = np.tile(np.eye(c), (rows // c, 1))
    gamma_col = matmul(tile, reshape(baseline.gamma, (c, 1)))
    delta_col = matmul(tile, reshape(baseline.delta, (c, 1)))
    z = as_tensor((x - m) / sd) * gamma_col + delta_col
    out = baseline.model.forward(z)
    return (out - delta_col) / (gamma_col + REVIN_STD_FLOOR**2) * sd + m


def revin_wrap(baseline: RevInBaseline, x: SeriesTensor) -> SeriesTensor:
    """Single-window wrapper over [C, L] data."""
    out = revin_wrap_graph(baseline, x.data)
    return SeriesTensor(out.value, x.channel_names)
