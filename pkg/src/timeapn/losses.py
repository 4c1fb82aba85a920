"""Training losses: forecast/mean MSE, wrapped-phase MSE, and amplitude
spectrum MSE.

Each loss has a graph form returning a scalar Tensor (used by training
and gradient checks) and a plain wrapper returning a float. Amplitude
spectra are scaled by 1/T before comparison so the loss magnitude does
not grow with the horizon.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .autodiff import Tensor, as_tensor, magnitude, mean, wrap
from .series import SeriesTensor

__all__ = [
    "amplitude_rows",
    "dft_mats",
    "loss_amplitude",
    "loss_amplitude_graph",
    "loss_forecast",
    "loss_forecast_graph",
    "loss_mean",
    "loss_mean_graph",
    "loss_phase",
    "loss_phase_graph",
]


def _as_graph(x) -> Tensor:
    """Coerce to a graph tensor without severing an existing graph node."""
    if isinstance(x, SeriesTensor):
        return as_tensor(x.data)
    return as_tensor(x)


def _check_shapes(a: Tensor, b: Tensor, what: str):
    if a.shape != b.shape:
        raise ValueError(f"{what} shape mismatch: {a.shape} vs {b.shape}")


def mse_graph(a, b) -> Tensor:
    a, b = _as_graph(a), _as_graph(b)
    _check_shapes(a, b, "mse")
    d = a - b
    return mean(d * d)


def loss_forecast_graph(y_star, y) -> Tensor:
    return mse_graph(y_star, y)


def loss_forecast(y_star, y) -> float:
    """Mean squared error between prediction and ground truth."""
    return loss_forecast_graph(y_star, y).item()


def loss_mean_graph(delta_mu, mu_y) -> Tensor:
    return mse_graph(delta_mu, mu_y)


def loss_mean(delta_mu, mu_y) -> float:
    """MSE between a predicted mean sequence and the future sliding mean."""
    return loss_mean_graph(delta_mu, mu_y).item()


def loss_phase_graph(delta_w, w_y) -> Tensor:
    delta_w, w_y = _as_graph(delta_w), _as_graph(w_y)
    _check_shapes(delta_w, w_y, "phase loss")
    r = wrap(delta_w - w_y)
    return mean(r * r)


def loss_phase(delta_w, w_y) -> float:
    """Mean squared wrapped angular distance over all bins and channels."""
    return loss_phase_graph(delta_w, w_y).item()


@lru_cache(maxsize=8)
def dft_mats(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Real/imaginary DFT matrices: x [B, n] @ mats -> half-spectrum parts.

    re = x @ cos_mat, im = x @ sin_mat reproduce numpy's rfft.
    """
    k = n // 2 + 1
    grid = 2.0 * np.pi * np.outer(np.arange(n), np.arange(k)) / n
    return np.cos(grid), -np.sin(grid)


def amplitude_rows(y) -> Tensor:
    """Half-spectrum amplitudes of each row of a [B, T] tensor, in-graph."""
    y = _as_graph(y)
    cos_mat, sin_mat = dft_mats(y.shape[-1])
    return magnitude(y @ cos_mat, y @ sin_mat)


def loss_amplitude_graph(y_star, y) -> Tensor:
    ys, yt = _as_graph(y_star), _as_graph(y)
    _check_shapes(ys, yt, "amplitude loss")
    t = ys.shape[-1]
    return mse_graph(amplitude_rows(ys) * (1.0 / t), amplitude_rows(yt) * (1.0 / t))


def loss_amplitude(y_star, y) -> float:
    """MSE between 1/T-scaled amplitude spectra of prediction and truth."""
    return loss_amplitude_graph(y_star, y).item()
