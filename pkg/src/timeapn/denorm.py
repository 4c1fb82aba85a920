"""Reversible de-normalization: fuse predicted means across domains,
rotate the backbone output by the predicted phase drift, add the mean.

The rotation is spectral multiplication by e^{j dw} (circular
convolution in time), which makes the map an exact bijection of the
backbone output: the inverse subtracts the mean and rotates by -dw.
The amplitude-compensation factor of the general spectral compensation
is deliberately absent; amplitude is supervised in the loss instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, as_tensor, cos, sin
from .losses import dft_mats
from .series import SeriesTensor
from .spectral import apply_phase_shift, check_real_compatible

__all__ = ["DenormInputs", "denormalize", "denormalize_graph", "phase_shift_rows_graph"]


@dataclass
class DenormInputs:
    """Everything needed to restore non-stationarity to a backbone output."""

    y_bar: SeriesTensor          # [C, T]
    delta_mu_t: np.ndarray       # [C, T]
    delta_mu_f: np.ndarray       # [C, T]
    delta_w: np.ndarray          # [C, floor(T/2)+1]
    alpha: float


def phase_shift_rows_graph(y: Tensor, delta_w) -> Tensor:
    """Rotate each row of y [B, T] by its own phase-shift row, in-graph.

    A delta_w of exactly zero short-circuits to the identity, keeping
    the zero-init pipeline bit-exact.
    """
    y = as_tensor(y)
    t = y.shape[-1]
    # endpoint bins admit only 0 (pi projects to 0); the mask enforces the
    # projection structurally, so in-graph shifts stay real by construction.
    # Constant shifts keep the strict contract and reject anything else.
    endpoint_mask = np.ones(t // 2 + 1)
    endpoint_mask[0] = 0.0
    if t % 2 == 0:
        endpoint_mask[-1] = 0.0
    if not isinstance(delta_w, Tensor):
        dw_val = np.asarray(delta_w, dtype=np.float64)
        for row in np.atleast_2d(dw_val):
            check_real_compatible(row, t)
        if not (dw_val * endpoint_mask).any():
            return y
    dw = as_tensor(delta_w) * endpoint_mask
    cos_mat, sin_mat = dft_mats(t)
    re, im = y @ cos_mat, y @ sin_mat
    c, s = cos(dw), sin(dw)
    re_rot = re * c - im * s
    im_rot = re * s + im * c
    weights = np.full(t // 2 + 1, 2.0)
    weights[0] = 1.0
    if t % 2 == 0:
        weights[-1] = 1.0
    return ((re_rot * weights) @ cos_mat.T + (im_rot * weights) @ sin_mat.T) * (1.0 / t)


def denormalize_graph(
    y_bar: Tensor, delta_mu_t, delta_mu_f, delta_w, alpha
) -> Tensor:
    """Graph form over row-stacked channels; factors may be constants."""
    alpha_t = as_tensor(alpha)
    delta_mu = alpha_t * as_tensor(delta_mu_t) + (1.0 - alpha_t) * as_tensor(delta_mu_f)
    return phase_shift_rows_graph(y_bar, delta_w) + delta_mu


def denormalize(inputs: DenormInputs) -> SeriesTensor:
    """Restore the predicted future series from the backbone output."""
    y_bar = inputs.y_bar.data
    c, t = y_bar.shape
    for name, arr, want in (
        ("delta_mu_t", inputs.delta_mu_t, (c, t)),
        ("delta_mu_f", inputs.delta_mu_f, (c, t)),
        ("delta_w", inputs.delta_w, (c, t // 2 + 1)),
    ):
        if np.asarray(arr).shape != want:
            raise ValueError(
                f"{name} shape {np.asarray(arr).shape} does not match {want}"
            )
    delta_mu = inputs.alpha * inputs.delta_mu_t + (1.0 - inputs.alpha) * inputs.delta_mu_f
    rows = [
        apply_phase_shift(y_bar[ch], inputs.delta_w[ch]) + delta_mu[ch]
        for ch in range(c)
    ]
    return SeriesTensor(np.stack(rows), inputs.y_bar.channel_names)
