"""Mean/phase normalization: the front end that splits a window into a
stationary sequence plus non-stationary factors.

Each channel is processed independently. The time-domain branch removes
a centered sliding mean and extracts the residual's spectral phase; the
frequency branch applies the same mean removal per wavelet band and
reconstructs. The two stationary sequences are fused by a learnable
scalar weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, as_tensor, concat
from .series import SeriesTensor
from .spectral import AMP_EPS, amp_phase, dft
from .wavelet import WaveletFilters, dwt_graph, idwt_graph

__all__ = [
    "NormBundle",
    "band_half_width",
    "freq_domain_normalize",
    "fuse",
    "mean_norm_phase",
    "normalize_window",
    "phases_rows",
    "sliding_mean",
    "time_domain_normalize",
]


@dataclass
class NormBundle:
    """Non-stationary factors of one window: fused stationary input,
    per-domain mean sequences, and the time-branch residual phase."""

    stationary: np.ndarray  # [C, L] fused input for the backbone
    mean_t: np.ndarray      # [C, L]
    mean_f: np.ndarray      # [C, L]
    phase_t: np.ndarray     # [C, floor(L/2)+1]


def band_half_width(s: int) -> int:
    """Half-width used on half-length wavelet bands."""
    return max(1, s // 2)


def _check_window(length: int, s: int) -> None:
    if s < 0:
        raise ValueError("window half-width must be non-negative")
    if 2 * s + 1 > length:
        raise ValueError(
            f"sliding window 2*{s}+1 exceeds series length {length}"
        )


def sliding_mean(x: np.ndarray, s: int) -> np.ndarray:
    """Centered moving average with replication-padded boundaries.

    Interior entries t in [s, L-1-s] average x over [t-s, t+s]; the first
    and last s entries replicate the nearest interior mean.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = _sliding_mean_rows(x[None, :] if x.ndim == 1 else x, s)
    return rows[0] if x.ndim == 1 else rows


def _sliding_mean_rows(x: np.ndarray, s: int) -> np.ndarray:
    _check_window(x.shape[-1], s)
    if s == 0:
        return x.copy()
    interior = np.lib.stride_tricks.sliding_window_view(x, 2 * s + 1, axis=-1).mean(
        axis=-1
    )
    left = np.repeat(interior[..., :1], s, axis=-1)
    right = np.repeat(interior[..., -1:], s, axis=-1)
    return np.concatenate([left, interior, right], axis=-1)


def sliding_mean_graph(x: Tensor, s: int) -> Tensor:
    """In-graph sliding mean over the last axis of a [B, L] tensor."""
    length = x.shape[-1]
    _check_window(length, s)
    if s == 0:
        return x
    width = 2 * s + 1
    interior = x[:, 0 : length - 2 * s]
    for j in range(1, width):
        interior = interior + x[:, j : j + length - 2 * s]
    interior = interior * (1.0 / width)
    parts = [interior[:, 0:1]] * s + [interior] + [interior[:, -1:]] * s
    return concat(parts, axis=-1)


def phases_rows(rows: np.ndarray) -> np.ndarray:
    """Half-spectrum phase of each row, matching amp_phase conventions."""
    bins = np.fft.rfft(np.asarray(rows, dtype=np.float64), axis=-1)
    amp = np.abs(bins)
    phase = np.where(amp < AMP_EPS, 0.0, np.arctan2(bins.imag, bins.real))
    return np.where(phase == -np.pi, np.pi, phase) + 0.0


def mean_norm_phase(x: np.ndarray, s: int):
    """Split a vector into (residual, sliding mean, residual phase)."""
    x = np.asarray(x, dtype=np.float64)
    mu = sliding_mean(x, s)
    xbar = x - mu
    return xbar, mu, amp_phase(dft(xbar)).phase


def time_domain_normalize(x: np.ndarray, s: int):
    return mean_norm_phase(x, s)


def freq_norm_graph(x: Tensor, filters: WaveletFilters, s: int):
    """Frequency-branch normalization on a [B, L] tensor, in-graph.

    Returns (stationary, mean), both [B, L]. Band phases are discarded;
    only the means survive reconstruction.
    """
    length = x.shape[-1]
    lo, hi = dwt_graph(x, filters)
    sb = band_half_width(s)
    mu_lo = sliding_mean_graph(lo, sb)
    mu_hi = sliding_mean_graph(hi, sb)
    xbar_f = idwt_graph(lo - mu_lo, hi - mu_hi, filters, length)
    mu_f = idwt_graph(mu_lo, mu_hi, filters, length)
    return xbar_f, mu_f


def freq_domain_normalize(x: np.ndarray, filters: WaveletFilters, s: int):
    """Frequency-branch normalization of a single vector."""
    x = np.asarray(x, dtype=np.float64)
    xbar_f, mu_f = freq_norm_graph(as_tensor(x[None, :]), filters, s)
    return xbar_f.value[0], mu_f.value[0]


def fuse(xbar_t: np.ndarray, xbar_f: np.ndarray, alpha: float) -> np.ndarray:
    """Weighted combination alpha * time-branch + (1 - alpha) * freq-branch."""
    xbar_t = np.asarray(xbar_t, dtype=np.float64)
    xbar_f = np.asarray(xbar_f, dtype=np.float64)
    if xbar_t.shape != xbar_f.shape:
        raise ValueError(f"fuse shape mismatch: {xbar_t.shape} vs {xbar_f.shape}")
    return alpha * xbar_t + (1.0 - alpha) * xbar_f


def normalize_window(
    x: SeriesTensor, filters: WaveletFilters, s: int, alpha: float
) -> NormBundle:
    """Apply both normalization branches to a [C, L] window."""
    data = x.data
    mu_t = _sliding_mean_rows(data, s)
    xbar_t = data - mu_t
    phase_t = phases_rows(xbar_t)
    xbar_f_t, mu_f_t = freq_norm_graph(as_tensor(data), filters, s)
    stationary = fuse(xbar_t, xbar_f_t.value, alpha)
    return NormBundle(stationary, mu_t, mu_f_t.value, phase_t)
