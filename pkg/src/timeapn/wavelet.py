"""Single-level discrete wavelet analysis/synthesis with learnable taps.

Filter taps are graph parameters initialized to the biorthogonal 3.5
bank (analysis low-pass from the rational spline table, synthesis
low-pass the centered cubic-spline filter, high-pass filters by
quadrature mirroring). The transform pair uses half-sample symmetric
extension, stride-2 correlation, and a center crop on reconstruction,
an alignment verified to reconstruct perfectly at initialization for
every length and parity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Parameter,
    Tensor,
    as_tensor,
    concat,
    conv1d,
    pad_last,
    reshape,
    symmetric_extend,
    upsample2,
)

__all__ = ["WaveletFilters", "bior35_bank", "dwt", "idwt", "band_length"]

_SQ2 = np.sqrt(2.0)


def bior35_bank() -> dict[str, np.ndarray]:
    """The bior3.5 filter bank as four 12-tap float64 vectors."""
    dec_lo = _SQ2 / 512.0 * np.array(
        [-5.0, 15.0, 19.0, -97.0, -26.0, 350.0, 350.0, -26.0, -97.0, 19.0, 15.0, -5.0]
    )
    rec_lo = np.zeros(12)
    rec_lo[4:8] = _SQ2 / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    signs = np.where(np.arange(12) % 2 == 0, 1.0, -1.0)
    dec_hi = signs * rec_lo
    rec_hi = -signs * dec_lo
    return {"dec_lo": dec_lo, "dec_hi": dec_hi, "rec_lo": rec_lo, "rec_hi": rec_hi}


@dataclass
class WaveletFilters:
    """Four learnable filter-tap vectors (analysis/synthesis, low/high)."""

    dec_lo: Parameter
    dec_hi: Parameter
    rec_lo: Parameter
    rec_hi: Parameter

    @classmethod
    def bior35(cls) -> "WaveletFilters":
        bank = bior35_bank()
        return cls(**{name: Parameter(taps, name=f"wavelet.{name}") for name, taps in bank.items()})

    @property
    def taps(self) -> int:
        return self.dec_lo.value.size

    def parameters(self) -> list[Parameter]:
        return [self.dec_lo, self.dec_hi, self.rec_lo, self.rec_hi]


def band_length(n: int, taps: int = 12) -> int:
    """Band length produced by dwt for an input of length n."""
    return (n + taps) // 2


def _rev(p: Tensor) -> Tensor:
    return p[::-1]


def dwt_graph(x: Tensor, filters: WaveletFilters) -> tuple[Tensor, Tensor]:
    """Analysis on a batch [B, N] -> (low [B, M], high [B, M]), in-graph."""
    taps = filters.taps
    n = x.shape[-1]
    if n < taps:
        raise ValueError(f"signal length {n} shorter than filter length {taps}")
    ext = symmetric_extend(x, taps - 1)
    ext = reshape(ext, (x.shape[0], 1, ext.shape[-1]))
    w = concat(
        [
            reshape(_rev(filters.dec_lo), (1, 1, taps)),
            reshape(_rev(filters.dec_hi), (1, 1, taps)),
        ],
        axis=0,
    )
    bands = conv1d(ext, w, stride=2)
    return bands[:, 0, :], bands[:, 1, :]


def idwt_graph(
    lo: Tensor, hi: Tensor, filters: WaveletFilters, target_length: int
) -> Tensor:
    """Synthesis from bands [B, M] back to [B, target_length], in-graph."""
    taps = filters.taps
    if lo.shape != hi.shape:
        raise ValueError(f"band shapes differ: {lo.shape} vs {hi.shape}")
    m = lo.shape[-1]
    full = 2 * m + taps - 1
    if full < target_length:
        raise ValueError(
            f"bands of length {m} cannot reconstruct {target_length} samples"
        )
    b = lo.shape[0]
    up = concat(
        [
            reshape(upsample2(lo), (b, 1, 2 * m)),
            reshape(upsample2(hi), (b, 1, 2 * m)),
        ],
        axis=1,
    )
    up = pad_last(up, taps - 1, taps - 1)
    w = concat(
        [
            reshape(_rev(filters.rec_lo), (1, 1, taps)),
            reshape(_rev(filters.rec_hi), (1, 1, taps)),
        ],
        axis=1,
    )
    y = conv1d(up, w)[:, 0, :]
    start = (full - target_length) // 2
    return y[:, start : start + target_length]


def dwt(x: np.ndarray, filters: WaveletFilters) -> tuple[np.ndarray, np.ndarray]:
    """Analysis of a single vector: x [N] -> (low [M], high [M])."""
    x = np.asarray(x, dtype=np.float64)
    lo, hi = dwt_graph(as_tensor(x[None, :]), filters)
    return lo.value[0], hi.value[0]


def idwt(
    lo: np.ndarray, hi: np.ndarray, filters: WaveletFilters, target_length: int
) -> np.ndarray:
    """Synthesis of a single vector pair back to length ``target_length``."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    out = idwt_graph(as_tensor(lo[None, :]), as_tensor(hi[None, :]), filters, target_length)
    return out.value[0]
