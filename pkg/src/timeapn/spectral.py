"""Discrete Fourier analysis of real signals.

Half-spectrum representation throughout: a real signal of length N is
carried as its K = floor(N/2)+1 non-negative-frequency bins; the full
spectrum is implied by conjugate symmetry. Transforms are backed by
numpy's real FFT, which the test suite pins against a naive summation
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AMP_EPS",
    "AmpPhase",
    "Spectrum",
    "amp_phase",
    "apply_phase_shift",
    "dft",
    "idft",
    "phase_compensate",
    "wrap_phase",
]

AMP_EPS = 1e-12
_IMAG_RESIDUE_TOL = 1e-8
_ENDPOINT_TOL = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Complex half-spectrum of a real signal of length ``source_length``."""

    bins: np.ndarray
    source_length: int

    def __post_init__(self):
        object.__setattr__(self, "bins", np.asarray(self.bins, dtype=np.complex128))
        k = self.source_length // 2 + 1
        if self.bins.shape != (k,):
            raise ValueError(
                f"half spectrum of a length-{self.source_length} signal needs "
                f"{k} bins, got shape {self.bins.shape}"
            )


@dataclass(frozen=True)
class AmpPhase:
    """Amplitude (>= 0) and phase in (-pi, pi] per half-spectrum bin."""

    amplitude: np.ndarray
    phase: np.ndarray


def wrap_phase(theta):
    """Wrap angle(s) into the half-open interval (-pi, pi]."""
    theta = np.asarray(theta, dtype=np.float64)
    wrapped = np.pi - np.mod(np.pi - theta, 2.0 * np.pi)
    return wrapped if wrapped.ndim else float(wrapped)


def dft(x: np.ndarray) -> Spectrum:
    """Forward transform of a real vector: bins[k] = sum_n x[n] e^{-j2pi kn/N}."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"dft expects a non-empty 1-D vector, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("dft input contains non-finite entries")
    return Spectrum(np.fft.rfft(x), x.size)


def idft(spectrum: Spectrum) -> np.ndarray:
    """Inverse transform back to a real vector of length ``source_length``.

    The conjugate-symmetric extension is implicit; a spectrum whose
    endpoint bins carry significant imaginary parts cannot come from a
    real signal and is rejected.
    """
    n = spectrum.source_length
    bins = spectrum.bins
    scale = _IMAG_RESIDUE_TOL * (1.0 + np.abs(bins.real).max(initial=0.0))
    residue = abs(bins[0].imag)
    if n % 2 == 0:
        residue = max(residue, abs(bins[-1].imag))
    if residue > scale:
        raise ValueError(
            f"corrupted spectrum: endpoint imaginary residue {residue:.3e} "
            f"exceeds tolerance {scale:.3e}"
        )
    return np.fft.irfft(bins, n=n)


def amp_phase(spectrum: Spectrum) -> AmpPhase:
    """Split bins into amplitude and four-quadrant phase.

    Bins with amplitude below AMP_EPS get phase 0 by convention (the
    angle of a zero bin is undefined).
    """
    bins = spectrum.bins
    amplitude = np.hypot(bins.real, bins.imag)
    phase = np.where(amplitude < AMP_EPS, 0.0, np.arctan2(bins.imag, bins.real))
    # arctan2 returns [-pi, pi]; fold the closed -pi endpoint to +pi
    phase = np.where(phase == -np.pi, np.pi, phase)
    return AmpPhase(amplitude, phase + 0.0)


def phase_compensate(
    src: Spectrum, amp_ratio: np.ndarray, delta_w: np.ndarray
) -> Spectrum:
    """Bin-wise compensation: out[k] = amp_ratio[k] e^{j delta_w[k]} src[k]."""
    amp_ratio = np.asarray(amp_ratio, dtype=np.float64)
    delta_w = np.asarray(delta_w, dtype=np.float64)
    k = src.bins.shape[0]
    if amp_ratio.shape != (k,) or delta_w.shape != (k,):
        raise ValueError(
            f"compensation vectors must have length {k}, got "
            f"{amp_ratio.shape} and {delta_w.shape}"
        )
    if not np.isfinite(amp_ratio).all() or (amp_ratio < 0).any():
        raise ValueError("amp_ratio must be finite and non-negative")
    out = amp_ratio * np.exp(1j * delta_w) * src.bins
    return Spectrum(out, src.source_length)


def check_real_compatible(delta_w: np.ndarray, horizon: int) -> np.ndarray:
    """Validate a phase shift keeps real output; project pi endpoints to 0.

    At bins 0 and T/2 (T even) the rotation e^{j dw} must be real, i.e.
    dw in {0, pi} up to wrapping; pi is projected to 0, anything else
    breaks conjugate symmetry and is rejected.
    """
    delta_w = np.asarray(delta_w, dtype=np.float64)
    k = horizon // 2 + 1
    if delta_w.shape != (k,):
        raise ValueError(
            f"phase shift for horizon {horizon} needs {k} bins, got shape "
            f"{delta_w.shape}"
        )
    endpoints = [0] + ([k - 1] if horizon % 2 == 0 else [])
    out = delta_w.copy()
    for b in endpoints:
        w = wrap_phase(delta_w[b])
        if min(abs(w), abs(abs(w) - np.pi)) > _ENDPOINT_TOL:
            raise ValueError(
                f"phase shift {delta_w[b]:+.6f} at bin {b} breaks conjugate "
                f"symmetry; endpoint bins admit only 0 (or pi, projected to 0)"
            )
        out[b] = 0.0
    return out


def apply_phase_shift(y: np.ndarray, delta_w: np.ndarray) -> np.ndarray:
    """Rotate each frequency component of y by delta_w and return the real
    signal; equivalent to circular convolution with the inverse transform
    of e^{j delta_w}."""
    y = np.asarray(y, dtype=np.float64)
    delta_w = check_real_compatible(delta_w, y.size)
    if not delta_w.any():
        return y.copy()
    return idft(phase_compensate(dft(y), np.ones_like(delta_w), delta_w))
