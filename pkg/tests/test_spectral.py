import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timeapn.spectral import (
    AMP_EPS,
    Spectrum,
    amp_phase,
    apply_phase_shift,
    dft,
    idft,
    phase_compensate,
    wrap_phase,
)


def naive_dft(x):
    """O(N^2) direct summation over the half spectrum."""
    n = len(x)
    k = np.arange(n // 2 + 1)
    ang = -2j * np.pi * np.outer(k, np.arange(n)) / n
    return np.exp(ang) @ x


def test_dft_constant_signal():
    spec = dft(np.array([1.0, 1.0, 1.0, 1.0]))
    assert np.allclose(spec.bins, [4.0, 0.0, 0.0], atol=1e-12)


def test_dft_single_tone():
    spec = dft(np.array([1.0, 0.0, -1.0, 0.0]))
    assert np.allclose(spec.bins, [0.0, 2.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("n", list(range(1, 17)) + [95, 96, 336])
def test_dft_matches_naive_summation(n):
    x = np.random.default_rng(n).uniform(-1.0, 1.0, n)
    assert np.abs(dft(x).bins - naive_dft(x)).max() < 1e-9


def test_dft_rejects_bad_input():
    with pytest.raises(ValueError, match="non-finite"):
        dft(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        dft(np.zeros((2, 3)))


def test_idft_examples():
    assert np.allclose(idft(Spectrum([4.0, 0.0, 0.0], 4)), [1.0, 1.0, 1.0, 1.0])
    assert np.allclose(idft(Spectrum([0.0, 2.0, 0.0], 4)), [1.0, 0.0, -1.0, 0.0])


def test_idft_rejects_corrupted_spectrum():
    with pytest.raises(ValueError, match="residue"):
        idft(Spectrum([1.0 + 1.0j, 0.0, 0.0], 4))


@pytest.mark.parametrize("n", range(1, 513))
def test_roundtrip_all_lengths(n):
    x = np.random.default_rng(n).standard_normal(n)
    assert np.abs(idft(dft(x)) - x).max() < 1e-9


def test_linearity():
    rng = np.random.default_rng(3)
    x, z = rng.standard_normal(96), rng.standard_normal(96)
    lhs = dft(2.5 * x - 1.25 * z).bins
    rhs = 2.5 * dft(x).bins - 1.25 * dft(z).bins
    assert np.abs(lhs - rhs).max() < 1e-9


@pytest.mark.parametrize("n", [5, 64, 96, 97])
def test_parseval(n):
    x = np.random.default_rng(n).standard_normal(n)
    bins = dft(x).bins
    full = np.abs(bins[0]) ** 2
    if n % 2 == 0:
        full += np.abs(bins[-1]) ** 2
        full += 2.0 * np.sum(np.abs(bins[1:-1]) ** 2)
    else:
        full += 2.0 * np.sum(np.abs(bins[1:]) ** 2)
    time_energy = np.sum(x * x)
    assert abs(time_energy - full / n) / time_energy < 1e-7


def test_amp_phase_345():
    ap = amp_phase(Spectrum([3.0 + 4.0j, 0.0, 0.0], 4))
    assert np.isclose(ap.amplitude[0], 5.0)
    assert np.isclose(ap.phase[0], 0.9272952180016122)


def test_amp_phase_zero_convention():
    ap = amp_phase(Spectrum([4.0, 0.0, 0.0], 4))
    assert np.allclose(ap.amplitude, [4.0, 0.0, 0.0])
    assert np.array_equal(ap.phase, [0.0, 0.0, 0.0])


def test_amp_phase_elementwise_oracle():
    rng = np.random.default_rng(9)
    bins = rng.standard_normal(17) + 1j * rng.standard_normal(17)
    ap = amp_phase(Spectrum(bins, 32))
    assert np.array_equal(ap.amplitude, np.hypot(bins.real, bins.imag))
    assert np.array_equal(ap.phase, np.arctan2(bins.imag, bins.real))


def test_amp_phase_recompose():
    x = np.random.default_rng(10).standard_normal(96)
    spec = dft(x)
    ap = amp_phase(spec)
    recomposed = ap.amplitude * np.exp(1j * ap.phase)
    live = ap.amplitude >= AMP_EPS
    assert np.abs(recomposed[live] - spec.bins[live]).max() < 1e-9


def test_phase_compensate_identity_and_gain():
    x = np.random.default_rng(11).standard_normal(32)
    spec = dft(x)
    k = spec.bins.size
    same = phase_compensate(spec, np.ones(k), np.zeros(k))
    assert np.array_equal(same.bins, spec.bins)
    doubled = phase_compensate(spec, np.full(k, 2.0), np.zeros(k))
    assert np.allclose(doubled.bins, 2.0 * spec.bins)


def test_phase_compensate_undoes_circular_shift():
    rng = np.random.default_rng(12)
    x = rng.standard_normal(48)
    d = 7
    shifted = dft(np.roll(x, d))
    k = np.arange(48 // 2 + 1)
    out = phase_compensate(shifted, np.ones(k.size), 2.0 * np.pi * k * d / 48.0)
    assert np.abs(idft(out) - x).max() < 1e-8


def test_phase_compensate_validates():
    spec = dft(np.ones(8))
    with pytest.raises(ValueError, match="length"):
        phase_compensate(spec, np.ones(3), np.zeros(3))
    with pytest.raises(ValueError, match="non-negative"):
        phase_compensate(spec, -np.ones(5), np.zeros(5))


def test_apply_phase_shift_zero_is_identity():
    y = np.random.default_rng(13).standard_normal(24)
    out = apply_phase_shift(y, np.zeros(13))
    assert np.abs(out - y).max() < 1e-12


def test_apply_phase_shift_zero_signal():
    assert np.array_equal(apply_phase_shift(np.zeros(10), np.zeros(6)), np.zeros(10))


@pytest.mark.parametrize("t,d", [(24, 5), (25, 3)])
def test_apply_phase_shift_matches_circular_shift(t, d):
    # band-limited signal: no DC or Nyquist content, so the clamped
    # endpoint bins carry nothing
    rng = np.random.default_rng(t)
    k = t // 2 + 1
    bins = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    bins[0] = 0.0
    if t % 2 == 0:
        bins[-1] = 0.0
    y = idft(Spectrum(bins, t))
    delta = wrap_phase(2.0 * np.pi * np.arange(k) * d / t)
    delta[0] = 0.0
    if t % 2 == 0:
        delta[-1] = 0.0
    out = apply_phase_shift(y, delta)
    assert np.abs(out - np.roll(y, -d)).max() < 1e-8


def test_apply_phase_shift_endpoint_rules():
    y = np.random.default_rng(14).standard_normal(16)
    bad = np.zeros(9)
    bad[0] = 0.3
    with pytest.raises(ValueError, match="conjugate symmetry"):
        apply_phase_shift(y, bad)
    # pi at an endpoint is real-compatible and projects to zero
    pied = np.zeros(9)
    pied[0] = np.pi
    assert np.abs(apply_phase_shift(y, pied) - y).max() < 1e-12


def test_shift_composition():
    rng = np.random.default_rng(15)
    t = 30
    k = t // 2 + 1
    y = rng.standard_normal(t)
    w1 = rng.uniform(-np.pi, np.pi, k)
    w2 = rng.uniform(-np.pi, np.pi, k)
    for w in (w1, w2):
        w[0] = 0.0
        w[-1] = 0.0
    once = apply_phase_shift(apply_phase_shift(y, w1), w2)
    combined = apply_phase_shift(y, wrap_phase(w1 + w2))
    assert np.abs(once - combined).max() < 1e-8


def test_wrap_phase_examples():
    assert wrap_phase(0.0) == 0.0
    assert np.isclose(wrap_phase(3 * np.pi / 2), -np.pi / 2)
    assert wrap_phase(-np.pi) == np.pi
    assert wrap_phase(np.pi) == np.pi


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-50.0, max_value=50.0))
def test_wrap_phase_properties(theta):
    w = wrap_phase(theta)
    assert -np.pi < w <= np.pi
    assert np.isclose(np.mod(w - theta, 2.0 * np.pi) % (2.0 * np.pi), 0.0, atol=1e-9) or np.isclose(
        np.mod(w - theta, 2.0 * np.pi), 2.0 * np.pi, atol=1e-9
    )
