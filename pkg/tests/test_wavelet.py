import numpy as np
import pytest

from timeapn.autodiff import as_tensor, backward, total_sum
from timeapn.wavelet import WaveletFilters, band_length, bior35_bank, dwt, dwt_graph, idwt, idwt_graph

from conftest import central_diff_check


# Published biorthogonal 3.5 table, frozen as a fixture. The analysis
# low-pass entries are sqrt(2)/512 * {-5, 15, 19, -97, -26, 350, ...};
# the synthesis low-pass is the centered cubic-spline filter.
FIXTURE_DEC_LO = np.array([
    -0.013810679320049757, 0.04143203796014927, 0.05248058141618908,
    -0.26792717880896527, -0.07181553246425873, 0.966747552403483,
    0.966747552403483, -0.07181553246425873, -0.26792717880896527,
    0.05248058141618908, 0.04143203796014927, -0.013810679320049757,
])
FIXTURE_REC_LO = np.array([
    0.0, 0.0, 0.0, 0.0,
    0.17677669529663687, 0.5303300858899106, 0.5303300858899106,
    0.17677669529663687, 0.0, 0.0, 0.0, 0.0,
])


@pytest.fixture
def filters():
    return WaveletFilters.bior35()


def test_bank_matches_frozen_fixture():
    bank = bior35_bank()
    assert np.abs(bank["dec_lo"] - FIXTURE_DEC_LO).max() < 1e-15
    assert np.abs(bank["rec_lo"] - FIXTURE_REC_LO).max() < 1e-15
    signs = (-1.0) ** np.arange(12)
    assert np.array_equal(bank["dec_hi"], signs * bank["rec_lo"])
    assert np.array_equal(bank["rec_hi"], -signs * bank["dec_lo"])
    # low-pass filters sum to sqrt(2); high-pass annihilate constants
    assert np.isclose(bank["dec_lo"].sum(), np.sqrt(2.0))
    assert np.isclose(bank["rec_lo"].sum(), np.sqrt(2.0))
    assert abs(bank["dec_hi"].sum()) < 1e-15
    assert abs(bank["rec_hi"].sum()) < 1e-15


@pytest.mark.parametrize("n", [12, 13, 25, 96, 97, 336, 511, 512])
def test_perfect_reconstruction(filters, n):
    x = np.random.default_rng(n).standard_normal(n)
    lo, hi = dwt(x, filters)
    assert lo.size == hi.size == band_length(n)
    assert np.abs(idwt(lo, hi, filters, n) - x).max() < 1e-6


def test_constant_annihilated_by_high_band(filters):
    lo, hi = dwt(np.full(96, 5.3), filters)
    assert np.abs(hi).max() < 1e-6


def test_zero_maps_to_zero(filters):
    lo, hi = dwt(np.zeros(64), filters)
    assert not lo.any() and not hi.any()
    assert not idwt(lo, hi, filters, 64).any()


def reference_dwt(x, dec_lo, dec_hi):
    """Independent filter-bank implementation: symmetric extension,
    full numpy convolution, explicit valid region, phase-0 downsample."""
    n = len(dec_lo) - 1
    ext = np.concatenate([x[:n][::-1], x, x[-n:][::-1]])
    out = []
    for f in (dec_lo, dec_hi):
        full = np.convolve(ext, f, mode="full")
        valid = full[n : n + len(ext) - n]
        out.append(valid[0::2])
    return out[0], out[1]


def test_bands_match_reference_implementation(filters):
    bank = bior35_bank()
    x = np.random.default_rng(96).standard_normal(96)
    lo, hi = dwt(x, filters)
    ref_lo, ref_hi = reference_dwt(x, bank["dec_lo"], bank["dec_hi"])
    assert np.abs(lo - ref_lo).max() < 1e-8
    assert np.abs(hi - ref_hi).max() < 1e-8


def test_linearity(filters):
    rng = np.random.default_rng(17)
    x, z = rng.standard_normal(50), rng.standard_normal(50)
    lo1, hi1 = dwt(x, filters)
    lo2, hi2 = dwt(z, filters)
    lo3, hi3 = dwt(2.0 * x - 0.5 * z, filters)
    assert np.allclose(lo3, 2.0 * lo1 - 0.5 * lo2, atol=1e-12)
    assert np.allclose(hi3, 2.0 * hi1 - 0.5 * hi2, atol=1e-12)


def test_short_signal_rejected(filters):
    with pytest.raises(ValueError, match="shorter"):
        dwt(np.zeros(7), filters)


def test_band_target_mismatch_rejected(filters):
    with pytest.raises(ValueError, match="reconstruct"):
        idwt(np.zeros(4), np.zeros(4), filters, 96)
    with pytest.raises(ValueError, match="differ"):
        idwt_graph(as_tensor(np.zeros((1, 8))), as_tensor(np.zeros((1, 9))), filters, 8)


def test_gradients_flow_to_taps_and_signal(filters):
    rng = np.random.default_rng(21)
    x = as_tensor(rng.standard_normal((2, 24)))
    x.requires_grad = True
    weights = rng.standard_normal((2, 24))

    def loss():
        lo, hi = dwt_graph(x, filters)
        out = idwt_graph(lo, hi, filters, 24)
        return total_sum(out * weights)

    central_diff_check(loss, [x, *filters.parameters()])


def test_trained_taps_change_transform(filters):
    # the transform must follow the current tap values, not the init
    x = np.random.default_rng(3).standard_normal(40)
    lo_before, _ = dwt(x, filters)
    filters.dec_lo.value = filters.dec_lo.value * 1.5
    lo_after, _ = dwt(x, filters)
    assert np.allclose(lo_after, 1.5 * lo_before, atol=1e-12)
