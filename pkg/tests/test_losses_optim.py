import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timeapn.autodiff import Parameter, as_tensor, total_sum
from timeapn.losses import (
    amplitude_rows,
    loss_amplitude,
    loss_amplitude_graph,
    loss_forecast,
    loss_forecast_graph,
    loss_mean,
    loss_phase,
    loss_phase_graph,
)
from timeapn.optim import Adam, DivergenceError
from timeapn.series import SeriesTensor
from timeapn.spectral import wrap_phase

from conftest import central_diff_check


@pytest.fixture
def rng():
    return np.random.default_rng(77)


def test_loss_forecast_zero_and_offset(rng):
    y = SeriesTensor(rng.standard_normal((2, 10)))
    assert loss_forecast(y, y) == 0.0
    shifted = SeriesTensor(y.data + 0.3)
    assert np.isclose(loss_forecast(shifted, y), 0.09)


def test_loss_forecast_brute_force(rng):
    a = rng.standard_normal((3, 7))
    b = rng.standard_normal((3, 7))
    acc = 0.0
    for c in range(3):
        for t in range(7):
            acc += (a[c, t] - b[c, t]) ** 2
    assert np.isclose(loss_forecast(a, b), acc / 21.0, atol=1e-12)


def test_loss_forecast_shape_error(rng):
    with pytest.raises(ValueError, match="mismatch"):
        loss_forecast(np.zeros((2, 5)), np.zeros((2, 6)))


def test_loss_mean_matches_forecast_math(rng):
    a = rng.standard_normal((2, 9))
    b = rng.standard_normal((2, 9))
    assert loss_mean(a, b) == loss_forecast(a, b)
    assert loss_mean(a, a) == 0.0
    assert np.isclose(loss_mean(a + 1.5, a), 2.25)


def test_loss_phase_zero_and_wrap(rng):
    w = rng.uniform(-np.pi, np.pi, (2, 8))
    assert loss_phase(w, w) == 0.0
    assert loss_phase(w + 2.0 * np.pi, w) < 1e-28
    brute = np.mean(wrap_phase(w * 0.0 + 0.5) ** 2)
    assert np.isclose(loss_phase(w + 0.5, w), brute, atol=1e-12)


def test_loss_phase_brute_force(rng):
    a = rng.uniform(-np.pi, np.pi, (2, 6))
    b = rng.uniform(-np.pi, np.pi, (2, 6))
    brute = np.mean(wrap_phase(a - b) ** 2)
    assert np.isclose(loss_phase(a, b), brute, atol=1e-14)


def test_loss_amplitude_zero_and_shift_invariance(rng):
    y = rng.standard_normal((2, 16))
    assert loss_amplitude(y, y) == 0.0
    rolled = np.stack([np.roll(y[0], 3), np.roll(y[1], 5)])
    assert loss_amplitude(rolled, y) < 1e-28


def test_loss_amplitude_oracle(rng):
    a = rng.standard_normal((2, 12))
    b = rng.standard_normal((2, 12))
    amp_a = np.abs(np.fft.rfft(a, axis=-1)) / 12.0
    amp_b = np.abs(np.fft.rfft(b, axis=-1)) / 12.0
    assert np.isclose(loss_amplitude(a, b), np.mean((amp_a - amp_b) ** 2), atol=1e-12)


def test_amplitude_rows_matches_rfft(rng):
    y = rng.standard_normal((3, 20))
    assert np.abs(amplitude_rows(y).value - np.abs(np.fft.rfft(y, axis=-1))).max() < 1e-9


_magnitudes = st.one_of(
    st.just(0.0), st.floats(1e-3, 3.0), st.floats(-3.0, -1e-3)
)


@settings(max_examples=30, deadline=None)
@given(_magnitudes, _magnitudes)
def test_losses_nonnegative_and_symmetric(u, v):
    a = np.array([[u]])
    b = np.array([[v]])
    f = loss_forecast(a, b)
    assert f >= 0.0
    assert f == loss_forecast(b, a)
    assert (f == 0.0) == (u == v)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_loss_gradients(seed):
    rng = np.random.default_rng(seed)
    a = as_tensor(rng.standard_normal((2, 8)))
    a.requires_grad = True
    b = rng.standard_normal((2, 8))
    central_diff_check(lambda: loss_forecast_graph(a, b), [a])
    central_diff_check(lambda: loss_amplitude_graph(a, b), [a])
    w = as_tensor(rng.uniform(-1.0, 1.0, (2, 8)))
    w.requires_grad = True
    wy = rng.uniform(-1.0, 1.0, (2, 8))
    central_diff_check(lambda: loss_phase_graph(w, wy), [w])


def test_adam_first_step_hand_computed():
    p = Parameter(np.zeros(1), "p")
    opt = Adam([p], lr=0.1)
    p.grad = np.ones(1)
    opt.step()
    # bias-corrected first step: m_hat = v_hat = 1
    expect = -0.1 * 1.0 / (1.0 + 1e-8)
    assert np.isclose(p.value[0], expect, atol=1e-15)
    assert p.grad is None  # gradients cleared


def test_adam_zero_gradient_keeps_parameters():
    p = Parameter(np.array([1.0, -2.0]), "p")
    opt = Adam([p])
    p.grad = np.zeros(2)
    opt.step()
    assert np.array_equal(p.value, [1.0, -2.0])


def test_adam_converges_on_quadratic():
    theta = Parameter(np.zeros(()), "theta")
    opt = Adam([theta], lr=0.05)
    for _ in range(2000):
        diff = theta - 3.0
        loss = diff * diff
        from timeapn.autodiff import backward

        backward(loss)
        opt.step()
    assert abs(theta.value - 3.0) < 1e-3


def test_adam_respects_bounds():
    p = Parameter(np.float64(1.0), "beta", bounds=(0.0, 1.0))
    opt = Adam([p], lr=0.5)
    p.grad = np.float64(-10.0)  # pushes upward, must clamp at 1
    opt.step()
    assert p.value == 1.0
    for _ in range(10):
        p.grad = np.float64(10.0)
        opt.step()
    assert p.value >= 0.0


def test_adam_rejects_nonfinite_gradient():
    p = Parameter(np.zeros(2), "p")
    opt = Adam([p])
    p.grad = np.array([1.0, np.nan])
    with pytest.raises(DivergenceError, match="non-finite"):
        opt.step()


def test_adam_missing_gradient_is_zero():
    p = Parameter(np.array([5.0]), "p")
    opt = Adam([p])
    opt.step()
    assert np.array_equal(p.value, [5.0])
