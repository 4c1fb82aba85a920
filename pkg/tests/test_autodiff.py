import numpy as np
import pytest

from timeapn.autodiff import (
    Parameter,
    Tensor,
    UnsupportedPrimitiveError,
    as_tensor,
    backward,
    concat,
    conv1d,
    cos,
    magnitude,
    matmul,
    mean,
    pad_last,
    relu,
    reshape,
    sin,
    symmetric_extend,
    total_sum,
    upsample2,
    wrap,
)

from conftest import central_diff_check, leaf


SEEDS = [11, 22, 33]


def test_analytic_weighted_square():
    # loss = sum((w * x)^2) has gradient 2 * (w * x) * x
    rng = np.random.default_rng(0)
    x = rng.standard_normal(6)
    w = Parameter(rng.standard_normal(6), "w")
    loss = total_sum((w * x) * (w * x))
    backward(loss)
    assert np.allclose(w.grad, 2.0 * (w.value * x) * x, atol=1e-12)


def test_unused_parameter_gets_no_gradient():
    w = Parameter(np.ones(3), "w")
    unused = Parameter(np.ones(3), "unused")
    loss = total_sum(w * 2.0)
    backward(loss)
    assert unused.grad is None
    assert np.allclose(w.grad, 2.0)


def test_unsupported_primitive_is_named():
    x = Parameter(np.ones(2), "x")
    node = Tensor(x.value * 2, parents=(x,), vjp=None, op="mystery")
    with pytest.raises(UnsupportedPrimitiveError, match="mystery"):
        backward(total_sum(node + 0.0))


def test_backward_requires_scalar():
    x = Parameter(np.ones(3), "x")
    with pytest.raises(ValueError, match="scalar"):
        backward(x * 2.0)


def test_gradients_accumulate_across_uses():
    x = Parameter(np.array([1.0, 2.0]), "x")
    loss = total_sum(x * 3.0) + total_sum(x * x)
    backward(loss)
    assert np.allclose(x.grad, 3.0 + 2.0 * x.value)


def test_wrap_values():
    assert wrap(as_tensor(0.0)).item() == 0.0
    assert np.isclose(wrap(as_tensor(3 * np.pi / 2)).item(), -np.pi / 2)
    assert np.isclose(wrap(as_tensor(-np.pi)).item(), np.pi)


def test_magnitude_guard_zeroes_gradient():
    re = Parameter(np.array([3.0, 0.0]), "re")
    im = Parameter(np.array([4.0, 0.0]), "im")
    loss = total_sum(magnitude(re, im))
    backward(loss)
    assert np.allclose(re.grad, [3.0 / 5.0, 0.0])
    assert np.allclose(im.grad, [4.0 / 5.0, 0.0])


@pytest.mark.parametrize("seed", SEEDS)
def test_grad_elementwise_ops(seed):
    rng = np.random.default_rng(seed)
    a = leaf(rng, 3, 4)
    b = leaf(rng, 3, 4)
    central_diff_check(lambda: mean((a + b) * (a - b) + a * 0.5 - b / 1.7), [a, b])
    c = leaf(rng, 3, 4)
    d = Tensor(rng.standard_normal((3, 4)) + 3.0, requires_grad=True)
    central_diff_check(lambda: mean(c / d), [c, d])
    e = leaf(rng, 5)
    central_diff_check(lambda: total_sum(sin(e) * cos(e) + (-e)), [e])


@pytest.mark.parametrize("seed", SEEDS)
def test_grad_broadcasting(seed):
    rng = np.random.default_rng(seed)
    a = leaf(rng, 4, 6)
    row = leaf(rng, 6)
    col = leaf(rng, 4, 1)
    scalar = leaf(rng)
    central_diff_check(lambda: mean(a * row + col - scalar), [a, row, col, scalar])


@pytest.mark.parametrize("seed", SEEDS)
def test_grad_matmul_relu(seed):
    rng = np.random.default_rng(seed)
    x = leaf(rng, 4, 5)
    w = leaf(rng, 5, 3)
    # keep activations away from the relu kink for stable finite differences
    x.value = x.value + np.where(x.value >= 0, 0.5, -0.5)
    central_diff_check(lambda: mean(relu(matmul(x, w))), [x, w])


@pytest.mark.parametrize("seed", SEEDS)
def test_grad_reductions_and_shapes(seed):
    rng = np.random.default_rng(seed)
    a = leaf(rng, 3, 8)
    central_diff_check(lambda: total_sum(mean(a, axis=1, keepdims=True) * a), [a])
    b = leaf(rng, 2, 6)
    central_diff_check(
        lambda: mean(concat([b, b * 2.0], axis=1)[:, 3:9] + reshape(b, (2, 6))), [b]
    )


@pytest.mark.parametrize("seed", SEEDS)
def test_grad_signal_ops(seed):
    rng = np.random.default_rng(seed)
    mask = rng.standard_normal((2, 18))
    a = leaf(rng, 2, 10)
    central_diff_check(lambda: mean(pad_last(a, 3, 2) * 1.5), [a])
    central_diff_check(lambda: mean(symmetric_extend(a, 4) * mask), [a])
    central_diff_check(lambda: total_sum(upsample2(a)[:, 1:-1]), [a])


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("stride,dilation", [(1, 1), (2, 1), (1, 3)])
def test_grad_conv1d(seed, stride, dilation):
    rng = np.random.default_rng(seed)
    x = leaf(rng, 2, 3, 16)
    w = leaf(rng, 4, 3, 3)
    central_diff_check(
        lambda: mean(conv1d(x, w, stride=stride, dilation=dilation) * 1.0)
        + mean(x * 0.01),
        [x, w],
    )


@pytest.mark.parametrize("seed", SEEDS)
def test_grad_magnitude_wrap(seed):
    rng = np.random.default_rng(seed)
    re = leaf(rng, 7)
    im = leaf(rng, 7)
    re.value = re.value + np.sign(re.value)  # stay clear of the eps guard
    central_diff_check(lambda: mean(magnitude(re, im)), [re, im])
    t = leaf(rng, 7)
    t.value = np.clip(t.value, -2.5, 2.5)  # avoid the wrap seam at +/-pi
    central_diff_check(lambda: mean(wrap(t) * wrap(t)), [t])


def test_conv1d_matches_direct_convolution():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((2, 3, 20))
    w = rng.standard_normal((4, 3, 5))
    out = conv1d(as_tensor(x), as_tensor(w), stride=2, dilation=2).value
    span = (5 - 1) * 2
    expect = np.zeros_like(out)
    for b in range(2):
        for o in range(4):
            for t in range(out.shape[2]):
                acc = 0.0
                for c in range(3):
                    for j in range(5):
                        acc += w[o, c, j] * x[b, c, t * 2 + j * 2]
                expect[b, o, t] = acc
    assert np.allclose(out, expect, atol=1e-12)
    assert out.shape[2] == (20 - span - 1) // 2 + 1


def test_conv1d_shape_errors():
    rng = np.random.default_rng(6)
    with pytest.raises(ValueError, match="mismatch"):
        conv1d(as_tensor(rng.standard_normal((1, 2, 9))), as_tensor(rng.standard_normal((1, 3, 3))))
    with pytest.raises(ValueError, match="shorter"):
        conv1d(as_tensor(rng.standard_normal((1, 1, 4))), as_tensor(rng.standard_normal((1, 1, 3))), dilation=2)


def test_symmetric_extend_values_and_bounds():
    x = as_tensor(np.array([[1.0, 2.0, 3.0]]))
    ext = symmetric_extend(x, 2).value
    assert np.array_equal(ext, [[2.0, 1.0, 1.0, 2.0, 3.0, 3.0, 2.0]])
    with pytest.raises(ValueError, match="exceeds"):
        symmetric_extend(x, 4)
