import numpy as np
import pytest

from timeapn.autodiff import Parameter, Tensor, backward


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def central_diff_check(build_loss, tensors, eps=1e-5, rel_tol=1e-4):
    """Compare backprop gradients against central finite differences.

    ``build_loss`` must rebuild the scalar loss from the current tensor
    values on every call; ``tensors`` are the leaves to differentiate.
    """
    for t in tensors:
        t.grad = None
    loss = build_loss()
    backward(loss)
    for t in tensors:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.value)
        numeric = np.zeros_like(t.value)
        flat = t.value.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = build_loss().item()
            flat[i] = orig - eps
            lo = build_loss().item()
            flat[i] = orig
            num_flat[i] = (hi - lo) / (2.0 * eps)
        scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
        err = np.abs(analytic - numeric).max() / scale
        assert err < rel_tol, (
            f"gradient mismatch for {getattr(t, 'name', t.op)}: rel err {err:.2e}\n"
            f"analytic={analytic}\nnumeric={numeric}"
        )


def leaf(rng, *shape, grad=True):
    """A seeded leaf tensor for gradient checks."""
    value = rng.standard_normal(shape) if shape else rng.standard_normal()
    t = Tensor(value, requires_grad=grad)
    return t


def param(rng, name, *shape):
    value = rng.standard_normal(shape) if shape else np.float64(rng.standard_normal())
    return Parameter(value, name)
