"""Minimal reverse-mode automatic differentiation on numpy arrays.

Every value in the training graph is a :class:`Tensor` holding a float64
array. Operations build the graph eagerly; :func:`backward` walks it in
reverse topological order and accumulates gradients into every reachable
node that requires them. The primitive set is deliberately closed: it is
exactly what the normalization/prediction pipeline needs, and anything
else raises ``UnsupportedPrimitiveError``.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Parameter",
    "UnsupportedPrimitiveError",
    "arctan2",
    "backward",
    "as_tensor",
    "concat",
    "conv1d",
    "magnitude",
    "matmul",
    "mean",
    "pad_last",
    "relu",
    "reshape",
    "sin",
    "cos",
    "symmetric_extend",
    "total_sum",
    "upsample2",
    "wrap",
]

_param_ids = itertools.count()


class UnsupportedPrimitiveError(RuntimeError):
    """Raised when backward meets a graph node it has no rule for."""


class Tensor:
    """A node in the computation graph: float64 value plus backward closure."""

    __slots__ = ("value", "grad", "op", "_parents", "_vjp", "requires_grad")

    def __init__(
        self,
        value,
        parents: Sequence["Tensor"] = (),
        vjp: Callable[[np.ndarray], tuple] | None = None,
        op: str = "leaf",
        requires_grad: bool | None = None,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.op = op
        self._parents = tuple(parents)
        self._vjp = vjp
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self._parents)
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def item(self) -> float:
        return float(self.value)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.value.shape}, requires_grad={self.requires_grad})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return _binary(self, other, np.add, "add", lambda g, a, b: (g, g))

    __radd__ = __add__

    def __sub__(self, other):
        return _binary(self, other, np.subtract, "sub", lambda g, a, b: (g, -g))

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        return _binary(
            self, other, np.multiply, "mul", lambda g, a, b: (g * b, g * a)
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _binary(
            self,
            other,
            np.divide,
            "div",
            lambda g, a, b: (g / b, -g * a / (b * b)),
        )

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __neg__(self):
        return _unary(self, np.negative, "neg", lambda g, x: -g)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        value = self.value[idx]

        def vjp(g):
            out = np.zeros_like(self.value)
            out[idx] = g
            return (out,)

        return Tensor(value, (self,), vjp, op="slice")

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def sum(self):
        return total_sum(self)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)


class Parameter(Tensor):
    """A learnable leaf tensor with a unique id and optional box bounds."""

    __slots__ = ("name", "uid", "bounds")

    def __init__(self, value, name: str, bounds: tuple[float, float] | None = None):
        super().__init__(value, requires_grad=True)
        self.op = "parameter"
        self.name = name
        self.uid = next(_param_ids)
        self.bounds = bounds

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary(a, b, fn, op, grads) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = fn(a.value, b.value)

    def vjp(g):
        ga, gb = grads(g, a.value, b.value)
        return _unbroadcast(ga, a.value.shape), _unbroadcast(gb, b.value.shape)

    return Tensor(value, (a, b), vjp, op=op)


def _unary(x, fn, op, grad) -> Tensor:
    x = as_tensor(x)
    value = fn(x.value)

    def vjp(g):
        return (grad(g, x.value),)

    return Tensor(value, (x,), vjp, op=op)


# primitives ---------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value @ b.value

    def vjp(g):
        return g @ b.value.T, a.value.T @ g

    return Tensor(value, (a, b), vjp, op="matmul")


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.value > 0.0
    return Tensor(x.value * mask, (x,), lambda g: (g * mask,), op="relu")


def sin(x) -> Tensor:
    return _unary(x, np.sin, "sin", lambda g, v: g * np.cos(v))


def cos(x) -> Tensor:
    return _unary(x, np.cos, "cos", lambda g, v: -g * np.sin(v))


def wrap(x) -> Tensor:
    """Wrap angles into (-pi, pi]; derivative is 1 almost everywhere."""
    x = as_tensor(x)
    value = np.pi - np.mod(np.pi - x.value, 2.0 * np.pi)
    return Tensor(value, (x,), lambda g: (g,), op="wrap")


def magnitude(re, im, eps: float = 1e-12) -> Tensor:
    """sqrt(re^2 + im^2) with zero gradient wherever the magnitude < eps."""
    re, im = as_tensor(re), as_tensor(im)
    value = np.hypot(re.value, im.value)
    safe = np.where(value < eps, 1.0, value)
    live = value >= eps

    def vjp(g):
        scale = g * live / safe
        return scale * re.value, scale * im.value

    return Tensor(value, (re, im), vjp, op="magnitude")


def arctan2(im, re, eps: float = 1e-12) -> Tensor:
    """Four-quadrant angle of (re, im); zero gradient inside radius eps."""
    im, re = as_tensor(im), as_tensor(re)
    value = np.arctan2(im.value, re.value)
    r2 = re.value * re.value + im.value * im.value
    live = r2 >= eps * eps
    safe = np.where(live, r2, 1.0)

    def vjp(g):
        scale = g * live / safe
        return scale * re.value, -scale * im.value

    return Tensor(value, (im, re), vjp, op="arctan2")


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    value = x.value.mean(axis=axis, keepdims=keepdims)
    n = x.value.size if axis is None else x.value.shape[axis]

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.value.shape) / n,)

    return Tensor(value, (x,), vjp, op="mean")


def total_sum(x) -> Tensor:
    x = as_tensor(x)
    value = x.value.sum()

    def vjp(g):
        return (np.broadcast_to(np.asarray(g), x.value.shape).copy(),)

    return Tensor(value, (x,), vjp, op="sum")


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    value = np.concatenate([p.value for p in parts], axis=axis)
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(value, tuple(parts), vjp, op="concat")


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    value = x.value.reshape(shape)

    def vjp(g):
        return (g.reshape(x.value.shape),)

    return Tensor(value, (x,), vjp, op="reshape")


def pad_last(x, left: int, right: int) -> Tensor:
    """Zero-pad the last axis."""
    x = as_tensor(x)
    width = [(0, 0)] * (x.value.ndim - 1) + [(left, right)]
    value = np.pad(x.value, width)
    n = x.value.shape[-1]

    def vjp(g):
        return (g[..., left : left + n],)

    return Tensor(value, (x,), vjp, op="pad")


def symmetric_extend(x, n: int) -> Tensor:
    """Half-sample symmetric extension of the last axis by n on each side."""
    x = as_tensor(x)
    size = x.value.shape[-1]
    if n > size:
        raise ValueError(f"extension {n} exceeds signal length {size}")
    idx = np.concatenate(
        [np.arange(n - 1, -1, -1), np.arange(size), np.arange(size - 1, size - n - 1, -1)]
    )
    value = x.value[..., idx]

    def vjp(g):
        out = np.zeros_like(x.value)
        np.add.at(out.reshape(-1, size), (slice(None), idx), g.reshape(-1, len(idx)))
        return (out,)

    return Tensor(value, (x,), vjp, op="symmetric_extend")


def upsample2(x) -> Tensor:
    """Insert a zero after every sample of the last axis."""
    x = as_tensor(x)
    shape = x.value.shape[:-1] + (2 * x.value.shape[-1],)
    value = np.zeros(shape)
    value[..., ::2] = x.value

    def vjp(g):
        return (g[..., ::2],)

    return Tensor(value, (x,), vjp, op="upsample2")


def conv1d(x, w, stride: int = 1, dilation: int = 1) -> Tensor:
    """Valid cross-correlation: x [B, Cin, T] with w [Cout, Cin, k].

    out[b, o, t] = sum_{c, j} w[o, c, j] * x[b, c, t*stride + j*dilation]
    """
    x, w = as_tensor(x), as_tensor(w)
    xb, wb = x.value, w.value
    if xb.ndim != 3 or wb.ndim != 3 or xb.shape[1] != wb.shape[1]:
        raise ValueError(f"conv1d shape mismatch: x {xb.shape}, w {wb.shape}")
    k = wb.shape[2]
    span = (k - 1) * dilation
    if xb.shape[2] <= span:
        raise ValueError(
            f"conv1d input length {xb.shape[2]} shorter than kernel span {span + 1}"
        )
    out_len = (xb.shape[2] - span - 1) // stride + 1
    last = (out_len - 1) * stride + 1
    # tap slices of w are strided views; small contiguous copies keep
    # the batched matmuls on the BLAS fast path
    taps = [np.ascontiguousarray(wb[:, :, j]) for j in range(k)]
    value = np.zeros((xb.shape[0], wb.shape[0], out_len))
    for j in range(k):
        # [Cout, Cin] @ [B, Cin, t] broadcasts to [B, Cout, t]
        value += taps[j] @ xb[:, :, j * dilation : j * dilation + last : stride]

    def vjp(g):
        gx = np.zeros_like(xb) if x.requires_grad else None
        gw = np.zeros_like(wb) if w.requires_grad else None
        g_flat = g.transpose(1, 0, 2).reshape(wb.shape[0], -1) if w.requires_grad else None
        for j in range(k):
            sl = slice(j * dilation, j * dilation + last, stride)
            if gx is not None:
                gx[:, :, sl] += taps[j].T @ g
            if gw is not None:
                seg = xb[:, :, sl].transpose(1, 0, 2).reshape(xb.shape[1], -1)
                gw[:, :, j] = g_flat @ seg.T
        return gx, gw

    return Tensor(value, (x, w), vjp, op="conv1d")


# backward pass -------------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(node) into .grad for every reachable node."""
    if loss.value.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.value.shape}")

    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))

    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.grad is None or not node._parents:
            continue
        if node._vjp is None:
            raise UnsupportedPrimitiveError(
                f"no backward rule for primitive {node.op!r}"
            )
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if not parent.requires_grad or g is None:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.value)
            parent.grad += g
