"""Adam optimizer over graph parameters."""

from __future__ import annotations

import numpy as np

from .autodiff import Parameter

__all__ = ["Adam", "DivergenceError"]


class DivergenceError(RuntimeError):
    """A gradient or parameter became non-finite; training has diverged."""


class Adam:
    """Standard Adam with bias correction and optional per-parameter box
    bounds (applied by projection after each update)."""

    def __init__(
        self,
        params: list[Parameter],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.value)
            if not np.isfinite(g).all():
                raise DivergenceError(f"non-finite gradient for {p!r}")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.value = p.value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if p.bounds is not None:
                p.value = np.clip(p.value, p.bounds[0], p.bounds[1])
            if not np.isfinite(p.value).all():
                raise DivergenceError(f"non-finite value for {p!r} after update")
        self.zero_grad()

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
