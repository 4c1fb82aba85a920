"""Mean and phase prediction heads.

Two MLP heads forecast the future mean sequence (one per normalization
domain) and a dilated causal convolution stack forecasts the phase
drift. Heads are shared across channels; channels ride the batch axis.
Final layers are zero-initialized so a fresh model predicts the
historical scalar mean and a zero phase shift, making the untrained
pipeline an exact identity de-normalizer up to a level shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Parameter,
    Tensor,
    arctan2,
    as_tensor,
    concat,
    conv1d,
    cos,
    mean,
    pad_last,
    relu,
    reshape,
    sin,
    wrap,
)
from .normalize import NormBundle
from .series import SeriesTensor

__all__ = [
    "MeanHead",
    "MppmParams",
    "PhaseHead",
    "init_mean_head",
    "init_mppm",
    "init_phase_head",
    "mppm_forward",
    "predict_mean",
    "predict_mean_graph",
    "predict_phase",
    "predict_phase_graph",
]


@dataclass
class MeanHead:
    """Two affine layers with a rectifier; input 2L, output T."""

    w1: Parameter
    b1: Parameter
    w2: Parameter
    b2: Parameter

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass
class PhaseHead:
    """Dilated causal conv stack over the phase vector plus a projection
    from floor(L/2)+1 to floor(T/2)+1 bins.

    Phases enter as unit-circle coordinates (cosine/sine channels) and
    leave through a sine/cosine projection pair read out by a
    four-quadrant arctangent, which keeps the circular topology linear
    and free of the +/-pi seam. Zero-initialized projections put the
    readout at angle(0, 1) = 0.
    """

    conv_w: list[Parameter]
    conv_b: list[Parameter]
    dilations: list[int]
    proj_sin_w: Parameter
    proj_sin_b: Parameter
    proj_cos_w: Parameter
    proj_cos_b: Parameter  # initialized to one: the zero-angle axis
    out_mask: np.ndarray   # zeros at real-output endpoint bins

    def parameters(self) -> list[Parameter]:
        return [
            *self.conv_w,
            *self.conv_b,
            self.proj_sin_w,
            self.proj_sin_b,
            self.proj_cos_w,
            self.proj_cos_b,
        ]


@dataclass
class MppmParams:
    """All learnable state of the prediction module."""

    mean_head_t: MeanHead
    mean_head_f: MeanHead
    phase_head: PhaseHead
    alpha: Parameter
    beta: Parameter

    def parameters(self) -> list[Parameter]:
        return [
            *self.mean_head_t.parameters(),
            *self.mean_head_f.parameters(),
            *self.phase_head.parameters(),
            self.alpha,
            self.beta,
        ]


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_mean_head(
    rng: np.random.Generator, lookback: int, hidden: int, horizon: int, name: str
) -> MeanHead:
    return MeanHead(
        w1=Parameter(_uniform(rng, (2 * lookback, hidden), 2 * lookback), f"{name}.w1"),
        b1=Parameter(np.zeros(hidden), f"{name}.b1"),
        w2=Parameter(np.zeros((hidden, horizon)), f"{name}.w2"),
        b2=Parameter(np.zeros(horizon), f"{name}.b2"),
    )


def init_phase_head(
    rng: np.random.Generator,
    lookback: int,
    horizon: int,
    channels: int = 32,
    kernel: int = 3,
    name: str = "mppm.phase",
) -> PhaseHead:
    k_in = lookback // 2 + 1
    k_out = horizon // 2 + 1
    depth = max(1, math.ceil(math.log2(k_in)))
    widths_in = [2] + [channels] * (depth - 1)  # cos/sin input channels
    conv_w, conv_b, dilations = [], [], []
    for i, cin in enumerate(widths_in):
        conv_w.append(
            Parameter(_uniform(rng, (channels, cin, kernel), cin * kernel), f"{name}.conv{i}.w")
        )
        conv_b.append(Parameter(np.zeros(channels), f"{name}.conv{i}.b"))
        dilations.append(2**i)
    mask = np.ones(k_out)
    mask[0] = 0.0
    if horizon % 2 == 0:
        mask[-1] = 0.0
    # the projections read the full W-channel stack output per bin
    flat = channels * k_in
    return PhaseHead(
        conv_w=conv_w,
        conv_b=conv_b,
        dilations=dilations,
        proj_sin_w=Parameter(np.zeros((flat, k_out)), f"{name}.proj_sin.w"),
        proj_sin_b=Parameter(np.zeros(k_out), f"{name}.proj_sin.b"),
        proj_cos_w=Parameter(np.zeros((flat, k_out)), f"{name}.proj_cos.w"),
        proj_cos_b=Parameter(np.ones(k_out), f"{name}.proj_cos.b"),
        out_mask=mask,
    )


def init_mppm(
    rng: np.random.Generator,
    lookback: int,
    horizon: int,
    mean_hidden: int = 128,
    phase_channels: int = 32,
    alpha_init: float = 1.0,
    beta_init: float = 1.0,
) -> MppmParams:
    return MppmParams(
        mean_head_t=init_mean_head(rng, lookback, mean_hidden, horizon, "mppm.mean_t"),
        mean_head_f=init_mean_head(rng, lookback, mean_hidden, horizon, "mppm.mean_f"),
        phase_head=init_phase_head(rng, lookback, horizon, phase_channels),
        alpha=Parameter(np.float64(alpha_init), "mppm.alpha"),
        beta=Parameter(np.float64(beta_init), "mppm.beta", bounds=(0.0, 1.0)),
    )


def predict_mean_graph(mu: Tensor, x: Tensor, head: MeanHead) -> Tensor:
    """Forecast future means for a batch [B, L] of mean/raw window rows."""
    mu, x = as_tensor(mu), as_tensor(x)
    if mu.shape != x.shape:
        raise ValueError(f"mean-head inputs differ in shape: {mu.shape} vs {x.shape}")
    if 2 * mu.shape[-1] != head.w1.shape[0]:
        raise ValueError(
            f"mean head expects window length {head.w1.shape[0] // 2}, got {mu.shape[-1]}"
        )
    a = mean(mu, axis=1, keepdims=True)
    h = relu(concat([mu - a, x], axis=1) @ head.w1 + head.b1)
    return h @ head.w2 + head.b2 + a


def predict_phase_graph(w_bar: Tensor, head: PhaseHead) -> Tensor:
    """Forecast phase drift for a batch [B, K_in] of phase rows.

    Output is wrapped into (-pi, pi] with endpoint bins forced to 0 so
    the shift keeps de-normalized signals real.
    """
    w_bar = as_tensor(w_bar)
    k_in = head.proj_sin_w.shape[0] // head.conv_w[0].shape[0]
    if w_bar.shape[-1] != k_in:
        raise ValueError(
            f"phase head expects {k_in} bins, got {w_bar.shape[-1]}"
        )
    b = w_bar.shape[0]
    z = concat(
        [reshape(cos(w_bar), (b, 1, k_in)), reshape(sin(w_bar), (b, 1, k_in))],
        axis=1,
    )
    for w, bias, d in zip(head.conv_w, head.conv_b, head.dilations):
        z = pad_last(z, 2 * d, 0)
        z = conv1d(z, w, dilation=d)
        z = relu(z + reshape(bias, (1, bias.shape[0], 1)))
    z = reshape(z, (b, z.shape[1] * z.shape[2]))
    s = z @ head.proj_sin_w + head.proj_sin_b
    c = z @ head.proj_cos_w + head.proj_cos_b
    out = wrap(arctan2(s, c))
    return out * head.out_mask


def predict_mean(mu: np.ndarray, x: np.ndarray, head: MeanHead) -> np.ndarray:
    """Single-vector mean forecast."""
    out = predict_mean_graph(
        as_tensor(np.asarray(mu)[None, :]), as_tensor(np.asarray(x)[None, :]), head
    )
    return out.value[0]


def predict_phase(w_bar: np.ndarray, head: PhaseHead) -> np.ndarray:
    """Single-vector phase-drift forecast."""
    out = predict_phase_graph(as_tensor(np.asarray(w_bar)[None, :]), head)
    return out.value[0]


def mppm_forward(bundle: NormBundle, x: SeriesTensor, params: MppmParams):
    """Per-channel forecasts of mean (both domains) and phase drift.

    Returns (delta_mu_t [C, T], delta_mu_f [C, T], delta_w [C, K_out]).
    """
    data = x.data
    d_mu_t = predict_mean_graph(
        as_tensor(bundle.mean_t), as_tensor(data), params.mean_head_t
    ).value
    d_mu_f = predict_mean_graph(
        as_tensor(bundle.mean_f), as_tensor(data), params.mean_head_f
    ).value
    d_w = predict_phase_graph(as_tensor(bundle.phase_t), params.phase_head).value
    return d_mu_t, d_mu_f, d_w
