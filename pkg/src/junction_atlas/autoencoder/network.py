"""Autoencoder architecture: configs, forward pass, loss, and gradients.

The canonical config pins the full 256-input architecture row for
row; the desk config is the same code at 64x64 with a 128-wide bottleneck;
the tiny config exists for finite-difference gradient checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .layers import (
    NumericalFault,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    conv2d_transpose_backward,
    conv2d_transpose_forward,
    conv_out_side,
    relu,
    relu_backward,
)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str              # "conv" | "conv_transpose"
    out_channels: int
    kernel: int
    stride: int
    padding: str = "same"  # conv only
    out_side: int = 0      # conv_transpose only
    batchnorm: bool = True
    activation: bool = True
    is_bottleneck: bool = False


@dataclass(frozen=True)
class NetworkConfig:
    name: str
    input_side: int
    bottleneck: int
    alpha: float
    beta: float
    layers: tuple[LayerSpec, ...]
    l2_squared: bool = False  # alternative reading of the L2 penalty

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "NetworkConfig":
        layers = tuple(LayerSpec(**ls) for ls in d["layers"])
        return NetworkConfig(**{**d, "layers": layers})


def _encoder_decoder(name, side, enc_channels, bottleneck, dec_channels,
                     alpha, beta, enc_kernel=3, dec_kernel=4):
    layers = []
    cur = side
    for i, ch in enumerate(enc_channels):
        layers.append(LayerSpec(f"enc{i + 1}", "conv", ch, enc_kernel, 2))
        cur = conv_out_side(cur, enc_kernel, 2, "same")
    # collapse the remaining map to 1x1 with a valid conv, then flatten
    layers.append(
        LayerSpec("bottleneck", "conv", bottleneck, cur, 1, padding="valid",
                  is_bottleneck=True)
    )
    expand_side = cur
    layers.append(
        LayerSpec("dec0", "conv_transpose", dec_channels[0], expand_side, 1,
                  out_side=expand_side)
    )
    cur = expand_side
    for i, ch in enumerate(dec_channels[1:]):
        cur *= 2
        layers.append(
            LayerSpec(f"dec{i + 1}", "conv_transpose", ch, dec_kernel, 2, out_side=cur)
        )
    layers.append(
        LayerSpec("out", "conv_transpose", 1, dec_kernel, 1, out_side=side,
                  batchnorm=False, activation=False)
    )
    if cur != side:
        raise ValueError(f"decoder reaches side {cur}, expected {side}")
    return NetworkConfig(
        name=name, input_side=side, bottleneck=bottleneck,
        alpha=alpha, beta=beta, layers=tuple(layers),
    )


def canonical_config(alpha: float = 0.1, beta: float = 0.05) -> NetworkConfig:
    """256x256 architecture with the 2,048-neuron bottleneck."""
    return _encoder_decoder(
        "canonical", 256,
        enc_channels=(64, 96, 128, 192, 256, 384),
        bottleneck=2048,
        dec_channels=(512, 512, 512, 384, 384, 256, 256),
        alpha=alpha, beta=beta,
    )


def desk_config(alpha: float = 0.1, beta: float = 0.05) -> NetworkConfig:
    """64x64 variant with a 128-wide bottleneck; same code paths."""
    return _encoder_decoder(
        "desk", 64,
        enc_channels=(32, 64, 96, 128),
        bottleneck=128,
        dec_channels=(128, 96, 64, 32, 16),
        alpha=alpha, beta=beta,
    )


def tiny_config(alpha: float = 0.1, beta: float = 0.05) -> NetworkConfig:
    """8x8 two-conv-layer variant, small enough for finite differences."""
    return _encoder_decoder(
        "tiny", 8,
        enc_channels=(4, 8),
        bottleneck=8,
        dec_channels=(8, 4, 4),
        alpha=alpha, beta=beta,
    )


CONFIGS = {"canonical": canonical_config, "desk": desk_config, "tiny": tiny_config}


def shape_trace(config: NetworkConfig) -> list[tuple[str, int, int]]:
    """(layer name, side, channels) after every layer, flatten included.

    The bottleneck row reports (name, 1, bottleneck) before flattening.
    """
    side = config.input_side
    trace = [("input", side, 1)]
    for spec in config.layers:
        if spec.kind == "conv":
            side = conv_out_side(side, spec.kernel, spec.stride, spec.padding)
        else:
            side = spec.out_side
        trace.append((spec.name, side, spec.out_channels))
    return trace


def init_params(config: NetworkConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """He-uniform conv kernels, zero biases, identity batchnorm."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    in_ch = 1
    for spec in config.layers:
        k = spec.kernel
        if spec.kind == "conv":
            shape = (spec.out_channels, in_ch, k, k)
        else:
            shape = (in_ch, spec.out_channels, k, k)
        limit = math.sqrt(6.0 / (in_ch * k * k))
        params[f"{spec.name}.w"] = rng.uniform(-limit, limit, shape)
        params[f"{spec.name}.b"] = np.zeros(spec.out_channels)
        if spec.batchnorm:
            params[f"{spec.name}.bn_gamma"] = np.ones(spec.out_channels)
            params[f"{spec.name}.bn_beta"] = np.zeros(spec.out_channels)
            params[f"{spec.name}.bn_mean"] = np.zeros(spec.out_channels)
            params[f"{spec.name}.bn_var"] = np.ones(spec.out_channels)
        in_ch = spec.out_channels
    return params


TRAINABLE_SUFFIXES = (".w", ".b", ".bn_gamma", ".bn_beta")


def trainable_keys(params: dict[str, np.ndarray]) -> list[str]:
    return sorted(k for k in params if k.endswith(TRAINABLE_SUFFIXES))


@dataclass
class ForwardResult:
    logits: np.ndarray
    reconstruction: np.ndarray
    z: np.ndarray
    caches: list = field(default_factory=list, repr=False)


@dataclass
class LossBreakdown:
    recon: float
    l2: float
    l1: float

    @property
    def total(self) -> float:
        return self.recon + self.l2 + self.l1


def _as_batch(images: np.ndarray, side: int) -> np.ndarray:
    x = np.asarray(images)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(float)
    if x.ndim == 2:
        x = x[None, None]
    elif x.ndim == 3:
        x = x[:, None]
    if x.shape[-1] != side or x.shape[-2] != side:
        raise ValueError(f"expected {side}x{side} images, got {x.shape}")
    return x


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward(config: NetworkConfig, params: dict, images: np.ndarray,
            mode: str = "train") -> ForwardResult:
    """Run the full network; z is captured after the bottleneck ReLU."""
    x = _as_batch(images, config.input_side)
    caches = []
    z = None
    for spec in config.layers:
        w, b = params[f"{spec.name}.w"], params[f"{spec.name}.b"]
        if spec.kind == "conv":
            x, conv_cache = conv2d_forward(x, w, b, spec.stride, spec.padding)
        else:
            x, conv_cache = conv2d_transpose_forward(x, w, b, spec.stride, spec.out_side)
        bn_cache = None
        if spec.batchnorm:
            x, bn_cache = batchnorm_forward(
                x, params[f"{spec.name}.bn_gamma"], params[f"{spec.name}.bn_beta"],
                params[f"{spec.name}.bn_mean"], params[f"{spec.name}.bn_var"], mode,
            )
        pre_act = None
        if spec.activation:
            pre_act = x
            x = relu(x)
        if not np.all(np.isfinite(x)):
            raise NumericalFault(spec.name)
        caches.append((spec, conv_cache, bn_cache, pre_act))
        if spec.is_bottleneck:
            z = x.reshape(x.shape[0], -1)
    logits = x
    return ForwardResult(
        logits=logits, reconstruction=sigmoid(logits), z=z, caches=caches
    )


def _cross_entropy_sum(logits: np.ndarray, target: np.ndarray) -> float:
    # stable sum of max(l,0) - l*t + log1p(exp(-|l|))
    return float(
        np.sum(np.maximum(logits, 0.0) - logits * target + np.log1p(np.exp(-np.abs(logits))))
    )


def kernel_norms(config: NetworkConfig, params: dict) -> list[float]:
    return [
        float(np.sqrt(np.sum(params[f"{spec.name}.w"] ** 2)))
        for spec in config.layers
    ]


def loss(logits: np.ndarray, target: np.ndarray, config: NetworkConfig,
         params: dict, z: np.ndarray, alpha: float, beta: float) -> LossBreakdown:
    """Batch-mean data terms plus weight regularization.

    recon and l1 are per-image values averaged over the batch; the l2 term
    sums the (non-squared) Frobenius norm of every convolution kernel, or
    squared norms when the config's l2_squared flag is set.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be non-negative")
    target = _as_batch(target, logits.shape[-1])
    if target.shape != logits.shape:
        raise ValueError(f"logits {logits.shape} vs target {target.shape}")
    n = logits.shape[0]
    recon = _cross_entropy_sum(logits, target) / n
    norms = kernel_norms(config, params)
    if config.l2_squared:
        l2 = alpha * float(sum(v * v for v in norms))
    else:
        l2 = alpha * float(sum(norms))
    l1 = beta * float(np.sum(np.abs(z))) / n
    return LossBreakdown(recon=recon, l2=l2, l1=l1)


def backward(config: NetworkConfig, params: dict, images: np.ndarray,
             alpha: float | None = None, beta: float | None = None,
             mode: str = "train"):
    """Analytic gradients of the full loss for one batch.

    Returns (grads, LossBreakdown, ForwardResult). Gradients cover every
    trainable tensor: conv kernels, biases, and batchnorm scale/shift.
    """
    alpha = config.alpha if alpha is None else alpha
    beta = config.beta if beta is None else beta
    x = _as_batch(images, config.input_side)
    res = forward(config, params, x, mode)
    breakdown = loss(res.logits, x, config, params, res.z, alpha, beta)
    n = x.shape[0]

    grads = {k: None for k in trainable_keys(params)}
    dy = (sigmoid(res.logits) - x) / n

    for i in range(len(config.layers) - 1, -1, -1):
        spec, conv_cache, bn_cache, pre_act = res.caches[i]
        if spec.is_bottleneck:
            # subgradient of beta*|z|: 1 where z > 0, 0 at 0 (ReLU output is >= 0)
            z_map = relu(pre_act) if spec.activation else pre_act
            dy = dy + (beta / n) * (z_map > 0.0)
        if spec.activation:
            dy = relu_backward(dy, pre_act)
        if spec.batchnorm:
            dy, dgamma, dbeta_ = batchnorm_backward(dy, bn_cache)
            grads[f"{spec.name}.bn_gamma"] = dgamma
            grads[f"{spec.name}.bn_beta"] = dbeta_
        if spec.kind == "conv":
            dy, dw, db = conv2d_backward(dy, conv_cache)
        else:
            dy, dw, db = conv2d_transpose_backward(dy, conv_cache)
        grads[f"{spec.name}.w"] = dw
        grads[f"{spec.name}.b"] = db

    # weight-norm regularization
    for spec in config.layers:
        w = params[f"{spec.name}.w"]
        if config.l2_squared:
            grads[f"{spec.name}.w"] = grads[f"{spec.name}.w"] + alpha * 2.0 * w
        else:
            norm = float(np.sqrt(np.sum(w * w)))
            if norm >= 1e-12:
                grads[f"{spec.name}.w"] = grads[f"{spec.name}.w"] + alpha * w / norm
    return grads, breakdown, res


def encode_batch(config: NetworkConfig, params: dict, images: np.ndarray,
                 batch_size: int = 64) -> np.ndarray:
    """Bottleneck codes for a stack of images, batchnorm in infer mode."""
    x = _as_batch(images, config.input_side)
    rows = []
    enc_specs = []
    for spec in config.layers:
        enc_specs.append(spec)
        if spec.is_bottleneck:
            break
    for start in range(0, x.shape[0], batch_size):
        chunk = x[start:start + batch_size]
        for spec in enc_specs:
            w, b = params[f"{spec.name}.w"], params[f"{spec.name}.b"]
            chunk, _ = conv2d_forward(chunk, w, b, spec.stride, spec.padding)
            if spec.batchnorm:
                chunk, _ = batchnorm_forward(
                    chunk, params[f"{spec.name}.bn_gamma"], params[f"{spec.name}.bn_beta"],
                    params[f"{spec.name}.bn_mean"], params[f"{spec.name}.bn_var"], "infer",
                )
            if spec.activation:
                chunk = relu(chunk)
        rows.append(chunk.reshape(chunk.shape[0], -1))
    return np.concatenate(rows, axis=0)


def compression_report(codes: np.ndarray, input_side: int) -> dict:
    """Reported compression metrics for a code matrix (not asserted anywhere)."""
    raw = input_side * input_side
    width = codes.shape[1]
    nonzero = float(np.mean(np.count_nonzero(codes, axis=1)))
    return {
        "bottleneck_width": width,
        "raw_pixels": raw,
        "dense_ratio": width / raw,
        "mean_nonzero_activations": nonzero,
        "effective_compression": 1.0 - nonzero / raw,
    }
