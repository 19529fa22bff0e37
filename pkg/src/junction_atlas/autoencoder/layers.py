"""Convolution, transposed convolution, and batchnorm primitives.

All feature maps are float arrays shaped (N, C, H, W). Convolutions are
cross-correlations. "same" padding follows the ceil-division convention
(output side = ceil(in / stride), extra padding goes bottom/right), which
is what the architecture table's dimension column implies.
"""
from __future__ import annotations

import numpy as np


class NumericalFault(FloatingPointError):
    """NaN appeared in an activation; carries the layer name."""

    def __init__(self, layer: str):
        super().__init__(f"non-finite activation in layer {layer!r}")
        self.layer = layer


def same_pads(in_side: int, k: int, stride: int) -> tuple[int, int, int]:
    """(pad_begin, pad_end, out_side) for same-style padding."""
    out = -(-in_side // stride)
    total = max((out - 1) * stride + k - in_side, 0)
    return total // 2, total - total // 2, out


def conv_out_side(in_side: int, k: int, stride: int, padding: str) -> int:
    if padding == "same":
        return same_pads(in_side, k, stride)[2]
    if padding == "valid":
        return (in_side - k) // stride + 1
    raise ValueError(f"unknown padding {padding!r}")


def im2col(x, k, stride, pt, pb, pl, pr):
    n, c, h, w = x.shape
    ho = (h + pt + pb - k) // stride + 1
    wo = (w + pl + pr - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    cols = np.empty((n, c, k, k, ho, wo), dtype=x.dtype)
    for di in range(k):
        for dj in range(k):
            cols[:, :, di, dj] = xp[:, :, di:di + stride * ho:stride,
                                    dj:dj + stride * wo:stride]
    return cols.reshape(n, c * k * k, ho * wo), ho, wo


def col2im(cols, n, c, h, w, k, stride, pt, pb, pl, pr, ho, wo):
    """Scatter-add inverse of im2col."""
    xp = np.zeros((n, c, h + pt + pb, w + pl + pr), dtype=cols.dtype)
    cols = cols.reshape(n, c, k, k, ho, wo)
    for di in range(k):
        for dj in range(k):
            xp[:, :, di:di + stride * ho:stride, dj:dj + stride * wo:stride] += \
                cols[:, :, di, dj]
    return xp[:, :, pt:pt + h, pl:pl + w]


def _pads_for(in_side: int, k: int, stride: int, padding: str):
    if padding == "same":
        pt, pb, _ = same_pads(in_side, k, stride)
        return pt, pb
    if padding == "valid":
        if (in_side - k) % stride:
            raise ValueError(
                f"valid conv: side {in_side} not reachable with kernel {k} stride {stride}"
            )
        return 0, 0
    raise ValueError(f"unknown padding {padding!r}")


def conv2d_forward(x, w, b, stride: int, padding: str = "same"):
    """Cross-correlation; weights (Cout, Cin, k, k). Returns (y, cache)."""
    n, cin, h, _ = x.shape
    cout, cin_w, k, _ = w.shape
    if cin != cin_w:
        raise ValueError(f"conv expects {cin_w} input channels, got {cin}")
    pt, pb = _pads_for(h, k, stride, padding)
    cols, ho, wo = im2col(x, k, stride, pt, pb, pt, pb)
    wm = w.reshape(cout, cin * k * k)
    y = (wm @ cols).reshape(n, cout, ho, wo) + b.reshape(1, cout, 1, 1)
    cache = (x.shape, cols, w, stride, (pt, pb), (ho, wo))
    return y, cache


def conv2d_backward(dy, cache):
    (n, cin, h, w_in), cols, w, stride, (pt, pb), (ho, wo) = cache
    cout = w.shape[0]
    k = w.shape[2]
    dym = dy.reshape(n, cout, ho * wo)
    db = dy.sum(axis=(0, 2, 3))
    dwm = np.tensordot(dym, cols, axes=([0, 2], [0, 2]))
    dw = dwm.reshape(w.shape)
    wm = w.reshape(cout, cin * k * k)
    dcols = wm.T @ dym
    dx = col2im(dcols, n, cin, h, w_in, k, stride, pt, pb, pt, pb, ho, wo)
    return dx, dw, db


def transpose_pads(out_side: int, k: int, stride: int, in_side: int):
    """Padding of the virtual forward conv that maps out_side back to in_side."""
    total = (in_side - 1) * stride + k - out_side
    if total < 0:
        raise ValueError(
            f"conv_transpose cannot reach side {out_side} from {in_side} "
            f"with kernel {k} stride {stride}"
        )
    return total // 2, total - total // 2


def conv2d_transpose_forward(x, w, b, stride: int, out_side: int):
    """Fractionally-strided convolution; weights (Cin, Cout, k, k).

    Computed as the input-gradient of the conv that would map the output
    shape back to the input shape.
    """
    n, cin, h, w_in = x.shape
    cin_w, cout, k, _ = w.shape
    if cin != cin_w:
        raise ValueError(f"conv_transpose expects {cin_w} input channels, got {cin}")
    pt, pb = transpose_pads(out_side, k, stride, h)
    wm = w.reshape(cin, cout * k * k)
    xm = x.reshape(n, cin, h * w_in)
    cols = wm.T @ xm
    y = col2im(cols, n, cout, out_side, out_side, k, stride, pt, pb, pt, pb, h, w_in)
    y = y + b.reshape(1, cout, 1, 1)
    cache = (x, w, stride, (pt, pb), out_side)
    return y, cache


def conv2d_transpose_backward(dy, cache):
    x, w, stride, (pt, pb), out_side = cache
    n, cin, h, w_in = x.shape
    cin_w, cout, k, _ = w.shape
    db = dy.sum(axis=(0, 2, 3))
    cols_dy, ho, wo = im2col(dy, k, stride, pt, pb, pt, pb)
    assert (ho, wo) == (h, w_in)
    wm = w.reshape(cin, cout * k * k)
    dx = (wm @ cols_dy).reshape(x.shape)
    xm = x.reshape(n, cin, h * w_in)
    dwm = np.tensordot(xm, cols_dy, axes=([0, 2], [0, 2]))
    return dx, dwm.reshape(w.shape), db


def batchnorm_forward(x, gamma, beta, running_mean, running_var,
                      mode: str, momentum: float = 0.9, eps: float = 1e-5):
    """Per-channel standardization over (N, H, W).

    In train mode the batch must contain at least two samples; running
    statistics are updated in place on the passed arrays.
    """
    if mode == "train":
        if x.shape[0] < 2:
            raise ValueError("batchnorm train mode needs batch size >= 2")
        mu = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    elif mode == "infer":
        mu, var = running_mean, running_var
    else:
        raise ValueError(f"unknown batchnorm mode {mode!r}")
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu.reshape(1, -1, 1, 1)) * inv_std.reshape(1, -1, 1, 1)
    y = gamma.reshape(1, -1, 1, 1) * xhat + beta.reshape(1, -1, 1, 1)
    cache = (xhat, gamma, inv_std, x.shape, mode)
    return y, cache


def batchnorm_backward(dy, cache):
    xhat, gamma, inv_std, shape, mode = cache
    n, c, h, w = shape
    m = n * h * w
    dgamma = (dy * xhat).sum(axis=(0, 2, 3))
    dbeta = dy.sum(axis=(0, 2, 3))
    dxhat = dy * gamma.reshape(1, -1, 1, 1)
    if mode == "infer":
        dx = dxhat * inv_std.reshape(1, -1, 1, 1)
        return dx, dgamma, dbeta
    sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
    sum_dxhat_x = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
    dx = (inv_std.reshape(1, -1, 1, 1) / m) * (
        m * dxhat - sum_dxhat - xhat * sum_dxhat_x
    )
    return dx, dgamma, dbeta


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dy, x):
    return dy * (x > 0.0)
