"""
Network operations with hand-written backward rules.

Layouts: images are (N, C, H, W); conv2d kernels are (C_out, C_in, kh, kw);
conv_transpose2d kernels are (C_in, C_out, kh, kw), so the same array is the
kernel of a convolution and of its adjoint; dense weights are (in, out).
"""
import logging
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from utils.error_handling import ShapeMismatchError

from .tensor import Tensor, accumulate, add, as_tensor, getitem, make, matmul, mul, reshape

logger = logging.getLogger(__name__)


# activations

def leaky_relu(x: Tensor, alpha: float = 0.2) -> Tensor:
    """x for x >= 0, alpha * x below."""
    slope = np.where(x.data >= 0, 1.0, alpha)

    def backward(g):
        accumulate(x, g * slope)

    return make(x.data * slope, (x,), backward, 'leaky_relu')


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def backward(g):
        accumulate(x, g * (1.0 - out * out))

    return make(out, (x,), backward, 'tanh')


def _sigmoid(v: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x: Tensor) -> Tensor:
    out = _sigmoid(x.data)

    def backward(g):
        accumulate(x, g * out * (1.0 - out))

    return make(out, (x,), backward, 'sigmoid')


def softplus(x: Tensor) -> Tensor:
    """log(1 + e^x)."""
    def backward(g):
        accumulate(x, g * _sigmoid(x.data))

    return make(np.logaddexp(0.0, x.data), (x,), backward, 'softplus')


# losses

def mse_loss(a: Tensor, b) -> Tensor:
    """Mean over all elements of (a - b)^2."""
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mse_loss: shapes {a.shape} and {b.shape} differ")
    diff = a.data - b.data
    scale = 2.0 / diff.size

    def backward(g):
        accumulate(a, g * scale * diff)
        accumulate(b, -g * scale * diff)

    return make(np.asarray(np.mean(diff * diff)), (a, b), backward, 'mse_loss')


def bce_with_logits(logits: Tensor, target: float) -> Tensor:
    """Mean binary cross-entropy of sigmoid(logits) against a constant 0/1 target."""
    x = logits.data
    value = np.mean(np.logaddexp(0.0, x) - target * x)

    def backward(g):
        accumulate(logits, g * (_sigmoid(x) - target) / x.size)

    return make(np.asarray(value), (logits,), backward, 'bce_with_logits')


# dense

def dense(x: Tensor, W: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """x @ W + b for x of shape (N, in)."""
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeMismatchError(f"dense: input {x.shape} does not fit weights {W.shape}")
    out = matmul(x, W)
    if b is not None:
        if b.shape != (W.shape[1],):
            raise ShapeMismatchError(f"dense: bias {b.shape} does not fit weights {W.shape}")
        out = add(out, b)
    return out


# convolutions

def _pad(v: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return v
    return np.pad(v, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _windows(v: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(N, C, Ho, Wo, kh, kw) view of every kernel position."""
    return sliding_window_view(v, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]


def _check_conv(x: Tensor, K: Tensor, channel_axis: int, op: str):
    if x.ndim != 4 or K.ndim != 4:
        raise ShapeMismatchError(f"{op}: expected 4-D input and kernel, got {x.shape} and {K.shape}")
    if x.shape[1] != K.shape[channel_axis]:
        raise ShapeMismatchError(f"{op}: input {x.shape} does not fit kernel {K.shape}")


def conv2d(x: Tensor, K: Tensor, b: Optional[Tensor] = None, stride: int = 1, pad: int = 0) -> Tensor:
    """
    2-D cross-correlation.

    Args:
        x: Input (N, C_in, H, W)
        K: Kernel (C_out, C_in, kh, kw)
        b: Optional bias (C_out,)
        stride: Step between kernel positions
        pad: Zero padding on every side

    Returns:
        Tensor: (N, C_out, (H + 2 pad - kh) // stride + 1, ...)
    """
    _check_conv(x, K, 1, 'conv2d')
    kh, kw = K.shape[2], K.shape[3]
    xp = _pad(x.data, pad)
    if xp.shape[2] < kh or xp.shape[3] < kw:
        raise ShapeMismatchError(f"conv2d: kernel {K.shape} larger than padded input {xp.shape}")
    win = _windows(xp, kh, kw, stride)
    out = np.tensordot(win, K.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    ho, wo = out.shape[2], out.shape[3]

    def backward(g):
        if K.requires_grad:
            accumulate(K, np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3])))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += np.einsum(
                        'nohw,oc->nchw', g, K.data[:, :, i, j]
                    )
            accumulate(x, gxp[:, :, pad:pad + x.shape[2], pad:pad + x.shape[3]])

    result = make(out, (x, K), backward, 'conv2d')
    if b is not None:
        result = add(result, reshape_bias(b))
    return result


def conv_transpose2d(x: Tensor, K: Tensor, b: Optional[Tensor] = None, stride: int = 1, pad: int = 0) -> Tensor:
    """
    Transposed convolution, the adjoint of conv2d with the same kernel array.

    Args:
        x: Input (N, C_in, H, W)
        K: Kernel (C_in, C_out, kh, kw)
        b: Optional bias (C_out,)
        stride: Upsampling stride
        pad: Cropping on every side

    Returns:
        Tensor: (N, C_out, (H - 1) stride - 2 pad + kh, ...)
    """
    _check_conv(x, K, 0, 'conv_transpose2d')
    n, _, h, w = x.shape
    kh, kw = K.shape[2], K.shape[3]
    full_h, full_w = (h - 1) * stride + kh, (w - 1) * stride + kw
    if full_h - 2 * pad <= 0 or full_w - 2 * pad <= 0:
        raise ShapeMismatchError(f"conv_transpose2d: padding {pad} crops away the whole output")

    full = np.zeros((n, K.shape[1], full_h, full_w))
    for i in range(kh):
        for j in range(kw):
            full[:, :, i:i + stride * h:stride, j:j + stride * w:stride] += np.einsum(
                'nchw,cd->ndhw', x.data, K.data[:, :, i, j]
            )
    out = full[:, :, pad:full_h - pad, pad:full_w - pad]

    def backward(g):
        gp = np.zeros((n, K.shape[1], full_h, full_w))
        gp[:, :, pad:full_h - pad, pad:full_w - pad] = g
        win = _windows(gp, kh, kw, stride)
        if x.requires_grad:
            accumulate(x, np.tensordot(win, K.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2))
        if K.requires_grad:
            accumulate(K, np.tensordot(x.data, win, axes=([0, 2, 3], [0, 2, 3])))

    result = make(np.ascontiguousarray(out), (x, K), backward, 'conv_transpose2d')
    if b is not None:
        result = add(result, reshape_bias(b))
    return result


def reshape_bias(b: Tensor) -> Tensor:
    return reshape(b, (1, b.shape[0], 1, 1))


# normalization and pooling

def batchnorm2d(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray, running_var: np.ndarray,
                training: bool, momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """
    Per-channel batch normalization.

    Training mode normalizes with the batch statistics and updates the running
    buffers in place (unbiased variance); eval mode uses the running buffers
    and is a pure function of x.
    """
    if x.ndim != 4 or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeMismatchError(f"batchnorm2d: input {x.shape} does not fit parameters {gamma.shape}")
    shape = (1, x.shape[1], 1, 1)
    axes = (0, 2, 3)

    if not training:
        scale = gamma.data / np.sqrt(running_var + eps)
        normalized = (x.data - running_mean.reshape(shape)) / np.sqrt(running_var.reshape(shape) + eps)

        def backward_eval(g):
            accumulate(x, g * scale.reshape(shape))
            accumulate(gamma, (g * normalized).sum(axis=axes))
            accumulate(beta, g.sum(axis=axes))

        out = normalized * gamma.data.reshape(shape) + beta.data.reshape(shape)
        return make(out, (x, gamma, beta), backward_eval, 'batchnorm2d')

    count = x.data.size // x.shape[1]
    mean = x.data.mean(axis=axes)
    var = x.data.var(axis=axes)
    unbiased = var * count / (count - 1) if count > 1 else var
    running_mean *= 1.0 - momentum
    running_mean += momentum * mean
    running_var *= 1.0 - momentum
    running_var += momentum * unbiased

    inv_std = 1.0 / np.sqrt(var + eps)
    centered = x.data - mean.reshape(shape)
    normalized = centered * inv_std.reshape(shape)

    def backward(g):
        accumulate(gamma, (g * normalized).sum(axis=axes))
        accumulate(beta, g.sum(axis=axes))
        if x.requires_grad:
            g_hat = g * gamma.data.reshape(shape)
            term = (g_hat.sum(axis=axes, keepdims=True)
                    + normalized * (g_hat * normalized).sum(axis=axes, keepdims=True))
            accumulate(x, inv_std.reshape(shape) * (g_hat - term / count))

    out = normalized * gamma.data.reshape(shape) + beta.data.reshape(shape)
    return make(out, (x, gamma, beta), backward, 'batchnorm2d')


def global_avg_pool(x: Tensor) -> Tensor:
    """(N, C, H, W) -> (N, C)."""
    if x.ndim != 4:
        raise ShapeMismatchError(f"global_avg_pool: expected 4-D input, got {x.shape}")
    area = x.shape[2] * x.shape[3]

    def backward(g):
        accumulate(x, np.broadcast_to(g[:, :, None, None] / area, x.shape).copy())

    return make(x.data.mean(axis=(2, 3)), (x,), backward, 'global_avg_pool')


# recurrent

def lstm_cell(x: Tensor, h: Tensor, c: Tensor, W_x: Tensor, W_h: Tensor, b: Tensor) -> Tuple[Tensor, Tensor]:
    """
    One LSTM step with gates ordered input, forget, cell, output.

    Args:
        x: Input (N, D)
        h: Hidden state (N, H)
        c: Cell state (N, H)
        W_x: (D, 4H)
        W_h: (H, 4H)
        b: (4H,)

    Returns:
        (h', c')
    """
    hidden = h.shape[1]
    if W_x.shape != (x.shape[1], 4 * hidden) or W_h.shape != (hidden, 4 * hidden) or c.shape != h.shape:
        raise ShapeMismatchError(
            f"lstm_cell: x {x.shape}, h {h.shape}, c {c.shape} do not fit W_x {W_x.shape}, W_h {W_h.shape}"
        )
    gates = add(add(matmul(x, W_x), matmul(h, W_h)), b)
    i = sigmoid(getitem(gates, (slice(None), slice(0, hidden))))
    f = sigmoid(getitem(gates, (slice(None), slice(hidden, 2 * hidden))))
    g = tanh(getitem(gates, (slice(None), slice(2 * hidden, 3 * hidden))))
    o = sigmoid(getitem(gates, (slice(None), slice(3 * hidden, 4 * hidden))))
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next
