"""Neural network primitives on dense numpy arrays.

Every operation works on row-major float32 arrays by default; building a
network in float64 switches the whole computation to 64-bit, which the
gradient-check tests rely on. Forward functions return ``(output, cache)``
and the matching backward consumes the cache, so the composition in
``network.py`` never recomputes activations.

Convolution uses the cross-correlation convention (no kernel flip), the
same as mainstream deep learning frameworks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Conv1d",
    "BatchNorm1d",
    "Dense",
    "conv1d_forward",
    "conv1d_backward",
    "batchnorm_forward",
    "batchnorm_backward",
    "relu",
    "relu_backward",
    "gap_forward",
    "gap_backward",
    "dense_forward",
    "dense_backward",
    "conv_out_len",
]


@dataclass
class Conv1d:
    """1-D convolution layer: weight (out_ch, in_ch, k), bias (out_ch,)."""

    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int = 0

    @property
    def kernel_size(self):
        return self.weight.shape[2]


@dataclass
class BatchNorm1d:
    """Per-channel batch normalization over the (batch, time) axes."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    momentum: float = 0.1


@dataclass
class Dense:
    """Affine layer: weight (in_dim, out_dim), bias (out_dim,)."""

    weight: np.ndarray
    bias: np.ndarray


def conv_out_len(length, kernel_size, stride, padding):
    return (length + 2 * padding - kernel_size) // stride + 1


def _window_stack(xp, kernel_size, stride, out_len):
    """Gather the k strided input windows: (B, C, L_pad) -> (C, k, B, out_len).

    Channel-major layout so a reshape to (C*k, B*out_len) is free and the
    convolution GEMM runs on contiguous memory.
    """
    b, c, _ = xp.shape
    xpt = xp.transpose(1, 0, 2)
    cols = np.empty((c, kernel_size, b, out_len), dtype=xp.dtype)
    stop = stride * (out_len - 1) + 1
    for j in range(kernel_size):
        cols[:, j] = xpt[:, :, j : j + stop : stride]
    return cols


def conv1d_forward(layer, x):
    """Cross-correlate a (batch, in_ch, L) input; returns (out, cache)."""
    b, c, l = x.shape
    out_ch, in_ch, k = layer.weight.shape
    if c != in_ch:
        raise ValueError(f"input has {c} channels, layer expects {in_ch}")
    out_len = conv_out_len(l, k, layer.stride, layer.padding)
    if out_len < 1:
        raise ValueError(
            f"input length {l} too short for kernel {k} "
            f"(stride {layer.stride}, padding {layer.padding})"
        )
    p = layer.padding
    xp = np.pad(x, ((0, 0), (0, 0), (p, p))) if p else x
    cols = _window_stack(xp, k, layer.stride, out_len)
    # One GEMM: (out_ch, in_ch*k) @ (in_ch*k, B*out_len).
    flat = layer.weight.reshape(out_ch, in_ch * k) @ cols.reshape(in_ch * k, -1)
    out = np.ascontiguousarray(flat.reshape(out_ch, b, out_len).transpose(1, 0, 2))
    out += layer.bias[None, :, None]
    return out, (x.shape, cols)


def conv1d_backward(layer, cache, grad_out):
    """Adjoint of conv1d_forward: returns (grad_input, grad_weight, grad_bias)."""
    x_shape, cols = cache
    b, c, l = x_shape
    out_ch, in_ch, k = layer.weight.shape
    out_len = cols.shape[3]
    if grad_out.shape != (b, out_ch, out_len):
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match forward "
            f"output {(b, out_ch, out_len)}"
        )
    go = np.ascontiguousarray(grad_out.transpose(1, 0, 2)).reshape(out_ch, -1)
    grad_bias = go.sum(axis=1)
    grad_weight = (go @ cols.reshape(in_ch * k, -1).T).reshape(out_ch, in_ch, k)
    # Scatter grad back through the strided windows.
    g_cols = (layer.weight.reshape(out_ch, in_ch * k).T @ go).reshape(
        in_ch, k, b, out_len
    )
    p, s = layer.padding, layer.stride
    gxpt = np.zeros((c, b, l + 2 * p), dtype=grad_out.dtype)
    stop = s * (out_len - 1) + 1
    for j in range(k):
        gxpt[:, :, j : j + stop : s] += g_cols[:, j]
    grad_input = gxpt.transpose(1, 0, 2)
    if p:
        grad_input = grad_input[:, :, p : p + l]
    return grad_input, grad_weight, grad_bias


def batchnorm_forward(layer, x, train):
    """Normalize per channel; train mode also updates the running stats."""
    if x.shape[1] != layer.gamma.shape[0]:
        raise ValueError(
            f"input has {x.shape[1]} channels, layer expects {layer.gamma.shape[0]}"
        )
    if not train:
        inv_std = 1.0 / np.sqrt(layer.running_var + layer.eps)
        xhat = (x - layer.running_mean[None, :, None]) * inv_std[None, :, None]
        out = layer.gamma[None, :, None] * xhat + layer.beta[None, :, None]
        return out, None
    if x.shape[0] < 2:
        raise ValueError("batchnorm train mode needs batch size >= 2")
    n = x.shape[0] * x.shape[2]
    mean = x.mean(axis=(0, 2))
    var = x.var(axis=(0, 2))
    inv_std = 1.0 / np.sqrt(var + layer.eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    out = layer.gamma[None, :, None] * xhat + layer.beta[None, :, None]
    m = layer.momentum
    layer.running_mean *= 1.0 - m
    layer.running_mean += m * mean
    # Unbiased variance in the running estimate, biased for normalization.
    layer.running_var *= 1.0 - m
    layer.running_var += m * var * (n / (n - 1))
    return out, (xhat, inv_std)


def batchnorm_backward(layer, cache, grad_out):
    """Gradient of train-mode batchnorm through the batch statistics."""
    xhat, inv_std = cache
    if grad_out.shape != xhat.shape:
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match forward {xhat.shape}"
        )
    n = grad_out.shape[0] * grad_out.shape[2]
    grad_gamma = (grad_out * xhat).sum(axis=(0, 2))
    grad_beta = grad_out.sum(axis=(0, 2))
    dxhat = grad_out * layer.gamma[None, :, None]
    s1 = dxhat.sum(axis=(0, 2), keepdims=True)
    s2 = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
    grad_input = (inv_std[None, :, None] / n) * (n * dxhat - s1 - xhat * s2)
    return grad_input, grad_gamma, grad_beta


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(x, grad_out):
    # Subgradient 0 at exactly zero.
    return grad_out * (x > 0)


def gap_forward(x):
    """Global average pooling over time: (B, C, L) -> (B, C)."""
    return x.mean(axis=2), x.shape[2]


def gap_backward(cache, grad_out):
    length = cache
    return np.repeat(grad_out[:, :, None] / length, length, axis=2)


def dense_forward(layer, x):
    if x.shape[1] != layer.weight.shape[0]:
        raise ValueError(
            f"input dim {x.shape[1]} does not match weight {layer.weight.shape}"
        )
    return x @ layer.weight + layer.bias, x


def dense_backward(layer, cache, grad_out):
    x = cache
    if grad_out.shape != (x.shape[0], layer.weight.shape[1]):
        raise ValueError(f"grad_out shape {grad_out.shape} mismatched")
    grad_weight = x.T @ grad_out
    grad_bias = grad_out.sum(axis=0)
    grad_input = grad_out @ layer.weight.T
    return grad_input, grad_weight, grad_bias
