"""Deterministic float32 kernels: convolution, ReLU, max-pooling, bilinear resize.

A tensor here is a C-contiguous ``numpy.ndarray`` of shape
``(channels, height, width)`` and dtype float32.  All kernels are pure
functions over immutable inputs and are safe to call concurrently.

Arithmetic is 32-bit throughout; convolution can optionally accumulate in
64 bits (set ``MRPERC_ACCUM64=1`` in the environment, or call
:func:`set_accum64`).
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigurationError

Tensor3 = np.ndarray

_accum64 = os.environ.get("MRPERC_ACCUM64", "") == "1"


def set_accum64(enabled: bool) -> None:
    """Toggle 64-bit accumulation inside conv2d (default off)."""
    global _accum64
    _accum64 = bool(enabled)


def conv2d(x: Tensor3, kernel: np.ndarray, bias: np.ndarray | None = None,
           stride: int = 1, padding: int = 0, name: str = "conv") -> Tensor3:
    """Cross-correlate ``x`` (inC, H, W) with ``kernel`` (outC, inC, kH, kW).

    Zero padding, no kernel flip.  Output spatial dims follow
    ``floor((in + 2*pad - k) / stride) + 1``.
    """
    if x.ndim != 3 or kernel.ndim != 4:
        raise ConfigurationError(
            f"{name}: expected rank-3 input and rank-4 kernel, "
            f"got {x.shape} and {kernel.shape}")
    in_c, h, w = x.shape
    out_c, k_in_c, kh, kw = kernel.shape
    if k_in_c != in_c:
        raise ConfigurationError(
            f"{name}: kernel expects {k_in_c} input channels, input has {in_c}")
    if bias is not None and bias.shape != (out_c,):
        raise ConfigurationError(
            f"{name}: bias shape {bias.shape} does not match {out_c} output channels")
    if stride < 1:
        raise ConfigurationError(f"{name}: stride must be >= 1, got {stride}")
    if padding < 0:
        raise ConfigurationError(f"{name}: padding must be >= 0, got {padding}")

    hp, wp = h + 2 * padding, w + 2 * padding
    if kh > hp or kw > wp:
        raise ConfigurationError(
            f"{name}: kernel {kh}x{kw} larger than padded input {hp}x{wp}")
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1

    if padding > 0:
        xp = np.zeros((in_c, hp, wp), dtype=np.float32)
        xp[:, padding:padding + h, padding:padding + w] = x
    else:
        xp = x

    # im2col: gather every window, then one matmul (fp32 GEMM by default).
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]              # (inC, oh, ow, kh, kw)
    cols = windows.transpose(0, 3, 4, 1, 2).reshape(in_c * kh * kw, oh * ow)
    wmat = kernel.reshape(out_c, in_c * kh * kw)
    if _accum64:
        out = (wmat.astype(np.float64) @ cols.astype(np.float64)).astype(np.float32)
    else:
        out = wmat @ np.ascontiguousarray(cols)
    out = out.reshape(out_c, oh, ow)
    if bias is not None:
        out = out + bias.astype(np.float32)[:, None, None]
    return np.ascontiguousarray(out)


def relu(x: Tensor3) -> Tensor3:
    """Elementwise max(0, v)."""
    return np.maximum(x, np.float32(0.0))


def maxpool2d(x: Tensor3, k: int, stride: int, name: str = "maxpool") -> Tensor3:
    """Per-window maximum with no padding; output size floors."""
    if x.ndim != 3:
        raise ConfigurationError(f"{name}: expected rank-3 input, got {x.shape}")
    if k < 1 or stride < 1:
        raise ConfigurationError(f"{name}: window and stride must be >= 1")
    _, h, w = x.shape
    if k > h or k > w:
        raise ConfigurationError(
            f"{name}: window {k}x{k} larger than input {h}x{w}")
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]
    return np.ascontiguousarray(windows.max(axis=(3, 4)))


def bilinear_resize(x: Tensor3, out_h: int, out_w: int) -> Tensor3:
    """Resize with half-pixel-center sampling and edge clamping.

    Source coordinate for destination index d is
    ``(d + 0.5) * (in / out) - 0.5``, clamped to ``[0, in - 1]``; the four
    neighbours are blended bilinearly per channel.
    """
    if out_h < 1 or out_w < 1:
        raise ConfigurationError(f"resize target must be >= 1, got {out_h}x{out_w}")
    _, h, w = x.shape
    if (out_h, out_w) == (h, w):
        return x.copy()

    ys = ((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5).clip(0, h - 1)
    xs = ((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5).clip(0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0).astype(np.float32)[None, :, None]
    fx = (xs - x0).astype(np.float32)[None, None, :]

    top = x[:, y0][:, :, x0] * (1 - fx) + x[:, y0][:, :, x1] * fx
    bot = x[:, y1][:, :, x0] * (1 - fx) + x[:, y1][:, :, x1] * fx
    return np.ascontiguousarray(top * (1 - fy) + bot * fy)
