"""Brute-force scalar-loop reference implementations used by the tests.

Everything here is written as plainly as possible (nested loops, float64
math) and stays independent of the library code it checks.
"""

from __future__ import annotations

import math

import numpy as np


def conv2d_oracle(x, kernel, bias=None, stride=1, padding=0):
    in_c, h, w = x.shape
    out_c, _, kh, kw = kernel.shape
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((out_c, oh, ow), dtype=np.float64)
    for oc in range(out_c):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0 if bias is None else float(bias[oc])
                for ic in range(in_c):
                    for ky in range(kh):
                        for kx in range(kw):
                            iy = oy * stride + ky - padding
                            ix = ox * stride + kx - padding
                            if 0 <= iy < h and 0 <= ix < w:
                                acc += float(x[ic, iy, ix]) * float(kernel[oc, ic, ky, kx])
                out[oc, oy, ox] = acc
    return out


def relu_oracle(x):
    out = np.zeros_like(x, dtype=np.float64)
    flat_in = x.reshape(-1)
    flat_out = out.reshape(-1)
    for i in range(flat_in.size):
        v = float(flat_in[i])
        flat_out[i] = v if v > 0 else 0.0
    return out


def maxpool2d_oracle(x, k, stride):
    c, h, w = x.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    out = np.zeros((c, oh, ow), dtype=np.float64)
    for ci in range(c):
        for oy in range(oh):
            for ox in range(ow):
                best = -math.inf
                for ky in range(k):
                    for kx in range(k):
                        best = max(best, float(x[ci, oy * stride + ky,
                                                 ox * stride + kx]))
                out[ci, oy, ox] = best
    return out


def bilinear_resize_oracle(x, out_h, out_w):
    c, h, w = x.shape
    out = np.zeros((c, out_h, out_w), dtype=np.float64)
    for ci in range(c):
        for oy in range(out_h):
            sy = min(max((oy + 0.5) * (h / out_h) - 0.5, 0.0), h - 1.0)
            y0 = int(math.floor(sy))
            y1 = min(y0 + 1, h - 1)
            fy = sy - y0
            for ox in range(out_w):
                sx = min(max((ox + 0.5) * (w / out_w) - 0.5, 0.0), w - 1.0)
                x0 = int(math.floor(sx))
                x1 = min(x0 + 1, w - 1)
                fx = sx - x0
                top = float(x[ci, y0, x0]) * (1 - fx) + float(x[ci, y0, x1]) * fx
                bot = float(x[ci, y1, x0]) * (1 - fx) + float(x[ci, y1, x1]) * fx
                out[ci, oy, ox] = top * (1 - fy) + bot * fy
    return out


def gram_oracle(x):
    c, h, w = x.shape
    out = np.zeros((c, c), dtype=np.float64)
    for c1 in range(c):
        for c2 in range(c):
            acc = 0.0
            for hy in range(h):
                for wx in range(w):
                    acc += float(x[c1, hy, wx]) * float(x[c2, hy, wx])
            out[c1, c2] = acc / (h * w)
    return out


def mse_oracle(a, b):
    fa, fb = a.reshape(-1), b.reshape(-1)
    acc = 0.0
    for i in range(fa.size):
        d = float(fa[i]) - float(fb[i])
        acc += d * d
    return acc / fa.size


def mae_oracle(a, b):
    fa, fb = a.reshape(-1), b.reshape(-1)
    acc = 0.0
    for i in range(fa.size):
        acc += abs(float(fa[i]) - float(fb[i]))
    return acc / fa.size


def ce_oracle(a, b, eps=1e-7):
    fa, fb = a.reshape(-1), b.reshape(-1)
    acc = 0.0
    for i in range(fa.size):
        va = min(max(float(fa[i]), eps), 1.0 - eps)
        vb = min(max(float(fb[i]), eps), 1.0 - eps)
        acc += -(va * math.log(vb) + (1.0 - va) * math.log(1.0 - vb))
    return acc / fa.size


def l2_normalize_oracle(x):
    acc = 0.0
    for v in x.reshape(-1):
        acc += float(v) * float(v)
    norm = math.sqrt(acc)
    if norm == 0.0:
        return x.astype(np.float64)
    return x.astype(np.float64) / norm


def relu_l1_normalize_oracle(x):
    rect = np.array([max(float(v), 0.0) for v in x.reshape(-1)])
    total = rect.sum()
    if total == 0.0:
        return rect.reshape(x.shape)
    return (rect / total).reshape(x.shape)


def sigmoid_oracle(x):
    out = np.zeros(x.size, dtype=np.float64)
    for i, v in enumerate(x.reshape(-1)):
        out[i] = 1.0 / (1.0 + math.exp(-float(v)))
    return out.reshape(x.shape)


def ssim_uniform_oracle(a, b, k1=0.01, k2=0.03):
    """Closed-form SSIM of two constant images (variances vanish)."""
    c1 = k1 * k1
    return (2 * a * b + c1) / (a * a + b * b + c1)


def score_triplet_oracle(d0, d1, judge):
    if d1 < d0:
        return judge
    if d1 > d0:
        return 1.0 - judge
    return 0.5
