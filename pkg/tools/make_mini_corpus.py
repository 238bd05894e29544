#!/usr/bin/env python3
"""Generate the desk-scale 2AFC corpus checked in under assets/mini2afc.

60 triplets (10 per category), 64x64 synthetic references with two
category-flavoured distortions each and deterministic judge scores.
Images and judges are fully reproducible from the fixed seeds; re-running
this script must produce byte-identical files.

Usage: python3 tools/make_mini_corpus.py [--out assets/mini2afc]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from mrperc.images import save_image
from mrperc.tensorops import bilinear_resize

SIZE = 64
PER_CATEGORY = 10
BASE_SEED = 20260809

CATEGORIES = ("trad", "cnn", "superres", "deblur", "color", "frameinterp")

# frameinterp exercises the binary judge layout; everything else is text
NPY_JUDGE_CATEGORIES = {"frameinterp"}


# --------------------------------------------------------------------------
# reference image synthesis

def smooth_noise(rng, scale):
    low = rng.random((3, scale, scale), dtype=np.float32)
    return bilinear_resize(low, SIZE, SIZE)


def make_reference(rng) -> np.ndarray:
    img = 0.55 * smooth_noise(rng, 4) + 0.3 * smooth_noise(rng, 8)
    # a few rectangles and a disk for hard edges
    for _ in range(int(rng.integers(2, 5))):
        y0, x0 = rng.integers(0, SIZE - 12, size=2)
        h, w = rng.integers(6, 24, size=2)
        color = rng.random(3, dtype=np.float32)
        img[:, y0:y0 + h, x0:x0 + w] = \
            0.5 * img[:, y0:y0 + h, x0:x0 + w] + 0.5 * color[:, None, None]
    cy, cx = rng.integers(12, SIZE - 12, size=2)
    r = int(rng.integers(5, 12))
    yy, xx = np.mgrid[0:SIZE, 0:SIZE]
    disk = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
    tint = rng.random(3, dtype=np.float32)
    for c in range(3):
        img[c][disk] = 0.4 * img[c][disk] + 0.6 * tint[c]
    img += rng.normal(0, 0.015, img.shape).astype(np.float32)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


# --------------------------------------------------------------------------
# distortions

def _blur_1d(img, kernel, axis):
    spec = [(0, 0), (0, 0), (0, 0)]
    spec[axis] = ((len(kernel) - 1) // 2, len(kernel) // 2)
    padded = np.pad(img, spec, mode="edge")
    out = np.empty_like(img)
    for c in range(img.shape[0]):
        out[c] = np.apply_along_axis(
            lambda v: np.convolve(v, kernel, mode="valid"), axis - 1, padded[c])
    return out


def gaussian_blur(img, sigma):
    radius = max(1, int(3 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs ** 2) / (2 * sigma ** 2))
    k = (k / k.sum()).astype(np.float32)
    return _blur_1d(_blur_1d(img, k, axis=1), k, axis=2)


def motion_blur(img, length, axis):
    k = np.full(length, 1.0 / length, dtype=np.float32)
    return _blur_1d(img, k, axis=axis)


def add_noise(img, sigma, rng):
    return np.clip(img + rng.normal(0, sigma, img.shape).astype(np.float32),
                   0, 1)


def quantize(img, levels):
    return np.round(img * (levels - 1)) / np.float32(levels - 1)


def adjust_contrast(img, factor):
    return np.clip(0.5 + (img - 0.5) * np.float32(factor), 0, 1)


def channel_shift(img, shifts):
    out = img.copy()
    for c, s in enumerate(shifts):
        out[c] = np.clip(out[c] + np.float32(s), 0, 1)
    return out


def desaturate(img, amount):
    luma = 0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2]
    return np.clip(img * (1 - amount) + luma[None] * amount, 0, 1) \
        .astype(np.float32)


def down_up(img, factor):
    small = bilinear_resize(img, SIZE // factor, SIZE // factor)
    return bilinear_resize(small, SIZE, SIZE)


def ghost(img, dy, dx, alpha):
    shifted = np.roll(np.roll(img, dy, axis=1), dx, axis=2)
    return np.clip((1 - alpha) * img + alpha * shifted, 0, 1)


def pixel_shift(img, dy, dx):
    return np.roll(np.roll(img, dy, axis=1), dx, axis=2)


def distort(category, ref, which, rng):
    """Two distortion flavours per category; strength varies with the rng."""
    if category == "trad":
        if which == 0:
            return quantize(add_noise(ref, rng.uniform(0.03, 0.08), rng),
                            int(rng.integers(6, 14)))
        return add_noise(adjust_contrast(ref, rng.uniform(0.5, 1.6)),
                         rng.uniform(0.01, 0.05), rng)
    if category == "cnn":
        if which == 0:
            blurred = gaussian_blur(ref, rng.uniform(0.8, 1.6))
            return np.clip(blurred + (blurred - gaussian_blur(blurred, 1.0))
                           * rng.uniform(0.5, 2.0), 0, 1)
        return add_noise(gaussian_blur(ref, rng.uniform(0.5, 1.2)),
                         rng.uniform(0.02, 0.06), rng)
    if category == "superres":
        return down_up(ref, 2 if which == 0 else 4)
    if category == "deblur":
        if which == 0:
            return motion_blur(ref, int(rng.integers(3, 8)), axis=2)
        return add_noise(motion_blur(ref, int(rng.integers(3, 8)), axis=1),
                         rng.uniform(0.01, 0.03), rng)
    if category == "color":
        if which == 0:
            return channel_shift(ref, rng.uniform(-0.15, 0.15, size=3))
        return desaturate(ref, rng.uniform(0.4, 1.0))
    # frameinterp
    if which == 0:
        return ghost(ref, int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                     rng.uniform(0.3, 0.5))
    return gaussian_blur(pixel_shift(ref, int(rng.integers(-2, 3)),
                                     int(rng.integers(1, 3))),
                         rng.uniform(0.4, 0.9))


# --------------------------------------------------------------------------

def write_corpus(root: Path) -> int:
    count = 0
    for cat_index, category in enumerate(CATEGORIES):
        cat_dir = root / category
        for sub in ("ref", "p0", "p1", "judge"):
            (cat_dir / sub).mkdir(parents=True, exist_ok=True)
        for i in range(PER_CATEGORY):
            rng = np.random.default_rng([BASE_SEED, cat_index, i])
            ref = make_reference(rng)
            p0 = distort(category, ref, 0, rng)
            p1 = distort(category, ref, 1, rng)
            judge = round(float(rng.integers(0, 11)) / 10.0, 1)
            stem = f"{category}{i:03d}"
            save_image(cat_dir / "ref" / f"{stem}.png", ref)
            save_image(cat_dir / "p0" / f"{stem}.png", p0)
            save_image(cat_dir / "p1" / f"{stem}.png", p1)
            if category in NPY_JUDGE_CATEGORIES:
                np.save(cat_dir / "judge" / f"{stem}.npy",
                        np.array([judge], dtype=np.float32))
            else:
                (cat_dir / "judge" / f"{stem}.txt").write_text(f"{judge}\n")
            count += 1
    return count


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).parent.parent / "assets"
                        / "mini2afc")
    args = parser.parse_args()
    count = write_corpus(args.out)
    print(f"wrote {count} triplets under {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
