"""Golden test image and reference activations.

The test image is a fixed synthetic 3x64x64 card (gradients, disks, a
checker patch, seeded noise).  Reference activations are computed by
interpreting the exported manifest with float64 torch ops -- the stored
values are the manifest's own semantics in the source framework, not a
re-reading of the original torchvision module graph.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch
import torch.nn.functional as F

GOLDEN_SIZE = 64
GOLDEN_SEED = 1789


def golden_image() -> np.ndarray:
    """Deterministic 3x64x64 RGB test card in [0, 1]."""
    n = GOLDEN_SIZE
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64) / (n - 1)
    r = 0.25 + 0.5 * xx
    g = 0.25 + 0.5 * yy
    b = 0.5 + 0.25 * np.sin(8.0 * np.pi * xx) * np.cos(6.0 * np.pi * yy)
    img = np.stack([r, g, b])

    # two disks and a checker patch give edges at several scales
    cy, cx = 0.3, 0.65
    disk = (yy - cy) ** 2 + (xx - cx) ** 2 < 0.04
    img[0][disk] = 0.9
    img[1][disk] = 0.2
    disk2 = (yy - 0.7) ** 2 + (xx - 0.25) ** 2 < 0.02
    img[2][disk2] = 0.95
    checker = ((np.floor(yy * 8) + np.floor(xx * 8)) % 2).astype(bool)
    img[1][checker & (yy > 0.75)] = 0.8

    rng = np.random.default_rng(GOLDEN_SEED)
    img += rng.normal(0.0, 0.02, img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def image_digest(image: np.ndarray) -> str:
    return "sha256:" + hashlib.sha256(
        np.ascontiguousarray(image, dtype="<f4").tobytes()).hexdigest()


def upscale_x2(image: np.ndarray) -> np.ndarray:
    """Bilinear x2 with half-pixel centres (align_corners=False), float64."""
    t = torch.from_numpy(image.astype(np.float64)).unsqueeze(0)
    up = F.interpolate(t, scale_factor=2, mode="bilinear", align_corners=False)
    return up.squeeze(0).numpy().astype(np.float32)


def run_manifest(manifest: dict, entries: dict[str, np.ndarray],
                 image: np.ndarray) -> list[np.ndarray]:
    """Float64 forward pass of the manifest; returns tapped blocks as f32."""
    mean = torch.tensor(manifest["mean"], dtype=torch.float64).view(-1, 1, 1)
    std = torch.tensor(manifest["std"], dtype=torch.float64).view(-1, 1, 1)
    x = (torch.from_numpy(image.astype(np.float64)) - mean) / std
    x = x.unsqueeze(0)
    blocks: list[np.ndarray] = []
    with torch.no_grad():
        for layer in manifest["layers"]:
            kind = layer["kind"]
            if kind == "conv":
                w = torch.from_numpy(entries[layer["weight"]].astype(np.float64))
                b = torch.from_numpy(entries[layer["bias"]].astype(np.float64))
                x = F.conv2d(x, w, b, stride=layer.get("stride", 1),
                             padding=layer.get("padding", 0))
            elif kind == "relu":
                x = F.relu(x)
            elif kind == "maxpool":
                x = F.max_pool2d(x, kernel_size=layer["size"],
                                 stride=layer["stride"], ceil_mode=False)
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
            if layer.get("block_tap"):
                blocks.append(
                    x.squeeze(0).numpy().astype(np.float32))
    return blocks


def golden_entries(manifest: dict,
                   entries: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """All golden arrays: input and per-block activations, x1 and x2."""
    image = golden_image()
    out: dict[str, np.ndarray] = {"golden/input": image}
    for i, block in enumerate(run_manifest(manifest, entries, image), start=1):
        out[f"golden/block{i}"] = block
    image_x2 = upscale_x2(image)
    out["golden_x2/input"] = image_x2
    for i, block in enumerate(run_manifest(manifest, entries, image_x2),
                              start=1):
        out[f"golden_x2/block{i}"] = block
    return out
