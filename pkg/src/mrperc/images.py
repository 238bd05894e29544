"""PNG decode/encode helpers: (C, H, W) float32 tensors in [0, 1]."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InputError
from .tensorops import Tensor3


def load_image(path: str | Path) -> Tensor3:
    """Decode an 8-bit image file to a (3, H, W) float32 tensor in [0, 1]."""
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float32) / np.float32(255.0)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def save_image(path: str | Path, tensor: Tensor3) -> None:
    """Encode a (3, H, W) [0, 1] tensor as an 8-bit PNG (round to nearest)."""
    if tensor.ndim != 3 or tensor.shape[0] != 3:
        raise InputError(f"expected (3, H, W) tensor, got {tensor.shape}")
    arr = np.clip(np.rint(tensor * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr.transpose(1, 2, 0), mode="RGB").save(path, format="PNG")
