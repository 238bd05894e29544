"""Backbone loading and forward passes that tap per-block feature maps.

A backbone lives in an MRPW container: named parameter arrays plus a JSON
manifest describing a sequential graph of conv / relu / maxpool layers.
Layers flagged ``block_tap`` mark the feature maps collected by
:func:`extract_blocks` (shallow to deep).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import mrpw, tensorops
from .errors import ConfigurationError, InputError, ManifestError
from .tensorops import Tensor3

BlockFeatures = list  # ordered list of Tensor3, shallow -> deep

_KINDS = ("conv", "relu", "maxpool")


@dataclass(frozen=True)
class LayerDescriptor:
    """One manifest entry; parameters are per-kind, unused ones stay None."""

    kind: str
    block_tap: bool = False
    weight: str | None = None          # conv: entry name of the kernel
    bias: str | None = None            # conv: entry name of the bias
    weight_shape: tuple[int, ...] | None = None
    bias_shape: tuple[int, ...] | None = None
    stride: int = 1
    padding: int = 0                   # conv only
    size: int = 0                      # maxpool window

    @classmethod
    def from_json(cls, obj: dict, index: int) -> "LayerDescriptor":
        kind = obj.get("kind")
        if kind not in _KINDS:
            raise ManifestError(f"layer {index}: unknown kind {kind!r}")
        try:
            if kind == "conv":
                return cls(
                    kind="conv",
                    block_tap=bool(obj.get("block_tap", False)),
                    weight=obj["weight"],
                    bias=obj.get("bias"),
                    weight_shape=tuple(obj["weight_shape"]),
                    bias_shape=tuple(obj["bias_shape"]) if obj.get("bias") else None,
                    stride=int(obj.get("stride", 1)),
                    padding=int(obj.get("padding", 0)),
                )
            if kind == "maxpool":
                return cls(
                    kind="maxpool",
                    block_tap=bool(obj.get("block_tap", False)),
                    size=int(obj["size"]),
                    stride=int(obj.get("stride", 1)),
                )
            return cls(kind="relu", block_tap=bool(obj.get("block_tap", False)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"layer {index} ({kind}): bad parameters: {exc}") from exc

    def describe(self) -> str:
        if self.kind == "conv":
            return (f"conv {self.weight} {list(self.weight_shape)} "
                    f"stride={self.stride} pad={self.padding}")
        if self.kind == "maxpool":
            return f"maxpool k={self.size} stride={self.stride}"
        return "relu"


@dataclass
class WeightStore:
    """Validated, immutable-after-load backbone: arrays + manifest + metadata."""

    entries: dict[str, np.ndarray]
    manifest: list[LayerDescriptor]
    backbone: str
    input_channels: int
    mean: np.ndarray                  # per-channel, float32
    std: np.ndarray
    metadata: dict = field(default_factory=dict)
    checksum: int = 0

    @property
    def block_count(self) -> int:
        return sum(1 for layer in self.manifest if layer.block_tap)

    def tap_channels(self) -> list[int]:
        """Channel count of each tapped block, from manifest declarations."""
        channels = self.input_channels
        out = []
        for layer in self.manifest:
            if layer.kind == "conv":
                channels = layer.weight_shape[0]
            if layer.block_tap:
                out.append(channels)
        return out


def parse_manifest(manifest: dict) -> tuple[list[LayerDescriptor], dict]:
    if not isinstance(manifest, dict) or "layers" not in manifest:
        raise ManifestError("manifest has no 'layers' list")
    layers = [LayerDescriptor.from_json(obj, i)
              for i, obj in enumerate(manifest["layers"])]
    if not any(l.block_tap for l in layers):
        raise ManifestError("manifest declares no block taps")
    meta = {k: v for k, v in manifest.items() if k != "layers"}
    for key in ("input_channels", "mean", "std"):
        if key not in meta:
            raise ManifestError(f"manifest missing metadata key {key!r}")
    return layers, meta


def load_weights(path: str | Path) -> WeightStore:
    """Load and fully validate an MRPW backbone; read-only and repeatable."""
    manifest_obj, entries = mrpw.read(path)
    layers, meta = parse_manifest(manifest_obj)

    for name, arr in entries.items():
        if not np.isfinite(arr).all():
            raise ManifestError(f"entry {name!r} contains non-finite values")

    channels = int(meta["input_channels"])
    for i, layer in enumerate(layers):
        if layer.kind != "conv":
            continue
        for attr, shape in (("weight", layer.weight_shape),
                            ("bias", layer.bias_shape)):
            name = getattr(layer, attr)
            if name is None:
                continue
            if name not in entries:
                raise ManifestError(f"layer {i}: entry {name!r} not in file")
            if entries[name].shape != shape:
                raise ManifestError(
                    f"layer {i}: entry {name!r} has shape "
                    f"{entries[name].shape}, manifest declares {shape}")
        if layer.weight_shape[1] != channels:
            raise ManifestError(
                f"layer {i}: conv expects {layer.weight_shape[1]} input "
                f"channels but receives {channels}")
        channels = layer.weight_shape[0]

    mean = np.asarray(meta["mean"], dtype=np.float32)
    std = np.asarray(meta["std"], dtype=np.float32)
    if mean.shape != (int(meta["input_channels"]),) or mean.shape != std.shape:
        raise ManifestError("preprocessing mean/std length must equal input channels")
    if (std == 0).any():
        raise ManifestError("preprocessing std contains zeros")

    _, crc = _header_fields(path)
    return WeightStore(
        entries=entries,
        manifest=layers,
        backbone=str(meta.get("backbone", "unknown")),
        input_channels=int(meta["input_channels"]),
        mean=mean,
        std=std,
        metadata=meta,
        checksum=crc,
    )


def _header_fields(path: str | Path) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(12)
    version, crc = struct.unpack("<II", head[4:12])
    return version, crc


def preprocess(image: Tensor3, store: WeightStore) -> Tensor3:
    """Per-channel (v - mean) / std using the constants from the weight file."""
    if image.ndim != 3 or image.shape[0] != store.input_channels:
        raise InputError(
            f"expected {store.input_channels} channels, got shape {image.shape}")
    out = (image - store.mean[:, None, None]) / store.std[:, None, None]
    return out.astype(np.float32, copy=False)


def extract_blocks(image: Tensor3, store: WeightStore) -> BlockFeatures:
    """Run the manifest sequentially, collecting the tapped feature maps.

    The image must already be preprocessed.  Raises InputError naming the
    layer where the spatial dims underflow.
    """
    x = image
    blocks: BlockFeatures = []
    for i, layer in enumerate(store.manifest):
        _, h, w = x.shape
        if layer.kind == "conv":
            kh, kw = layer.weight_shape[2], layer.weight_shape[3]
            if h + 2 * layer.padding < kh or w + 2 * layer.padding < kw:
                raise InputError(
                    f"input too small at layer {i} ({layer.describe()}): "
                    f"spatial dims {h}x{w}")
            bias = store.entries[layer.bias] if layer.bias else None
            x = tensorops.conv2d(x, store.entries[layer.weight], bias,
                                 stride=layer.stride, padding=layer.padding,
                                 name=f"layer {i} ({layer.weight})")
        elif layer.kind == "relu":
            x = tensorops.relu(x)
        else:
            if layer.size > h or layer.size > w:
                raise InputError(
                    f"input too small at layer {i} ({layer.describe()}): "
                    f"spatial dims {h}x{w}")
            x = tensorops.maxpool2d(x, layer.size, layer.stride,
                                    name=f"layer {i}")
        if layer.block_tap:
            blocks.append(x)
    if len(blocks) != store.block_count:
        raise ConfigurationError("collected block count does not match manifest")
    return blocks
