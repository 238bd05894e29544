"""Turn torchvision backbones into sequential conv/relu/maxpool manifests.

Supported: alexnet (5 block taps), squeezenet1_1 (7 taps), vgg16 (5 taps).
Residual and attention architectures cannot be expressed in the manifest
format and are refused.

SqueezeNet Fire modules are rewritten into two plain convolutions: the
squeeze 1x1 stays as-is, and the parallel expand1x1/expand3x3 pair becomes
a single 3x3 convolution whose first output channels carry the 1x1 kernels
embedded at the window centre.  Channel order matches the original concat,
so activations are preserved.  The original ceil-mode pools are declared
as floor pools; shapes coincide at the 64/128 golden sizes.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
from torchvision import models

# standard ImageNet preprocessing, embedded into every export
IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]

SUPPORTED = ("alexnet", "squeezenet", "vgg16")
UNSUPPORTED_HINTS = ("resnet", "vit", "swin", "densenet")


class UnsupportedBackbone(RuntimeError):
    pass


def _conv_layer(name: str, module: nn.Conv2d, tap: bool,
                entries: dict[str, np.ndarray],
                weight: np.ndarray | None = None,
                bias: np.ndarray | None = None) -> dict:
    w = weight if weight is not None else module.weight.detach().numpy()
    b = bias if bias is not None else module.bias.detach().numpy()
    entries[f"{name}.weight"] = w.astype(np.float32)
    entries[f"{name}.bias"] = b.astype(np.float32)
    stride = module.stride[0] if isinstance(module.stride, tuple) else module.stride
    padding = (module.padding[0] if isinstance(module.padding, tuple)
               else module.padding)
    return {
        "kind": "conv",
        "weight": f"{name}.weight",
        "bias": f"{name}.bias",
        "weight_shape": list(w.shape),
        "bias_shape": [w.shape[0]],
        "stride": int(stride),
        "padding": int(padding),
        "block_tap": False,
    }


def _relu(tap: bool) -> dict:
    return {"kind": "relu", "block_tap": tap}


def _maxpool(module: nn.MaxPool2d) -> dict:
    return {"kind": "maxpool", "size": int(module.kernel_size),
            "stride": int(module.stride), "block_tap": False}


def _fire_combined_expand(fire) -> tuple[np.ndarray, np.ndarray]:
    """Merge the parallel expand convs into one 3x3 conv.

    expand1x1 kernels sit at the centre of an otherwise-zero 3x3 window;
    zero taps contribute nothing, so outputs equal the original branch.
    """
    w1 = fire.expand1x1.weight.detach().numpy()   # (e1, s, 1, 1)
    w3 = fire.expand3x3.weight.detach().numpy()   # (e3, s, 3, 3)
    e1, squeeze = w1.shape[0], w1.shape[1]
    combined = np.zeros((e1 + w3.shape[0], squeeze, 3, 3), dtype=np.float32)
    combined[:e1, :, 1, 1] = w1[:, :, 0, 0]
    combined[e1:] = w3
    bias = np.concatenate([fire.expand1x1.bias.detach().numpy(),
                           fire.expand3x3.bias.detach().numpy()])
    return combined, bias.astype(np.float32)


def _reinit(model: nn.Module, seed: int) -> None:
    """Deterministic healthy random init (activation-preserving)."""
    torch.manual_seed(seed)
    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
            if module.bias is not None:
                nn.init.uniform_(module.bias, -0.05, 0.05)


def _load_model(name: str, init: str, seed: int):
    builders = {
        "alexnet": (models.alexnet, "IMAGENET1K_V1"),
        "squeezenet": (models.squeezenet1_1, "IMAGENET1K_V1"),
        "vgg16": (models.vgg16, "IMAGENET1K_V1"),
    }
    builder, weight_tag = builders[name]
    if init == "pretrained":
        try:
            model = builder(weights=weight_tag)
        except Exception as exc:
            raise UnsupportedBackbone(
                f"pretrained weights for {name} are not obtainable here "
                f"({exc}); re-run with --init random --seed N") from exc
    else:
        model = builder(weights=None)
        _reinit(model, seed)
    model.eval()
    return model


def build_backbone(name: str, init: str = "pretrained",
                   seed: int = 0) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (manifest, entries) for a supported backbone."""
    key = name.lower()
    if key in ("squeezenet1_1", "squeezenet1.1"):
        key = "squeezenet"
    if key not in SUPPORTED:
        if any(h in key for h in UNSUPPORTED_HINTS):
            raise UnsupportedBackbone(
                f"{name}: residual/attention graphs cannot be expressed in "
                "the sequential manifest format")
        raise UnsupportedBackbone(
            f"unknown backbone {name!r}; supported: {', '.join(SUPPORTED)}")

    model = _load_model(key, init, seed)
    entries: dict[str, np.ndarray] = {}
    layers: list[dict] = []

    with torch.no_grad():
        if key == "alexnet":
            # taps at every relu after a conv; the trailing maxpool is
            # dropped (nothing is tapped after it)
            taps = {1, 4, 7, 9, 11}
            for idx, module in enumerate(model.features):
                if idx == 12:
                    break
                if isinstance(module, nn.Conv2d):
                    layers.append(_conv_layer(f"features.{idx}", module,
                                              False, entries))
                elif isinstance(module, nn.ReLU):
                    layers.append(_relu(idx in taps))
                elif isinstance(module, nn.MaxPool2d):
                    layers.append(_maxpool(module))
        elif key == "vgg16":
            taps = {3, 8, 15, 22, 29}  # relu1_2 .. relu5_3
            for idx, module in enumerate(model.features):
                if isinstance(module, nn.Conv2d):
                    layers.append(_conv_layer(f"features.{idx}", module,
                                              False, entries))
                elif isinstance(module, nn.ReLU):
                    layers.append(_relu(idx in taps))
                elif isinstance(module, nn.MaxPool2d):
                    layers.append(_maxpool(module))
        else:  # squeezenet1_1
            fire_taps = {4, 7, 9, 10, 11, 12}
            for idx, module in enumerate(model.features):
                if isinstance(module, nn.Conv2d):
                    layers.append(_conv_layer(f"features.{idx}", module,
                                              False, entries))
                elif isinstance(module, nn.ReLU):
                    layers.append(_relu(idx == 1))
                elif isinstance(module, nn.MaxPool2d):
                    layers.append(_maxpool(module))
                else:  # Fire
                    base = f"features.{idx}"
                    layers.append(_conv_layer(f"{base}.squeeze",
                                              module.squeeze, False, entries))
                    layers.append(_relu(False))
                    w, b = _fire_combined_expand(module)
                    entries[f"{base}.expand.weight"] = w
                    entries[f"{base}.expand.bias"] = b
                    layers.append({
                        "kind": "conv",
                        "weight": f"{base}.expand.weight",
                        "bias": f"{base}.expand.bias",
                        "weight_shape": list(w.shape),
                        "bias_shape": [w.shape[0]],
                        "stride": 1,
                        "padding": 1,
                        "block_tap": False,
                    })
                    layers.append(_relu(idx in fire_taps))

    manifest = {
        "backbone": key,
        "input_channels": 3,
        "mean": IMAGENET_MEAN,
        "std": IMAGENET_STD,
        "source_framework": f"torch-{torch.__version__}",
        "init": init if init != "random" else f"random-seed-{seed}",
        "layers": layers,
    }
    return manifest, entries


def expected_taps(name: str) -> int:
    return {"alexnet": 5, "squeezenet": 7, "vgg16": 5}[name]
