"""Shared fixtures: tiny synthetic backbones and asset paths."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from mrperc import mrpw
from mrperc.model import load_weights

REPO_ROOT = Path(__file__).resolve().parent.parent
ASSETS = REPO_ROOT / "assets"
ALEXNET_MRPW = ASSETS / "alexnet.mrpw"
ALEXNET_GOLDEN = ASSETS / "alexnet.golden.mrpw"
MINI_CORPUS = ASSETS / "mini2afc"

# full 2AFC dataset is optional; point this env var at its root to enable
# the table-reproduction tests
FULL_2AFC_DIR = os.environ.get("MRPERC_2AFC_DIR")


def conv_layer(weight_name, shape, stride=1, padding=0, tap=False):
    return {
        "kind": "conv", "weight": weight_name, "bias": weight_name + ".bias",
        "weight_shape": list(shape), "bias_shape": [shape[0]],
        "stride": stride, "padding": padding, "block_tap": tap,
    }


def write_store(path, layers, entries, mean=(0.0, 0.0, 0.0),
                std=(1.0, 1.0, 1.0), input_channels=3, backbone="test"):
    manifest = {
        "backbone": backbone,
        "input_channels": input_channels,
        "mean": list(mean),
        "std": list(std),
        "layers": layers,
    }
    mrpw.write(path, manifest, entries)
    return path


def make_tiny_backbone(path: Path, seed: int = 7):
    """3->4->6 channel two-tap conv net usable on images >= 8x8."""
    rng = np.random.default_rng(seed)

    def w(shape, scale):
        return (rng.standard_normal(shape) * scale).astype(np.float32)

    entries = {
        "c1": w((4, 3, 3, 3), 0.5),
        "c1.bias": w((4,), 0.1),
        "c2": w((6, 4, 3, 3), 0.4),
        "c2.bias": w((6,), 0.1),
    }
    layers = [
        conv_layer("c1", (4, 3, 3, 3), stride=1, padding=1),
        {"kind": "relu", "block_tap": True},
        {"kind": "maxpool", "size": 2, "stride": 2, "block_tap": False},
        conv_layer("c2", (6, 4, 3, 3), stride=1, padding=1),
        {"kind": "relu", "block_tap": True},
    ]
    return write_store(path, layers, entries,
                       mean=(0.45, 0.45, 0.45), std=(0.25, 0.25, 0.25))


@pytest.fixture
def tiny_store(tmp_path):
    return load_weights(make_tiny_backbone(tmp_path / "tiny.mrpw"))


@pytest.fixture(scope="session")
def alexnet_store():
    if not ALEXNET_MRPW.is_file():
        pytest.skip("checked-in AlexNet export missing")
    return load_weights(ALEXNET_MRPW)


def random_image(rng, channels=3, h=16, w=16):
    return rng.random((channels, h, w), dtype=np.float32)
