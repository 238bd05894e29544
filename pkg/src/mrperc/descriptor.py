"""Feature descriptors: linear/quadratic statistics, normalization, dissimilarity.

A descriptor is an ordered list of feature blocks, each tagged with its
provenance (block index, resolution, statistic).  Linear blocks are raw
feature maps; quadratic blocks are channel Gram matrices divided by the
spatial count so their magnitude stays in the responsive range of the
sigmoid normalizer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import UsageError
from .model import BlockFeatures
from .tensorops import Tensor3

CE_EPS = 1e-7  # clamp for binary cross-entropy, keeps ln() finite

LINEAR = "linear"
QUADRATIC = "quadratic"


class NormStrategy(enum.Enum):
    L2 = "l2"
    SIGMOID = "sigmoid"
    RELU_L1 = "relu_l1"

    @classmethod
    def parse(cls, name: str) -> "NormStrategy":
        try:
            return cls(name.lower())
        except ValueError:
            raise UsageError(
                f"unknown normalization {name!r}; "
                f"expected one of {[m.value for m in cls]}") from None


class DissimMeasure(enum.Enum):
    MSE = "mse"
    MAE = "mae"
    CE = "ce"

    @classmethod
    def parse(cls, name: str) -> "DissimMeasure":
        try:
            return cls(name.lower())
        except ValueError:
            raise UsageError(
                f"unknown dissimilarity {name!r}; "
                f"expected one of {[m.value for m in cls]}") from None


@dataclass(frozen=True)
class BlockOrigin:
    block: int          # 1-based block index
    resolution: str     # "x1" | "x2"
    statistic: str      # "linear" | "quadratic"


@dataclass(frozen=True)
class FeatureBlock:
    values: np.ndarray
    origin: BlockOrigin


@dataclass(frozen=True)
class Descriptor:
    blocks: tuple[FeatureBlock, ...]
    normalization: str = "none"

    def __len__(self) -> int:
        return len(self.blocks)


def _select(blocks: BlockFeatures, block_mask) -> list[tuple[int, Tensor3]]:
    if block_mask is None:
        return [(b + 1, blk) for b, blk in enumerate(blocks)]
    mask = sorted(set(int(b) for b in block_mask))
    bad = [b for b in mask if not 1 <= b <= len(blocks)]
    if bad or not mask:
        raise UsageError(f"block mask {sorted(block_mask)} invalid for "
                         f"{len(blocks)} blocks")
    return [(b, blocks[b - 1]) for b in mask]


def linear_features(blocks: BlockFeatures, resolution: str = "x1",
                    block_mask=None) -> Descriptor:
    """One linear FeatureBlock per tapped block, values passed through."""
    fbs = tuple(
        FeatureBlock(blk, BlockOrigin(b, resolution, LINEAR))
        for b, blk in _select(blocks, block_mask))
    return Descriptor(fbs)


def gram(block: Tensor3) -> np.ndarray:
    """Channel co-activation matrix, divided by the spatial count.

    ``G[c1, c2] = sum_{h,w} f[c1,h,w] * f[c2,h,w] / (H*W)``; symmetric and
    positive semidefinite by construction.
    """
    c, h, w = block.shape
    flat = block.reshape(c, h * w)
    g = flat @ flat.T
    g = (g + g.T) * np.float32(0.5)  # exact symmetry despite GEMM rounding
    return g / np.float32(h * w)


def quadratic_features(blocks: BlockFeatures, resolution: str = "x1",
                       block_mask=None) -> Descriptor:
    """One Gram matrix per tapped block."""
    fbs = tuple(
        FeatureBlock(gram(blk), BlockOrigin(b, resolution, QUADRATIC))
        for b, blk in _select(blocks, block_mask))
    return Descriptor(fbs)


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def _normalize_block(values: np.ndarray, strategy: NormStrategy,
                     channelwise_l2: bool) -> np.ndarray:
    if strategy is NormStrategy.SIGMOID:
        return _sigmoid(values)
    if strategy is NormStrategy.L2:
        if channelwise_l2 and values.ndim == 3:
            # per spatial location, unit-normalize the channel vector
            norms = np.sqrt(np.sum(np.square(values, dtype=np.float64),
                                   axis=0, keepdims=True))
            norms = norms.astype(np.float32)
            return np.where(norms > 0, values / np.where(norms == 0, 1, norms),
                            values)
        norm = float(np.sqrt(np.sum(np.square(values, dtype=np.float64))))
        if norm == 0.0:
            return values  # zero block passes through unchanged
        return values / np.float32(norm)
    # RELU_L1: clip negatives, then divide by the block L1 norm
    rect = np.maximum(values, np.float32(0.0))
    total = float(np.sum(rect, dtype=np.float64))
    if total == 0.0:
        return rect
    return rect / np.float32(total)


def normalize(desc: Descriptor, strategy: NormStrategy,
              channelwise_l2: bool = False) -> Descriptor:
    """Apply a normalization strategy per block; rejects double application."""
    if desc.normalization != "none":
        raise UsageError(
            f"descriptor already normalized with {desc.normalization!r}")
    blocks = tuple(
        replace(fb, values=_normalize_block(fb.values, strategy, channelwise_l2))
        for fb in desc.blocks)
    return Descriptor(blocks, normalization=strategy.value)


def _check_pair(a: Descriptor, b: Descriptor) -> None:
    if len(a.blocks) != len(b.blocks):
        raise UsageError(
            f"descriptor block counts differ: {len(a.blocks)} vs {len(b.blocks)}")
    if a.normalization != b.normalization:
        raise UsageError(
            f"normalizations differ: {a.normalization!r} vs {b.normalization!r}")
    for fa, fb in zip(a.blocks, b.blocks):
        if fa.origin != fb.origin:
            raise UsageError(f"block origins differ: {fa.origin} vs {fb.origin}")
        if fa.values.shape != fb.values.shape:
            raise UsageError(
                f"block {fa.origin.block} shapes differ: "
                f"{fa.values.shape} vs {fb.values.shape}")


def _ce_ready(desc: Descriptor) -> bool:
    if desc.normalization in (NormStrategy.SIGMOID.value, NormStrategy.RELU_L1.value):
        return True
    return all(
        float(fb.values.min()) >= 0.0 and float(fb.values.max()) <= 1.0
        for fb in desc.blocks)


def block_distances(a: Descriptor, b: Descriptor,
                    measure: DissimMeasure) -> list[float]:
    """Per-block mean of the pointwise term; ``a`` is the reference side."""
    _check_pair(a, b)
    if measure is DissimMeasure.CE and not (_ce_ready(a) and _ce_ready(b)):
        raise UsageError("cross-entropy needs values in [0, 1]; "
                         "normalize with sigmoid or relu_l1 first")
    out = []
    for fa, fb in zip(a.blocks, b.blocks):
        va = fa.values.astype(np.float64)
        vb = fb.values.astype(np.float64)
        if measure is DissimMeasure.MSE:
            term = np.square(va - vb)
        elif measure is DissimMeasure.MAE:
            term = np.abs(va - vb)
        else:
            va = np.clip(va, CE_EPS, 1.0 - CE_EPS)
            vb = np.clip(vb, CE_EPS, 1.0 - CE_EPS)
            term = -(va * np.log(vb) + (1.0 - va) * np.log1p(-vb))
        out.append(float(np.mean(term)))
    return out


def dissimilarity(a: Descriptor, b: Descriptor, measure: DissimMeasure) -> float:
    """Unweighted mean over blocks of the per-block element means."""
    return float(np.mean(block_distances(a, b, measure)))
