"""Metric assembly: configurable deep metrics, the MR preset, and SSIM.

A metric configuration picks branches (resolution x statistic), one
normalization strategy, one dissimilarity measure, and an optional block
mask.  The distance is the unweighted mean over branches of the unweighted
mean over unmasked blocks, so single-block runs decompose the all-blocks
number exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import descriptor as desc_mod
from .descriptor import (LINEAR, QUADRATIC, Descriptor, DissimMeasure,
                         NormStrategy, block_distances, linear_features,
                         quadratic_features)
from .errors import UsageError
from .model import BlockFeatures, WeightStore, extract_blocks, preprocess
from .tensorops import Tensor3, bilinear_resize

X1 = "x1"
X2 = "x2"
_RESOLUTIONS = (X1, X2)
_STATISTICS = (LINEAR, QUADRATIC)


@dataclass(frozen=True)
class Branch:
    resolution: str
    statistic: str

    def __post_init__(self):
        if self.resolution not in _RESOLUTIONS:
            raise UsageError(f"unknown resolution {self.resolution!r}")
        if self.statistic not in _STATISTICS:
            raise UsageError(f"unknown statistic {self.statistic!r}")

    @property
    def key(self) -> str:
        return f"{self.resolution}/{self.statistic}"

    @classmethod
    def parse(cls, text: str) -> "Branch":
        parts = text.strip().lower().split(":")
        if len(parts) != 2:
            raise UsageError(f"branch {text!r} must look like 'x1:linear'")
        return cls(parts[0], parts[1])


@dataclass(frozen=True)
class MetricConfig:
    branches: tuple[Branch, ...]
    normalization: NormStrategy
    measure: DissimMeasure
    block_mask: frozenset[int] | None = None  # None = all blocks
    l2_channelwise: bool = False

    def __post_init__(self):
        if not self.branches:
            raise UsageError("config needs at least one branch")
        if len(set(self.branches)) != len(self.branches):
            raise UsageError("branches must be duplicate-free")
        if self.block_mask is not None and not self.block_mask:
            raise UsageError("block mask must be non-empty")
        if (self.measure is DissimMeasure.CE
                and self.normalization is NormStrategy.L2):
            raise UsageError("cross-entropy requires sigmoid or relu_l1 "
                             "normalization (values must lie in [0, 1])")

    def resolutions(self) -> tuple[str, ...]:
        seen = []
        for br in self.branches:
            if br.resolution not in seen:
                seen.append(br.resolution)
        return tuple(seen)

    def describe(self) -> dict:
        return {
            "branches": [br.key for br in self.branches],
            "normalization": self.normalization.value,
            "measure": self.measure.value,
            "block_mask": sorted(self.block_mask) if self.block_mask else "all",
        }


@dataclass
class MetricResult:
    distance: float
    per_branch: dict[str, dict[int, float]] = field(default_factory=dict)


CLASSICAL = MetricConfig(
    branches=(Branch(X1, LINEAR),),
    normalization=NormStrategy.L2,
    measure=DissimMeasure.MSE,
)

MR = MetricConfig(
    branches=(Branch(X1, LINEAR), Branch(X1, QUADRATIC), Branch(X2, LINEAR)),
    normalization=NormStrategy.SIGMOID,
    measure=DissimMeasure.CE,
)

PRESETS = {"classical": CLASSICAL, "mr": MR}


def _check_image(img: Tensor3, store: WeightStore, which: str) -> None:
    if img.ndim != 3 or img.shape[0] != store.input_channels:
        raise UsageError(
            f"{which}: expected {store.input_channels}xHxW, got {img.shape}")


def image_blocks(img: Tensor3, store: WeightStore,
                 resolutions) -> dict[str, BlockFeatures]:
    """Forward passes per resolution; x2 upscales the raw image first."""
    out: dict[str, BlockFeatures] = {}
    for res in resolutions:
        x = img
        if res == X2:
            x = bilinear_resize(img, 2 * img.shape[1], 2 * img.shape[2])
        out[res] = extract_blocks(preprocess(x, store), store)
    return out


def _branch_descriptor(blocks: BlockFeatures, branch: Branch,
                       config: MetricConfig) -> Descriptor:
    build = linear_features if branch.statistic == LINEAR else quadratic_features
    mask = sorted(config.block_mask) if config.block_mask else None
    raw = build(blocks, resolution=branch.resolution, block_mask=mask)
    return desc_mod.normalize(raw, config.normalization,
                              channelwise_l2=config.l2_channelwise)


def metric_from_blocks(blocks_a: dict[str, BlockFeatures],
                       blocks_b: dict[str, BlockFeatures],
                       config: MetricConfig) -> MetricResult:
    """Distance from precomputed per-resolution block features.

    ``blocks_a`` is the reference side for asymmetric measures.
    """
    per_branch: dict[str, dict[int, float]] = {}
    branch_means = []
    for branch in config.branches:
        da = _branch_descriptor(blocks_a[branch.resolution], branch, config)
        db = _branch_descriptor(blocks_b[branch.resolution], branch, config)
        dists = block_distances(da, db, config.measure)
        blocks_idx = [fb.origin.block for fb in da.blocks]
        per_branch[branch.key] = dict(zip(blocks_idx, dists))
        branch_means.append(float(np.mean(dists)))
    return MetricResult(distance=float(np.mean(branch_means)),
                        per_branch=per_branch)


def compute_metric(img_a: Tensor3, img_b: Tensor3, store: WeightStore,
                   config: MetricConfig) -> MetricResult:
    """Full metric between two same-sized RGB images in [0, 1].

    ``img_a`` is the reference side for asymmetric measures (CE).
    """
    _check_image(img_a, store, "img_a")
    _check_image(img_b, store, "img_b")
    if img_a.shape != img_b.shape:
        raise UsageError(f"image shapes differ: {img_a.shape} vs {img_b.shape}")
    resolutions = config.resolutions()
    return metric_from_blocks(image_blocks(img_a, store, resolutions),
                              image_blocks(img_b, store, resolutions),
                              config)


def mr_perceptual(img_a: Tensor3, img_b: Tensor3,
                  store: WeightStore) -> MetricResult:
    """Multi-resolution multi-statistic metric: sigmoid + cross-entropy over
    (x1 linear, x1 quadratic, x2 linear) branches."""
    return compute_metric(img_a, img_b, store, MR)


# ---------------------------------------------------------------------------
# SSIM baseline

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(img_a: Tensor3, img_b: Tensor3) -> float:
    """Mean SSIM over 11x11 Gaussian windows (sigma 1.5), dynamic range 1.

    Inputs are (C, H, W) in [0, 1]; RGB is converted to luma internally.
    """
    if img_a.shape != img_b.shape:
        raise UsageError(f"image shapes differ: {img_a.shape} vs {img_b.shape}")
    if img_a.ndim != 3:
        raise UsageError(f"expected (C, H, W) images, got {img_a.shape}")
    _, h, w = img_a.shape
    if h < _SSIM_WINDOW or w < _SSIM_WINDOW:
        raise UsageError(
            f"images must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW} for SSIM")

    def to_gray(img: Tensor3) -> np.ndarray:
        arr = img.astype(np.float64)
        if img.shape[0] == 3:
            return np.tensordot(_LUMA, arr, axes=(0, 0))
        return arr.mean(axis=0)

    win = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)
    c1 = _SSIM_K1 ** 2
    c2 = _SSIM_K2 ** 2

    def moments(img: np.ndarray):
        v = np.lib.stride_tricks.sliding_window_view(img, (_SSIM_WINDOW, _SSIM_WINDOW))
        mu = np.einsum("hwij,ij->hw", v, win)
        m2 = np.einsum("hwij,ij->hw", v * v, win)
        return v, mu, m2

    ga, gb = to_gray(img_a), to_gray(img_b)
    va, mu_a, m2a = moments(ga)
    vb, mu_b, m2b = moments(gb)
    mab = np.einsum("hwij,ij->hw", va * vb, win)
    var_a = m2a - mu_a ** 2
    var_b = m2b - mu_b ** 2
    cov = mab - mu_a * mu_b

    lum = (2 * mu_a * mu_b + c1) / (mu_a ** 2 + mu_b ** 2 + c1)
    con = (2 * cov + c2) / (var_a + var_b + c2)
    return float(np.mean(lum * con))


def ssim_distance(img_a: Tensor3, img_b: Tensor3) -> float:
    """Dissimilarity used for 2AFC ranking: 1 - SSIM."""
    return 1.0 - ssim(img_a, img_b)
