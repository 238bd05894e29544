"""Metric assembly, aggregation identities, presets, and the SSIM baseline."""

import numpy as np
import pytest

from mrperc.descriptor import DissimMeasure, NormStrategy
from mrperc.errors import UsageError
from mrperc.pipeline import (CLASSICAL, MR, Branch, MetricConfig,
                             compute_metric, image_blocks, mr_perceptual,
                             ssim, ssim_distance)

from conftest import random_image
from oracles import ssim_uniform_oracle


def cfg(branches, norm, measure, mask=None):
    return MetricConfig(branches=tuple(branches),
                        normalization=NormStrategy.parse(norm),
                        measure=DissimMeasure.parse(measure),
                        block_mask=None if mask is None else frozenset(mask))


class TestMetricConfig:
    def test_rejects_empty_branches(self):
        with pytest.raises(UsageError, match="at least one branch"):
            cfg([], "l2", "mse")

    def test_rejects_duplicate_branches(self):
        with pytest.raises(UsageError, match="duplicate"):
            cfg([Branch("x1", "linear"), Branch("x1", "linear")], "l2", "mse")

    def test_rejects_empty_mask(self):
        with pytest.raises(UsageError, match="non-empty"):
            cfg([Branch("x1", "linear")], "l2", "mse", mask=())

    def test_rejects_ce_with_l2(self):
        with pytest.raises(UsageError, match="cross-entropy"):
            cfg([Branch("x1", "linear")], "l2", "ce")

    def test_branch_parse(self):
        assert Branch.parse("x2:quadratic") == Branch("x2", "quadratic")
        with pytest.raises(UsageError):
            Branch.parse("x3:linear")
        with pytest.raises(UsageError):
            Branch.parse("x1-linear")

    def test_mr_preset_shape(self):
        assert MR.branches == (Branch("x1", "linear"),
                               Branch("x1", "quadratic"),
                               Branch("x2", "linear"))
        assert MR.normalization is NormStrategy.SIGMOID
        assert MR.measure is DissimMeasure.CE
        assert CLASSICAL.branches == (Branch("x1", "linear"),)


class TestComputeMetric:
    def test_identical_images_zero_for_mse_mae(self, tiny_store):
        rng = np.random.default_rng(0)
        img = random_image(rng, 3, 16, 16)
        for measure in ("mse", "mae"):
            for norm in ("l2", "sigmoid", "relu_l1"):
                result = compute_metric(
                    img, img, tiny_store,
                    cfg([Branch("x1", "linear")], norm, measure))
                assert result.distance == 0.0

    def test_swap_symmetry_for_mse_mae(self, tiny_store):
        rng = np.random.default_rng(1)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        config = cfg([Branch("x1", "linear"), Branch("x2", "linear")],
                     "l2", "mse")
        assert compute_metric(a, b, tiny_store, config).distance == \
            compute_metric(b, a, tiny_store, config).distance

    def test_mr_equals_compute_metric_with_mr_config(self, tiny_store):
        rng = np.random.default_rng(2)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        r1 = mr_perceptual(a, b, tiny_store)
        r2 = compute_metric(a, b, tiny_store, MR)
        assert r1.distance == r2.distance
        assert r1.per_branch == r2.per_branch

    def test_mr_produces_three_branches(self, tiny_store):
        rng = np.random.default_rng(3)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        result = mr_perceptual(a, b, tiny_store)
        assert sorted(result.per_branch) == ["x1/linear", "x1/quadratic",
                                             "x2/linear"]

    def test_distance_is_mean_of_branch_means(self, tiny_store):
        rng = np.random.default_rng(4)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        result = mr_perceptual(a, b, tiny_store)
        branch_means = [np.mean(list(v.values()))
                        for v in result.per_branch.values()]
        assert result.distance == pytest.approx(np.mean(branch_means),
                                                abs=1e-12)

    def test_all_blocks_equals_mean_of_single_blocks(self, tiny_store):
        rng = np.random.default_rng(5)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        full = compute_metric(a, b, tiny_store, CLASSICAL).distance
        singles = [
            compute_metric(a, b, tiny_store,
                           cfg([Branch("x1", "linear")], "l2", "mse",
                               mask={k})).distance
            for k in range(1, tiny_store.block_count + 1)
        ]
        assert full == np.mean(np.asarray(singles))

    def test_adding_branch_changes_distance_to_new_mean(self, tiny_store):
        rng = np.random.default_rng(6)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        one = compute_metric(a, b, tiny_store,
                             cfg([Branch("x1", "linear")], "sigmoid", "ce"))
        two = compute_metric(
            a, b, tiny_store,
            cfg([Branch("x1", "linear"), Branch("x1", "quadratic")],
                "sigmoid", "ce"))
        lin = np.mean(list(two.per_branch["x1/linear"].values()))
        quad = np.mean(list(two.per_branch["x1/quadratic"].values()))
        assert two.distance == pytest.approx(np.mean([lin, quad]), abs=1e-12)
        assert one.distance == pytest.approx(lin, abs=1e-12)

    def test_removing_x2_branch_reproduces_x1_ablation(self, tiny_store):
        rng = np.random.default_rng(7)
        a = random_image(rng, 3, 16, 16)
        b = random_image(rng, 3, 16, 16)
        full = mr_perceptual(a, b, tiny_store)
        reduced = compute_metric(
            a, b, tiny_store,
            cfg([Branch("x1", "linear"), Branch("x1", "quadratic")],
                "sigmoid", "ce"))
        for key, blocks in reduced.per_branch.items():
            assert blocks == full.per_branch[key]

    def test_self_distance_is_minimum_under_ce(self, tiny_store):
        rng = np.random.default_rng(8)
        img = random_image(rng, 3, 16, 16)
        self_dist = mr_perceptual(img, img, tiny_store).distance
        for scale in (0.01, 0.05, 0.2):
            perturbed = np.clip(
                img + rng.normal(0, scale, img.shape).astype(np.float32),
                0.0, 1.0)
            assert mr_perceptual(img, perturbed, tiny_store).distance >= self_dist

    def test_shape_mismatch_rejected(self, tiny_store):
        a = np.zeros((3, 16, 16), dtype=np.float32)
        b = np.zeros((3, 8, 8), dtype=np.float32)
        with pytest.raises(UsageError, match="differ"):
            compute_metric(a, b, tiny_store, CLASSICAL)

    def test_x2_branch_doubles_resolution(self, tiny_store):
        rng = np.random.default_rng(9)
        img = random_image(rng, 3, 16, 16)
        blocks = image_blocks(img, tiny_store, ("x1", "x2"))
        assert blocks["x2"][0].shape[1] == 2 * blocks["x1"][0].shape[1]

    def test_ranking_invariant_under_rescale(self, tiny_store):
        rng = np.random.default_rng(10)
        ref = random_image(rng, 3, 16, 16)
        a = np.clip(ref + rng.normal(0, 0.05, ref.shape).astype(np.float32), 0, 1)
        b = np.clip(ref + rng.normal(0, 0.20, ref.shape).astype(np.float32), 0, 1)
        da = compute_metric(ref, a, tiny_store, CLASSICAL).distance
        db = compute_metric(ref, b, tiny_store, CLASSICAL).distance
        for c in (0.5, 3.0, 1e6):
            assert (da < db) == (c * da < c * db)


class TestSsim:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(11)
        img = random_image(rng, 3, 32, 32)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)
        assert ssim_distance(img, img) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_images_closed_form(self):
        for a, b in [(0.25, 0.75), (0.1, 0.9), (0.5, 0.5)]:
            img_a = np.full((3, 16, 16), a, dtype=np.float32)
            img_b = np.full((3, 16, 16), b, dtype=np.float32)
            # grayscale of a uniform RGB image is the same constant
            want = ssim_uniform_oracle(float(np.float32(a)),
                                       float(np.float32(b)))
            assert ssim(img_a, img_b) == pytest.approx(want, abs=1e-6)

    def test_range(self):
        rng = np.random.default_rng(12)
        a = random_image(rng, 3, 24, 24)
        b = random_image(rng, 3, 24, 24)
        assert -1.0 <= ssim(a, b) <= 1.0

    def test_dim_mismatch_rejected(self):
        a = np.zeros((3, 16, 16), dtype=np.float32)
        b = np.zeros((3, 16, 17), dtype=np.float32)
        with pytest.raises(UsageError, match="differ"):
            ssim(a, b)

    def test_too_small_rejected(self):
        a = np.zeros((3, 8, 8), dtype=np.float32)
        with pytest.raises(UsageError, match="at least"):
            ssim(a, a)

    def test_noise_reduces_ssim(self):
        rng = np.random.default_rng(13)
        img = random_image(rng, 3, 32, 32)
        noisy = np.clip(img + rng.normal(0, 0.2, img.shape).astype(np.float32),
                        0, 1)
        assert ssim(img, noisy) < ssim(img, img)
