import math

import numpy as np
import pytest

from occlusion_tracker.errors import InvalidArgumentError
from occlusion_tracker.losses import (BoxBatch, ClsBatch, LossWeights, cls_loss, cls_loss_neg,
                                      cls_loss_neg_grad, cls_loss_pos, cls_loss_pos_grad,
                                      occlusion_supervised_cls_loss, occlusion_supervised_cls_loss_grad,
                                      reg_loss, relabel_occluded, total_loss)

from conftest import numeric_grad, relative_error


class TestClassification:
    def test_perfect_positive(self):
        assert cls_loss_pos(ClsBatch([1.0], [1])) == pytest.approx(0.0, abs=1e-6)

    def test_half_positive(self):
        assert cls_loss_pos(ClsBatch([0.5], [1])) == pytest.approx(math.log(2))

    def test_perfect_negative(self):
        assert cls_loss_neg(ClsBatch([0.0], [0])) == pytest.approx(0.0, abs=1e-6)

    def test_half_negative(self):
        assert cls_loss_neg(ClsBatch([0.5], [0])) == pytest.approx(math.log(2))

    def test_balanced_batch(self):
        batch = ClsBatch([0.5] * 4, [1, 0, 1, 0])
        assert cls_loss(batch, LossWeights()) == pytest.approx(4 * math.log(2))

    def test_no_negative_weight(self):
        batch = ClsBatch([0.3, 0.6, 0.9], [1, 0, 1])
        assert cls_loss(batch, LossWeights(lambda_neg=0.0)) == pytest.approx(cls_loss_pos(batch))

    def test_empty_batch(self):
        batch = ClsBatch(np.zeros(0), np.zeros(0))
        assert cls_loss_pos(batch) == 0.0 and cls_loss_neg(batch) == 0.0

    def test_loss_is_non_negative_at_bounds(self):
        batch = ClsBatch([0.0, 1.0, 0.0, 1.0], [1, 1, 0, 0])
        assert cls_loss(batch, LossWeights()) >= 0.0
        assert np.isfinite(cls_loss(batch, LossWeights()))

    @pytest.mark.parametrize("predictions, labels", [([1.2], [1]), ([0.5], [2]), ([0.5, 0.5], [1])])
    def test_invalid_batches(self, predictions, labels):
        with pytest.raises(InvalidArgumentError):
            ClsBatch(predictions, labels)

    def test_gradients_match_finite_differences(self, rng):
        labels = np.array([1, 0, 1, 1, 0, 0], dtype=float)
        predictions = rng.uniform(0.05, 0.95, size=labels.size)
        weights = LossWeights(lambda_pos=1.3, lambda_neg=0.7)
        for loss, grad in [
            (lambda p: cls_loss_pos(ClsBatch(p, labels)), cls_loss_pos_grad),
            (lambda p: cls_loss_neg(ClsBatch(p, labels)), cls_loss_neg_grad),
            (lambda p: occlusion_supervised_cls_loss(ClsBatch(p, labels), weights, 0),
             lambda b: occlusion_supervised_cls_loss_grad(b, weights, 0)),
        ]:
            analytic = grad(ClsBatch(predictions, labels))
            assert relative_error(analytic, numeric_grad(loss, predictions)) < 1e-5

    def test_gradient_zero_where_clamped(self):
        grad = cls_loss_pos_grad(ClsBatch([0.0, 0.5], [1, 1]))
        assert grad[0] == 0.0 and grad[1] == pytest.approx(-2.0)


class TestRegression:
    def test_identical_boxes(self):
        boxes = [[10, 10, 4, 4], [3, 3, 2, 2]]
        assert reg_loss(BoxBatch(boxes, boxes)) == 0.0

    def test_unit_offset(self):
        assert reg_loss(BoxBatch([[0, 0, 1, 1]], [[1, 1, 1, 1]])) == pytest.approx(2.0)

    def test_rejects_degenerate_labels(self):
        with pytest.raises(InvalidArgumentError):
            BoxBatch([[0, 0, 1, 1]], [[0, 0, 0, 1]])


class TestTotal:
    def test_cls_only(self):
        assert total_loss(2.0, 5.0, LossWeights(alpha=1.0, beta=0.0)) == 2.0

    def test_reg_only(self):
        assert total_loss(2.0, 5.0, LossWeights(alpha=0.0, beta=1.0)) == 5.0

    def test_weighted(self):
        assert total_loss(2.0, 5.0, LossWeights(alpha=1.0, beta=1.2)) == pytest.approx(8.0)


class TestOcclusionSupervised:
    def test_gamma_zero_is_positive_term(self):
        batch = ClsBatch([0.4, 0.8], [1, 1])
        weights = LossWeights(lambda_pos=2.0)
        assert occlusion_supervised_cls_loss(batch, weights, 0) == pytest.approx(2.0 * cls_loss_pos(batch))

    def test_gamma_one_is_negative_term(self):
        batch = relabel_occluded(ClsBatch([0.4, 0.8], [1, 1]))
        weights = LossWeights(lambda_neg=0.5)
        assert occlusion_supervised_cls_loss(batch, weights, 1) == pytest.approx(0.5 * cls_loss_neg(batch))

    def test_relabeled_occluded_sample(self):
        batch = relabel_occluded(ClsBatch([0.9], [1]))
        weights = LossWeights(lambda_neg=1.5)
        assert occlusion_supervised_cls_loss(batch, weights, True) == pytest.approx(1.5 * math.log(10))

    @pytest.mark.parametrize("gamma", [0.5, 2, -1])
    def test_invalid_gamma(self, gamma):
        with pytest.raises(InvalidArgumentError):
            occlusion_supervised_cls_loss(ClsBatch([0.5], [1]), LossWeights(), gamma)

    def test_gradient(self, rng):
        labels = np.zeros(4)
        predictions = rng.uniform(0.1, 0.9, size=4)
        weights = LossWeights(lambda_neg=0.8)
        analytic = occlusion_supervised_cls_loss_grad(ClsBatch(predictions, labels), weights, 1)
        numeric = numeric_grad(lambda p: occlusion_supervised_cls_loss(ClsBatch(p, labels), weights, 1), predictions)
        assert relative_error(analytic, numeric) < 1e-5
