"""
Tracking losses: binary cross-entropy on positive / negative samples, their
weighted sum, L1 box regression, the total loss and the occlusion-supervised
classification loss that treats an occluded target as a negative sample.

The classification terms have a matching ``*_grad`` returning the gradient
w.r.t. the predictions, which the score-calibration fine-tuning chains.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .config import LossWeights
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

__all__ = [
    'ClsBatch', 'BoxBatch', 'LossWeights', 'PROB_EPS',
    'cls_loss_pos', 'cls_loss_neg', 'cls_loss', 'reg_loss', 'total_loss',
    'occlusion_supervised_cls_loss', 'relabel_occluded',
    'cls_loss_pos_grad', 'cls_loss_neg_grad',
    'occlusion_supervised_cls_loss_grad',
]

PROB_EPS = 1e-7


@dataclass(frozen=True)
class ClsBatch:
    """Predicted positive-class probabilities and their 0/1 labels"""
    predictions: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        predictions = np.atleast_1d(np.array(self.predictions, dtype=np.float64))
        labels = np.atleast_1d(np.array(self.labels, dtype=np.float64))
        if predictions.ndim != 1 or predictions.shape != labels.shape:
            raise InvalidArgumentError("predictions and labels must be vectors of equal length")
        if not np.all(np.isfinite(predictions)) or np.any((predictions < 0) | (predictions > 1)):
            raise InvalidArgumentError("predictions must be probabilities in [0, 1]")
        if not np.all((labels == 0) | (labels == 1)):
            raise InvalidArgumentError("labels must be 0 or 1")
        object.__setattr__(self, 'predictions', predictions)
        object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return self.predictions.size

    @property
    def clamped(self) -> np.ndarray:
        return np.clip(self.predictions, PROB_EPS, 1.0 - PROB_EPS)


@dataclass(frozen=True)
class BoxBatch:
    """Predicted and label boxes as (cx, cy, w, h) rows"""
    predicted: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        predicted = np.array(self.predicted, dtype=np.float64).reshape(-1, 4)
        labels = np.array(self.labels, dtype=np.float64).reshape(-1, 4)
        if predicted.shape != labels.shape:
            raise InvalidArgumentError("predicted and label boxes must have the same count")
        if np.any(labels[:, 2:] <= 0):
            raise InvalidArgumentError("label boxes need positive width and height")
        object.__setattr__(self, 'predicted', predicted)
        object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return self.predicted.shape[0]


def relabel_occluded(batch: ClsBatch) -> ClsBatch:
    """Occluded target samples become negative samples"""
    return ClsBatch(batch.predictions, np.zeros_like(batch.labels))


def _inside(batch: ClsBatch) -> np.ndarray:
    # derivative of the clamp is zero outside the open interval
    return (batch.predictions > PROB_EPS) & (batch.predictions < 1.0 - PROB_EPS)


def cls_loss_pos(batch: ClsBatch) -> float:
    """Summed -log(p) over the positive-labeled entries"""
    pos = batch.labels == 1
    return float(-np.sum(np.log(batch.clamped[pos])))


def cls_loss_pos_grad(batch: ClsBatch) -> np.ndarray:
    grad = np.zeros_like(batch.predictions)
    mask = (batch.labels == 1) & _inside(batch)
    grad[mask] = -1.0 / batch.predictions[mask]
    return grad


def cls_loss_neg(batch: ClsBatch) -> float:
    """Summed -log(1 - p) over the negative-labeled entries"""
    neg = batch.labels == 0
    return float(-np.sum(np.log1p(-batch.clamped[neg])))


def cls_loss_neg_grad(batch: ClsBatch) -> np.ndarray:
    grad = np.zeros_like(batch.predictions)
    mask = (batch.labels == 0) & _inside(batch)
    grad[mask] = 1.0 / (1.0 - batch.predictions[mask])
    return grad


def cls_loss(batch: ClsBatch, w: LossWeights) -> float:
    return w.lambda_neg * cls_loss_neg(batch) + w.lambda_pos * cls_loss_pos(batch)


def reg_loss(batch: BoxBatch) -> float:
    """L1 distance over the four box coordinates, summed over the batch"""
    return float(np.abs(batch.predicted - batch.labels).sum())


def total_loss(cls: float, reg: float, w: LossWeights) -> float:
    return w.alpha * cls + w.beta * reg


def _check_gamma(gamma) -> int:
    if isinstance(gamma, (bool, np.bool_)):
        return int(gamma)
    if gamma not in (0, 1):
        raise InvalidArgumentError(f"gamma must be 0 or 1, got {gamma}")
    return int(gamma)


def occlusion_supervised_cls_loss(batch: ClsBatch, w: LossWeights, gamma) -> float:
    """gamma * lambda_neg * L_neg + (1 - gamma) * lambda_pos * L_pos"""
    gamma = _check_gamma(gamma)
    if gamma:
        return w.lambda_neg * cls_loss_neg(batch)
    return w.lambda_pos * cls_loss_pos(batch)


def occlusion_supervised_cls_loss_grad(batch: ClsBatch, w: LossWeights, gamma) -> np.ndarray:
    gamma = _check_gamma(gamma)
    if gamma:
        return w.lambda_neg * cls_loss_neg_grad(batch)
    return w.lambda_pos * cls_loss_pos_grad(batch)
