"""
Occlusion-supervised fine-tuning of the appearance score.

The correlation tracker itself has no trainable weights, so the fine-tuning
phase adjusts a logistic calibration head on top of the raw positive score:
``sigmoid(slope * logit(score) + bias)``. Frames the ground truth marks
occluded are negative samples, all other scored frames positive samples, and
the head is fitted by momentum SGD on the occlusion-supervised
classification loss. The calibrated score feeds the occlusion judge, so a
fitted head shifts where the composite index crosses its threshold.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, NamedTuple

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from .appearance import SCORE_EPS
from .config import FinetuneConfig, LossWeights, TrackerConfig
from .errors import InvalidArgumentError
from .losses import ClsBatch, occlusion_supervised_cls_loss, occlusion_supervised_cls_loss_grad
from .metrics import align_with_truth, as_results_frame
from .trajectory_gan import MomentumSGD

logger = logging.getLogger(__name__)

MIN_SLOPE = 1e-3
LOG_COLUMNS = ['step', 'loss', 'grad_norm', 'slope', 'bias']


@dataclass(frozen=True)
class ScoreCalibration:
    slope: float = 1.0
    bias: float = 0.0

    def apply(self, scores) -> np.ndarray:
        return _calibrate(np.array([self.slope, self.bias]), _logits(scores))

    def to_config(self, config: TrackerConfig) -> TrackerConfig:
        """The configuration with this head installed in the appearance section"""
        return config.replace(appearance=replace(config.appearance, score_slope=self.slope, score_bias=self.bias))


class ScoreSamples(NamedTuple):
    """Raw appearance scores and their occlusion flags (1 = occluded, a negative sample)"""
    scores: np.ndarray
    gammas: np.ndarray

    def __len__(self) -> int:
        return self.scores.size

    @classmethod
    def concat(cls, parts: Iterable['ScoreSamples']) -> 'ScoreSamples':
        parts = list(parts)
        if not parts:
            return cls(np.zeros(0), np.zeros(0, dtype=int))
        return cls(np.concatenate([p.scores for p in parts]), np.concatenate([p.gammas for p in parts]))


class FinetuneResult(NamedTuple):
    calibration: ScoreCalibration
    log: pd.DataFrame


def collect_samples(results, truth: pd.DataFrame) -> ScoreSamples:
    """Scored frames of a tracked sequence, labeled by the ground-truth occlusion flag"""
    merged = align_with_truth(as_results_frame(results), truth)
    scored = merged[merged['score'].notna()]
    return ScoreSamples(scored['score'].to_numpy(dtype=np.float64),
                        scored['occluded_truth'].astype(int).to_numpy())


def _logits(scores) -> np.ndarray:
    return logit(np.clip(np.asarray(scores, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS))


def _calibrate(theta: np.ndarray, z: np.ndarray) -> np.ndarray:
    return expit(theta[0] * z + theta[1])


def _split(samples: ScoreSamples, calibrated: np.ndarray):
    negative = samples.gammas == 1
    return (ClsBatch(calibrated[~negative], np.ones(int((~negative).sum()))),
            ClsBatch(calibrated[negative], np.zeros(int(negative.sum()))),
            negative)


def calibration_loss(theta: np.ndarray, samples: ScoreSamples, weights: LossWeights) -> float:
    """Mean occlusion-supervised classification loss of the calibrated scores"""
    if len(samples) == 0:
        raise InvalidArgumentError("no scored frames to fine-tune on")
    positives, negatives, _ = _split(samples, _calibrate(theta, _logits(samples.scores)))
    total = (occlusion_supervised_cls_loss(positives, weights, 0)
             + occlusion_supervised_cls_loss(negatives, weights, 1))
    return total / len(samples)


def calibration_loss_grad(theta: np.ndarray, samples: ScoreSamples, weights: LossWeights) -> np.ndarray:
    """Gradient of calibration_loss w.r.t. (slope, bias)"""
    if len(samples) == 0:
        raise InvalidArgumentError("no scored frames to fine-tune on")
    z = _logits(samples.scores)
    calibrated = _calibrate(theta, z)
    positives, negatives, negative = _split(samples, calibrated)
    d_prob = np.empty_like(calibrated)
    d_prob[~negative] = occlusion_supervised_cls_loss_grad(positives, weights, 0)
    d_prob[negative] = occlusion_supervised_cls_loss_grad(negatives, weights, 1)
    d_logit = d_prob * calibrated * (1.0 - calibrated)
    return np.array([np.dot(d_logit, z), d_logit.sum()]) / len(samples)


def finetune_calibration(samples: ScoreSamples, weights: LossWeights, cfg: FinetuneConfig) -> FinetuneResult:
    """Fit the calibration head from the identity by momentum SGD"""
    if len(samples) == 0:
        raise InvalidArgumentError("no scored frames to fine-tune on")
    negatives = int(samples.gammas.sum())
    if negatives in (0, len(samples)):
        logger.warning(f"All {len(samples)} samples share one label; the head will only shift the scores")

    theta = np.array([1.0, 0.0])
    optimizer = MomentumSGD(theta.size, cfg.lr, cfg.momentum, cfg.clip_norm)
    rows = []
    for step in range(cfg.steps):
        loss = calibration_loss(theta, samples, weights)
        norm = optimizer.step(theta, calibration_loss_grad(theta, samples, weights))
        theta[0] = max(theta[0], MIN_SLOPE)
        rows.append({'step': step, 'loss': loss, 'grad_norm': norm, 'slope': theta[0], 'bias': theta[1]})

    calibration = ScoreCalibration(float(theta[0]), float(theta[1]))
    log = pd.DataFrame(rows, columns=LOG_COLUMNS)
    logger.info(f"Fine-tuned on {len(samples)} frames ({negatives} occluded): loss "
                f"{log['loss'].iloc[0]:.4f} -> {calibration_loss(theta, samples, weights):.4f}, "
                f"slope {calibration.slope:.3f}, bias {calibration.bias:.3f}")
    return FinetuneResult(calibration, log)


def calibration_summary(result: FinetuneResult) -> Dict[str, float]:
    return {'slope': result.calibration.slope, 'bias': result.calibration.bias,
            'initial_loss': float(result.log['loss'].iloc[0]), 'final_loss': float(result.log['loss'].iloc[-1])}
