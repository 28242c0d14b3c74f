"""
Tracking metrics: box overlap, the per-sequence report and the tracking
losses evaluated on a tracked sequence.

mean_iou and failures are desk-scale analogues of accuracy and robustness;
expected average overlap is not computed.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .appearance import BoundingBox
from .config import LossWeights
from .errors import InvalidArgumentError
from .losses import BoxBatch, ClsBatch, cls_loss, occlusion_supervised_cls_loss, reg_loss, total_loss

logger = logging.getLogger(__name__)

PREDICTING = 'PREDICTING'
SUCCESS_IOU = 0.5


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes"""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return float(min(1.0, inter / union))


def iou_arrays(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Row-wise IoU of (N, 4) arrays of (cx, cy, w, h) boxes"""
    p0, p1 = pred[:, :2] - pred[:, 2:] / 2.0, pred[:, :2] + pred[:, 2:] / 2.0
    t0, t1 = truth[:, :2] - truth[:, 2:] / 2.0, truth[:, :2] + truth[:, 2:] / 2.0
    wh = np.clip(np.minimum(p1, t1) - np.maximum(p0, t0), 0.0, None)
    inter = wh[:, 0] * wh[:, 1]
    union = pred[:, 2] * pred[:, 3] + truth[:, 2] * truth[:, 3] - inter
    return np.clip(inter / union, 0.0, 1.0)


@dataclass(frozen=True)
class MetricsReport:
    """Sequence-level tracking quality"""
    frames: int
    mean_iou: float
    failures: int
    occlusion_precision: float
    occlusion_recall: float
    predictor_ade: Optional[float] = None
    post_occlusion_success: Optional[float] = None

    def __post_init__(self):
        rates = (self.mean_iou, self.occlusion_precision, self.occlusion_recall)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise InvalidArgumentError(f"rates must lie in [0, 1], got {rates}")
        if not 0 <= self.failures <= self.frames:
            raise InvalidArgumentError(f"failures {self.failures} exceed the {self.frames} frames")

    def to_dict(self) -> Dict:
        return asdict(self)


def as_results_frame(results) -> pd.DataFrame:
    """Accept a results DataFrame or a sequence of objects exposing to_row()"""
    if isinstance(results, pd.DataFrame):
        return results
    return pd.DataFrame([r.to_row() for r in results])


def align_with_truth(results: pd.DataFrame, truth: pd.DataFrame) -> pd.DataFrame:
    """Join results to the truth table on frame id, one row per tracked frame"""
    if results.empty:
        raise InvalidArgumentError("no results to evaluate")
    if results['frame'].duplicated().any():
        raise InvalidArgumentError("results contain duplicate frame ids")
    missing = sorted(set(results['frame']) - set(truth['frame']))
    if missing:
        raise InvalidArgumentError(f"results reference frames absent from the truth: {missing[:5]}")
    merged = results.merge(truth, on='frame', suffixes=('', '_truth'), validate='one_to_one')
    return merged.sort_values('frame').reset_index(drop=True)


def _rate(numerator: int, denominator: int) -> float:
    return 1.0 if denominator == 0 else numerator / denominator


def evaluate(results: Union[pd.DataFrame, Sequence], truth: pd.DataFrame) -> MetricsReport:
    """Compare tracked boxes and occlusion verdicts against ground truth"""
    merged = align_with_truth(as_results_frame(results), truth)
    pred_boxes = merged[['cx', 'cy', 'w', 'h']].to_numpy(dtype=np.float64)
    true_boxes = merged[['cx_truth', 'cy_truth', 'w_truth', 'h_truth']].to_numpy(dtype=np.float64)
    overlaps = iou_arrays(pred_boxes, true_boxes)

    hits = overlaps[overlaps > 0]
    predicted = merged['occluded'].fillna(0).astype(int).to_numpy() == 1
    actual = merged['occluded_truth'].astype(int).to_numpy() == 1
    true_pos = int(np.sum(predicted & actual))

    predicting = (merged['mode'] == PREDICTING).to_numpy()
    predictor_ade = None
    if predicting.any():
        predictor_ade = float(np.mean(np.linalg.norm(pred_boxes[predicting, :2] - true_boxes[predicting, :2], axis=1)))

    # frames after the last occluded frame of each sequence
    sequences = merged['sequence'].to_numpy() if 'sequence' in merged else np.zeros(len(merged), dtype=int)
    after = np.zeros(len(merged), dtype=bool)
    for seq in np.unique(sequences):
        idx = np.flatnonzero(sequences == seq)
        occluded_idx = idx[actual[idx]]
        if occluded_idx.size:
            after[idx[idx > occluded_idx[-1]]] = True
    post_success = float(np.mean(overlaps[after] > SUCCESS_IOU)) if after.any() else None

    report = MetricsReport(
        frames=len(merged),
        mean_iou=float(hits.mean()) if hits.size else 0.0,
        failures=int(np.sum(overlaps == 0)),
        occlusion_precision=_rate(true_pos, int(predicted.sum())),
        occlusion_recall=_rate(true_pos, int(actual.sum())),
        predictor_ade=predictor_ade,
        post_occlusion_success=post_success,
    )
    logger.info(f"Evaluated {report.frames} frames: mean IoU {report.mean_iou:.3f}, "
                f"{report.failures} failures, occlusion P/R {report.occlusion_precision:.2f}/"
                f"{report.occlusion_recall:.2f}")
    return report


def supervision_losses(results: Union[pd.DataFrame, Sequence], truth: pd.DataFrame,
                       weights: Optional[LossWeights] = None) -> Dict[str, float]:
    """
    Apply the tracking losses to a tracked sequence.

    The appearance score is the classification prediction for the target
    sample (label 1). With occlusion supervision, frames the ground truth marks
    occluded relabel the target as a negative sample; box regression is always
    computed against the truth.
    """
    weights = weights or LossWeights()
    merged = align_with_truth(as_results_frame(results), truth)
    scored = merged[merged['score'].notna()]
    scores = scored['score'].to_numpy(dtype=np.float64)
    gammas = scored['occluded_truth'].astype(int).to_numpy()

    plain_cls = cls_loss(ClsBatch(scores, np.ones_like(scores)), weights)
    supervised_cls = sum(
        occlusion_supervised_cls_loss(ClsBatch([s], [1 - g]), weights, int(g))
        for s, g in zip(scores, gammas)
    )
    boxes = BoxBatch(merged[['cx', 'cy', 'w', 'h']].to_numpy(dtype=np.float64),
                     merged[['cx_truth', 'cy_truth', 'w_truth', 'h_truth']].to_numpy(dtype=np.float64))
    reg = reg_loss(boxes)
    return {
        'cls_loss': plain_cls,
        'occlusion_cls_loss': float(supervised_cls),
        'reg_loss': reg,
        'total_loss': total_loss(plain_cls, reg, weights),
        'occlusion_total_loss': total_loss(float(supervised_cls), reg, weights),
    }
