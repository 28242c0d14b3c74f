"""
Occlusion awareness: fuse per-level interferer distances with the
classification score and decide whether the target is occluded.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .config import Criterion, OcclusionConfig
from .errors import InvalidArgumentError
from .heatmap import PeakSet, compute_distances

logger = logging.getLogger(__name__)

__all__ = [
    'Criterion', 'OcclusionConfig', 'OcclusionVerdict', 'level_distance',
    'aggregate_distance', 'composite_index', 'judge',
]


@dataclass(frozen=True)
class OcclusionVerdict:
    """Per-frame occlusion decision with every intermediate value"""
    dis: Optional[float]
    score: float
    epsilon: float
    occluded: bool
    per_level_min_dist: Tuple[Optional[float], Optional[float], Optional[float]]
    criterion: Criterion = Criterion.COMPOSITE

    def to_row(self, frame_id: int) -> dict:
        """One CSV row: frame, dis, score, epsilon, occluded"""
        return {
            'frame': frame_id,
            'dis': self.dis,
            'score': self.score,
            'epsilon': self.epsilon,
            'occluded': int(self.occluded),
        }


def level_distance(peaks: PeakSet) -> Optional[float]:
    """Distance from the top peak to its nearest interferer, None without one"""
    distances = compute_distances(peaks)
    return min(distances) if distances else None


def aggregate_distance(d1: Optional[float], d2: Optional[float], d3: Optional[float],
                       cfg: OcclusionConfig) -> Optional[float]:
    """Weighted sum of the present level distances, weights renormalized over them"""
    present = [(w, d) for w, d in zip(cfg.level_weights, (d1, d2, d3)) if d is not None]
    if not present:
        return None
    total_weight = sum(w for w, _ in present)
    if total_weight <= 0:
        # every present level carries zero weight: fall back to their plain mean
        return sum(d for _, d in present) / len(present)
    return sum(w * d for w, d in present) / total_weight


def composite_index(score: float, dis: float, cfg: OcclusionConfig) -> float:
    """epsilon = i * s / score_norm + (1 - i) * d / distance_norm"""
    if dis < 0:
        raise InvalidArgumentError(f"distance must be non-negative, got {dis}")
    i = cfg.mix_weight
    return i * (score / cfg.score_norm) + (1.0 - i) * (dis / cfg.distance_norm)


def judge(peaksets: Sequence[PeakSet], score: float, cfg: OcclusionConfig,
          criterion: Optional[Criterion] = None) -> OcclusionVerdict:
    """Decide occlusion for one frame from its three peak sets and positive score"""
    if not 0.0 <= score <= 1.0:
        raise InvalidArgumentError(f"score must lie in [0, 1], got {score}")
    if len(peaksets) != 3:
        raise InvalidArgumentError(f"judge needs one peak set per level, got {len(peaksets)}")
    criterion = Criterion(criterion or cfg.criterion)

    per_level = tuple(level_distance(p) for p in peaksets)
    dis = aggregate_distance(*per_level, cfg)
    if dis is None:
        # no interferer at any level: the score term alone, mix weight 1
        epsilon = score / cfg.score_norm
    else:
        epsilon = composite_index(score, dis, cfg)

    if criterion is Criterion.DISTANCE:
        occluded = dis is not None and dis < cfg.distance_threshold
    elif criterion is Criterion.SCORE:
        occluded = score < cfg.score_threshold
    else:
        occluded = epsilon < cfg.epsilon_threshold

    logger.debug(f"Verdict [{criterion.value}]: dis={dis}, score={score:.4f}, "
                 f"epsilon={epsilon:.4f}, occluded={occluded}")
    return OcclusionVerdict(dis, score, epsilon, occluded, per_level, criterion)
