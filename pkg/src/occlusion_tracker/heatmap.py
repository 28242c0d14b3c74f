"""
Response-map representation and peak extraction.

A response map is an n x n similarity surface produced by one feature level.
Peak extraction takes the k highest cells, drops peaks below 0.75 x the top
score, suppresses peaks inside the 2-cell neighborhood of a stronger kept peak
and measures how far the surviving interferers sit from the top peak.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

LEVELS = (1, 2, 3)
LOW_PEAK_RATIO = 0.75
NEIGHBOR_RADIUS = 2
DEFAULT_TOP_K = 4


@dataclass(frozen=True)
class ResponseMap:
    """n x n response surface produced at one feature level"""
    values: np.ndarray
    level: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 1:
            raise InvalidArgumentError(f"response map must be a non-empty square grid, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("response map contains non-finite scores")
        if self.level not in LEVELS:
            raise InvalidArgumentError(f"level must be one of {LEVELS}, got {self.level}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def to_text(self) -> str:
        """Serialize as 'n level' followed by n rows of n scores"""
        lines = [f"{self.size} {self.level}"]
        for row in self.values:
            lines.append(' '.join(repr(float(v)) for v in row))
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'ResponseMap':
        rows = [line.split() for line in text.strip().splitlines() if line.strip()]
        if not rows or len(rows[0]) != 2:
            raise InvalidArgumentError("response map header must be 'n level'")
        try:
            n, level = int(rows[0][0]), int(rows[0][1])
            grid = [[float(v) for v in row] for row in rows[1:]]
        except ValueError as e:
            raise InvalidArgumentError(f"malformed response map: {e}") from e
        if len(grid) != n or any(len(row) != n for row in grid):
            raise InvalidArgumentError(f"response map body is not {n} x {n}")
        return cls(np.array(grid), level)


@dataclass(frozen=True)
class Peak:
    """A grid cell and its score"""
    row: int
    col: int
    score: float

    @property
    def position(self) -> Tuple[int, int]:
        return self.row, self.col


@dataclass(frozen=True)
class PeakSet:
    """Retained peaks of one level, strongest first"""
    peaks: Tuple[Peak, ...]
    source_level: int

    def __post_init__(self):
        peaks = tuple(self.peaks)
        object.__setattr__(self, 'peaks', peaks)
        if self.source_level not in LEVELS:
            raise InvalidArgumentError(f"source_level must be one of {LEVELS}, got {self.source_level}")
        if not peaks:
            raise InvalidArgumentError("a peak set holds at least one peak")
        top = peaks[0].score
        for prev, cur in zip(peaks, peaks[1:]):
            if cur.score > prev.score:
                raise InvalidArgumentError("peak scores must be non-increasing")
        for i, a in enumerate(peaks):
            if i > 0 and not _above_low_ratio(a.score, top):
                raise InvalidArgumentError(
                    f"peak {a.position} score {a.score} is not above {LOW_PEAK_RATIO} x top score {top}"
                )
            for b in peaks[i + 1:]:
                if is_neighbor(a, b):
                    raise InvalidArgumentError(f"peaks {a.position} and {b.position} are neighbors")

    def __len__(self) -> int:
        return len(self.peaks)

    @property
    def top(self) -> Peak:
        return self.peaks[0]


def _above_low_ratio(score: float, top_score: float) -> bool:
    return score > LOW_PEAK_RATIO * top_score


def get_top(response: ResponseMap, k: int) -> List[Peak]:
    """Return the k highest cells, descending by score, smaller flat index first on ties"""
    n = response.size
    if not 1 <= k <= n * n:
        raise InvalidArgumentError(f"k must be in [1, {n * n}], got {k}")
    flat = response.values.ravel()
    # stable sort on the negated scores keeps equal scores in flat-index order
    order = np.argsort(-flat, kind='stable')[:k]
    return [Peak(int(ind // n), int(ind % n), float(flat[ind])) for ind in order]


def remove_low_points(peaks: Sequence[Peak]) -> List[Peak]:
    """Keep the top peak and every later peak scoring above 0.75 x the top score"""
    if not peaks:
        raise InvalidArgumentError("remove_low_points needs at least one peak")
    top = peaks[0]
    return [top] + [p for p in peaks[1:] if _above_low_ratio(p.score, top.score)]


def is_neighbor(a: Peak, b: Peak) -> bool:
    """True when the two cells are within Chebyshev distance 2"""
    return abs(a.row - b.row) <= NEIGHBOR_RADIUS and abs(a.col - b.col) <= NEIGHBOR_RADIUS


def check_neighbor(kept: Sequence[Peak], candidate: Peak) -> bool:
    return any(is_neighbor(p, candidate) for p in kept)


def merge_neighbors(peaks: Sequence[Peak], level: int = 1) -> PeakSet:
    """Greedy suppression in score order: keep a peak unless it neighbors a kept one"""
    if not peaks:
        raise InvalidArgumentError("merge_neighbors needs at least one peak")
    kept = [peaks[0]]
    for candidate in peaks[1:]:
        if not check_neighbor(kept, candidate):
            kept.append(candidate)
    return PeakSet(tuple(kept), level)


def compute_distances(peakset: PeakSet) -> List[float]:
    """Euclidean distance (grid cells) from the top peak to every other retained peak"""
    if len(peakset) < 2:
        return []
    top = peakset.top
    return [math.hypot(p.row - top.row, p.col - top.col) for p in peakset.peaks[1:]]


def extract_peaks(response: ResponseMap, k: int = DEFAULT_TOP_K) -> PeakSet:
    """Full top-k -> low-peak rejection -> neighborhood merge pipeline"""
    candidates = get_top(response, k)
    filtered = remove_low_points(candidates)
    peakset = merge_neighbors(filtered, response.level)
    logger.debug(f"Level {response.level}: {len(candidates)} candidates, {len(peakset)} retained peaks")
    return peakset
