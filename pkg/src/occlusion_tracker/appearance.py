"""
Template-correlation appearance model.

Normalized cross-correlation between a template and a search region at three
Gaussian smoothing scales yields the three per-frame response maps (fine
scale = level 1, coarse scale = level 3) and a positive-class score.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import gaussian_filter, map_coordinates
from scipy.special import expit, logit

from .config import AppearanceConfig
from .errors import InvalidArgumentError, TrackingFailureError
from .heatmap import LEVELS, ResponseMap

logger = logging.getLogger(__name__)

# Below this template energy NCC is undefined and every map is zero
ZERO_VARIANCE = 1e-12
# Scores are kept this far inside (0, 1) before the calibration logit
SCORE_EPS = 1e-7


@dataclass(frozen=True)
class Frame:
    """Grayscale image, intensities in [0, 1], stored as a (height, width) array"""
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.size != self.width * self.height:
            raise InvalidArgumentError(
                f"pixel buffer has {pixels.size} values, expected {self.width * self.height}"
            )
        pixels = pixels.reshape(self.height, self.width)
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0:
            raise InvalidArgumentError("pixel intensities must lie in [0, 1]")
        pixels.setflags(write=False)
        object.__setattr__(self, 'pixels', pixels)

    @classmethod
    def from_array(cls, pixels) -> 'Frame':
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim != 2:
            raise InvalidArgumentError(f"expected a 2-D pixel array, got shape {pixels.shape}")
        return cls(pixels.shape[1], pixels.shape[0], pixels)

    def smoothed(self, sigma: float) -> np.ndarray:
        if sigma <= 0:
            return self.pixels
        return gaussian_filter(self.pixels, sigma, mode='nearest')


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box given by its center and size in pixels"""
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        values = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgumentError(f"box values must be finite, got {values}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidArgumentError(f"box width and height must be positive, got {self.w}x{self.h}")

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def center(self) -> Tuple[float, float]:
        return self.cx, self.cy

    @property
    def area(self) -> float:
        return self.w * self.h

    def moved_to(self, cx: float, cy: float) -> 'BoundingBox':
        return BoundingBox(float(cx), float(cy), self.w, self.h)

    def intersects(self, frame: Frame) -> bool:
        return self.x1 > 0 and self.y1 > 0 and self.x0 < frame.width and self.y0 < frame.height

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.cx, self.cy, self.w, self.h


@dataclass(frozen=True)
class Template:
    """
    Target appearance cropped from the first frame.

    ``levels`` holds the template seen at each smoothing scale. Templates
    produced by crop_template are cut from the smoothed full frame; a template
    built directly from a patch smooths the patch on its own.
    """
    patch: np.ndarray
    origin_box: BoundingBox
    sigmas: Tuple[float, float, float] = (1.0, 2.0, 4.0)
    levels: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        patch = np.array(self.patch, dtype=np.float64)
        if patch.ndim != 2 or patch.shape != (int(self.origin_box.h), int(self.origin_box.w)):
            raise InvalidArgumentError(
                f"patch shape {patch.shape} does not match origin box {self.origin_box.w}x{self.origin_box.h}"
            )
        patch.setflags(write=False)
        object.__setattr__(self, 'patch', patch)
        levels = self.levels
        if levels is None:
            levels = tuple(gaussian_filter(patch, s, mode='nearest') if s > 0 else patch for s in self.sigmas)
        if len(levels) != len(LEVELS) or any(np.shape(lv) != patch.shape for lv in levels):
            raise InvalidArgumentError("template needs one patch-sized array per level")
        object.__setattr__(self, 'levels', tuple(np.asarray(lv, dtype=np.float64) for lv in levels))

    @property
    def width(self) -> int:
        return self.patch.shape[1]

    @property
    def height(self) -> int:
        return self.patch.shape[0]


def crop_bounds(frame: Frame, box: BoundingBox) -> Tuple[int, int, int, int]:
    """Integer crop bounds (x0, y0, x1, y1): floor origin, ceil extent"""
    x0, y0 = math.floor(box.x0 + 1e-9), math.floor(box.y0 + 1e-9)
    x1, y1 = math.ceil(box.x1 - 1e-9), math.ceil(box.y1 - 1e-9)
    if x0 < 0 or y0 < 0 or x1 > frame.width or y1 > frame.height:
        raise InvalidArgumentError(
            f"box ({box.x0:.2f}, {box.y0:.2f}, {box.x1:.2f}, {box.y1:.2f}) exceeds the "
            f"{frame.width}x{frame.height} frame"
        )
    return x0, y0, x1, y1


def crop_template(frame: Frame, box: BoundingBox, sigmas: Tuple[float, float, float] = (1.0, 2.0, 4.0)) -> Template:
    """Crop the target patch and its smoothed versions from the template frame"""
    x0, y0, x1, y1 = crop_bounds(frame, box)
    origin = BoundingBox((x0 + x1) / 2.0, (y0 + y1) / 2.0, float(x1 - x0), float(y1 - y0))
    levels = tuple(frame.smoothed(s)[y0:y1, x0:x1].copy() for s in sigmas)
    logger.debug(f"Cropped {x1 - x0}x{y1 - y0} template at ({x0}, {y0})")
    return Template(frame.pixels[y0:y1, x0:x1].copy(), origin, tuple(sigmas), levels)


class SearchWindow(NamedTuple):
    """Placement of the correlation grid in frame coordinates"""
    x0: int
    y0: int
    stride_x: float
    stride_y: float
    template_w: int
    template_h: int


class PyramidResponse(NamedTuple):
    maps: Tuple[ResponseMap, ResponseMap, ResponseMap]
    score: float
    window: SearchWindow


def _region_span(center: float, size: int, limit: int) -> Tuple[int, int]:
    size = min(size, limit)
    start = int(round(center - size / 2.0))
    start = min(max(start, 0), limit - size)
    return start, size


def ncc_map(search: np.ndarray, template: np.ndarray, min_contrast_ratio: float = 0.0) -> np.ndarray:
    """
    Normalized cross-correlation of template at every valid offset of search.

    Windows whose energy falls below min_contrast_ratio x the template energy
    score 0; a flat template gives an all-zero map.
    """
    th, tw = template.shape
    windows = sliding_window_view(search, (th, tw))
    t = template - template.mean()
    t_energy = float(np.sum(t * t))
    if t_energy <= ZERO_VARIANCE:
        return np.zeros(windows.shape[:2])

    count = th * tw
    w_sum = windows.sum(axis=(2, 3))
    w_energy = np.einsum('ijkl,ijkl->ij', windows, windows) - w_sum * w_sum / count
    w_energy = np.maximum(w_energy, 0.0)
    numerator = np.einsum('ijkl,kl->ij', windows, t)
    valid = w_energy > max(min_contrast_ratio * t_energy, ZERO_VARIANCE)
    out = np.zeros_like(numerator)
    out[valid] = numerator[valid] / np.sqrt(w_energy[valid] * t_energy)
    return np.clip(out, -1.0, 1.0)


def calibrate_score(score: float, slope: float = 1.0, bias: float = 0.0) -> float:
    """sigmoid(slope * logit(score) + bias); the identity head returns score untouched"""
    if slope == 1.0 and bias == 0.0:
        return score
    clamped = min(max(score, SCORE_EPS), 1.0 - SCORE_EPS)
    return float(expit(slope * logit(clamped) + bias))


def _resample(values: np.ndarray, n: int) -> np.ndarray:
    if values.shape == (n, n):
        return values
    rows = np.linspace(0.0, values.shape[0] - 1, n)
    cols = np.linspace(0.0, values.shape[1] - 1, n)
    grid_r, grid_c = np.meshgrid(rows, cols, indexing='ij')
    return map_coordinates(values, [grid_r, grid_c], order=1, mode='nearest')


def response_pyramid(frame: Frame, template: Template, search_box: BoundingBox,
                     cfg: Optional[AppearanceConfig] = None) -> PyramidResponse:
    """Three n x n response maps, the positive score and the grid placement for one frame"""
    cfg = cfg or AppearanceConfig()
    sx0, sw = _region_span(search_box.cx, int(round(cfg.context_factor * search_box.w)), frame.width)
    sy0, sh = _region_span(search_box.cy, int(round(cfg.context_factor * search_box.h)), frame.height)
    tw, th = template.width, template.height
    if sw < tw or sh < th:
        raise TrackingFailureError(
            f"search region {sw}x{sh} is smaller than the {tw}x{th} template"
        )

    n = cfg.grid_size
    maps, raw = [], None
    for level, sigma, patch in zip(LEVELS, cfg.sigmas, template.levels):
        search = frame.smoothed(sigma)[sy0:sy0 + sh, sx0:sx0 + sw]
        raw = ncc_map(search, patch, cfg.min_contrast_ratio)
        maps.append(ResponseMap(_resample(raw, n), level))

    offsets_y, offsets_x = raw.shape
    window = SearchWindow(
        sx0, sy0,
        (offsets_x - 1) / (n - 1) if n > 1 else 0.0,
        (offsets_y - 1) / (n - 1) if n > 1 else 0.0,
        tw, th,
    )
    raw_score = (float(raw.max()) + 1.0) / 2.0
    score = calibrate_score(raw_score, cfg.score_slope, cfg.score_bias)
    logger.debug(f"Search region {sw}x{sh} at ({sx0}, {sy0}): score={score:.4f} (raw {raw_score:.4f})")
    return PyramidResponse(tuple(maps), score, window)


def locate(maps, search_box: BoundingBox, window: SearchWindow) -> BoundingBox:
    """Center the box on the level-3 argmax; the size carries over from search_box"""
    coarse = maps[-1].values
    row, col = np.unravel_index(int(np.argmax(coarse)), coarse.shape)
    cx = window.x0 + col * window.stride_x + window.template_w / 2.0
    cy = window.y0 + row * window.stride_y + window.template_h / 2.0
    return search_box.moved_to(cx, cy)
