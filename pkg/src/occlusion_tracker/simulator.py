"""
Synthetic scene simulator.

Renders a target and any number of distractors moving over a flat background
into grayscale frames, and records per-frame ground truth: the target box and
whether more than half of the target's pixels are hidden under a distractor
drawn above it.
"""
import json
import logging
from pathlib import Path
from typing import List, Literal, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .appearance import BoundingBox, Frame
from .errors import InvalidArgumentError, SpecValidationError

logger = logging.getLogger(__name__)

TRUTH_COLUMNS = ['frame', 'cx', 'cy', 'w', 'h', 'occluded']
OCCLUDED_FRACTION = 0.5


class MotionSpec(BaseModel):
    """Center trajectory of one object as a function of the frame index"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['linear', 'sinusoidal', 'piecewise'] = 'linear'
    start: Tuple[float, float] = (50.0, 50.0)
    velocity: Tuple[float, float] = (0.0, 0.0)
    amplitude: Tuple[float, float] = (0.0, 0.0)
    period: float = Field(20.0, gt=0)
    phase: float = 0.0
    # piecewise: (frame, x, y) knots, linear in between, held beyond the ends
    waypoints: List[Tuple[float, float, float]] = Field(default_factory=list)

    @model_validator(mode='after')
    def _check_waypoints(self):
        if self.kind == 'piecewise':
            if len(self.waypoints) < 2:
                raise ValueError("piecewise motion needs at least two waypoints")
            frames = [w[0] for w in self.waypoints]
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise ValueError("waypoint frames must be strictly increasing")
        return self

    def positions(self, frames: int) -> np.ndarray:
        """(frames, 2) array of centers"""
        t = np.arange(frames, dtype=np.float64)
        if self.kind == 'piecewise':
            knots = np.array(self.waypoints, dtype=np.float64)
            return np.column_stack([np.interp(t, knots[:, 0], knots[:, 1]),
                                    np.interp(t, knots[:, 0], knots[:, 2])])
        centers = np.asarray(self.start) + np.outer(t, self.velocity)
        if self.kind == 'sinusoidal':
            centers += np.outer(np.sin(2.0 * np.pi * t / self.period + self.phase), self.amplitude)
        return centers


class ObjectSpec(BaseModel):
    """A filled disk or rectangle inside a w x h box"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    shape: Literal['disk', 'rect'] = 'disk'
    width: float = Field(16.0, gt=0)
    height: float = Field(16.0, gt=0)
    extent: float = Field(1.0, gt=0, le=1.0)
    intensity: float = Field(0.9, ge=0, le=1)
    motion: MotionSpec = Field(default_factory=MotionSpec)

    def mask(self, cx: float, cy: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Boolean coverage of pixel centers"""
        if self.shape == 'disk':
            radius = self.extent * min(self.width, self.height) / 2.0
            return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius ** 2
        return ((np.abs(xs - cx) <= self.extent * self.width / 2.0)
                & (np.abs(ys - cy) <= self.extent * self.height / 2.0))


class ScenarioSpec(BaseModel):
    """Complete description of one synthetic sequence"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    field_size: int = Field(100, gt=0)
    background: float = Field(0.4, ge=0, le=1)
    target: ObjectSpec = Field(default_factory=ObjectSpec)
    distractors: List[ObjectSpec] = Field(default_factory=list)
    # half-open [start, end) frame ranges during which distractors are drawn above the target;
    # None keeps them above throughout
    occlusion_episodes: Optional[List[Tuple[int, int]]] = None
    noise: float = Field(0.0, ge=0)
    frames: int = Field(50, gt=0)
    seed: int = 0

    @model_validator(mode='after')
    def _check_bounds(self):
        errors = []
        for name, obj in [('target', self.target)] + [(f'distractor {i}', d) for i, d in enumerate(self.distractors)]:
            centers = obj.motion.positions(self.frames)
            lo = centers - [obj.width / 2.0, obj.height / 2.0]
            hi = centers + [obj.width / 2.0, obj.height / 2.0]
            outside = np.flatnonzero(np.any(lo < 0, axis=1) | np.any(hi > self.field_size, axis=1))
            if outside.size:
                errors.append(f"{name} leaves the {self.field_size}px field at frame {int(outside[0])}")
        for start, end in self.occlusion_episodes or []:
            if not 0 <= start < end <= self.frames:
                errors.append(f"occlusion episode [{start}, {end}) is outside the {self.frames} frames")
        if errors:
            raise ValueError('; '.join(errors))
        return self

    def distractors_above(self, frame: int) -> bool:
        if self.occlusion_episodes is None:
            return True
        return any(start <= frame < end for start, end in self.occlusion_episodes)

    def initial_box(self) -> BoundingBox:
        cx, cy = self.target.motion.positions(1)[0]
        return BoundingBox(float(cx), float(cy), self.target.width, self.target.height)


class SimulationResult(NamedTuple):
    frames: List[Frame]
    truth: pd.DataFrame


def load_spec(data) -> ScenarioSpec:
    """Validate a mapping or JSON file path into a ScenarioSpec"""
    try:
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text(encoding='utf-8'))
        return ScenarioSpec.model_validate(data)
    except ValidationError as e:
        raise SpecValidationError([f"{'.'.join(str(p) for p in err['loc']) or 'spec'}: {err['msg']}"
                                   for err in e.errors()]) from e
    except (OSError, json.JSONDecodeError) as e:
        raise SpecValidationError(f"cannot read scenario spec: {e}") from e


def simulate(spec: ScenarioSpec) -> SimulationResult:
    """Render every frame and the ground-truth table; deterministic for a fixed seed"""
    rng = np.random.default_rng(spec.seed)
    size = spec.field_size
    ys, xs = np.mgrid[0:size, 0:size] + 0.5

    target_path = spec.target.motion.positions(spec.frames)
    distractor_paths = [d.motion.positions(spec.frames) for d in spec.distractors]

    frames, rows = [], []
    for t in range(spec.frames):
        canvas = np.full((size, size), spec.background)
        above = spec.distractors_above(t)
        tx, ty = target_path[t]
        target_mask = spec.target.mask(tx, ty, xs, ys)
        masks = [d.mask(p[t, 0], p[t, 1], xs, ys) for d, p in zip(spec.distractors, distractor_paths)]

        if not above:
            for d, m in zip(spec.distractors, masks):
                canvas[m] = d.intensity
        canvas[target_mask] = spec.target.intensity
        hidden = np.zeros_like(target_mask)
        if above:
            for d, m in zip(spec.distractors, masks):
                canvas[m] = d.intensity
                hidden |= m & target_mask

        if spec.noise > 0:
            canvas = np.clip(canvas + rng.normal(0.0, spec.noise, canvas.shape), 0.0, 1.0)
        frames.append(Frame.from_array(canvas))

        visible_area = int(target_mask.sum())
        occluded = visible_area > 0 and hidden.sum() > OCCLUDED_FRACTION * visible_area
        rows.append({'frame': t, 'cx': float(tx), 'cy': float(ty), 'w': spec.target.width,
                     'h': spec.target.height, 'occluded': int(occluded)})

    truth = pd.DataFrame(rows, columns=TRUTH_COLUMNS)
    logger.info(f"Simulated {spec.frames} frames, {int(truth['occluded'].sum())} occluded")
    return SimulationResult(frames, truth)


CROSSING_FRAMES = (20, 60)
PANEL_SIZE = 32.0
PANEL_DRIFT = -0.25


def crossing_scenario(seed: int = 0, frames: int = 50, noise: float = 0.0) -> ScenarioSpec:
    """
    A bright disk moving right at one pixel per frame passes behind a panel.

    The panel has the background's shade and drifts slowly left. It is drawn
    above the target during a single episode of 5 to 10 frames, centered on the
    target halfway through it, and hides the whole disk for the entire episode:
    the occluded truth flags are exactly the episode frames. The seed picks the
    target's row, the episode start and its length.
    """
    lo, hi = CROSSING_FRAMES
    if not lo <= frames <= hi:
        raise InvalidArgumentError(f"crossing scenarios need {lo} to {hi} frames, got {frames}")
    rng = np.random.default_rng(seed)
    ty = float(rng.integers(30, 71))
    length = int(rng.integers(5, 11))
    first = frames // 3
    start = int(rng.integers(first, max(first + 1, frames - length - frames // 5)))
    middle = start + length / 2.0
    tx0 = 20.0
    panel_x0 = tx0 + middle - PANEL_DRIFT * middle
    background = 0.4
    return ScenarioSpec(
        field_size=100,
        background=background,
        target=ObjectSpec(shape='disk', width=16, height=16, extent=0.5, intensity=0.9,
                          motion=MotionSpec(kind='linear', start=(tx0, ty), velocity=(1.0, 0.0))),
        distractors=[ObjectSpec(shape='rect', width=PANEL_SIZE, height=PANEL_SIZE, extent=1.0,
                                intensity=background,
                                motion=MotionSpec(kind='linear', start=(panel_x0, ty),
                                                  velocity=(PANEL_DRIFT, 0.0)))],
        occlusion_episodes=[(start, start + length)],
        noise=noise,
        frames=frames,
        seed=seed,
    )
