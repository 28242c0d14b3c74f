"""
Occlusion-aware tracking state machine.

TRACKING follows the appearance model. When the occlusion judge fires and
enough history exists, the tracker switches to PREDICTING and coasts on
predicted centers, re-checking the judge every frame around the predicted
position, until the target is reacquired or the prediction horizon runs out.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Protocol, Sequence, Tuple

import pandas as pd

from .appearance import BoundingBox, Frame, PyramidResponse, Template, crop_template, locate, response_pyramid
from .baseline import ConstantVelocityPredictor
from .config import TrackerConfig
from .errors import InvalidArgumentError, TrackingFailureError
from .heatmap import extract_peaks
from .metrics import iou
from .occlusion import OcclusionVerdict, judge
from .seqnet import SeqNetParams
from .trajectory_gan import GanPredictor, Trajectory

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ['frame', 'cx', 'cy', 'w', 'h', 'mode', 'epsilon', 'occluded', 'iou', 'score', 'dis', 'lost']


class Mode(str, Enum):
    TRACKING = "TRACKING"
    PREDICTING = "PREDICTING"


class Predictor(Protocol):
    """Anything mapping an observed trajectory to n_pred future centers; t_obs is optional"""

    def predict(self, observed: Trajectory, n_pred: int) -> Trajectory:
        ...


@dataclass(frozen=True)
class HistoryPoint:
    frame_id: int
    x: float
    y: float
    synthetic: bool = False


@dataclass(frozen=True)
class TrackState:
    """Everything the tracker carries from one frame to the next"""
    mode: Mode
    box: BoundingBox
    history: Tuple[HistoryPoint, ...]
    frames_predicted: int
    max_predict: int
    frame_id: int = 0
    pending: Tuple[HistoryPoint, ...] = ()
    lost: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'mode', Mode(self.mode))
        object.__setattr__(self, 'history', tuple(self.history))
        object.__setattr__(self, 'pending', tuple(self.pending))
        if not 0 <= self.frames_predicted <= self.max_predict:
            raise InvalidArgumentError(
                f"frames_predicted {self.frames_predicted} outside [0, {self.max_predict}]"
            )
        if self.frames_predicted > 0 and self.mode is not Mode.PREDICTING:
            raise InvalidArgumentError("only PREDICTING states count predicted frames")
        ids = [p.frame_id for p in self.history]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise InvalidArgumentError("history must be time-ordered")

    @property
    def real_points(self) -> int:
        return sum(not p.synthetic for p in self.history)

    def observed(self, count: int) -> Trajectory:
        """Generator input: the last count history points"""
        tail = self.history[-count:]
        return Trajectory([(p.x, p.y) for p in tail], tuple(p.frame_id for p in tail))


@dataclass(frozen=True)
class FrameResult:
    """Outcome of one tracked frame"""
    frame_id: int
    box: BoundingBox
    mode: Mode
    verdict: Optional[OcclusionVerdict]
    iou_vs_truth: Optional[float] = None
    lost: bool = False
    target_lost: bool = False

    @property
    def score(self) -> Optional[float]:
        return self.verdict.score if self.verdict else None

    def to_row(self) -> dict:
        verdict = self.verdict
        return {
            'frame': self.frame_id,
            'cx': self.box.cx,
            'cy': self.box.cy,
            'w': self.box.w,
            'h': self.box.h,
            'mode': self.mode.value,
            'epsilon': verdict.epsilon if verdict else None,
            'occluded': int(verdict.occluded) if verdict else None,
            'iou': self.iou_vs_truth,
            'score': verdict.score if verdict else None,
            'dis': verdict.dis if verdict else None,
            'lost': int(self.lost),
        }


def initial_state(box: BoundingBox, cfg: TrackerConfig, frame_id: int = 0) -> TrackState:
    return TrackState(Mode.TRACKING, box, (HistoryPoint(frame_id, box.cx, box.cy),), 0,
                      cfg.pipeline.max_predict, frame_id)


def observation_length(predictor, cfg: TrackerConfig) -> int:
    """History points one prediction consumes: the pipeline's t_obs, or more if the predictor needs them"""
    return max(cfg.pipeline.t_obs, int(getattr(predictor, 't_obs', cfg.pipeline.t_obs)))


def _observe(frame: Frame, template: Template, search_box: BoundingBox,
             cfg: TrackerConfig) -> Tuple[PyramidResponse, OcclusionVerdict]:
    response = response_pyramid(frame, template, search_box, cfg.appearance)
    peaksets = [extract_peaks(m, cfg.occlusion.top_k) for m in response.maps]
    return response, judge(peaksets, response.score, cfg.occlusion)


def _append(history: Tuple[HistoryPoint, ...], point: HistoryPoint, size: int) -> Tuple[HistoryPoint, ...]:
    return (history + (point,))[-size:]


def _as_points(predicted: Trajectory) -> Tuple[HistoryPoint, ...]:
    return tuple(HistoryPoint(f, float(x), float(y), synthetic=True)
                 for f, (x, y) in zip(predicted.frame_ids, predicted.points))


def _lost(state: TrackState, frame: Frame, template: Template, cfg: TrackerConfig,
          frame_id: int) -> Tuple[TrackState, FrameResult]:
    """Box frozen; the judge is still evaluated at the frozen box when possible"""
    try:
        _, verdict = _observe(frame, template, state.box, cfg)
    except TrackingFailureError:
        verdict = None
    new_state = replace(state, frame_id=frame_id, pending=(), lost=True)
    return new_state, FrameResult(frame_id, state.box, state.mode, verdict, lost=True, target_lost=True)


def step(state: TrackState, frame: Frame, template: Template, predictor: Predictor,
         cfg: TrackerConfig) -> Tuple[TrackState, FrameResult]:
    """Advance the tracker by one frame"""
    pc = cfg.pipeline
    needed = observation_length(predictor, cfg)
    frame_id = state.frame_id + 1
    if state.lost:
        return _lost(state, frame, template, cfg, frame_id)

    if state.mode is Mode.TRACKING:
        try:
            response, verdict = _observe(frame, template, state.box, cfg)
        except TrackingFailureError as e:
            logger.warning(f"Frame {frame_id}: appearance model failed ({e})")
            return replace(state, frame_id=frame_id), FrameResult(frame_id, state.box, state.mode, None, lost=True)

        if verdict.occluded and len(state.history) >= needed:
            queue = _as_points(predictor.predict(state.observed(needed), pc.n_pred))
            first = replace(queue[0], frame_id=frame_id)
            box = state.box.moved_to(first.x, first.y)
            logger.info(f"Frame {frame_id}: occlusion detected (epsilon={verdict.epsilon:.3f}), predicting")
            new_state = TrackState(Mode.PREDICTING, box, _append(state.history, first, pc.history_size),
                                   1, state.max_predict, frame_id, queue[1:])
            return new_state, FrameResult(frame_id, box, Mode.PREDICTING, verdict)

        if verdict.occluded:
            logger.debug(f"Frame {frame_id}: occluded but only {len(state.history)} history points")
        box = locate(response.maps, state.box, response.window)
        history = _append(state.history, HistoryPoint(frame_id, box.cx, box.cy), pc.history_size)
        return replace(state, box=box, history=history, frame_id=frame_id), \
            FrameResult(frame_id, box, Mode.TRACKING, verdict)

    # PREDICTING
    if state.frames_predicted >= state.max_predict:
        logger.warning(f"Frame {frame_id}: no reacquisition after {state.frames_predicted} predicted frames, target lost")
        return _lost(state, frame, template, cfg, frame_id)

    queue = state.pending
    if not queue:
        queue = _as_points(predictor.predict(state.observed(needed), pc.n_pred))
        logger.debug(f"Frame {frame_id}: re-predicted {len(queue)} centers from the history tail")
    predicted, rest = replace(queue[0], frame_id=frame_id), queue[1:]
    search_box = state.box.moved_to(predicted.x, predicted.y)

    try:
        response, verdict = _observe(frame, template, search_box, cfg)
    except TrackingFailureError as e:
        logger.warning(f"Frame {frame_id}: appearance model failed ({e})")
        response, verdict = None, None

    if verdict is not None and not verdict.occluded:
        box = locate(response.maps, search_box, response.window)
        history = _append(state.history, HistoryPoint(frame_id, box.cx, box.cy), pc.history_size)
        real = tuple(p for p in history if not p.synthetic)
        if len(real) >= needed:
            history = real
        logger.info(f"Frame {frame_id}: target reacquired after {state.frames_predicted} predicted frames")
        new_state = TrackState(Mode.TRACKING, box, history, 0, state.max_predict, frame_id)
        return new_state, FrameResult(frame_id, box, Mode.TRACKING, verdict)

    history = _append(state.history, predicted, pc.history_size)
    new_state = TrackState(Mode.PREDICTING, search_box, history, state.frames_predicted + 1,
                           state.max_predict, frame_id, rest)
    return new_state, FrameResult(frame_id, search_box, Mode.PREDICTING, verdict, lost=verdict is None)


def as_predictor(predictor, seed: int = 0) -> Predictor:
    """Wrap generator parameters as a predictor; None selects the constant-velocity baseline"""
    if predictor is None:
        return ConstantVelocityPredictor()
    if isinstance(predictor, SeqNetParams):
        return GanPredictor(predictor, seed=seed)
    return predictor


def _with_truth(result: FrameResult, truth: Optional[pd.DataFrame]) -> FrameResult:
    if truth is None:
        return result
    row = truth.loc[truth['frame'] == result.frame_id]
    if row.empty:
        return result
    r = row.iloc[0]
    truth_box = BoundingBox(float(r['cx']), float(r['cy']), float(r['w']), float(r['h']))
    return replace(result, iou_vs_truth=iou(result.box, truth_box))


def _check_sequence(frames: Sequence[Frame], init_box: BoundingBox) -> None:
    if not frames:
        raise InvalidArgumentError("a sequence needs at least one frame")
    if not init_box.intersects(frames[0]):
        raise InvalidArgumentError("initial box does not intersect the first frame")


def run_sequence(frames: Sequence[Frame], init_box: BoundingBox, predictor=None,
                 cfg: Optional[TrackerConfig] = None, truth: Optional[pd.DataFrame] = None) -> List[FrameResult]:
    """Track through a sequence; frame 0 supplies the template and gets no result"""
    cfg = cfg or TrackerConfig()
    _check_sequence(frames, init_box)
    template = crop_template(frames[0], init_box, cfg.appearance.sigmas)
    predictor = as_predictor(predictor, cfg.pipeline.seed)
    needed = observation_length(predictor, cfg)
    if needed > cfg.pipeline.history_size:
        raise InvalidArgumentError(
            f"predictor observes {needed} points but the history keeps only {cfg.pipeline.history_size}"
        )
    state = initial_state(init_box, cfg)
    results = []
    for frame in frames[1:]:
        state, result = step(state, frame, template, predictor, cfg)
        results.append(_with_truth(result, truth))
    predicted = sum(r.mode is Mode.PREDICTING for r in results)
    logger.info(f"Tracked {len(results)} frames ({predicted} predicted, lost={state.lost})")
    return results


def track_appearance_only(frames: Sequence[Frame], init_box: BoundingBox, cfg: Optional[TrackerConfig] = None,
                          truth: Optional[pd.DataFrame] = None) -> List[FrameResult]:
    """Plain template tracker: always follow the appearance model, verdicts recorded but ignored"""
    cfg = cfg or TrackerConfig()
    _check_sequence(frames, init_box)
    template = crop_template(frames[0], init_box, cfg.appearance.sigmas)
    box = init_box
    results = []
    for frame_id, frame in enumerate(frames[1:], start=1):
        try:
            response, verdict = _observe(frame, template, box, cfg)
        except TrackingFailureError as e:
            logger.warning(f"Frame {frame_id}: appearance model failed ({e})")
            results.append(_with_truth(FrameResult(frame_id, box, Mode.TRACKING, None, lost=True), truth))
            continue
        box = locate(response.maps, box, response.window)
        results.append(_with_truth(FrameResult(frame_id, box, Mode.TRACKING, verdict), truth))
    return results


def results_to_frame(results: Sequence[FrameResult]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in results], columns=RESULT_COLUMNS)


def ended_lost(results: Sequence[FrameResult]) -> bool:
    return bool(results) and results[-1].target_lost
