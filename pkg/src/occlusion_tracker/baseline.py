"""
Constant-velocity motion baseline for trajectory prediction.
"""
import logging

import numpy as np

from .errors import InvalidArgumentError
from .trajectory_gan import Trajectory

logger = logging.getLogger(__name__)


def transition(dt: float = 1.0) -> np.ndarray:
    """State transition for [px, py, vx, vy]"""
    return np.array([
        [1.0, 0.0, dt, 0.0],
        [0.0, 1.0, 0.0, dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def baseline_predictor(observed: Trajectory, n_pred: int) -> Trajectory:
    """Extrapolate linearly from the velocity between the last two observed points"""
    if len(observed) < 2:
        raise InvalidArgumentError(f"constant-velocity prediction needs 2 observed points, got {len(observed)}")
    if n_pred < 1:
        raise InvalidArgumentError("n_pred must be positive")
    state = np.concatenate([observed.points[-1], observed.points[-1] - observed.points[-2]])
    step = transition()
    points = []
    for _ in range(n_pred):
        state = step @ state
        points.append(state[:2])
    last = observed.frame_ids[-1]
    return Trajectory(np.array(points), tuple(range(last + 1, last + 1 + n_pred)))


class ConstantVelocityPredictor:
    """Predictor interface around baseline_predictor"""
    t_obs = 2

    def predict(self, observed: Trajectory, n_pred: int) -> Trajectory:
        return baseline_predictor(observed, n_pred)
