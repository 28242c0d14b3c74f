import numpy as np
import pytest

from occlusion_tracker.baseline import ConstantVelocityPredictor, baseline_predictor, transition
from occlusion_tracker.errors import InvalidArgumentError
from occlusion_tracker.trajectory_gan import Trajectory


def test_transition_advances_position_by_velocity():
    state = np.array([1.0, 2.0, 0.5, -1.0])
    np.testing.assert_allclose(transition(2.0) @ state, [2.0, 0.0, 0.5, -1.0])


def test_extrapolates_last_velocity():
    observed = Trajectory.from_points([(0, 0), (5, 5), (7, 6)], start_frame=10)
    predicted = baseline_predictor(observed, 3)
    np.testing.assert_allclose(predicted.points, [[9, 7], [11, 8], [13, 9]])
    assert predicted.frame_ids == (13, 14, 15)


def test_stationary_target_stays_put():
    observed = Trajectory.from_points([(4, 4), (4, 4)])
    np.testing.assert_allclose(baseline_predictor(observed, 2).points, [[4, 4], [4, 4]])


@pytest.mark.parametrize("points,n_pred", [([(1, 1)], 2), ([(1, 1), (2, 2)], 0)])
def test_rejects_bad_input(points, n_pred):
    with pytest.raises(InvalidArgumentError):
        baseline_predictor(Trajectory.from_points(points), n_pred)


def test_predictor_interface():
    predictor = ConstantVelocityPredictor()
    observed = Trajectory.from_points([(0, 0), (1, 2)])
    assert predictor.t_obs == 2
    np.testing.assert_allclose(predictor.predict(observed, 1).points, [[2, 4]])


def test_diagonal_example():
    predicted = baseline_predictor(Trajectory.from_points([(0, 0), (1, 1)]), 2)
    np.testing.assert_allclose(predicted.points, [[2, 2], [3, 3]])
