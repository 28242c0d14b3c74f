"""
Shared fixtures and helpers for the test suite
"""
import numpy as np
import pytest

from occlusion_tracker.appearance import BoundingBox, Frame
from occlusion_tracker.config import TrackerConfig
from occlusion_tracker.simulator import crossing_scenario, simulate


def numeric_grad(func, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector"""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        plus, minus = x.copy(), x.copy()
        plus.flat[i] += eps
        minus.flat[i] -= eps
        grad.flat[i] = (func(plus) - func(minus)) / (2.0 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / (||a|| + ||b||), zero when both vanish"""
    a, b = np.ravel(a).astype(np.float64), np.ravel(b).astype(np.float64)
    scale = np.linalg.norm(a) + np.linalg.norm(b)
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config():
    return TrackerConfig()


@pytest.fixture
def blob_frame():
    """A 100x100 frame with an asymmetric bright blob centered at (50, 50)"""
    ys, xs = np.mgrid[0:100, 0:100] + 0.5
    pixels = np.full((100, 100), 0.3)
    pixels[(xs - 50) ** 2 + (ys - 50) ** 2 <= 36] = 0.9
    pixels[(xs >= 50) & (xs < 56) & (ys >= 42) & (ys < 45)] = 0.6
    return Frame.from_array(pixels)


@pytest.fixture
def blob_box():
    return BoundingBox(50.0, 50.0, 16.0, 16.0)


@pytest.fixture(scope='session')
def crossing():
    """Noise-free crossing scenario: spec, frames and truth"""
    spec = crossing_scenario(seed=0)
    frames, truth = simulate(spec)
    return spec, frames, truth
