import json

import numpy as np
import pytest

from occlusion_tracker.errors import InvalidArgumentError, SpecValidationError
from occlusion_tracker.simulator import (TRUTH_COLUMNS, MotionSpec, ObjectSpec, ScenarioSpec, crossing_scenario,
                                         load_spec, simulate)


def still_scenario(**overrides):
    data = {
        'field_size': 40,
        'background': 0.2,
        'target': {'shape': 'rect', 'width': 8, 'height': 8, 'intensity': 0.8,
                   'motion': {'kind': 'linear', 'start': [20, 20], 'velocity': [0, 0]}},
        'frames': 4,
    }
    data.update(overrides)
    return load_spec(data)


class TestMotion:
    def test_linear(self):
        centers = MotionSpec(start=(10, 20), velocity=(1, -0.5)).positions(3)
        np.testing.assert_allclose(centers, [[10, 20], [11, 19.5], [12, 19]])

    def test_sinusoidal(self):
        motion = MotionSpec(kind='sinusoidal', start=(50, 50), amplitude=(0, 4), period=4)
        centers = motion.positions(2)
        np.testing.assert_allclose(centers[1], [50, 54])

    def test_piecewise_holds_beyond_ends(self):
        motion = MotionSpec(kind='piecewise', waypoints=[(0, 10, 10), (4, 30, 10)])
        centers = motion.positions(6)
        np.testing.assert_allclose(centers[2], [20, 10])
        np.testing.assert_allclose(centers[5], [30, 10])

    def test_piecewise_needs_two_waypoints(self):
        with pytest.raises(SpecValidationError):
            load_spec({'target': {'motion': {'kind': 'piecewise', 'waypoints': [[0, 50, 50]]}}})


class TestSpecValidation:
    def test_defaults_are_valid(self):
        spec = ScenarioSpec()
        assert spec.frames == 50 and spec.field_size == 100

    def test_unknown_field(self):
        with pytest.raises(SpecValidationError) as excinfo:
            load_spec({'framez': 10})
        assert any('framez' in e for e in excinfo.value.errors)

    def test_object_leaves_field(self):
        with pytest.raises(SpecValidationError):
            still_scenario(target={'width': 8, 'height': 8,
                                   'motion': {'start': [20, 20], 'velocity': [10, 0]}})

    def test_episode_outside_frames(self):
        with pytest.raises(SpecValidationError):
            still_scenario(occlusion_episodes=[[2, 9]])

    def test_negative_noise(self):
        with pytest.raises(SpecValidationError):
            still_scenario(noise=-0.1)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({'frames': 5}), encoding='utf-8')
        assert load_spec(path).frames == 5

    def test_load_invalid_json(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("{not json", encoding='utf-8')
        with pytest.raises(SpecValidationError):
            load_spec(path)

    def test_spec_is_frozen(self):
        with pytest.raises(Exception):
            ScenarioSpec().frames = 3


class TestSimulate:
    def test_truth_table(self):
        frames, truth = simulate(still_scenario())
        assert len(frames) == 4
        assert list(truth.columns) == TRUTH_COLUMNS
        assert (truth['cx'] == 20).all() and (truth['occluded'] == 0).all()

    def test_renders_target(self):
        frames, _ = simulate(still_scenario())
        pixels = frames[0].pixels
        assert pixels[20, 20] == pytest.approx(0.8)
        assert pixels[2, 2] == pytest.approx(0.2)
        assert int(np.sum(pixels == 0.8)) == 64

    def test_covering_distractor_occludes(self):
        cover = {'shape': 'rect', 'width': 12, 'height': 12, 'intensity': 0.5,
                 'motion': {'start': [20, 20]}}
        frames, truth = simulate(still_scenario(distractors=[cover]))
        assert (truth['occluded'] == 1).all()
        assert frames[0].pixels[20, 20] == pytest.approx(0.5)

    def test_episodes_control_z_order(self):
        cover = {'shape': 'rect', 'width': 12, 'height': 12, 'intensity': 0.5,
                 'motion': {'start': [20, 20]}}
        frames, truth = simulate(still_scenario(distractors=[cover], occlusion_episodes=[[1, 3]]))
        assert list(truth['occluded']) == [0, 1, 1, 0]
        assert frames[0].pixels[20, 20] == pytest.approx(0.8)
        assert frames[1].pixels[20, 20] == pytest.approx(0.5)

    def test_partial_cover_below_half_is_visible(self):
        sliver = {'shape': 'rect', 'width': 2, 'height': 8, 'intensity': 0.5,
                  'motion': {'start': [17, 20]}}
        _, truth = simulate(still_scenario(distractors=[sliver]))
        assert (truth['occluded'] == 0).all()

    def test_noise_is_seeded(self):
        a, _ = simulate(still_scenario(noise=0.05, seed=3))
        b, _ = simulate(still_scenario(noise=0.05, seed=3))
        np.testing.assert_array_equal(a[2].pixels, b[2].pixels)
        assert a[2].pixels.min() >= 0.0 and a[2].pixels.max() <= 1.0


class TestCrossingScenario:
    def test_has_an_occlusion_episode(self, crossing):
        spec, frames, truth = crossing
        occluded = np.flatnonzero(truth['occluded'].to_numpy())
        assert len(frames) == spec.frames
        assert 4 <= occluded.size <= 12
        assert np.all(np.diff(occluded) == 1)
        assert occluded[0] > 4

    def test_seeds_vary_geometry(self):
        layouts = {(s.target.motion.start, tuple(s.occlusion_episodes[0]))
                   for s in (crossing_scenario(seed=k) for k in range(6))}
        assert len(layouts) > 1

    def test_truth_flags_exactly_the_episode(self):
        for seed in range(5):
            spec = crossing_scenario(seed=seed)
            (start, end), = spec.occlusion_episodes
            assert 5 <= end - start <= 10
            _, truth = simulate(spec)
            assert np.flatnonzero(truth['occluded'].to_numpy()).tolist() == list(range(start, end))

    @pytest.mark.parametrize("frames", [20, 35, 60])
    def test_frame_range(self, frames):
        spec = crossing_scenario(seed=7, frames=frames)
        start, _ = spec.occlusion_episodes[0]
        assert spec.frames == frames and start >= frames // 3

    @pytest.mark.parametrize("frames", [19, 61])
    def test_rejects_frame_counts_outside_range(self, frames):
        with pytest.raises(InvalidArgumentError):
            crossing_scenario(frames=frames)

    def test_initial_box(self, crossing):
        spec, _, truth = crossing
        box = spec.initial_box()
        assert (box.cx, box.cy) == (truth['cx'][0], truth['cy'][0])
        assert (box.w, box.h) == (16.0, 16.0)

    def test_disk_radius_uses_extent(self):
        obj = ObjectSpec(shape='disk', width=16, height=16, extent=0.5)
        xs = np.array([54.0, 55.0])
        assert list(obj.mask(50.0, 50.0, xs, np.full(2, 50.0))) == [True, False]
