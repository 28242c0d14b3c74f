import numpy as np
import pytest

from occlusion_tracker.appearance import (BoundingBox, Frame, SearchWindow, Template, crop_bounds, crop_template,
                                          locate, ncc_map, response_pyramid)
from occlusion_tracker.config import AppearanceConfig
from occlusion_tracker.errors import InvalidArgumentError, TrackingFailureError
from occlusion_tracker.heatmap import ResponseMap, extract_peaks


class TestFrame:
    def test_from_array(self):
        frame = Frame.from_array(np.zeros((3, 5)))
        assert (frame.width, frame.height) == (5, 3)

    @pytest.mark.parametrize("value", [-0.1, 1.5, np.nan])
    def test_rejects_out_of_range(self, value):
        pixels = np.zeros((4, 4))
        pixels[0, 0] = value
        with pytest.raises(InvalidArgumentError):
            Frame.from_array(pixels)

    def test_rejects_buffer_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            Frame(4, 4, np.zeros(15))


class TestBoundingBox:
    def test_corners(self):
        box = BoundingBox(10.0, 20.0, 4.0, 6.0)
        assert (box.x0, box.y0, box.x1, box.y1) == (8.0, 17.0, 12.0, 23.0)
        assert box.area == 24.0

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            BoundingBox(1.0, 1.0, 0.0, 2.0)

    def test_intersects(self):
        frame = Frame.from_array(np.zeros((10, 10)))
        assert BoundingBox(5, 5, 2, 2).intersects(frame)
        assert not BoundingBox(-5, -5, 2, 2).intersects(frame)


class TestCrop:
    def test_full_frame(self, rng):
        frame = Frame.from_array(rng.random((12, 10)))
        template = crop_template(frame, BoundingBox(5.0, 6.0, 10.0, 12.0))
        np.testing.assert_array_equal(template.patch, frame.pixels)

    def test_constant_image(self):
        frame = Frame.from_array(np.full((30, 30), 0.25))
        template = crop_template(frame, BoundingBox(15.0, 15.0, 10.0, 10.0))
        assert template.patch.shape == (10, 10)
        assert np.all(template.patch == 0.25)

    def test_out_of_bounds(self):
        frame = Frame.from_array(np.zeros((20, 20)))
        with pytest.raises(InvalidArgumentError):
            crop_bounds(frame, BoundingBox(18.0, 10.0, 8.0, 8.0))

    def test_levels_cut_from_smoothed_frame(self, blob_frame, blob_box):
        template = crop_template(blob_frame, blob_box)
        np.testing.assert_allclose(template.levels[2], blob_frame.smoothed(4.0)[42:58, 42:58])

    def test_patch_template_smooths_itself(self, rng):
        patch = rng.random((6, 6))
        template = Template(patch, BoundingBox(3.0, 3.0, 6.0, 6.0), sigmas=(0.0, 1.0, 2.0))
        np.testing.assert_array_equal(template.levels[0], patch)


class TestNcc:
    def test_self_match(self, rng):
        search = rng.random((20, 20))
        template = search[5:12, 8:15]
        scores = ncc_map(search, template)
        assert scores.shape == (14, 14)
        assert np.unravel_index(np.argmax(scores), scores.shape) == (5, 8)
        assert scores[5, 8] == pytest.approx(1.0)

    def test_flat_template(self, rng):
        assert np.all(ncc_map(rng.random((10, 10)), np.full((4, 4), 0.5)) == 0.0)

    def test_affine_brightness_invariance(self, rng):
        search = rng.random((16, 16))
        template = rng.random((5, 5))
        np.testing.assert_allclose(ncc_map(search * 0.5 + 0.2, template * 0.5 + 0.2, 0.05),
                                   ncc_map(search, template, 0.05), atol=1e-9)

    def test_low_contrast_windows_score_zero(self, rng):
        search = np.full((12, 12), 0.5)
        search[:, :6] = rng.random((12, 6))
        scores = ncc_map(search, rng.random((4, 4)), 0.05)
        assert np.all(scores[:, 6:] == 0.0)


class TestResponsePyramid:
    def test_self_match_peaks_at_center(self, blob_frame, blob_box):
        template = crop_template(blob_frame, blob_box)
        response = response_pyramid(blob_frame, template, blob_box)
        for level_map in response.maps:
            assert level_map.size == 17
            assert np.unravel_index(np.argmax(level_map.values), (17, 17)) == (8, 8)
        assert response.score > 0.9

    def test_uniform_frame(self):
        frame = Frame.from_array(np.full((60, 60), 0.5))
        box = BoundingBox(30.0, 30.0, 10.0, 10.0)
        response = response_pyramid(frame, crop_template(frame, box), box)
        assert all(np.all(m.values == 0.0) for m in response.maps)
        assert response.score == pytest.approx(0.5)

    def test_two_identical_objects(self):
        ys, xs = np.mgrid[0:80, 0:80] + 0.5
        pixels = np.full((80, 80), 0.2)
        for cx in (28.0, 52.0):
            pixels[(xs - cx) ** 2 + (ys - 40) ** 2 <= 16] = 0.9
        frame = Frame.from_array(pixels)
        template = crop_template(frame, BoundingBox(28.0, 40.0, 12.0, 12.0))
        search = BoundingBox(40.0, 40.0, 24.0, 24.0)
        response = response_pyramid(frame, template, search, AppearanceConfig(grid_size=25))
        assert len(extract_peaks(response.maps[0], 4)) == 2

    def test_region_smaller_than_template(self, blob_frame):
        template = crop_template(blob_frame, BoundingBox(50.0, 50.0, 40.0, 40.0))
        with pytest.raises(TrackingFailureError):
            response_pyramid(blob_frame, template, BoundingBox(50.0, 50.0, 10.0, 10.0))

    def test_follows_shifted_target(self, blob_frame, blob_box):
        template = crop_template(blob_frame, blob_box)
        shifted = Frame.from_array(np.roll(blob_frame.pixels, 3, axis=1))
        response = response_pyramid(shifted, template, blob_box)
        box = locate(response.maps, blob_box, response.window)
        assert box.cx == pytest.approx(53.0)
        assert box.cy == pytest.approx(50.0)


class TestLocate:
    def _maps(self, row, col, n=17):
        values = np.zeros((n, n))
        values[row, col] = 1.0
        return [ResponseMap(values, level) for level in (1, 2, 3)]

    def test_center_peak(self):
        box = BoundingBox(50.0, 50.0, 16.0, 16.0)
        window = SearchWindow(34, 34, 1.0, 1.0, 16, 16)
        located = locate(self._maps(8, 8), box, window)
        assert located.center == (50.0, 50.0)
        assert (located.w, located.h) == (16.0, 16.0)

    def test_one_cell_right(self):
        box = BoundingBox(50.0, 50.0, 16.0, 16.0)
        window = SearchWindow(34, 34, 1.5, 1.5, 16, 16)
        center = locate(self._maps(8, 8), box, window)
        located = locate(self._maps(8, 9), box, window)
        assert located.cx - center.cx == pytest.approx(1.5)
        assert located.cy == center.cy
