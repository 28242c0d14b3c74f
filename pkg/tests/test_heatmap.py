import numpy as np
import pytest

from occlusion_tracker.errors import InvalidArgumentError
from occlusion_tracker.heatmap import (Peak, PeakSet, ResponseMap, check_neighbor, compute_distances,
                                       extract_peaks, get_top, is_neighbor, merge_neighbors,
                                       remove_low_points)


def brute_force_peaks(values: np.ndarray, k: int):
    """Full sort of every cell, 0.75 filter, greedy neighbor suppression"""
    n = values.shape[0]
    cells = sorted(((float(values[r, c]), r * n + c) for r in range(n) for c in range(n)),
                   key=lambda sc: (-sc[0], sc[1]))[:k]
    top = cells[0][0]
    cells = [cells[0]] + [sc for sc in cells[1:] if sc[0] > 0.75 * top]
    kept = []
    for score, ind in cells:
        r, c = divmod(ind, n)
        if all(max(abs(r - kr), abs(c - kc)) > 2 for kr, kc, _ in kept):
            kept.append((r, c, score))
    return kept


def gaussian_map(n, centers, sigma=1.0):
    rows, cols = np.mgrid[0:n, 0:n]
    values = np.zeros((n, n))
    for r, c in centers:
        values += np.exp(-((rows - r) ** 2 + (cols - c) ** 2) / (2 * sigma ** 2))
    return values


class TestResponseMap:
    def test_rejects_non_square(self):
        with pytest.raises(InvalidArgumentError):
            ResponseMap(np.zeros((3, 4)), 1)

    def test_rejects_bad_level(self):
        with pytest.raises(InvalidArgumentError):
            ResponseMap(np.zeros((3, 3)), 4)

    def test_rejects_nan(self):
        values = np.zeros((3, 3))
        values[1, 1] = np.nan
        with pytest.raises(InvalidArgumentError):
            ResponseMap(values, 1)

    def test_values_are_read_only(self):
        response = ResponseMap(np.zeros((3, 3)), 2)
        with pytest.raises(ValueError):
            response.values[0, 0] = 1.0

    def test_text_format(self, rng):
        response = ResponseMap(rng.random((5, 5)), 3)
        text = response.to_text()
        assert text.splitlines()[0] == "5 3"
        parsed = ResponseMap.from_text(text)
        assert parsed.level == 3
        np.testing.assert_array_equal(parsed.values, response.values)

    def test_text_format_rejects_short_body(self):
        with pytest.raises(InvalidArgumentError):
            ResponseMap.from_text("3 1\n0 0 0\n0 0 0\n")


class TestGetTop:
    def test_flat_index_to_row_col(self):
        values = np.zeros((5, 5))
        values.flat[7] = 1.0
        assert get_top(ResponseMap(values, 1), 1) == [Peak(1, 2, 1.0)]

    def test_single_maximum_at_origin(self):
        values = np.zeros((4, 4))
        values[0, 0] = 2.0
        assert [p.position for p in get_top(ResponseMap(values, 1), 1)] == [(0, 0)]

    def test_matches_full_sort(self, rng):
        values = rng.random((8, 8))
        peaks = get_top(ResponseMap(values, 1), 5)
        expected = np.argsort(-values.ravel(), kind='stable')[:5]
        assert [p.row * 8 + p.col for p in peaks] == list(expected)

    def test_ties_keep_flat_order(self):
        peaks = get_top(ResponseMap(np.ones((3, 3)), 1), 4)
        assert [p.position for p in peaks] == [(0, 0), (0, 1), (0, 2), (1, 0)]

    @pytest.mark.parametrize("k", [0, 17])
    def test_k_out_of_range(self, k):
        with pytest.raises(InvalidArgumentError):
            get_top(ResponseMap(np.zeros((4, 4)), 1), k)


class TestRemoveLowPoints:
    def _peaks(self, scores):
        return [Peak(0, i * 5, s) for i, s in enumerate(scores)]

    def test_filters_below_ratio(self):
        kept = remove_low_points(self._peaks([1.0, 0.8, 0.76, 0.7]))
        assert [p.score for p in kept] == [1.0, 0.8, 0.76]

    def test_single_peak(self):
        assert [p.score for p in remove_low_points(self._peaks([1.0]))] == [1.0]

    def test_boundary_is_strict(self):
        assert [p.score for p in remove_low_points(self._peaks([1.0, 0.75]))] == [1.0]

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            remove_low_points([])


class TestNeighbors:
    @pytest.mark.parametrize("a, b, expected", [
        ((3, 3), (5, 5), True),
        ((3, 3), (6, 3), False),
        ((4, 4), (4, 4), True),
    ])
    def test_is_neighbor(self, a, b, expected):
        assert is_neighbor(Peak(*a, 1.0), Peak(*b, 1.0)) is expected

    def test_check_neighbor(self):
        kept = [Peak(0, 0, 1.0), Peak(10, 10, 0.9)]
        assert check_neighbor(kept, Peak(11, 9, 0.8))
        assert not check_neighbor(kept, Peak(5, 5, 0.8))

    def test_merge_drops_neighbor_of_top(self):
        peaks = [Peak(2, 2, 1.0), Peak(3, 3, 0.9), Peak(10, 10, 0.85)]
        merged = merge_neighbors(peaks)
        assert [p.position for p in merged.peaks] == [(2, 2), (10, 10)]

    def test_merge_single_peak(self):
        merged = merge_neighbors([Peak(1, 1, 0.5)], level=2)
        assert len(merged) == 1 and merged.source_level == 2

    def test_merge_empty(self):
        with pytest.raises(InvalidArgumentError):
            merge_neighbors([])


class TestPeakSet:
    def test_rejects_neighbors(self):
        with pytest.raises(InvalidArgumentError):
            PeakSet((Peak(0, 0, 1.0), Peak(1, 1, 0.9)), 1)

    def test_rejects_increasing_scores(self):
        with pytest.raises(InvalidArgumentError):
            PeakSet((Peak(0, 0, 0.8), Peak(5, 5, 0.9)), 1)

    def test_rejects_low_peaks(self):
        with pytest.raises(InvalidArgumentError):
            PeakSet((Peak(0, 0, 1.0), Peak(5, 5, 0.5)), 1)


class TestComputeDistances:
    def test_three_four_five(self):
        peaks = PeakSet((Peak(0, 0, 1.0), Peak(3, 4, 0.9)), 1)
        assert compute_distances(peaks) == [5.0]

    def test_single_peak(self):
        assert compute_distances(PeakSet((Peak(0, 0, 1.0),), 1)) == []

    def test_list_order(self):
        peaks = PeakSet((Peak(0, 0, 1.0), Peak(3, 4, 0.9), Peak(6, 8, 0.8)), 1)
        assert compute_distances(peaks) == [5.0, 10.0]


class TestExtractPeaks:
    def test_single_blob(self):
        values = gaussian_map(17, [(8, 8)])
        assert len(extract_peaks(ResponseMap(values, 1), 4)) == 1

    def test_two_separated_blobs(self):
        values = gaussian_map(17, [(4, 4), (12, 12)])
        peaks = extract_peaks(ResponseMap(values, 1), 4)
        assert sorted(p.position for p in peaks.peaks) == [(4, 4), (12, 12)]

    def test_uniform_map(self):
        values = np.ones((6, 6))
        peaks = extract_peaks(ResponseMap(values, 1), 4)
        expected = brute_force_peaks(values, 4)
        assert [(p.row, p.col) for p in peaks.peaks] == [(r, c) for r, c, _ in expected]

    def test_matches_brute_force(self, rng):
        for _ in range(1000):
            n = int(rng.integers(3, 17))
            k = int(rng.integers(1, min(n * n, 12) + 1))
            values = rng.random((n, n))
            peaks = extract_peaks(ResponseMap(values, 1), k)
            expected = brute_force_peaks(values, k)
            assert [(p.row, p.col, p.score) for p in peaks.peaks] == expected
