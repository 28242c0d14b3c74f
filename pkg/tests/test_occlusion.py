import numpy as np
import pytest

from occlusion_tracker.config import Criterion, OcclusionConfig
from occlusion_tracker.errors import InvalidArgumentError, SpecValidationError
from occlusion_tracker.heatmap import Peak, PeakSet
from occlusion_tracker.occlusion import aggregate_distance, composite_index, judge, level_distance


def single(level=1):
    return PeakSet((Peak(8, 8, 1.0),), level)


def with_interferer(distance_cols, level=1):
    return PeakSet((Peak(8, 0, 1.0), Peak(8, distance_cols, 0.9)), level)


def test_level_distance_minimum():
    peaks = PeakSet((Peak(0, 0, 1.0), Peak(0, 3, 0.9), Peak(4, 0, 0.8)), 1)
    assert level_distance(peaks) == pytest.approx(3.0)


def test_level_distance_without_interferer():
    assert level_distance(single()) is None


class TestAggregateDistance:
    def test_equal_levels(self):
        assert aggregate_distance(4.0, 4.0, 4.0, OcclusionConfig()) == pytest.approx(4.0)

    def test_single_present_level_renormalized(self):
        assert aggregate_distance(2.0, None, None, OcclusionConfig()) == pytest.approx(2.0)

    def test_weighted_sum(self):
        cfg = OcclusionConfig(level_weights=(0.2, 0.5, 0.3))
        assert aggregate_distance(3.0, 5.0, 4.0, cfg) == pytest.approx(4.3)

    def test_all_absent(self):
        assert aggregate_distance(None, None, None, OcclusionConfig()) is None

    def test_zero_weight_levels_fall_back_to_mean(self):
        cfg = OcclusionConfig(level_weights=(1.0, 0.0, 0.0))
        assert aggregate_distance(None, 2.0, 4.0, cfg) == pytest.approx(3.0)


class TestCompositeIndex:
    def test_both_terms_at_norm(self):
        assert composite_index(0.95, 5.5, OcclusionConfig(mix_weight=0.8)) == pytest.approx(1.0)

    def test_zero(self):
        assert composite_index(0.0, 0.0, OcclusionConfig()) == 0.0

    def test_defaults(self):
        expected = 0.8 * (0.85 / 0.95) + 0.2 * (3.25 / 5.5)
        assert composite_index(0.85, 3.25, OcclusionConfig(mix_weight=0.8)) == pytest.approx(expected)
        assert expected == pytest.approx(0.8340, abs=1e-4)

    def test_negative_distance(self):
        with pytest.raises(InvalidArgumentError):
            composite_index(0.5, -1.0, OcclusionConfig())


class TestJudge:
    def test_composite_not_occluded(self):
        cfg = OcclusionConfig(mix_weight=0.8, epsilon_threshold=0.85)
        peaks = [with_interferer(5.5, level) for level in (1, 2, 3)]
        verdict = judge(peaks, 0.95, cfg)
        assert verdict.dis == pytest.approx(5.5)
        assert verdict.epsilon == pytest.approx(1.0)
        assert not verdict.occluded

    def test_composite_occluded_by_close_interferer(self):
        peaks = [with_interferer(3, level) for level in (1, 2, 3)]
        verdict = judge(peaks, 0.7, OcclusionConfig())
        assert verdict.occluded
        assert verdict.per_level_min_dist == (3.0, 3.0, 3.0)

    def test_score_criterion(self):
        cfg = OcclusionConfig(score_threshold=0.85, criterion=Criterion.SCORE)
        assert judge([single(1), single(2), single(3)], 0.5, cfg).occluded

    def test_distance_criterion_without_interferer(self):
        cfg = OcclusionConfig(distance_threshold=3.25)
        verdict = judge([single(1), single(2), single(3)], 0.2, cfg, Criterion.DISTANCE)
        assert verdict.dis is None
        assert not verdict.occluded

    def test_distance_criterion_with_close_interferer(self):
        peaks = [with_interferer(3, level) for level in (1, 2, 3)]
        assert judge(peaks, 0.99, OcclusionConfig(distance_threshold=3.25), Criterion.DISTANCE).occluded

    def test_absent_distance_uses_score_term(self):
        verdict = judge([single(1), single(2), single(3)], 0.76, OcclusionConfig())
        assert verdict.epsilon == pytest.approx(0.76 / 0.95)
        assert verdict.occluded

    def test_zero_threshold_disables_composite(self):
        peaks = [with_interferer(3, level) for level in (1, 2, 3)]
        assert not judge(peaks, 0.0, OcclusionConfig(epsilon_threshold=0.0)).occluded

    @pytest.mark.parametrize("score", [-0.1, 1.1])
    def test_invalid_score(self, score):
        with pytest.raises(InvalidArgumentError):
            judge([single(1), single(2), single(3)], score, OcclusionConfig())

    def test_needs_three_levels(self):
        with pytest.raises(InvalidArgumentError):
            judge([single(1), single(2)], 0.5, OcclusionConfig())

    def test_verdict_row(self):
        verdict = judge([single(1), single(2), single(3)], 0.9, OcclusionConfig())
        row = verdict.to_row(7)
        assert row['frame'] == 7 and row['occluded'] in (0, 1)


def test_config_rejects_bad_weights():
    with pytest.raises(SpecValidationError):
        OcclusionConfig(level_weights=(0.5, 0.5, 0.5))


class TestCompositeProperties:
    @pytest.mark.parametrize("mix_weight", [0.2, 0.5, 0.8])
    def test_monotone_over_grid(self, mix_weight):
        cfg = OcclusionConfig(mix_weight=mix_weight)
        scores, distances = np.linspace(0.0, 1.0, 100), np.linspace(0.0, 10.0, 100)
        grid = np.array([[composite_index(s, d, cfg) for d in distances] for s in scores])
        assert np.all(np.diff(grid, axis=0) >= 0.0)
        assert np.all(np.diff(grid, axis=1) >= 0.0)

    def test_full_mix_weight_orders_by_score(self, rng):
        cfg = OcclusionConfig(mix_weight=1.0)
        scores = rng.uniform(0.0, 1.0, size=50)
        distances = rng.integers(1, 9, size=50)
        epsilons = [judge([with_interferer(int(d), level) for level in (1, 2, 3)], s, cfg).epsilon
                    for s, d in zip(scores, distances)]
        assert list(np.argsort(epsilons, kind='stable')) == list(np.argsort(scores, kind='stable'))

    @pytest.mark.parametrize("factor", [0.1, 0.5, 0.9])
    def test_verdict_ignores_peak_magnitudes(self, factor):
        cfg = OcclusionConfig()
        for distance in range(1, 9):
            peaks = [with_interferer(distance, level) for level in (1, 2, 3)]
            scaled = [PeakSet(tuple(Peak(p.row, p.col, p.score * factor) for p in ps.peaks), ps.source_level)
                      for ps in peaks]
            for score in (0.3, 0.7, 0.95):
                a, b = judge(peaks, score, cfg), judge(scaled, score, cfg)
                assert (a.occluded, a.dis) == (b.occluded, b.dis)
                assert a.epsilon == pytest.approx(b.epsilon)
