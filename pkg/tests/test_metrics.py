from statistics import fmean

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avlocbench.errors import MetricError
from avlocbench.manifest import AudioType
from avlocbench.metrics import (
    SampleMetrics,
    auc_negative,
    auc_positive,
    ciou_sample,
    cross_map_suite,
    dataset_ciou,
    dataset_metrics_from_samples,
    f_auc,
    f_loc,
    iou_between_maps,
    pia_sample,
    success_ratio,
)
from avlocbench.simmap import ConsensusMask, LocalizationMap


def loc(rows):
    return LocalizationMap(np.asarray(rows, dtype=bool))


def gt(rows, min_agreement=1):
    return ConsensusMask(np.asarray(rows, dtype=bool), min_agreement)


unit_lists = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=64)


class TestCiou:
    def test_identity(self):
        m = [[1, 0], [0, 1]]
        assert ciou_sample(loc(m), gt(m)) == 1.0

    def test_half_overlap_hand_counted(self):
        pred = loc([[1, 0], [0, 0]])
        truth = gt([[1, 1], [0, 0]])
        assert ciou_sample(pred, truth) == 0.5  # I=1, U=2

    def test_empty_pred_zero(self):
        assert ciou_sample(loc([[0, 0], [0, 0]]), gt([[1, 0], [0, 0]])) == 0.0

    def test_empty_gt_rejected(self):
        with pytest.raises(MetricError):
            ciou_sample(loc([[1]]), gt([[0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(MetricError):
            ciou_sample(loc([[1, 0]]), gt([[1], [0]]))

    def test_one_iff_equal_as_sets(self):
        pred = loc([[1, 1], [0, 0]])
        assert ciou_sample(pred, gt([[1, 1], [0, 0]])) == 1.0
        assert ciou_sample(pred, gt([[1, 1], [1, 0]])) < 1.0


class TestPia:
    def test_examples(self):
        assert pia_sample(loc([[0, 0], [0, 0]])) == 0.0
        assert pia_sample(loc([[1, 1], [1, 1]])) == 1.0
        assert pia_sample(loc([[1, 0], [0, 0]])) == 0.25


class TestSuccessRatio:
    def test_examples(self):
        assert success_ratio([0.4, 0.6], 0.5, "ge") == 0.5
        assert success_ratio([0.3, 0.9, 0.1], 0.0, "ge") == 1.0
        assert success_ratio([0.0, 0.0, 0.02], 0.01, "le") == pytest.approx(2 / 3)

    def test_empty_rejected(self):
        with pytest.raises(MetricError):
            success_ratio([], 0.5, "ge")


class TestAuc:
    def test_grid_sum_examples(self):
        # 50 grid points at 2/3 plus 50 at 1/3
        assert auc_positive([0.0, 0.5, 1.0]) == pytest.approx(0.5, abs=1e-12)
        assert auc_positive([0.0, 0.0]) == 0.0
        assert auc_positive([1.0, 1.0]) == 1.0

    def test_negative_examples(self):
        assert auc_negative([0.0, 0.0, 0.0]) == 1.0
        assert auc_negative([0.0, 0.0, 0.02]) == pytest.approx((2 / 3 + 99) / 100, abs=1e-12)
        assert auc_negative([1.0, 1.0]) == pytest.approx(0.01)

    @given(unit_lists)
    @settings(max_examples=200, deadline=None)
    def test_positive_auc_tracks_mean(self, values):
        assert abs(auc_positive(values) - fmean(values)) <= 0.01 + 1e-12

    @given(unit_lists)
    @settings(max_examples=200, deadline=None)
    def test_negative_auc_tracks_one_minus_mean(self, values):
        assert abs(auc_negative(values) - (1.0 - fmean(values))) <= 0.01 + 1e-12


class TestDatasetCiou:
    def test_examples(self):
        assert dataset_ciou([0.4, 0.6]) == 0.5
        assert dataset_ciou([0.5, 0.7, 0.9]) == 1.0

    def test_distinct_statistic_from_auc(self):
        values = [0.0, 0.5, 1.0]
        assert dataset_ciou(values) == pytest.approx(2 / 3)
        assert auc_positive(values) == pytest.approx(0.5, abs=1e-12)


class TestGlobalF:
    def test_published_inputs_reproduce_global_columns(self):
        assert f_loc(0.1867, fmean([0.0052, 0.0045, 0.0198])) == pytest.approx(0.3141, abs=5e-4)
        assert f_loc(0.1828, fmean([0.0084, 0.0084, 0.0473])) == pytest.approx(0.3081, abs=5e-4)
        assert f_auc(0.1957, fmean([0.9942, 0.9952, 0.9793])) == pytest.approx(0.3268, abs=5e-4)
        assert f_auc(0.0445, fmean([0.9839, 0.9991, 0.9939])) == pytest.approx(0.0852, abs=5e-4)

    def test_edge_values(self):
        assert f_loc(1.0, 0.0) == 1.0
        assert f_auc(0.0, 0.77) == 0.0
        assert f_auc(0.0, 0.0) == 0.0  # 0/0 defined as worst case

    # metric arguments are success ratios, never denormals
    metric_values = st.one_of(st.just(0.0), st.floats(1e-9, 1.0))

    @given(metric_values, metric_values)
    @settings(max_examples=200, deadline=None)
    def test_harmonic_mean_bounds(self, a, b):
        value = f_auc(a, b)
        assert 0.0 <= value <= 1.0
        if max(a, b) > 0:
            assert value <= min(a, b) * 2 / (1 + min(a, b) / max(a, b)) + 1e-12
        assert (value == 0.0) == (a == 0.0 or b == 0.0)

    @given(st.integers(0, 64), st.integers(0, 64))
    @settings(max_examples=200, deadline=None)
    def test_harmonic_mean_extremes_on_exact_grid(self, na, nb):
        a, b = na / 64, nb / 64
        value = f_auc(a, b)
        assert (value == 0.0) == (a == 0.0 or b == 0.0)
        assert (value == 1.0) == (a == 1.0 and b == 1.0)


class TestIouBetweenMaps:
    def test_both_empty_is_one(self):
        empty = loc([[0, 0], [0, 0]])
        assert iou_between_maps(empty, empty) == 1.0

    def test_identical_nonempty(self):
        m = loc([[1, 0], [1, 1]])
        assert iou_between_maps(m, m) == 1.0

    def test_disjoint(self):
        assert iou_between_maps(loc([[1, 0]]), loc([[0, 1]])) == 0.0

    def test_one_empty_one_not(self):
        assert iou_between_maps(loc([[0, 0]]), loc([[0, 1]])) == 0.0

    @given(st.integers(0, 2**9 - 1), st.integers(0, 2**9 - 1))
    @settings(max_examples=120, deadline=None)
    def test_symmetric(self, bits_a, bits_b):
        a = loc(np.array([(bits_a >> i) & 1 for i in range(9)], dtype=bool).reshape(3, 3))
        b = loc(np.array([(bits_b >> i) & 1 for i in range(9)], dtype=bool).reshape(3, 3))
        assert iou_between_maps(a, b) == iou_between_maps(b, a)


class TestCrossSuite:
    def test_ideal_model(self):
        pos = loc([[1, 0], [0, 0]])
        empty = loc([[0, 0], [0, 0]])
        suite = cross_map_suite(pos, empty, empty, empty)
        assert suite.as_tuple() == (0.0, 0.0, 0.0, 1.0)

    def test_constant_model(self):
        full = loc([[1, 1], [1, 1]])
        suite = cross_map_suite(full, full, full, full)
        assert suite.as_tuple() == (1.0, 1.0, 1.0, 1.0)

    def test_hand_built_masks_match_counting_oracle(self):
        maps = {
            "pos": loc([[1, 1, 0], [0, 1, 0], [0, 0, 0]]),
            "sil": loc([[1, 0, 0], [0, 0, 0], [0, 0, 1]]),
            "noi": loc([[0, 1, 1], [0, 1, 0], [0, 0, 0]]),
            "off": loc([[0, 0, 0], [0, 0, 0], [0, 0, 0]]),
        }

        def oracle(a, b):
            inter = sum(
                1 for r in range(3) for c in range(3) if a.mask[r][c] and b.mask[r][c]
            )
            union = sum(
                1 for r in range(3) for c in range(3) if a.mask[r][c] or b.mask[r][c]
            )
            return 1.0 if union == 0 else inter / union

        suite = cross_map_suite(maps["pos"], maps["sil"], maps["noi"], maps["off"])
        assert suite.pos_silence == oracle(maps["pos"], maps["sil"])
        assert suite.pos_noise == oracle(maps["pos"], maps["noi"])
        assert suite.pos_offscreen == oracle(maps["pos"], maps["off"])
        expected_neg = (
            oracle(maps["sil"], maps["noi"])
            + oracle(maps["sil"], maps["off"])
            + oracle(maps["noi"], maps["off"])
        ) / 3
        assert suite.neg_neg == pytest.approx(expected_neg)


class TestDatasetReduction:
    @staticmethod
    def _records(n=6):
        records = []
        for i in range(n):
            records.append(
                SampleMetrics(
                    sample_id=f"s{i}",
                    audio_type=AudioType.POSITIVE,
                    max_sim=0.9,
                    pia=0.2,
                    ciou_universal=i / (n - 1),
                    ciou_adaptive=1.0,
                )
            )
            for j, audio_type in enumerate((AudioType.SILENCE, AudioType.NOISE, AudioType.OFFSCREEN)):
                records.append(
                    SampleMetrics(
                        sample_id=f"s{i}",
                        audio_type=audio_type,
                        max_sim=0.1,
                        pia=(i + j) % 3 * 0.01,
                    )
                )
        return records

    def test_matches_directly_computed_statistics(self):
        records = self._records()
        metrics = dataset_metrics_from_samples(records)
        cious = [r.ciou_universal for r in records if r.audio_type is AudioType.POSITIVE]
        assert metrics.ciou_at_half == dataset_ciou(cious)
        assert metrics.auc == auc_positive(cious)
        assert metrics.ciou_adap_at_half == 1.0
        sil_pias = [r.pia for r in records if r.audio_type is AudioType.SILENCE]
        assert metrics.silence.mean_pia == pytest.approx(fmean(sil_pias))
        assert metrics.silence.auc_n == auc_negative(sil_pias)
        mean_pia = fmean(
            [metrics.silence.mean_pia, metrics.noise.mean_pia, metrics.offscreen.mean_pia]
        )
        assert metrics.f_loc == f_loc(metrics.ciou_at_half, mean_pia)

    def test_auc_n_close_to_one_minus_mean_pia(self):
        metrics = dataset_metrics_from_samples(self._records())
        for negative in (metrics.silence, metrics.noise, metrics.offscreen):
            assert abs(negative.auc_n - (1 - negative.mean_pia)) <= 0.01

    def test_permutation_invariant(self):
        records = self._records()
        shuffled = list(records)
        rng = np.random.RandomState(3)
        rng.shuffle(shuffled)
        assert dataset_metrics_from_samples(records) == dataset_metrics_from_samples(shuffled)

    def test_missing_positive_rows_rejected(self):
        records = [r for r in self._records() if r.audio_type is not AudioType.POSITIVE]
        with pytest.raises(MetricError):
            dataset_metrics_from_samples(records)
