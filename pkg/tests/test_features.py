"""Tests for the feature mapping between catalog records and model matrices."""

import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamepop.features import (
    COLUMN_NAMES,
    RATIO_FEATURES,
    TrainingStats,
    build_model_data,
    compute_training_stats,
    cyclic_encode,
    inverse_transform,
    load_stats,
    log_ratio_transform,
    save_stats,
    temporal_features,
    transform_row,
    transform_target,
)
from gamepop.ingest import GameRecord


# Frozen from a 50-digit mpmath evaluation of log((1 + x) / mean).
LOG_RATIO_3M_OVER_1K = 8.006367900983524    # x = 3_000_000, mean = 1000
LOG_RATIO_0_OVER_1K = -6.907755278982137    # x = 0 gives log(1/1000)


def _record(**kw):
    base = dict(
        app_id="g",
        price_eur=12.0,
        n_languages=3,
        storage_mb=2048.0,
        release_date=date(2021, 6, 15),
        genre_ids=frozenset({0}),
        monthly_medians={1: 40, 2: 25},
    )
    base.update(kw)
    return GameRecord(**base)


def _stats(**kw):
    means = dict(price=10.0, n_languages=4.0, storage=1024.0, past_players=50.0)
    means.update(kw.pop("means", {}))
    return TrainingStats(feature_means=means, target_mean=kw.pop("target_mean", 20.0))


class TestLogRatioTransform:
    def test_frozen_values(self):
        assert log_ratio_transform(3_000_000.0, 1000.0) == pytest.approx(
            LOG_RATIO_3M_OVER_1K, abs=1e-12)
        assert log_ratio_transform(0.0, 1000.0) == pytest.approx(
            LOG_RATIO_0_OVER_1K, abs=1e-12)

    def test_zero_is_finite(self):
        assert math.isfinite(log_ratio_transform(0.0, 7.0))

    def test_identity_point(self):
        # 1 + x equal to the mean lands exactly on zero
        assert log_ratio_transform(499.0, 500.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_ratio_transform(-1.0, 10.0)
        with pytest.raises(ValueError):
            log_ratio_transform(1.0, 0.0)

    @given(st.floats(0.0, 1e6), st.floats(0.0, 1e6), st.floats(0.5, 1e4))
    def test_monotone_in_x(self, a, b, mean):
        if a < b:
            assert log_ratio_transform(a, mean) < log_ratio_transform(b, mean)

    @given(st.floats(0.0, 3e6))
    def test_compresses_large_values(self, x):
        # a 3-million-player outlier maps to single digits
        assert abs(log_ratio_transform(x, 1000.0)) < 16.0


class TestTargetTransform:
    def test_round_trip(self):
        for y in (0, 1, 7, 120, 3_000_000):
            assert inverse_transform(transform_target(y)) == pytest.approx(
                y, rel=1e-12, abs=1e-12)

    def test_zero(self):
        assert transform_target(0.0) == 0.0
        assert inverse_transform(0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            transform_target(-1.0)
        with pytest.raises(ValueError):
            inverse_transform(-0.5)


class TestCyclicEncode:
    def test_endpoints(self):
        assert cyclic_encode(0.0) == (0.0, 1.0)
        sin1, cos1 = cyclic_encode(1.0)
        assert sin1 == pytest.approx(0.0, abs=1e-12)
        assert cos1 == pytest.approx(1.0, abs=1e-12)

    def test_quarter_turn(self):
        sin_q, cos_q = cyclic_encode(0.25)
        assert sin_q == pytest.approx(1.0, abs=1e-15)
        assert cos_q == pytest.approx(0.0, abs=1e-15)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            cyclic_encode(-0.01)
        with pytest.raises(ValueError):
            cyclic_encode(1.01)

    @given(st.floats(0.0, 1.0))
    def test_unit_circle(self, x):
        sin_c, cos_c = cyclic_encode(x)
        assert sin_c * sin_c + cos_c * cos_c == pytest.approx(1.0, abs=1e-12)


class TestTemporalFeatures:
    def test_january_first(self):
        year, scaled, dom = temporal_features(date(2021, 1, 1))
        assert (year, scaled, dom) == (2021, 0.0, 1)

    def test_day_of_year_counts_from_one(self):
        _, scaled, _ = temporal_features(date(2021, 2, 1))
        assert scaled == pytest.approx(31 / 365)

    def test_leap_year_uses_366(self):
        _, scaled, _ = temporal_features(date(2020, 12, 31))
        assert scaled == pytest.approx(365 / 366)
        _, scaled_ny, _ = temporal_features(date(2021, 12, 31))
        assert scaled_ny == pytest.approx(364 / 365)

    def test_century_rule(self):
        # 2100 is not a leap year; 2000 was
        _, scaled, _ = temporal_features(date(2100, 3, 1))
        assert scaled == pytest.approx((31 + 28 + 1 - 1) / 365)
        _, scaled2k, _ = temporal_features(date(2000, 3, 1))
        assert scaled2k == pytest.approx((31 + 29 + 1 - 1) / 366)

    def test_day_of_month_raw(self):
        assert temporal_features(date(2022, 8, 31))[2] == 31


class TestTrainingStats:
    def test_missing_feature_rejected(self):
        with pytest.raises(ValueError):
            TrainingStats(feature_means={"price": 1.0}, target_mean=5.0)

    def test_nonpositive_mean_rejected(self):
        means = dict(price=0.0, n_languages=4.0, storage=1.0, past_players=1.0)
        with pytest.raises(ValueError):
            TrainingStats(feature_means=means, target_mean=5.0)

    def test_computed_means_are_plain_averages(self):
        recs = [
            _record(app_id="a", price_eur=10.0, monthly_medians={1: 10, 2: 4}),
            _record(app_id="b", price_eur=20.0, monthly_medians={1: 30, 2: 8}),
        ]
        stats = compute_training_stats(recs, target_month=2)
        assert stats.feature_means["price"] == 15.0
        assert stats.feature_means["past_players"] == 20.0
        assert stats.target_mean == 6.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_training_stats([], target_month=2)

    def test_save_load_round_trip(self, tmp_path):
        stats = _stats()
        path = tmp_path / "stats.json"
        save_stats(stats, path)
        assert load_stats(path) == stats


class TestTransformRow:
    def test_column_order_and_values(self):
        stats = _stats()
        rec = _record()
        x = transform_row(rec, stats)
        assert x.shape == (len(COLUMN_NAMES),)
        assert x[COLUMN_NAMES.index("price")] == pytest.approx(
            log_ratio_transform(12.0, 10.0))
        assert x[COLUMN_NAMES.index("storage")] == pytest.approx(
            log_ratio_transform(2048.0, 1024.0))
        assert x[COLUMN_NAMES.index("day_of_month")] == 15.0
        _, scaled, _ = temporal_features(rec.release_date)
        sin_c, cos_c = cyclic_encode(scaled)
        assert x[COLUMN_NAMES.index("day_of_year_cos")] == cos_c
        assert x[COLUMN_NAMES.index("day_of_year_sin")] == sin_c

    def test_past_players_reads_month_one(self):
        stats = _stats()
        a = transform_row(_record(monthly_medians={1: 40, 2: 25}), stats)
        b = transform_row(_record(monthly_medians={1: 80, 2: 25}), stats)
        i = COLUMN_NAMES.index("past_players")
        assert a[i] != b[i]
        mask = np.arange(len(COLUMN_NAMES)) != i
        assert np.array_equal(a[mask], b[mask])

    def test_ratio_features_lead(self):
        assert COLUMN_NAMES[: len(RATIO_FEATURES)] == RATIO_FEATURES


class TestBuildModelData:
    def test_shapes_and_names(self, small_data):
        n = len(small_data.app_ids)
        assert small_data.X.shape == (n, len(COLUMN_NAMES))
        assert small_data.y_raw.shape == (n,)
        assert small_data.feature_names == COLUMN_NAMES
        assert len(small_data.genre_sets) == n
        assert np.array_equal(small_data.y, np.log1p(small_data.y_raw.astype(float)))

    def test_rows_without_target_month_dropped(self):
        recs = [
            _record(app_id="a"),
            _record(app_id="b", monthly_medians={1: 9}),
        ]
        data, _ = build_model_data(recs, target_month=2)
        assert data.app_ids == ["a"]

    def test_month_out_of_range_rejected(self):
        for month in (0, 1, 6):
            with pytest.raises(ValueError):
                build_model_data([_record()], target_month=month)

    def test_empty_after_filter_rejected(self):
        recs = [_record(monthly_medians={1: 5})]
        with pytest.raises(ValueError):
            build_model_data(recs, target_month=2)

    def test_stats_computed_from_usable_rows_only(self):
        recs = [
            _record(app_id="a", price_eur=10.0),
            _record(app_id="b", price_eur=99.0, monthly_medians={1: 5}),
        ]
        data, stats = build_model_data(recs, target_month=2)
        assert stats.feature_means["price"] == 10.0
        assert data.stats is stats

    def test_passed_stats_reused_verbatim(self):
        stats = _stats()
        data, out = build_model_data([_record()], target_month=2, stats=stats)
        assert out is stats
        assert data.X[0, 0] == pytest.approx(log_ratio_transform(12.0, 10.0))

    def test_year_indicators_optional(self):
        recs = [
            _record(app_id="a", release_date=date(2020, 3, 1)),
            _record(app_id="b", release_date=date(2021, 3, 1)),
        ]
        data, _ = build_model_data(recs, target_month=2, include_year_indicators=True)
        assert data.feature_names[-2:] == ("year_2020", "year_2021")
        assert np.array_equal(data.X[:, -2:], np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_n_genres_inferred_or_given(self):
        recs = [_record(genre_ids=frozenset({0, 3}))]
        data, _ = build_model_data(recs, target_month=2)
        assert data.n_genres == 4
        data2, _ = build_model_data(recs, target_month=2, n_genres=9)
        assert data2.n_genres == 9
