"""Tests for importance-sampling model evaluation and pairwise comparison."""

import numpy as np
import pytest
from scipy import stats as sps
from scipy.special import logsumexp

from gamepop.evaluation import (
    EXACT_LOO_MAX_ROWS,
    K_FLAG,
    ComparisonResult,
    LooResult,
    compare_models,
    elpd_loo,
    exact_loo_pointwise,
    fit_gpd_tail,
    gpd_quantile,
    psis_smooth,
    tail_length,
)
from gamepop.evaluation import _smooth_one


class TestGpdFit:
    @pytest.mark.parametrize("k_true", [-0.3, 0.1, 0.5, 1.0])
    def test_recovers_known_shape(self, k_true, rng):
        x = sps.genpareto.rvs(c=k_true, scale=2.0, size=2000,
                              random_state=rng)
        k, sigma = fit_gpd_tail(x)
        assert k == pytest.approx(k_true, abs=0.12)
        assert sigma == pytest.approx(2.0, rel=0.2)

    def test_prior_pulls_small_samples_toward_half(self, rng):
        # with 10 points the shape estimate is shrunk noticeably toward 0.5
        x = sps.genpareto.rvs(c=0.0, scale=1.0, size=10, random_state=rng)
        k, _ = fit_gpd_tail(x)
        assert -0.3 < k < 0.6

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_gpd_tail(np.array([1.0, 2.0, 3.0, 4.0]))

    def test_negative_exceedance_rejected(self):
        with pytest.raises(ValueError):
            fit_gpd_tail(np.array([-0.1, 1.0, 2.0, 3.0, 4.0]))

    def test_degenerate_tail_rejected(self):
        with pytest.raises(ValueError):
            fit_gpd_tail(np.full(10, 2.0))

    def test_scale_positive(self, rng):
        for seed in range(5):
            x = sps.genpareto.rvs(c=0.4, scale=1.0, size=50,
                                  random_state=np.random.default_rng(seed))
            _, sigma = fit_gpd_tail(x)
            assert sigma > 0


class TestGpdQuantile:
    def test_exponential_limit(self):
        # k = 0 reduces to the exponential distribution
        p = np.array([0.1, 0.5, 0.9])
        assert np.allclose(gpd_quantile(p, 0.0, 2.0), -2.0 * np.log1p(-p))

    def test_unit_shape_closed_form(self):
        # k = 1 gives sigma * p / (1 - p)
        assert gpd_quantile(np.array([0.5]), 1.0, 2.0)[0] == pytest.approx(2.0)

    def test_matches_scipy(self):
        p = np.linspace(0.01, 0.99, 23)
        for k in (-0.4, -0.1, 0.2, 0.7, 1.3):
            ours = gpd_quantile(p, k, 1.7)
            ref = sps.genpareto.ppf(p, c=k, scale=1.7)
            assert np.allclose(ours, ref, rtol=1e-10)

    def test_endpoint_conventions(self):
        assert gpd_quantile(np.array([0.0]), 0.5, 1.0)[0] == 0.0
        assert gpd_quantile(np.array([1.0]), 0.5, 1.0)[0] == np.inf
        # negative shape has a finite upper endpoint at -sigma/k
        assert gpd_quantile(np.array([1.0]), -0.5, 1.0)[0] == pytest.approx(2.0)

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValueError):
            gpd_quantile(np.array([1.5]), 0.1, 1.0)
        with pytest.raises(ValueError):
            gpd_quantile(np.array([0.5]), 0.1, 0.0)


class TestTailLength:
    @pytest.mark.parametrize("n,expected", [
        (100, 20),     # 0.2 n binds
        (1000, 95),    # 3 sqrt(n) binds: ceil(94.868)
        (4000, 190),
        (25, 5),
    ])
    def test_values(self, n, expected):
        assert tail_length(n) == expected

    def test_never_exceeds_draw_count(self):
        for n in range(25, 500, 7):
            assert 0 < tail_length(n) < n


class TestSmoothing:
    def _pareto_lw(self, rng, n=1000, alpha=1.5):
        u = rng.uniform(size=n)
        return -np.log(u) / alpha  # log of Pareto(alpha) weights

    def test_cap_at_raw_maximum(self, rng):
        lw = self._pareto_lw(rng)
        smoothed, k = _smooth_one(lw.copy())
        assert k > 1.0 / 3.0
        assert smoothed.max() <= lw.max() + 1e-12
        assert not np.array_equal(smoothed, lw)

    def test_only_tail_entries_touched(self, rng):
        lw = self._pareto_lw(rng, n=400)
        smoothed, _ = _smooth_one(lw.copy())
        n_tail = tail_length(400)
        body = np.argsort(lw, kind="stable")[: 400 - n_tail]
        assert np.array_equal(smoothed[body], lw[body])

    def test_light_tail_reported_but_unchanged(self, rng):
        # bounded ratios fit a negative shape; weights pass through as-is
        lw = rng.uniform(0.0, 1.0, size=2000)
        smoothed, k = _smooth_one(lw.copy())
        assert k < 1.0 / 3.0
        assert np.array_equal(smoothed, lw)

    def test_too_few_draws_skip_with_nan(self, rng):
        lw = rng.normal(size=24)
        smoothed, k = _smooth_one(lw.copy())
        assert np.isnan(k)
        assert np.array_equal(smoothed, lw)

    def test_degenerate_tail_flagged(self):
        lw = np.concatenate([np.linspace(-3, 0, 80), np.full(20, 5.0)])
        smoothed, k = _smooth_one(lw.copy())
        assert k == -np.inf
        assert np.array_equal(smoothed, lw)

    def test_psis_smooth_normalizes_columns(self, rng):
        lr = rng.normal(size=(500, 8)) * 2.0
        lw, k = psis_smooth(lr)
        assert lw.shape == lr.shape
        assert k.shape == (8,)
        assert np.allclose(logsumexp(lw, axis=0), 0.0, atol=1e-10)

    def test_psis_smooth_single_vector(self, rng):
        lr = rng.normal(size=300)
        lw, k = psis_smooth(lr)
        assert lw.shape == (300,)
        assert np.isscalar(k) or k.shape == ()
        assert logsumexp(lw) == pytest.approx(0.0, abs=1e-10)

    def test_shift_invariance(self, rng):
        # self-normalized weights ignore any constant added to log ratios
        lr = rng.normal(size=600) * 3.0
        lw_a, k_a = psis_smooth(lr)
        lw_b, k_b = psis_smooth(lr + 123.4)
        assert np.allclose(lw_a, lw_b, atol=1e-10)
        assert k_a == pytest.approx(k_b, abs=1e-10)

    def test_bad_shape_rejected(self, rng):
        with pytest.raises(ValueError):
            psis_smooth(rng.normal(size=(4, 5, 6)))


class TestElpdLoo:
    def test_small_matrix_closed_form(self):
        # under 25 draws smoothing is skipped, so each column reduces to
        # log(S) - logsumexp(-ll)
        ll = np.array([[-1.0, -2.0], [-1.5, -0.5], [-0.7, -1.1], [-2.0, -0.9]])
        res = elpd_loo(ll)
        expected = np.log(4.0) - logsumexp(-ll, axis=0)
        assert np.allclose(res.pointwise, expected, atol=1e-12)
        assert res.elpd == pytest.approx(expected.sum())
        assert res.looic == pytest.approx(-2.0 * expected.sum())
        assert res.se == pytest.approx(
            np.sqrt(2 * np.var(expected, ddof=1)))
        assert np.all(np.isnan(res.pareto_k))

    def test_loo_never_beats_in_sample_lpd(self, rng):
        # leaving a row out can only lower its predictive density
        ll = rng.normal(loc=-1.0, size=(800, 30))
        res = elpd_loo(ll)
        lpd_in = logsumexp(ll, axis=0) - np.log(ll.shape[0])
        assert np.all(res.pointwise <= lpd_in + 1e-10)

    def test_shape_validation(self, rng):
        with pytest.raises(ValueError):
            elpd_loo(rng.normal(size=100))
        bad = rng.normal(size=(50, 3))
        bad[0, 0] = np.inf
        with pytest.raises(ValueError):
            elpd_loo(bad)

    def test_flagging(self):
        res = LooResult(elpd=0.0, se=1.0, looic=0.0,
                        pointwise=np.zeros(4),
                        pareto_k=np.array([0.2, 0.9, np.nan, 0.71]))
        assert list(res.flagged) == [1, 3]
        assert res.flagged_fraction == 0.5
        assert res.n_rows == 4
        assert K_FLAG == 0.7

    def test_warning_on_bad_rows(self, rng, caplog):
        lr = rng.standard_cauchy(size=(2000, 1)) * 5.0
        ll = -np.abs(lr)
        with caplog.at_level("WARNING", logger="gamepop.evaluation"):
            res = elpd_loo(ll)
        if res.flagged.size:
            assert any("unreliable" in r.message for r in caplog.records)


def _loo(pointwise):
    pw = np.asarray(pointwise, dtype=float)
    elpd = float(pw.sum())
    se = float(np.sqrt(pw.size * np.var(pw, ddof=1)))
    return LooResult(elpd=elpd, se=se, looic=-2 * elpd,
                     pointwise=pw, pareto_k=np.zeros(pw.size))


class TestCompareModels:
    def test_identical_models_tie(self):
        pw = np.array([-1.0, -2.0, -1.5])
        res = compare_models(_loo(pw), _loo(pw.copy()))
        assert res.p_a_better == 0.5
        assert res.favoured == "tied"
        assert res.delta_looic == 0.0
        assert res.se == 0.0

    def test_uniform_winner(self, rng):
        pw_b = rng.normal(size=40)
        res = compare_models(_loo(pw_b + 1.0), _loo(pw_b),
                             name_a="better", name_b="worse", seed=3)
        assert res.p_a_better == 1.0
        assert res.favoured == "better"
        assert res.delta_looic == pytest.approx(-80.0)
        assert res.ci_high < 0.0

    def test_antisymmetric(self, rng):
        pw_a = rng.normal(size=60)
        pw_b = pw_a + rng.normal(scale=0.3, size=60)
        ab = compare_models(_loo(pw_a), _loo(pw_b), seed=11, n_boot=4000)
        ba = compare_models(_loo(pw_b), _loo(pw_a), seed=11, n_boot=4000)
        assert ab.delta_looic == pytest.approx(-ba.delta_looic)
        assert ab.p_a_better + ba.p_a_better == pytest.approx(1.0, abs=0.03)

    def test_deterministic_given_seed(self, rng):
        pw_a = rng.normal(size=25)
        pw_b = rng.normal(size=25)
        r1 = compare_models(_loo(pw_a), _loo(pw_b), seed=5)
        r2 = compare_models(_loo(pw_a), _loo(pw_b), seed=5)
        assert r1 == r2

    def test_se_matches_pointwise_formula(self, rng):
        pw_a = rng.normal(size=50)
        pw_b = rng.normal(size=50)
        res = compare_models(_loo(pw_a), _loo(pw_b))
        d = -2 * (pw_a - pw_b)
        assert res.se == pytest.approx(np.sqrt(50 * np.var(d, ddof=1)))

    def test_row_count_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            compare_models(_loo(rng.normal(size=10)), _loo(rng.normal(size=11)))

    def test_bad_n_boot_rejected(self, rng):
        pw = rng.normal(size=10)
        with pytest.raises(ValueError):
            compare_models(_loo(pw), _loo(pw + 1), n_boot=0)

    def test_ci_brackets_point_estimate_for_clear_gaps(self, rng):
        pw_b = rng.normal(size=80)
        res = compare_models(_loo(pw_b + 0.5), _loo(pw_b), seed=2)
        assert res.ci_low <= res.delta_looic <= res.ci_high


class TestExactLooGuard:
    def test_refuses_large_datasets(self, small_data):
        import dataclasses
        from gamepop.models import ModelSpec
        from gamepop.sampler import SamplerConfig

        n = EXACT_LOO_MAX_ROWS + 1
        reps = int(np.ceil(n / small_data.n_rows))
        big = dataclasses.replace(
            small_data,
            X=np.tile(small_data.X, (reps, 1))[:n],
            genre_sets=(small_data.genre_sets * reps)[:n],
            y_raw=np.tile(small_data.y_raw, reps)[:n],
            y=np.tile(small_data.y, reps)[:n],
            app_ids=(small_data.app_ids * reps)[:n],
        )
        with pytest.raises(ValueError):
            exact_loo_pointwise(ModelSpec.variant("folded"), big,
                                SamplerConfig(n_chains=1, n_draws=10))
