"""Tests for the synthetic batch generator and its file round trip."""

import numpy as np
import pytest
from scipy import stats as sps

from gamepop.features import transform_row
from gamepop.ingest import ingest_catalog
from gamepop.models import genre_intercept_mean
from gamepop.synthetic import (
    GENRE_NAME_POOL,
    SyntheticData,
    SyntheticSpec,
    generate,
    to_model_data,
    write_files,
)


class TestSpecValidation:
    @pytest.mark.parametrize("kw", [
        dict(n_games=0),
        dict(n_genres=0),
        dict(n_genres=13),
        dict(n_months=1),
        dict(beta=(1.0, 2.0)),
        dict(sigma=0.0),
        dict(noise_growth=0.0),
        dict(gamma0=0.1),                       # gamma missing
        dict(gamma=(0.0,) * 7),                 # gamma0 missing
        dict(gamma0=0.1, gamma=(0.0,) * 3),     # wrong length
    ])
    def test_bad_specs_rejected(self, kw):
        with pytest.raises(ValueError):
            SyntheticSpec(**kw)

    def test_heteroscedastic_flag(self):
        assert not SyntheticSpec().heteroscedastic
        assert SyntheticSpec(gamma0=0.0, gamma=(0.1,) * 7).heteroscedastic

    def test_genre_pool_is_sorted(self):
        # genre ids assigned by the vocabulary builder are alphabetical;
        # a sorted pool keeps generated ids identical after re-ingestion
        assert list(GENRE_NAME_POOL) == sorted(GENRE_NAME_POOL)


class TestDeterminism:
    def test_same_seed_same_batch(self):
        a = generate(SyntheticSpec(n_games=30, seed=3))
        b = generate(SyntheticSpec(n_games=30, seed=3))
        assert a.records == b.records
        assert np.array_equal(a.beta0_genre, b.beta0_genre)
        assert np.array_equal(a.eta, b.eta)

    def test_different_seed_different_batch(self):
        a = generate(SyntheticSpec(n_games=30, seed=3))
        b = generate(SyntheticSpec(n_games=30, seed=4))
        assert a.records != b.records

    def test_growing_the_batch_preserves_early_games(self):
        # per-game random streams: the first 30 games of a 60-game batch
        # are bit-identical to the 30-game batch
        small = generate(SyntheticSpec(n_games=30, seed=9))
        large = generate(SyntheticSpec(n_games=60, seed=9))
        assert large.records[:30] == small.records
        assert np.array_equal(large.eta[:30], small.eta)

    def test_adding_months_preserves_early_months(self):
        short = generate(SyntheticSpec(n_games=20, seed=2, n_months=3))
        long = generate(SyntheticSpec(n_games=20, seed=2, n_months=5))
        for rec_s, rec_l in zip(short.records, long.records):
            for month in (1, 2, 3):
                assert rec_s.monthly_medians[month] == rec_l.monthly_medians[month]


@pytest.fixture(scope="module")
def batch():
    return generate(SyntheticSpec(n_games=400, n_genres=5, seed=17))


class TestGeneratedValues:

    def test_feature_ranges(self, batch):
        for rec in batch.records:
            assert rec.price_eur >= 0.0
            assert rec.price_eur == round(rec.price_eur, 2)
            assert 1 <= rec.n_languages <= 12
            assert 64 <= rec.storage_mb <= 102400
            assert rec.storage_mb == int(rec.storage_mb)
            assert 1 <= len(rec.genre_ids) <= 3
            assert all(0 <= g < 5 for g in rec.genre_ids)
            spec = batch.spec
            assert spec.release_start <= rec.release_date <= spec.release_end

    def test_eta_matches_construction(self, batch):
        stats = batch.spec.training_stats()
        for i in (0, 57, 200, 399):
            rec = batch.records[i]
            x = transform_row(rec, stats)
            intercept = genre_intercept_mean(batch.beta0_genre, rec.genre_ids)
            eta = intercept + float(np.dot(batch.spec.beta, x))
            assert batch.eta[i] == pytest.approx(eta, abs=1e-12)
            assert batch.mu[i] == pytest.approx(np.logaddexp(0.0, eta), abs=1e-12)

    def test_counts_are_rounded_latents(self, batch):
        for month in (2, 3, 4, 5):
            t = batch.latents[month]
            counts = np.array([r.monthly_medians[month] for r in batch.records])
            assert np.array_equal(counts, np.floor(np.expm1(t) + 0.5).astype(int))
            assert np.all(counts >= 0)

    def test_latent_residuals_look_folded_normal(self, batch):
        # |t - mu| residuals against the half-normal they should follow
        resid = (batch.latents[2] - batch.mu) / batch.sigma_rows
        # t = |mu + sigma z| so where t > 0 and mu large, resid ~ N(0,1)
        _, p = sps.kstest(resid, "norm")
        assert p > 0.001

    def test_hyperparameters_recovered_in_large_sample(self):
        spec = SyntheticSpec(n_games=1, n_genres=12, seed=0)
        draws = np.concatenate([
            generate(SyntheticSpec(n_games=1, n_genres=12, seed=s)).beta0_genre
            for s in range(60)
        ])
        assert draws.mean() == pytest.approx(spec.beta0_mu, abs=0.05)
        assert draws.std() == pytest.approx(spec.sigma_beta0, abs=0.05)

    def test_noise_growth_scales_later_months(self):
        spec = SyntheticSpec(n_games=300, seed=1, noise_growth=1.5)
        batch = generate(spec)
        assert np.allclose(batch.sigma_for_month(2), batch.sigma_rows)
        assert np.allclose(batch.sigma_for_month(4), batch.sigma_rows * 2.25)
        # dispersion of latents around mu grows month over month
        spread = [np.std(batch.latents[m] - batch.mu) for m in (2, 3, 4, 5)]
        assert spread == sorted(spread)

    def test_heteroscedastic_sigma_per_row(self):
        spec = SyntheticSpec(n_games=50, seed=6, gamma0=-1.0,
                             gamma=(0.3, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0))
        batch = generate(spec)
        stats = spec.training_stats()
        for i in (0, 25, 49):
            x = transform_row(batch.records[i], stats)
            expected = np.exp(-1.0 + np.dot(spec.gamma, x))
            assert batch.sigma_rows[i] == pytest.approx(expected, abs=1e-12)


class TestToModelData:
    def test_uses_generator_scaling(self, small_batch):
        data = to_model_data(small_batch, target_month=2)
        stats = small_batch.spec.training_stats()
        assert data.stats == stats
        # row zero built by hand
        x0 = transform_row(small_batch.records[0], stats)
        assert np.allclose(data.X[0], x0)

    def test_genre_vocabulary_passed_through(self, small_batch):
        data = to_model_data(small_batch, target_month=2)
        assert data.genre_names == small_batch.genre_names
        assert data.n_genres == small_batch.spec.n_genres

    def test_later_target_month(self, small_batch):
        data = to_model_data(small_batch, target_month=4)
        counts = np.array([r.monthly_medians[4] for r in small_batch.records])
        assert np.array_equal(data.y_raw, counts)


class TestFileRoundTrip:
    def test_ingest_recovers_generated_records(self, tmp_path, small_batch):
        paths = write_files(small_batch, tmp_path)
        assert set(paths) == {"catalog", "history", "truth"}
        result = ingest_catalog(paths["catalog"], paths["history"])
        assert [r.reason for r in result.rejections] == []
        assert result.genre_names == small_batch.genre_names
        by_id = {r.app_id: r for r in result.records}
        assert len(by_id) == len(small_batch.records)
        for rec in small_batch.records:
            got = by_id[rec.app_id]
            assert got == rec

    def test_truth_file_contents(self, tmp_path, small_batch):
        import json
        paths = write_files(small_batch, tmp_path)
        truth = json.loads(paths["truth"].read_text())
        assert truth["beta"] == list(small_batch.spec.beta)
        assert truth["beta0_genre"] == pytest.approx(list(small_batch.beta0_genre))
        assert truth["genre_names"] == small_batch.genre_names
        assert truth["seed"] == small_batch.spec.seed

    def test_write_is_idempotent(self, tmp_path, small_batch):
        paths1 = write_files(small_batch, tmp_path / "a")
        paths2 = write_files(small_batch, tmp_path / "b")
        for key in paths1:
            assert paths1[key].read_bytes() == paths2[key].read_bytes()
