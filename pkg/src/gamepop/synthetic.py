"""Synthetic catalog generation with known ground truth.

Games are drawn from the same generative story the regression models
assume, so fits against this data should recover the configured
coefficients.  Feature scaling inside the generator uses the configured
means, never means estimated from the generated batch; combined with
one counter-based random stream per game (keyed by the game's index)
this makes every game a pure function of (seed, index).  Growing a
batch from 500 to 1000 games reproduces the first 500 exactly.

``write_files`` emits the same catalog/history formats the ingestion
step consumes, so the full pipeline can be exercised end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .features import RATIO_FEATURES, TrainingStats, transform_row
from .ingest import MONTH_DAYS, GameRecord
from .models import genre_intercept_mean

# Alphabetically ordered so ids assigned here survive the vocabulary
# rebuild on the ingestion side, which sorts names.
GENRE_NAME_POOL = (
    "Action", "Adventure", "Casual", "Indie", "MMO", "Platformer",
    "Puzzle", "RPG", "Racing", "Simulation", "Sports", "Strategy",
)

_LANGUAGE_POOL = (
    "English", "French", "German", "Italian", "Japanese", "Korean",
    "Polish", "Portuguese", "Russian", "Spanish", "Chinese", "Turkish",
)


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground truth and size of one synthetic batch.

    ``beta`` is ordered like the design matrix columns: price, languages,
    storage, past players, day of month, day-of-year cosine, day-of-year
    sine.  ``noise_growth`` multiplies the scale once per month past the
    second, so later months are strictly harder to predict when it
    exceeds one.  Leaving ``gamma`` unset keeps the noise scale shared.
    ``sigma_gamma0`` spreads the noise intercept by genre the same way
    ``sigma_beta0`` spreads the mean intercept; zero keeps it common.
    """

    n_games: int = 200
    n_genres: int = 6
    seed: int = 0
    n_months: int = 5
    beta0_mu: float = 1.5
    sigma_beta0: float = 0.5
    beta: tuple[float, ...] = (0.15, 0.25, 0.10, 0.60, -0.02, 0.10, 0.05)
    sigma: float = 0.5
    noise_growth: float = 1.0
    gamma0: float | None = None
    gamma: tuple[float, ...] | None = None
    sigma_gamma0: float = 0.0
    price_mean: float = 12.0
    languages_mean: float = 5.0
    storage_mean_mb: float = 4096.0
    past_players_mean: float = 120.0
    release_start: date = date(2019, 1, 1)
    release_end: date = date(2023, 12, 31)

    def __post_init__(self) -> None:
        if self.n_games < 1:
            raise ValueError("n_games must be positive")
        if not 1 <= self.n_genres <= len(GENRE_NAME_POOL):
            raise ValueError(f"n_genres must be in 1..{len(GENRE_NAME_POOL)}")
        if self.n_months < 2:
            raise ValueError("need at least two months (features plus one target)")
        if len(self.beta) != 7:
            raise ValueError("beta must have 7 entries, one per design column")
        if self.sigma <= 0 or self.noise_growth <= 0:
            raise ValueError("sigma and noise_growth must be positive")
        if (self.gamma is None) != (self.gamma0 is None):
            raise ValueError("set gamma0 and gamma together or not at all")
        if self.gamma is not None and len(self.gamma) != 7:
            raise ValueError("gamma must have 7 entries, one per design column")
        if self.sigma_gamma0 < 0:
            raise ValueError("sigma_gamma0 must be non-negative")
        if self.sigma_gamma0 > 0 and self.gamma is None:
            raise ValueError("sigma_gamma0 needs gamma0 and gamma set")
        if self.release_end < self.release_start:
            raise ValueError("release window is empty")

    @property
    def heteroscedastic(self) -> bool:
        return self.gamma is not None

    def training_stats(self, target_month: int = 2) -> TrainingStats:
        """The fixed scaling the generator itself used (target mean is 1;
        only the feature means matter for the design matrix)."""
        return TrainingStats(
            feature_means={
                "price": self.price_mean,
                "n_languages": self.languages_mean,
                "storage": self.storage_mean_mb,
                "past_players": self.past_players_mean,
            },
            target_mean=1.0,
        )


@dataclass
class SyntheticData:
    """One generated batch plus everything needed to check recovery."""

    spec: SyntheticSpec
    records: list[GameRecord]
    genre_names: list[str]
    beta0_genre: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    sigma_rows: np.ndarray  # per-game base scale before monthly growth
    latents: dict[int, np.ndarray]  # month -> continuous targets pre-rounding
    gamma0_genre: np.ndarray | None = None  # set when sigma_gamma0 > 0

    def sigma_for_month(self, month: int) -> np.ndarray:
        return self.sigma_rows * self.spec.noise_growth ** (month - 2)


def _genre_pool(spec: SyntheticSpec) -> list[str]:
    return list(GENRE_NAME_POOL[: spec.n_genres])


def _draw_game(spec: SyntheticSpec, index: int, beta0_genre: np.ndarray,
               gamma0_genre: np.ndarray | None):
    """Everything about game ``index``; one private random stream per game."""
    rng = np.random.Generator(np.random.Philox(key=[spec.seed, index + 1]))

    # Draw order is part of the format: appending months or games must not
    # disturb values generated before them.
    price = round(float(rng.gamma(2.0, spec.price_mean / 2.0)), 2)
    n_languages = min(1 + int(rng.poisson(max(spec.languages_mean - 1.0, 0.0))),
                      len(_LANGUAGE_POOL))
    storage_mb = float(np.clip(
        np.rint(rng.lognormal(np.log(spec.storage_mean_mb), 0.8)), 64, 102400))
    span = (spec.release_end - spec.release_start).days
    release = spec.release_start + timedelta(days=int(rng.integers(0, span + 1)))
    n_pick = 1 + int(rng.binomial(2, 0.4))
    genre_ids = frozenset(
        int(g) for g in rng.choice(spec.n_genres, size=min(n_pick, spec.n_genres),
                                   replace=False))
    past_players = int(np.rint(rng.lognormal(np.log(spec.past_players_mean), 1.0)))

    record = GameRecord(
        app_id=f"syn{index:06d}",
        price_eur=price,
        n_languages=n_languages,
        storage_mb=storage_mb,
        release_date=release,
        genre_ids=genre_ids,
        monthly_medians={1: past_players},
    )
    x = transform_row(record, spec.training_stats())
    eta = genre_intercept_mean(beta0_genre, genre_ids) + float(np.dot(spec.beta, x))
    mu = float(np.logaddexp(0.0, eta))
    if spec.heteroscedastic:
        intercept = (spec.gamma0 if gamma0_genre is None
                     else genre_intercept_mean(gamma0_genre, genre_ids))
        sigma = float(np.exp(intercept + np.dot(spec.gamma, x)))
    else:
        sigma = spec.sigma

    latents = {}
    for month in range(2, spec.n_months + 1):
        scale = sigma * spec.noise_growth ** (month - 2)
        t = abs(mu + scale * rng.standard_normal())
        latents[month] = t
        record.monthly_medians[month] = int(np.floor(np.expm1(t) + 0.5))
    return record, eta, mu, sigma, latents


def generate(spec: SyntheticSpec) -> SyntheticData:
    """Draw a full batch; deterministic in (seed, per-game index)."""
    hyper = np.random.Generator(np.random.Philox(key=[spec.seed, 0]))
    beta0_genre = spec.beta0_mu + spec.sigma_beta0 * hyper.standard_normal(spec.n_genres)
    # draws come after beta0_genre in the same stream, so switching the
    # spread on or off never disturbs the mean-side intercepts
    gamma0_genre = None
    if spec.sigma_gamma0 > 0:
        gamma0_genre = (spec.gamma0
                        + spec.sigma_gamma0 * hyper.standard_normal(spec.n_genres))

    records: list[GameRecord] = []
    eta = np.empty(spec.n_games)
    mu = np.empty(spec.n_games)
    sigma_rows = np.empty(spec.n_games)
    latents = {m: np.empty(spec.n_games) for m in range(2, spec.n_months + 1)}
    for i in range(spec.n_games):
        rec, eta_i, mu_i, sigma_i, lat_i = _draw_game(spec, i, beta0_genre,
                                                      gamma0_genre)
        records.append(rec)
        eta[i] = eta_i
        mu[i] = mu_i
        sigma_rows[i] = sigma_i
        for month, value in lat_i.items():
            latents[month][i] = value

    return SyntheticData(
        spec=spec,
        records=records,
        genre_names=_genre_pool(spec),
        beta0_genre=beta0_genre,
        eta=eta,
        mu=mu,
        sigma_rows=sigma_rows,
        latents=latents,
        gamma0_genre=gamma0_genre,
    )


def to_model_data(data: SyntheticData, target_month: int = 2):
    """Design matrix and targets scaled exactly as the generator was.

    Passing the generator's own feature means (rather than batch means)
    keeps the configured coefficients exactly comparable to the fitted
    ones, including intercepts.
    """
    from .features import build_model_data

    stats = data.spec.training_stats(target_month)
    model_data, _ = build_model_data(
        data.records,
        target_month=target_month,
        stats=stats,
        n_genres=data.spec.n_genres,
        genre_names=data.genre_names,
    )
    return model_data


# ---------------------------------------------------------------------------
# File output in the formats the ingestion step reads
# ---------------------------------------------------------------------------

def _catalog_row(rec: GameRecord, genre_names: list[str]) -> dict:
    return {
        "app_id": rec.app_id,
        "name": f"Synthetic Game {rec.app_id[3:]}",
        "price_amount": rec.price_eur,
        "price_currency": "EUR",
        "languages": list(_LANGUAGE_POOL[: rec.n_languages]),
        "system_requirements_text": (
            f"Minimum: Storage: {int(rec.storage_mb)} MB available space"
        ),
        "release_date": rec.release_date.isoformat(),
        "genres": sorted(genre_names[i] for i in rec.genre_ids),
        "developers": ["Synthetic Studio"],
        "publishers": ["Synthetic Publishing"],
    }


def _daily_series(rec: GameRecord) -> list[list]:
    """Constant daily counts inside each month window reproduce the medians."""
    series = []
    for month, median in sorted(rec.monthly_medians.items()):
        start = MONTH_DAYS * (month - 1)
        for offset in range(start, start + MONTH_DAYS):
            day = rec.release_date + timedelta(days=offset)
            series.append([day.isoformat(), int(median)])
    return series


def write_files(data: SyntheticData, out_dir: str | Path) -> dict[str, Path]:
    """Write catalog.ndjson, history.json, and truth.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog_path = out / "catalog.ndjson"
    history_path = out / "history.json"
    truth_path = out / "truth.json"

    with open(catalog_path, "w", encoding="utf-8") as fh:
        for rec in data.records:
            fh.write(json.dumps(_catalog_row(rec, data.genre_names), sort_keys=True) + "\n")

    histories = {rec.app_id: _daily_series(rec) for rec in data.records}
    with open(history_path, "w", encoding="utf-8") as fh:
        json.dump(histories, fh, sort_keys=True)
        fh.write("\n")

    spec = data.spec
    truth = {
        "seed": spec.seed,
        "n_games": spec.n_games,
        "n_genres": spec.n_genres,
        "n_months": spec.n_months,
        "beta0_mu": spec.beta0_mu,
        "sigma_beta0": spec.sigma_beta0,
        "beta0_genre": [float(v) for v in data.beta0_genre],
        "beta": list(spec.beta),
        "sigma": spec.sigma,
        "noise_growth": spec.noise_growth,
        "gamma0": spec.gamma0,
        "gamma": None if spec.gamma is None else list(spec.gamma),
        "sigma_gamma0": spec.sigma_gamma0,
        "gamma0_genre": (None if data.gamma0_genre is None
                         else [float(v) for v in data.gamma0_genre]),
        "feature_means": {name: spec.training_stats().feature_means[name]
                          for name in RATIO_FEATURES},
        "genre_names": data.genre_names,
    }
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {"catalog": catalog_path, "history": history_path, "truth": truth_path}
