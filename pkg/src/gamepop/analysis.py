"""Interpretation of fitted posteriors and of the catalog itself.

Everything here reads draws produced by the sampler and turns them into
the quantities people actually discuss: coefficient tables, the size of
a covariate's contribution at a concrete value, seasonal release
curves, per-genre intercept spreads, and posterior predictive player
counts for hypothetical games.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .diagnostics import ess, rhat
from .features import TrainingStats, transform_row
from .ingest import GameRecord
from .models import ModelSpec, ParamLayout, ParamVector, predictive_params
from .sampler import PosteriorSamples


@dataclass(frozen=True)
class SummaryRow:
    name: str
    mean: float
    sd: float
    median: float
    q5: float
    q95: float
    rhat: float
    ess: float

    @property
    def excludes_zero(self) -> bool:
        """True when the central 90% interval lies entirely on one side of 0."""
        return self.q5 > 0.0 or self.q95 < 0.0


def posterior_summary(samples: PosteriorSamples) -> list[SummaryRow]:
    """Location, spread, 90% interval, and convergence for every parameter."""
    rows = []
    for j, name in enumerate(samples.names):
        per_chain = samples.draws[:, :, j]
        flat = per_chain.reshape(-1)
        q5, med, q95 = np.percentile(flat, [5.0, 50.0, 95.0])
        rows.append(SummaryRow(
            name=name,
            mean=float(np.mean(flat)),
            sd=float(np.std(flat, ddof=1)),
            median=float(med),
            q5=float(q5),
            q95=float(q95),
            rhat=rhat(per_chain),
            ess=ess(per_chain),
        ))
    return rows


def feature_contribution(coeff, value):
    """Contribution of one covariate to the linear predictor: coeff * value.

    Accepts a scalar point estimate or an array of posterior draws and
    returns the same shape.
    """
    return coeff * value


def day_of_month_effect(coeff, day: int):
    """Linear-predictor shift from releasing on a given day of the month."""
    if not 1 <= day <= 31:
        raise ValueError(f"day of month must be in 1..31, got {day}")
    return feature_contribution(coeff, float(day))


def adjusted_intercept(intercept, coeff, value):
    """Intercept with one covariate's contribution folded in at a fixed value."""
    return intercept + feature_contribution(coeff, value)


@dataclass(frozen=True)
class CurvePoint:
    day_of_year: int
    mean: float
    q5: float
    q95: float
    multiplier_mean: float  # exp(effect): multiplicative effect on 1 + players
    multiplier_q5: float
    multiplier_q95: float


def day_of_year_effect(samples: PosteriorSamples, n_points: int = 73) -> list[CurvePoint]:
    """Seasonal release-timing curve implied by the two cyclic coefficients.

    Reported both on the model scale (additive in the linear predictor)
    and exponentiated, where it reads as a multiplier on 1 + players.
    """
    cos_coef = samples.flat("beta[day_of_year_cos]")
    sin_coef = samples.flat("beta[day_of_year_sin]")
    days = np.linspace(1, 365, n_points).round().astype(int)
    points = []
    for day in days:
        angle = 2.0 * np.pi * (day - 1) / 365.0
        effect = cos_coef * np.cos(angle) + sin_coef * np.sin(angle)
        mult = np.exp(effect)
        q5, q95 = np.percentile(effect, [5.0, 95.0])
        m5, m95 = np.percentile(mult, [5.0, 95.0])
        points.append(CurvePoint(
            day_of_year=int(day),
            mean=float(np.mean(effect)),
            q5=float(q5),
            q95=float(q95),
            multiplier_mean=float(np.mean(mult)),
            multiplier_q5=float(m5),
            multiplier_q95=float(m95),
        ))
    return points


@dataclass(frozen=True)
class GenreInterceptRow:
    genre: str
    mean: float
    q5: float
    q95: float
    width: float
    wide: bool  # interval much wider than is typical across genres


def genre_intercept_report(samples: PosteriorSamples,
                           genre_names: list[str],
                           width_factor: float = 3.0) -> list[GenreInterceptRow]:
    """Per-genre intercept posteriors, flagging poorly identified genres.

    A genre is flagged when its 90% interval is ``width_factor`` times
    wider than the median width, which in practice picks out genres with
    very few games.
    """
    widths = []
    partial = []
    for genre in genre_names:
        name = f"beta0[{genre}]"
        if name not in samples.names:
            raise ValueError(
                f"fit has no per-genre intercept {name!r}; "
                "this report needs a hierarchical model")
        flat = samples.flat(name)
        q5, q95 = np.percentile(flat, [5.0, 95.0])
        width = float(q95 - q5)
        widths.append(width)
        partial.append((genre, float(np.mean(flat)), float(q5), float(q95), width))
    cutoff = width_factor * float(np.median(widths))
    return [
        GenreInterceptRow(genre=g, mean=m, q5=q5, q95=q95, width=w, wide=w > cutoff)
        for g, m, q5, q95, w in partial
    ]


# ---------------------------------------------------------------------------
# Posterior predictive
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictionResult:
    """Posterior predictive player counts for one game."""

    raw_draws: np.ndarray  # original count scale
    mean: float
    median: float
    q5: float
    q95: float

    def prob_at_least(self, threshold: float) -> float:
        return float(np.mean(self.raw_draws >= threshold))


def predict_distribution(
    spec: ModelSpec,
    layout: ParamLayout,
    samples: PosteriorSamples,
    record: GameRecord,
    stats: TrainingStats,
    seed: int = 0,
    n_per_draw: int = 1,
) -> PredictionResult:
    """Posterior predictive distribution of the target month's player count.

    Each posterior draw contributes ``n_per_draw`` simulated games.  The
    normal-likelihood variant predicts on its shifted scale and is mapped
    back through the training target mean; counts are floored at zero.
    """
    if n_per_draw < 1:
        raise ValueError("n_per_draw must be positive")
    x = transform_row(record, stats)
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    flat_theta = samples.theta.reshape(-1, samples.n_params)
    out = np.empty(flat_theta.shape[0] * n_per_draw)
    for s, theta in enumerate(flat_theta):
        pv = ParamVector.unpack(spec, layout, theta)
        mu, sigma = predictive_params(spec, pv, x, record.genre_ids)
        z = mu + sigma * rng.standard_normal(n_per_draw)
        if spec.likelihood == "folded_normal":
            t = np.abs(z)
        else:
            t = z + np.log(stats.target_mean)
        out[s * n_per_draw:(s + 1) * n_per_draw] = np.maximum(np.expm1(t), 0.0)
    q5, med, q95 = np.percentile(out, [5.0, 50.0, 95.0])
    return PredictionResult(
        raw_draws=out,
        mean=float(np.mean(out)),
        median=float(med),
        q5=float(q5),
        q95=float(q95),
    )


def what_if(
    spec: ModelSpec,
    layout: ParamLayout,
    samples: PosteriorSamples,
    record: GameRecord,
    stats: TrainingStats,
    seed: int = 0,
    n_per_draw: int = 1,
    **changes,
) -> tuple[PredictionResult, PredictionResult, float]:
    """Predictions for a game as-is and with some attributes changed.

    Changeable attributes: price_eur, n_languages, storage_mb,
    release_date, past_players (the month-1 median).  Returns
    (baseline, modified, ratio of predictive medians).
    """
    past = changes.pop("past_players", None)
    allowed = {"price_eur", "n_languages", "storage_mb", "release_date"}
    unknown = set(changes) - allowed
    if unknown:
        raise ValueError(f"cannot change {sorted(unknown)}; allowed: {sorted(allowed)}")
    modified = replace(record, **changes) if changes else record
    if past is not None:
        medians = dict(modified.monthly_medians)
        medians[1] = int(past)
        modified = replace(modified, monthly_medians=medians)

    base = predict_distribution(spec, layout, samples, record, stats, seed, n_per_draw)
    alt = predict_distribution(spec, layout, samples, modified, stats, seed, n_per_draw)
    ratio = alt.median / base.median if base.median > 0 else float("inf")
    return base, alt, ratio


# ---------------------------------------------------------------------------
# Catalog-level description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenrePairRow:
    genre_a: str
    genre_b: str
    jaccard: float
    n_both: int


def genre_cooccurrence(records: list[GameRecord],
                       genre_names: list[str]) -> list[GenrePairRow]:
    """Jaccard similarity between genre memberships, strongest pairs first."""
    members: dict[int, set[str]] = {i: set() for i in range(len(genre_names))}
    for rec in records:
        for g in rec.genre_ids:
            members[g].add(rec.app_id)
    rows = []
    for a, b in itertools.combinations(range(len(genre_names)), 2):
        union = members[a] | members[b]
        if not union:
            continue
        both = members[a] & members[b]
        if not both:
            continue
        rows.append(GenrePairRow(
            genre_a=genre_names[a],
            genre_b=genre_names[b],
            jaccard=len(both) / len(union),
            n_both=len(both),
        ))
    rows.sort(key=lambda r: (-r.jaccard, r.genre_a, r.genre_b))
    return rows


def dataset_insights(records: list[GameRecord], genre_names: list[str]) -> dict:
    """Descriptive statistics of a cleaned catalog, ready for serialization."""
    if not records:
        raise ValueError("no records to describe")
    prices = np.array([r.price_eur for r in records])
    storage = np.array([r.storage_mb for r in records])
    languages = np.array([r.n_languages for r in records])
    months = sorted({m for r in records for m in r.monthly_medians})
    month_medians = {
        m: float(np.median([r.monthly_medians[m] for r in records
                            if m in r.monthly_medians]))
        for m in months
    }
    genre_counts = {
        genre_names[i]: sum(1 for r in records if i in r.genre_ids)
        for i in range(len(genre_names))
    }
    return {
        "n_games": len(records),
        "price_eur": {"mean": float(prices.mean()), "median": float(np.median(prices))},
        "storage_mb": {"mean": float(storage.mean()), "median": float(np.median(storage))},
        "n_languages": {"mean": float(languages.mean()), "median": float(np.median(languages))},
        "players_median_by_month": month_medians,
        "genre_counts": genre_counts,
        "genre_pairs": [
            {"genre_a": r.genre_a, "genre_b": r.genre_b,
             "jaccard": r.jaccard, "n_both": r.n_both}
            for r in genre_cooccurrence(records, genre_names)
        ],
    }
