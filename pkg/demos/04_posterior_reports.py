"""
Turn a fitted posterior into reports and predictions
====================================================

Fits the hierarchical variant, then walks the reporting surface:
per-genre intercepts, the day-of-year seasonal curve, a predictive
distribution for a hypothetical new game, and what-if shifts on its
catalog attributes.
"""

from datetime import date

from gamepop.analysis import (
    day_of_year_effect,
    genre_intercept_report,
    posterior_summary,
    predict_distribution,
    what_if,
)
from gamepop.ingest import GameRecord
from gamepop.models import ModelSpec, PosteriorTarget
from gamepop.sampler import SamplerConfig, sample_posterior
from gamepop.synthetic import SyntheticSpec, generate, to_model_data

batch = generate(SyntheticSpec(n_games=200, n_genres=5, seed=9, sigma_beta0=1.0))
data = to_model_data(batch, target_month=2)
spec = ModelSpec.variant("hier")
target = PosteriorTarget(spec, data)
samples = sample_posterior(
    target, SamplerConfig(n_chains=2, n_warmup=400, n_draws=600, seed=4))
stats = batch.spec.training_stats()

print("posterior summary (first rows):")
for row in posterior_summary(samples)[:4]:
    side = "  sign pinned" if row.excludes_zero else ""
    print(f"  {row.name:16s} mean {row.mean:+.3f}  "
          f"90% [{row.q5:+.3f}, {row.q95:+.3f}]{side}")

print("\ngenre intercepts:")
for row in genre_intercept_report(samples, batch.genre_names):
    marker = "  (poorly identified)" if row.wide else ""
    print(f"  {row.genre:10s} {row.mean:+.3f}  [{row.q5:+.3f}, {row.q95:+.3f}]{marker}")

print("\nseasonal effect of the release day, as a multiplier on 1 + players:")
for pt in day_of_year_effect(samples, n_points=5):
    print(f"  day {pt.day_of_year:3d}: x{pt.multiplier_mean:.3f}  "
          f"[{pt.multiplier_q5:.3f}, {pt.multiplier_q95:.3f}]")

# a hypothetical release: mid-priced, broadly localized, modest first month
genre_ids = frozenset(batch.genre_names.index(g) for g in ("Action", "Indie"))
game = GameRecord(
    app_id="demo0001",
    price_eur=14.99,
    n_languages=8,
    storage_mb=6144.0,
    release_date=date(2023, 10, 20),
    genre_ids=genre_ids,
    monthly_medians={1: 250},
)
pred = predict_distribution(spec, target.layout, samples, game, stats)
print(f"\npredicted players next month: median {pred.median:.0f}, "
      f"90% [{pred.q5:.0f}, {pred.q95:.0f}]")
print(f"P(at least 100 players) = {pred.prob_at_least(100):.2f}")

print("\nwhat-if shifts on the same game (predictive medians):")
for change in ({"price_eur": 29.99}, {"n_languages": 1}, {"past_players": 1000}):
    base, alt, ratio = what_if(spec, target.layout, samples, game, stats, **change)
    (key, value), = change.items()
    print(f"  {key} -> {value}: {base.median:.0f} becomes {alt.median:.0f} "
          f"(x{ratio:.2f})")
