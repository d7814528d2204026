"""Design-matrix construction from cleaned game records.

Four heavy-tailed non-negative features (price, language count, storage,
past median players) are compressed with the multiplier-log transform
``log((1 + x) / mean)`` against training-set means; the release date
contributes a raw day-of-month column and a sin/cos pair for day of year.
Targets are modeled as ``log(1 + count)``.

Training means are computed once and carried with the fitted model so the
inference path never recomputes them from new data.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .ingest import GameRecord

log = logging.getLogger(__name__)

#: Features that go through the log-ratio transform, in design-matrix order.
RATIO_FEATURES: tuple[str, ...] = ("price", "n_languages", "storage", "past_players")

#: Full design-matrix column order.
COLUMN_NAMES: tuple[str, ...] = RATIO_FEATURES + (
    "day_of_month",
    "day_of_year_cos",
    "day_of_year_sin",
)


@dataclass(frozen=True)
class TrainingStats:
    """Training-set means backing the log-ratio transform.

    ``feature_means`` holds the four ratio features; ``target_mean`` is the
    raw target mean, used only by the normal-likelihood model whose target
    goes through the same transform.
    """

    feature_means: dict[str, float]
    target_mean: float

    def __post_init__(self) -> None:
        missing = [f for f in RATIO_FEATURES if f not in self.feature_means]
        if missing:
            raise ValueError(f"feature_means missing {missing}")
        bad = {k: v for k, v in self.feature_means.items() if not v > 0}
        if bad:
            raise ValueError(f"feature means must be positive: {bad}")


@dataclass
class ModelData:
    """Assembled design matrix, per-row genre index sets, and targets.

    ``y`` is always ``log(1 + y_raw)``; the normal-likelihood model
    subtracts ``log(target_mean)`` internally.
    """

    X: np.ndarray
    genre_sets: list[frozenset[int]]
    y_raw: np.ndarray
    y: np.ndarray
    n_genres: int
    stats: TrainingStats
    feature_names: tuple[str, ...] = COLUMN_NAMES
    genre_names: list[str] | None = None
    app_ids: list[str] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def log_ratio_transform(x: float, mean: float) -> float:
    """log((1 + x) / mean), natural log."""
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    return float(np.log1p(x) - np.log(mean))


def cyclic_encode(x: float) -> tuple[float, float]:
    """Map x in [0, 1] to the unit circle: (sin 2*pi*x, cos 2*pi*x)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    angle = 2.0 * np.pi * x
    return float(np.sin(angle)), float(np.cos(angle))


def _days_in_year(year: int) -> int:
    leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
    return 366 if leap else 365


def temporal_features(release: date) -> tuple[int, float, int]:
    """(year, day-of-year scaled to [0, 1], raw day of month)."""
    ordinal = release.timetuple().tm_yday
    scaled = (ordinal - 1) / _days_in_year(release.year)
    return release.year, scaled, release.day


def transform_target(y_raw: float) -> float:
    """log(1 + y_raw)."""
    if y_raw < 0:
        raise ValueError(f"target must be non-negative, got {y_raw}")
    return float(np.log1p(y_raw))


def inverse_transform(t: float) -> float:
    """exp(t) - 1, the inverse of the target transform."""
    if t < 0:
        raise ValueError(f"transformed target must be non-negative, got {t}")
    return float(np.expm1(t))


def _raw_features(rec: GameRecord) -> dict[str, float]:
    return {
        "price": rec.price_eur,
        "n_languages": float(rec.n_languages),
        "storage": rec.storage_mb,
        "past_players": float(rec.monthly_medians[1]),
    }


def compute_training_stats(records: list[GameRecord], target_month: int) -> TrainingStats:
    """Means of the four ratio features and the raw target over these records."""
    if not records:
        raise ValueError("no records to compute statistics from")
    means = {
        name: float(np.mean([_raw_features(r)[name] for r in records]))
        for name in RATIO_FEATURES
    }
    target_mean = float(np.mean([r.monthly_medians[target_month] for r in records]))
    return TrainingStats(feature_means=means, target_mean=target_mean)


def transform_row(rec: GameRecord, stats: TrainingStats) -> np.ndarray:
    """One design-matrix row in COLUMN_NAMES order."""
    raw = _raw_features(rec)
    _, doy_scaled, dom = temporal_features(rec.release_date)
    sin_c, cos_c = cyclic_encode(doy_scaled)
    row = [log_ratio_transform(raw[name], stats.feature_means[name]) for name in RATIO_FEATURES]
    row += [float(dom), cos_c, sin_c]
    return np.array(row, dtype=float)


def build_model_data(
    records: list[GameRecord],
    target_month: int,
    stats: TrainingStats | None = None,
    n_genres: int | None = None,
    genre_names: list[str] | None = None,
    include_year_indicators: bool = False,
) -> tuple[ModelData, TrainingStats]:
    """Assemble the design matrix and target vector for one target month.

    Records missing the month-1 median (the past-players feature) or the
    target month are dropped with a log entry.  With ``stats=None`` the
    training path computes feature means from the usable rows; passing
    stats reuses them (the inference path).
    """
    if target_month not in (2, 3, 4, 5):
        raise ValueError(f"target_month must be in 2..5, got {target_month}")

    usable = []
    for rec in records:
        if 1 not in rec.monthly_medians or target_month not in rec.monthly_medians:
            log.info("dropping %s: missing month 1 or month %d median", rec.app_id, target_month)
            continue
        if not rec.genre_ids:
            log.info("dropping %s: empty genre set", rec.app_id)
            continue
        usable.append(rec)
    if not usable:
        raise ValueError("no usable records (every row lacks the required monthly medians)")

    if stats is None:
        stats = compute_training_stats(usable, target_month)

    X = np.array([transform_row(rec, stats) for rec in usable])
    names = COLUMN_NAMES
    if include_year_indicators:
        years = sorted({rec.release_date.year for rec in usable})
        indicators = np.array(
            [[1.0 if rec.release_date.year == y else 0.0 for y in years] for rec in usable]
        )
        X = np.hstack([X, indicators])
        names = names + tuple(f"year_{y}" for y in years)

    y_raw = np.array([rec.monthly_medians[target_month] for rec in usable], dtype=int)
    genre_sets = [rec.genre_ids for rec in usable]
    if n_genres is None:
        n_genres = max(max(g) for g in genre_sets) + 1
    data = ModelData(
        X=X,
        genre_sets=genre_sets,
        y_raw=y_raw,
        y=np.log1p(y_raw.astype(float)),
        n_genres=n_genres,
        stats=stats,
        feature_names=names,
        genre_names=genre_names,
        app_ids=[rec.app_id for rec in usable],
    )
    return data, stats


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_stats(stats: TrainingStats, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {"feature_means": stats.feature_means, "target_mean": stats.target_mean},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")


def load_stats(path: str | Path) -> TrainingStats:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return TrainingStats(
        feature_means={k: float(v) for k, v in obj["feature_means"].items()},
        target_mean=float(obj["target_mean"]),
    )


def model_data_to_csv(data: ModelData, path: str | Path) -> None:
    """Dump the matrix for external inspection (one row per game)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = ["app_id", *data.feature_names, "genres", "y_raw", "y"]
        fh.write(",".join(header) + "\n")
        app_ids = data.app_ids or [str(i) for i in range(data.n_rows)]
        for i in range(data.n_rows):
            cells = [app_ids[i]]
            cells += [repr(float(v)) for v in data.X[i]]
            cells.append("|".join(str(g) for g in sorted(data.genre_sets[i])))
            cells.append(str(int(data.y_raw[i])))
            cells.append(repr(float(data.y[i])))
            fh.write(",".join(cells) + "\n")
