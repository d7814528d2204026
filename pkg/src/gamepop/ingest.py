"""Catalog cleaning: raw scraped rows to validated game records.

The raw inputs are files produced by an earlier scraping step: a
newline-delimited JSON catalog (one object per game) and a JSON daily
player-count history keyed by app id.  This module applies the cleaning
rules (currency normalization, storage extraction and outlier cap, release
year floor) and collapses daily counts into per-month medians on fixed
30-day windows.

Rejections are data, not failures: every excluded row is returned with a
reason code so the cleaning run can be audited.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

log = logging.getLogger(__name__)

#: EUR per unit of foreign currency, frozen November-2020 rates.
DEFAULT_RATES: dict[str, float] = {"EUR": 1.0, "USD": 0.82, "GBP": 1.09}

#: Default storage outlier cap: 300 GB in MB.
DEFAULT_CAP_MB: float = 300.0 * 1024.0

DEFAULT_MIN_YEAR: int = 2015

#: Days per month window; months are fixed 30-day blocks from release.
MONTH_DAYS: int = 30

#: Windows with fewer daily observations than this are flagged as sparse.
SPARSE_MONTH_OBS: int = 15


@dataclass(frozen=True)
class RawCatalogRow:
    """One catalog row exactly as scraped, prior to any cleaning."""

    app_id: str
    name: str
    price_amount: float
    price_currency: str
    languages: list[str]
    system_requirements_text: str
    release_date: date
    genres: list[str]
    developers: list[str] = field(default_factory=list)
    publishers: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class GameRecord:
    """A cleaned game ready for feature construction.

    ``monthly_medians`` maps 1-based months-since-release to the median
    daily concurrent player count in that 30-day window; keys are
    contiguous from 1 for the months that had observations.
    """

    app_id: str
    price_eur: float
    n_languages: int
    storage_mb: float
    release_date: date
    genre_ids: frozenset[int]
    monthly_medians: dict[int, int]


@dataclass(frozen=True)
class DailyHistory:
    """Ordered (date, concurrent player count) series for one game."""

    app_id: str
    series: list[tuple[date, int]]


@dataclass(frozen=True)
class Rejection:
    app_id: str
    reason: str


@dataclass
class IngestResult:
    records: list[GameRecord]
    genre_names: list[str]
    rejections: list[Rejection]


def convert_price(amount: float, currency: str, rates: dict[str, float] | None = None) -> float:
    """Convert a price to EUR using frozen rates, rounded to 2 decimals."""
    if amount < 0:
        raise ValueError(f"price must be non-negative, got {amount}")
    table = DEFAULT_RATES if rates is None else rates
    try:
        rate = table[currency]
    except KeyError:
        raise ValueError(f"unknown currency code: {currency!r}") from None
    return round(amount * rate, 2)


_STORAGE_LABELLED = re.compile(
    r"(?:storage|hard\s+(?:drive|disk)(?:\s+space)?|disk\s+space|free\s+space|hdd)"
    r"\s*:?\s*(\d+(?:\.\d+)?)\s*(gb|mb)\b",
    re.IGNORECASE,
)
_STORAGE_BARE = re.compile(r"(\d+(?:\.\d+)?)\s*(gb|mb)\b", re.IGNORECASE)


def extract_storage_mb(requirements_text: str) -> float | None:
    """Pull the first storage quantity out of free-form requirements text.

    Quantities labelled "Storage"/"Hard Drive"/etc. win over bare "N GB"
    tokens; GB values are converted to MB at 1024 MB/GB.  Returns None when
    no quantity is found (absence is a value, not an error).
    """
    m = _STORAGE_LABELLED.search(requirements_text) or _STORAGE_BARE.search(requirements_text)
    if m is None:
        return None
    value = float(m.group(1))
    if m.group(2).lower() == "gb":
        value *= 1024.0
    return value


def monthly_median(history: DailyHistory, release: date, month_index: int) -> int | None:
    """Median daily count in the window [30*(m-1), 30*m) days after release.

    Even-length windows take the lower median so integer counts stay
    integers.  Returns None when the window holds no observations.
    """
    if month_index < 1:
        raise ValueError(f"month_index must be >= 1, got {month_index}")
    lo = MONTH_DAYS * (month_index - 1)
    hi = MONTH_DAYS * month_index
    counts = sorted(
        c for d, c in history.series if lo <= (d - release).days < hi
    )
    if not counts:
        return None
    return counts[(len(counts) - 1) // 2]


def build_monthly_medians(
    history: DailyHistory, release: date, max_month: int | None = None
) -> dict[int, int]:
    """Contiguous month-index -> median map, stopping at the first empty window."""
    medians: dict[int, int] = {}
    month = 1
    while max_month is None or month <= max_month:
        lo = MONTH_DAYS * (month - 1)
        hi = MONTH_DAYS * month
        counts = [c for d, c in history.series if lo <= (d - release).days < hi]
        if not counts:
            break
        if len(counts) < SPARSE_MONTH_OBS:
            log.warning(
                "app %s month %d has only %d observations", history.app_id, month, len(counts)
            )
        counts.sort()
        medians[month] = counts[(len(counts) - 1) // 2]
        month += 1
    return medians


def filter_catalog(
    rows: list[RawCatalogRow],
    cap_mb: float = DEFAULT_CAP_MB,
    min_year: int = DEFAULT_MIN_YEAR,
    rates: dict[str, float] | None = None,
) -> tuple[list[GameRecord], list[str], list[Rejection]]:
    """Apply the cleaning rules and build genre indices.

    Returns records (with empty ``monthly_medians``; histories attach
    later), the sorted genre vocabulary the indices refer to, and the
    rejection log.  Output is a partition of the input: every row is either
    kept or rejected with a reason code.
    """
    if cap_mb <= 0:
        raise ValueError("cap_mb must be positive")

    kept: list[tuple[RawCatalogRow, float, float]] = []
    rejections: list[Rejection] = []
    seen: set[str] = set()

    for row in rows:
        if not row.app_id:
            rejections.append(Rejection(row.app_id, "missing_app_id"))
            continue
        if row.app_id in seen:
            rejections.append(Rejection(row.app_id, "duplicate_app_id"))
            continue
        seen.add(row.app_id)
        if row.release_date.year < min_year:
            rejections.append(Rejection(row.app_id, "too_old"))
            continue
        try:
            price_eur = convert_price(row.price_amount, row.price_currency, rates)
        except ValueError:
            rejections.append(Rejection(row.app_id, "bad_price"))
            continue
        storage = extract_storage_mb(row.system_requirements_text)
        if storage is None:
            rejections.append(Rejection(row.app_id, "no_storage"))
            continue
        if storage <= 0:
            rejections.append(Rejection(row.app_id, "bad_storage"))
            continue
        if storage > cap_mb:
            rejections.append(Rejection(row.app_id, "storage_outlier"))
            continue
        if not row.genres:
            rejections.append(Rejection(row.app_id, "no_genres"))
            continue
        kept.append((row, price_eur, storage))

    genre_names = sorted({g for row, _, _ in kept for g in row.genres})
    genre_index = {g: i for i, g in enumerate(genre_names)}

    records = [
        GameRecord(
            app_id=row.app_id,
            price_eur=price_eur,
            n_languages=max(1, len(row.languages)),
            storage_mb=storage,
            release_date=row.release_date,
            genre_ids=frozenset(genre_index[g] for g in row.genres),
            monthly_medians={},
        )
        for row, price_eur, storage in kept
    ]
    return records, genre_names, rejections


def attach_histories(
    records: list[GameRecord],
    histories: dict[str, DailyHistory],
    max_month: int | None = None,
) -> tuple[list[GameRecord], list[Rejection]]:
    """Fill ``monthly_medians`` from daily histories.

    Games whose history is missing, malformed (duplicate dates), or empty
    in the first month window are rejected; pre-release observations are
    dropped with a log entry rather than failing the whole game.
    """
    out: list[GameRecord] = []
    rejections: list[Rejection] = []
    for rec in records:
        hist = histories.get(rec.app_id)
        if hist is None:
            rejections.append(Rejection(rec.app_id, "no_history"))
            continue
        series = sorted(hist.series)
        dates = [d for d, _ in series]
        if len(set(dates)) != len(dates):
            rejections.append(Rejection(rec.app_id, "bad_history"))
            continue
        n_pre = sum(1 for d in dates if d < rec.release_date)
        if n_pre:
            log.warning("app %s: dropping %d pre-release observations", rec.app_id, n_pre)
            series = [(d, c) for d, c in series if d >= rec.release_date]
        medians = build_monthly_medians(
            DailyHistory(rec.app_id, series), rec.release_date, max_month
        )
        if 1 not in medians:
            rejections.append(Rejection(rec.app_id, "no_history"))
            continue
        out.append(
            GameRecord(
                app_id=rec.app_id,
                price_eur=rec.price_eur,
                n_languages=rec.n_languages,
                storage_mb=rec.storage_mb,
                release_date=rec.release_date,
                genre_ids=rec.genre_ids,
                monthly_medians=medians,
            )
        )
    return out, rejections


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def _parse_date(s: str) -> date:
    return datetime.strptime(s, "%Y-%m-%d").date()


def load_catalog(path: str | Path) -> tuple[list[RawCatalogRow], list[Rejection]]:
    """Read a newline-delimited JSON catalog; unparseable lines become rejections."""
    rows: list[RawCatalogRow] = []
    rejections: list[Rejection] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rows.append(
                    RawCatalogRow(
                        app_id=str(obj["app_id"]),
                        name=str(obj.get("name", "")),
                        price_amount=float(obj["price_amount"]),
                        price_currency=str(obj["price_currency"]),
                        languages=list(obj.get("languages", [])),
                        system_requirements_text=str(obj.get("system_requirements_text", "")),
                        release_date=_parse_date(obj["release_date"]),
                        genres=list(obj.get("genres", [])),
                        developers=list(obj.get("developers", [])),
                        publishers=list(obj.get("publishers", [])),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                app_id = ""
                try:
                    app_id = str(json.loads(line).get("app_id", ""))
                except Exception:
                    pass
                log.warning("catalog line %d unparseable: %s", lineno, exc)
                rejections.append(Rejection(app_id or f"line:{lineno}", "unparseable"))
    return rows, rejections


def load_histories(path: str | Path) -> dict[str, DailyHistory]:
    """Read the {app_id: [[iso-date, count], ...]} daily-history file."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {
        app_id: DailyHistory(
            app_id=app_id,
            series=[(_parse_date(d), int(c)) for d, c in entries],
        )
        for app_id, entries in raw.items()
    }


def write_cleaned_catalog(
    records: list[GameRecord], genre_names: list[str], path: str | Path
) -> None:
    """Write cleaned records as newline-delimited JSON (genre names inline)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "app_id": rec.app_id,
                "price_eur": rec.price_eur,
                "n_languages": rec.n_languages,
                "storage_mb": rec.storage_mb,
                "release_date": rec.release_date.isoformat(),
                "genres": sorted(genre_names[i] for i in rec.genre_ids),
                "monthly_medians": {str(k): v for k, v in sorted(rec.monthly_medians.items())},
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_cleaned_catalog(path: str | Path) -> tuple[list[GameRecord], list[str]]:
    """Read a cleaned catalog back into records plus its genre vocabulary."""
    objs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                objs.append(json.loads(line))
    genre_names = sorted({g for obj in objs for g in obj["genres"]})
    genre_index = {g: i for i, g in enumerate(genre_names)}
    records = [
        GameRecord(
            app_id=str(obj["app_id"]),
            price_eur=float(obj["price_eur"]),
            n_languages=int(obj["n_languages"]),
            storage_mb=float(obj["storage_mb"]),
            release_date=_parse_date(obj["release_date"]),
            genre_ids=frozenset(genre_index[g] for g in obj["genres"]),
            monthly_medians={int(k): int(v) for k, v in obj["monthly_medians"].items()},
        )
        for obj in objs
    ]
    return records, genre_names


def write_rejections(rejections: list[Rejection], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("app_id,reason\n")
        for r in rejections:
            fh.write(f"{r.app_id},{r.reason}\n")


def ingest_catalog(
    catalog_path: str | Path,
    history_path: str | Path,
    cap_mb: float = DEFAULT_CAP_MB,
    min_year: int = DEFAULT_MIN_YEAR,
    rates: dict[str, float] | None = None,
    max_month: int | None = None,
) -> IngestResult:
    """Full cleaning pass: parse, filter, attach monthly medians."""
    rows, parse_rejections = load_catalog(catalog_path)
    records, genre_names, filter_rejections = filter_catalog(rows, cap_mb, min_year, rates)
    histories = load_histories(history_path)
    records, history_rejections = attach_histories(records, histories, max_month)
    return IngestResult(
        records=records,
        genre_names=genre_names,
        rejections=parse_rejections + filter_rejections + history_rejections,
    )
