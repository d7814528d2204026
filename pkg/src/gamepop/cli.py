"""Command line interface: the full pipeline as subcommands.

    gamepop synth    --out data/                 # make a synthetic catalog
    gamepop ingest   --catalog ... --history ... --out clean/
    gamepop fit      --data clean/cleaned.ndjson --model hier --out fits/hier
    gamepop evaluate --fit fits/hier --data clean/cleaned.ndjson --out fits/hier
    gamepop compare  --loo-a fits/hier --loo-b fits/folded --out cmp.json
    gamepop predict  --fit fits/hier --price 19.99 --languages 5 ...
    gamepop report   --fit fits/hier --data clean/cleaned.ndjson --out report/

A JSON config file (``--config``) can hold per-command defaults, e.g.
``{"fit": {"chains": 2, "warmup": 500}}``; explicit flags win.  Exit
status is 1 for configuration problems, 2 for data problems, 0
otherwise; warnings (divergences, high R-hat) go to stderr but do not
change the exit status.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from . import analysis, fileio
from .diagnostics import diagnose, flag_convergence, worst_rhat
from .evaluation import compare_models, elpd_loo
from .features import COLUMN_NAMES, build_model_data
from .ingest import GameRecord, ingest_catalog, load_cleaned_catalog, \
    write_cleaned_catalog, write_rejections
from .models import VARIANTS, ModelSpec, PosteriorTarget, loglik_matrix, make_layout
from .sampler import SamplerConfig, sample_posterior
from .synthetic import SyntheticSpec, generate, write_files

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


class ConfigError(Exception):
    """Bad flags or config file; exits with status 1."""


class DataError(Exception):
    """Missing or unusable input data; exits with status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise ConfigError(message)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict) or not all(isinstance(v, dict) for v in cfg.values()):
        raise ConfigError("config must map command names to option tables")
    return cfg


def _parse_rates(pairs: list[str] | None) -> dict[str, float] | None:
    if not pairs:
        return None
    rates = {}
    for pair in pairs:
        code, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--rate takes CUR=VALUE, got {pair!r}")
        try:
            rates[code.strip().upper()] = float(value)
        except ValueError:
            raise ConfigError(f"bad rate value in {pair!r}") from None
    return rates


def _parse_date_flag(s: str):
    try:
        return datetime.strptime(s, "%Y-%m-%d").date()
    except ValueError:
        raise ConfigError(f"dates use YYYY-MM-DD, got {s!r}") from None


def _load_records(path: str):
    try:
        return load_cleaned_catalog(path)
    except FileNotFoundError:
        raise DataError(f"cleaned catalog not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"cannot parse cleaned catalog {path}: {exc}") from None


def _load_fit(path: str):
    try:
        return fileio.load_fit(path)
    except FileNotFoundError:
        raise DataError(f"fit directory incomplete or missing: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read fit at {path}: {exc}") from None


def _check_genres(fit_genres: list[str], data_genres: list[str]) -> None:
    if fit_genres != data_genres:
        raise DataError(
            "genre vocabulary of the data does not match the fit "
            f"({data_genres} vs {fit_genres}); genre indices would disagree")


def _print(line: str) -> None:
    sys.stdout.write(line + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_ingest(args) -> int:
    try:
        result = ingest_catalog(
            args.catalog, args.history,
            cap_mb=args.cap_mb, min_year=args.min_year,
            rates=_parse_rates(args.rate), max_month=args.max_month,
        )
    except FileNotFoundError as exc:
        raise DataError(f"input file not found: {exc.filename}") from None
    except (json.JSONDecodeError, ValueError) as exc:
        raise DataError(f"cannot parse inputs: {exc}") from None
    if not result.records:
        raise DataError("no games survived cleaning; see the rejection reasons")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_cleaned_catalog(result.records, result.genre_names, out / "cleaned.ndjson")
    write_rejections(result.rejections, out / "rejections.csv")
    _print(f"kept {len(result.records)} games, rejected {len(result.rejections)}")
    _print(f"genres: {', '.join(result.genre_names)}")
    _print(f"wrote {out / 'cleaned.ndjson'} and {out / 'rejections.csv'}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    records, genre_names = _load_records(args.data)
    spec = ModelSpec.variant(args.model, target_month=args.month)
    try:
        data, stats = build_model_data(
            records, target_month=args.month,
            n_genres=len(genre_names), genre_names=genre_names)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    config = SamplerConfig(
        n_chains=args.chains, n_warmup=args.warmup, n_draws=args.draws,
        seed=args.seed, target_accept=args.target_accept,
        max_tree_depth=args.max_depth,
    )
    target = PosteriorTarget(spec, data)
    _print(f"fitting {args.model} on {data.n_rows} games, "
           f"{target.n_dim} parameters, {config.n_chains} chains")
    samples = sample_posterior(target, config)
    fileio.save_fit(args.out, samples, spec, stats, genre_names)

    results = diagnose(samples.draws, samples.names)
    flagged = flag_convergence(results)
    worst = worst_rhat(results)
    _print(f"worst R-hat {worst.rhat:.4f} ({worst.name}), "
           f"min ESS {min(r.ess for r in results):.0f}")
    if samples.total_divergences:
        _print(f"warning: {samples.total_divergences} divergent transitions")
    if flagged:
        _print(f"warning: R-hat above threshold for {', '.join(flagged)}")
    _print(f"wrote fit to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    samples, spec, stats, fit_genres = _load_fit(args.fit)
    records, genre_names = _load_records(args.data)
    _check_genres(fit_genres, genre_names)
    try:
        data, _ = build_model_data(
            records, target_month=spec.target_month, stats=stats,
            n_genres=len(genre_names), genre_names=genre_names)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    layout = make_layout(spec, data.feature_names, genre_names)
    if layout.names != samples.names:
        raise DataError("fit parameters do not match this data "
                        "(was it fit on a different catalog?)")
    ll = loglik_matrix(spec, samples.draws, layout, data)
    result = elpd_loo(ll)
    fileio.save_loo(result, args.out, app_ids=data.app_ids)
    _print(f"elpd {result.elpd:.2f} (se {result.se:.2f}), looic {result.looic:.2f}")
    if result.flagged.size:
        _print(f"warning: {result.flagged.size} of {result.n_rows} rows have "
               f"unreliable tail fits")
    _print(f"wrote evaluation to {args.out}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        loo_a = fileio.load_loo(args.loo_a)
        loo_b = fileio.load_loo(args.loo_b)
    except FileNotFoundError as exc:
        raise DataError(f"evaluation output missing: {exc.filename}") from None
    try:
        result = compare_models(
            loo_a, loo_b, name_a=args.name_a, name_b=args.name_b,
            n_boot=args.boot, seed=args.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    fileio.save_comparison(result, args.out)
    _print(f"looic difference ({result.name_a} - {result.name_b}): "
           f"{result.delta_looic:.2f} (se {result.se:.2f})")
    _print(f"P({result.name_a} predicts better) = {result.p_a_better:.3f}; "
           f"favoured: {result.favoured}")
    _print(f"wrote comparison to {args.out}")
    return EXIT_OK


def _record_from_flags(args, genre_names: list[str]) -> GameRecord:
    required = {
        "--price": args.price, "--languages": args.languages,
        "--storage-mb": args.storage_mb, "--release-date": args.release_date,
        "--genres": args.genres, "--past-players": args.past_players,
    }
    missing = [flag for flag, v in required.items() if v is None]
    if missing:
        raise ConfigError(
            f"predict needs either --app-id with --data, or all of: "
            f"{', '.join(missing)}")
    index = {g: i for i, g in enumerate(genre_names)}
    ids = set()
    for g in args.genres.split(","):
        g = g.strip()
        if g not in index:
            raise ConfigError(f"unknown genre {g!r}; fit knows {genre_names}")
        ids.add(index[g])
    return GameRecord(
        app_id="hypothetical",
        price_eur=args.price,
        n_languages=args.languages,
        storage_mb=args.storage_mb,
        release_date=_parse_date_flag(args.release_date),
        genre_ids=frozenset(ids),
        monthly_medians={1: args.past_players},
    )


def _cmd_predict(args) -> int:
    samples, spec, stats, genre_names = _load_fit(args.fit)
    if args.app_id is not None:
        if args.data is None:
            raise ConfigError("--app-id needs --data to look the game up")
        records, data_genres = _load_records(args.data)
        _check_genres(genre_names, data_genres)
        matches = [r for r in records if r.app_id == args.app_id]
        if not matches:
            raise DataError(f"app id {args.app_id!r} not in {args.data}")
        record = matches[0]
    else:
        record = _record_from_flags(args, genre_names)

    layout = make_layout(spec, COLUMN_NAMES, genre_names)
    if layout.names != samples.names:
        raise DataError("fit layout does not match the standard feature set")
    result = analysis.predict_distribution(
        spec, layout, samples, record, stats,
        seed=args.seed, n_per_draw=args.n_per_draw)
    _print(f"month {spec.target_month} median player count for {record.app_id}:")
    _print(f"  mean {result.mean:.1f}, median {result.median:.1f}, "
           f"90% interval [{result.q5:.1f}, {result.q95:.1f}]")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({
                "app_id": record.app_id,
                "target_month": spec.target_month,
                "mean": result.mean, "median": result.median,
                "q5": result.q5, "q95": result.q95,
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _print(f"wrote prediction to {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    samples, spec, stats, genre_names = _load_fit(args.fit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = analysis.posterior_summary(samples)
    fileio.write_posterior_summary(rows, out / "posterior_summary.csv")
    curve = analysis.day_of_year_effect(samples, n_points=args.curve_points)
    fileio.write_seasonal_curve(curve, out / "seasonal_curve.csv")
    written = ["posterior_summary.csv", "seasonal_curve.csv"]

    if spec.hierarchical:
        genre_rows = analysis.genre_intercept_report(samples, genre_names)
        fileio.write_genre_report(genre_rows, out / "genre_intercepts.csv")
        written.append("genre_intercepts.csv")

    if args.data:
        records, data_genres = _load_records(args.data)
        insights = analysis.dataset_insights(records, data_genres)
        fileio.write_insights(insights, out / "insights.json")
        written.append("insights.json")

    flagged = [r.name for r in rows if r.rhat > 1.01]
    if flagged:
        _print(f"warning: R-hat above 1.01 for {', '.join(flagged)}")
    strong = [r.name for r in rows
              if r.name.startswith("beta[") and r.excludes_zero]
    _print(f"coefficients with 90% interval away from zero: "
           f"{', '.join(strong) if strong else 'none'}")
    _print(f"wrote {', '.join(written)} to {out}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    try:
        spec = SyntheticSpec(
            n_games=args.games, n_genres=args.genres, seed=args.seed,
            n_months=args.months, sigma=args.sigma,
            noise_growth=args.noise_growth,
            beta0_mu=args.intercept, sigma_beta0=args.intercept_spread,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    data = generate(spec)
    paths = write_files(data, args.out)
    _print(f"wrote {spec.n_games} games to {paths['catalog']}")
    _print(f"daily histories in {paths['history']}, truth in {paths['truth']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="gamepop",
                     description="Early player-count modelling pipeline")
    parser.add_argument("--config", help="JSON file with per-command defaults")
    parser.add_argument("--verbose", action="store_true",
                        help="log progress details to stderr")
    sub = parser.add_subparsers(dest="command", metavar="command")
    commands: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("ingest", help="clean a scraped catalog")
    p.add_argument("--catalog", required=True, help="newline-delimited JSON catalog")
    p.add_argument("--history", required=True, help="JSON daily player-count file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cap-mb", type=float, default=300.0 * 1024,
                   help="reject storage above this many MB (default 300 GB)")
    p.add_argument("--min-year", type=int, default=2015,
                   help="reject releases before this year")
    p.add_argument("--max-month", type=int, default=None,
                   help="stop collecting monthly medians after this month")
    p.add_argument("--rate", action="append", metavar="CUR=VALUE",
                   help="override a currency rate (repeatable)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fit", help="sample a model's posterior")
    p.add_argument("--data", required=True, help="cleaned catalog from ingest")
    p.add_argument("--model", required=True, choices=sorted(VARIANTS),
                   help="model variant")
    p.add_argument("--month", type=int, default=2, choices=(2, 3, 4, 5),
                   help="months after release to predict (default 2)")
    p.add_argument("--out", required=True, help="fit output directory")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-accept", type=float, default=0.8)
    p.add_argument("--max-depth", type=int, default=10)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("evaluate", help="score a fit by leave-one-out")
    p.add_argument("--fit", required=True, help="fit directory")
    p.add_argument("--data", required=True, help="cleaned catalog the fit used")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="compare two evaluated fits")
    p.add_argument("--loo-a", required=True, help="evaluation directory of model a")
    p.add_argument("--loo-b", required=True, help="evaluation directory of model b")
    p.add_argument("--name-a", default="a")
    p.add_argument("--name-b", default="b")
    p.add_argument("--boot", type=int, default=10000,
                   help="bootstrap resamples (default 10000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("predict", help="posterior predictive for one game")
    p.add_argument("--fit", required=True, help="fit directory")
    p.add_argument("--app-id", help="look this game up in --data")
    p.add_argument("--data", help="cleaned catalog for --app-id lookups")
    p.add_argument("--price", type=float, help="price in EUR")
    p.add_argument("--languages", type=int, help="number of supported languages")
    p.add_argument("--storage-mb", type=float, help="required storage in MB")
    p.add_argument("--release-date", help="YYYY-MM-DD")
    p.add_argument("--genres", help="comma-separated genre names")
    p.add_argument("--past-players", type=int,
                   help="median players in the first month")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-draw", type=int, default=1)
    p.add_argument("--out", help="also write the summary to this JSON file")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("report", help="summaries and effect tables for a fit")
    p.add_argument("--fit", required=True, help="fit directory")
    p.add_argument("--data", help="cleaned catalog for dataset insights")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--curve-points", type=int, default=73,
                   help="resolution of the seasonal curve")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic catalog")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--games", type=int, default=200)
    p.add_argument("--genres", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--months", type=int, default=5)
    p.add_argument("--sigma", type=float, default=0.5,
                   help="noise scale of the generated targets")
    p.add_argument("--noise-growth", type=float, default=1.0,
                   help="per-month multiplier on the noise scale")
    p.add_argument("--intercept", type=float, default=1.5,
                   help="mean of the per-genre intercepts")
    p.add_argument("--intercept-spread", type=float, default=0.5,
                   help="spread of the per-genre intercepts")
    p.set_defaults(func=_cmd_synth)

    for name, sp in sub.choices.items():
        commands[name] = sp
    return parser, commands


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, commands = build_parser()
    try:
        # default values from the config file apply per command, flags win
        command = next((a for a in argv if a in commands), None)
        config_path = None
        for i, a in enumerate(argv):
            if a == "--config" and i + 1 < len(argv):
                config_path = argv[i + 1]
            elif a.startswith("--config="):
                config_path = a.split("=", 1)[1]
        config = _load_config(config_path)
        if command and command in config:
            overrides = config[command]
            commands[command].set_defaults(**overrides)
            # a value from the config satisfies a required option
            for action in commands[command]._actions:
                if action.required and action.dest in overrides:
                    action.required = False
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except DataError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
