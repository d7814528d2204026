"""On-disk formats for fits, evaluations, and reports.

A fitted model is a directory: ``draws.csv`` holds one row per
(chain, draw) with constrained parameter values, and ``manifest.json``
holds everything needed to reuse them: the model variant, feature
scaling, genre vocabulary, parameter names, and per-chain sampler
outcomes.  All floats are written with ``repr`` so a round trip is
bit-exact, and nothing here embeds timestamps: rerunning a command with
the same inputs rewrites identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analysis import CurvePoint, GenreInterceptRow, SummaryRow
from .evaluation import ComparisonResult, LooResult
from .features import TrainingStats
from .models import ModelSpec
from .sampler import ChainStats, PosteriorSamples

FORMAT_VERSION = 1

DRAWS_FILE = "draws.csv"
MANIFEST_FILE = "manifest.json"


def _fmt(v: float) -> str:
    return repr(float(v))


def save_fit(
    out_dir: str | Path,
    samples: PosteriorSamples,
    spec: ModelSpec,
    stats: TrainingStats,
    genre_names: list[str],
) -> Path:
    """Write a fit directory; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / DRAWS_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain", "draw", "logp", *samples.names])
        for c in range(samples.n_chains):
            for s in range(samples.n_draws):
                writer.writerow([
                    c, s, _fmt(samples.logp[c, s]),
                    *(_fmt(v) for v in samples.draws[c, s]),
                ])

    positive = [
        i for i, name in enumerate(samples.names)
        if name in ("sigma", "sigma_beta0", "sigma_gamma0")
    ]
    manifest = {
        "format": FORMAT_VERSION,
        "model": {
            "name": spec.name,
            "likelihood": spec.likelihood,
            "hierarchical": spec.hierarchical,
            "heteroscedastic": spec.heteroscedastic,
            "prior_scale_coeff": spec.prior_scale_coeff,
            "prior_scale_sigma": spec.prior_scale_sigma,
            "target_month": spec.target_month,
        },
        "seed": samples.seed,
        "n_chains": samples.n_chains,
        "n_draws": samples.n_draws,
        "param_names": list(samples.names),
        "positive_params": positive,
        "genre_names": genre_names,
        "training_stats": {
            "feature_means": stats.feature_means,
            "target_mean": stats.target_mean,
        },
        "chains": [
            {
                "step_size": st.step_size,
                "inv_mass": [float(v) for v in st.inv_mass],
                "accept_rate": st.accept_rate,
                "divergences": st.divergences,
                "warmup_divergences": st.warmup_divergences,
                "max_depth_hits": st.max_depth_hits,
                "elapsed": st.elapsed,
            }
            for st in samples.stats
        ],
    }
    with open(out / MANIFEST_FILE, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_fit(fit_dir: str | Path) -> tuple[PosteriorSamples, ModelSpec, TrainingStats, list[str]]:
    """Read a fit directory back; inverse of ``save_fit``."""
    fit_dir = Path(fit_dir)
    with open(fit_dir / MANIFEST_FILE, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported fit format: {manifest.get('format')!r}")

    model = manifest["model"]
    spec = ModelSpec(
        likelihood=model["likelihood"],
        hierarchical=model["hierarchical"],
        heteroscedastic=model["heteroscedastic"],
        prior_scale_coeff=model["prior_scale_coeff"],
        prior_scale_sigma=model["prior_scale_sigma"],
        target_month=model["target_month"],
    )
    stats = TrainingStats(
        feature_means={k: float(v) for k, v in
                       manifest["training_stats"]["feature_means"].items()},
        target_mean=float(manifest["training_stats"]["target_mean"]),
    )
    names = tuple(manifest["param_names"])
    n_chains = manifest["n_chains"]
    n_draws = manifest["n_draws"]

    draws = np.empty((n_chains, n_draws, len(names)))
    logp = np.empty((n_chains, n_draws))
    with open(fit_dir / DRAWS_FILE, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["chain", "draw", "logp", *names]:
            raise ValueError(f"draws file does not match manifest in {fit_dir}")
        for row in reader:
            c, s = int(row[0]), int(row[1])
            logp[c, s] = float(row[2])
            draws[c, s] = [float(v) for v in row[3:]]

    theta = draws.copy()
    positive = manifest["positive_params"]
    if positive:
        theta[:, :, positive] = np.log(theta[:, :, positive])

    chain_stats = [
        ChainStats(
            step_size=float(ch["step_size"]),
            inv_mass=np.array(ch["inv_mass"], dtype=float),
            accept_rate=float(ch["accept_rate"]),
            divergences=int(ch["divergences"]),
            warmup_divergences=int(ch["warmup_divergences"]),
            max_depth_hits=int(ch["max_depth_hits"]),
            elapsed=float(ch["elapsed"]),
        )
        for ch in manifest["chains"]
    ]
    samples = PosteriorSamples(
        draws=draws, theta=theta, logp=logp, names=names,
        stats=chain_stats, seed=manifest["seed"],
    )
    return samples, spec, stats, manifest["genre_names"]


# ---------------------------------------------------------------------------
# Evaluation artifacts
# ---------------------------------------------------------------------------

def save_loo(result: LooResult, out_dir: str | Path,
             app_ids: list[str] | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "loo.json", "w", encoding="utf-8") as fh:
        json.dump({
            "elpd": result.elpd,
            "se": result.se,
            "looic": result.looic,
            "n_rows": result.n_rows,
            "n_flagged": int(result.flagged.size),
            "flagged_fraction": result.flagged_fraction,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "loo_pointwise.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "app_id", "elpd", "pareto_k"])
        for i in range(result.n_rows):
            writer.writerow([
                i,
                app_ids[i] if app_ids else "",
                _fmt(result.pointwise[i]),
                _fmt(result.pareto_k[i]),
            ])
    return out


def load_loo(loo_dir: str | Path) -> LooResult:
    loo_dir = Path(loo_dir)
    pointwise = []
    pareto_k = []
    with open(loo_dir / "loo_pointwise.csv", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            pointwise.append(float(row[2]))
            pareto_k.append(float(row[3]))
    pointwise = np.array(pointwise)
    n = pointwise.size
    elpd = float(np.sum(pointwise))
    se = float(np.sqrt(n * np.var(pointwise, ddof=1))) if n > 1 else 0.0
    return LooResult(elpd=elpd, se=se, looic=-2.0 * elpd,
                     pointwise=pointwise, pareto_k=np.array(pareto_k))


def save_comparison(result: ComparisonResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({
            "model_a": result.name_a,
            "model_b": result.name_b,
            "delta_looic": result.delta_looic,
            "se": result.se,
            "p_a_better": result.p_a_better,
            "ci90_low": result.ci_low,
            "ci90_high": result.ci_high,
            "n_boot": result.n_boot,
            "favoured": result.favoured,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Report tables
# ---------------------------------------------------------------------------

def write_posterior_summary(rows: list[SummaryRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "mean", "sd", "median", "q5", "q95",
                         "rhat", "ess", "excludes_zero"])
        for r in rows:
            writer.writerow([
                r.name, _fmt(r.mean), _fmt(r.sd), _fmt(r.median),
                _fmt(r.q5), _fmt(r.q95), _fmt(r.rhat), _fmt(r.ess),
                int(r.excludes_zero),
            ])


def write_genre_report(rows: list[GenreInterceptRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["genre", "mean", "q5", "q95", "width", "wide"])
        for r in rows:
            writer.writerow([r.genre, _fmt(r.mean), _fmt(r.q5), _fmt(r.q95),
                             _fmt(r.width), int(r.wide)])


def write_seasonal_curve(points: list[CurvePoint], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day_of_year", "effect_mean", "effect_q5", "effect_q95",
                         "multiplier_mean", "multiplier_q5", "multiplier_q95"])
        for p in points:
            writer.writerow([
                p.day_of_year, _fmt(p.mean), _fmt(p.q5), _fmt(p.q95),
                _fmt(p.multiplier_mean), _fmt(p.multiplier_q5), _fmt(p.multiplier_q95),
            ])


def write_insights(insights: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(insights, fh, indent=2, sort_keys=True)
        fh.write("\n")
