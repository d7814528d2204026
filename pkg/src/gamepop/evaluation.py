"""Out-of-sample fit estimation: smoothed importance sampling and refits.

``elpd_loo`` estimates leave-one-out predictive density from a single
posterior's pointwise log likelihood matrix.  The raw importance
ratios for each held-out row have their upper tail replaced by
quantiles of a generalized Pareto distribution fitted to that tail;
the fitted shape, reported per row, doubles as the reliability
flag (shapes above 0.7 mean the estimate for that row is fragile).

``exact_loo`` is the brute-force cross-check: refit without each row
and score it against the refitted posterior.  It is quadratic in the
dataset and guarded accordingly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .features import ModelData, build_model_data
from .models import ModelSpec, PosteriorTarget, loglik_matrix, param_layout
from .sampler import SamplerConfig, sample_posterior

logger = logging.getLogger(__name__)

K_FLAG = 0.7  # tail shapes above this make the row estimate unreliable
_K_SMOOTH_MIN = 1.0 / 3.0  # below this the raw ratios are already well behaved
_MIN_DRAWS_FOR_SMOOTHING = 25
EXACT_LOO_MAX_ROWS = 200


def fit_gpd_tail(x: np.ndarray) -> tuple[float, float]:
    """(shape, scale) of a generalized Pareto fit to exceedances ``x`` > 0.

    Profile-likelihood method with a weakly informative pull of the shape
    toward 0.5, quadrature over a fixed grid of the transformed scale.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if n < 5 or x[0] < 0:
        raise ValueError("need at least 5 non-negative exceedances")
    if x[-1] <= 0 or x[0] == x[-1]:
        raise ValueError("degenerate tail: all exceedances identical")

    prior_bs, prior_k = 3.0, 10.0
    m = 30 + int(np.sqrt(n))
    quart = x[int(n / 4 + 0.5) - 1]
    if quart <= 0:
        quart = x[x > 0][0]
    bs = 1.0 - np.sqrt(m / (np.arange(1, m + 1) - 0.5))
    bs /= prior_bs * quart
    bs += 1.0 / x[-1]
    ks = np.mean(np.log1p(-bs[:, None] * x), axis=1)
    # profile log likelihood of each candidate scale
    with np.errstate(divide="ignore", invalid="ignore"):
        profile = n * (np.log(-(bs / ks)) - ks - 1.0)
    profile[~np.isfinite(profile)] = -np.inf
    weights = np.exp(profile - logsumexp(profile))
    b = float(np.sum(bs * weights))
    k = float(np.mean(np.log1p(-b * x)))
    k = (n * k + prior_k * 0.5) / (n + prior_k)
    sigma = -k / b
    return k, sigma


def gpd_quantile(p: np.ndarray, k: float, sigma: float) -> np.ndarray:
    """Inverse CDF of the zero-location generalized Pareto distribution."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    if sigma <= 0:
        raise ValueError("scale must be positive")
    with np.errstate(divide="ignore"):
        if abs(k) < 1e-12:
            x = -np.log1p(-p)
        else:
            x = np.expm1(-k * np.log1p(-p)) / k
    x = x * sigma
    x = np.where(p == 0.0, 0.0, x)
    x = np.where(p == 1.0, np.inf if k >= 0 else -sigma / k, x)
    return x


def tail_length(n_draws: int) -> int:
    return int(np.ceil(min(0.2 * n_draws, 3.0 * np.sqrt(n_draws))))


def _smooth_one(lw: np.ndarray) -> tuple[np.ndarray, float]:
    """Pareto-smooth one unnormalized log weight vector; returns (lw, shape).

    The returned weights are still unnormalized but never exceed the raw
    maximum.  Too few draws skip smoothing with shape NaN; a degenerate
    tail reports shape -inf.
    """
    lw = np.asarray(lw, dtype=float).copy()
    s = lw.size
    if s < _MIN_DRAWS_FOR_SMOOTHING:
        return lw, np.nan

    n_tail = tail_length(s)
    order = np.argsort(lw, kind="stable")
    tail_idx = order[s - n_tail:]
    cutoff = lw[order[s - n_tail - 1]]  # largest value kept out of the tail
    lw_tail = lw[tail_idx]
    if np.all(lw_tail == lw_tail[0]):
        return lw, -np.inf

    raw_max = lw[order[-1]]
    exceedances = np.exp(lw_tail) - np.exp(cutoff)
    try:
        k, sigma = fit_gpd_tail(exceedances)
    except ValueError:
        return lw, -np.inf
    if not np.isfinite(k):
        return lw, -np.inf
    if k >= _K_SMOOTH_MIN:
        probs = (np.arange(1, n_tail + 1) - 0.5) / n_tail
        smoothed = np.log(gpd_quantile(probs, k, sigma) + np.exp(cutoff))
        # assign quantiles in rank order, then cap at the raw maximum
        rank = np.argsort(np.argsort(lw_tail, kind="stable"), kind="stable")
        lw[tail_idx] = np.minimum(smoothed[rank], raw_max)
    return lw, float(k)


def psis_smooth(log_ratios: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smooth and self-normalize importance ratios column by column.

    ``log_ratios`` is (draws,) or (draws, rows); returns log weights of
    the same shape, each column summing to one in probability space,
    plus the per-column tail shape.
    """
    lr = np.asarray(log_ratios, dtype=float)
    single = lr.ndim == 1
    if single:
        lr = lr[:, None]
    if lr.ndim != 2:
        raise ValueError(f"expected (draws,) or (draws, rows), got {lr.shape}")
    out = np.empty_like(lr)
    shapes = np.empty(lr.shape[1])
    for j in range(lr.shape[1]):
        col = lr[:, j] - np.max(lr[:, j])
        smoothed, shapes[j] = _smooth_one(col)
        out[:, j] = smoothed - logsumexp(smoothed)
    if single:
        return out[:, 0], shapes[0]
    return out, shapes


@dataclass(frozen=True)
class LooResult:
    """Leave-one-out expected log predictive density and its pieces."""

    elpd: float
    se: float
    looic: float
    pointwise: np.ndarray
    pareto_k: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.pointwise.size

    @property
    def flagged(self) -> np.ndarray:
        """Row indices whose tail shape exceeds the reliability threshold."""
        return np.flatnonzero(self.pareto_k > K_FLAG)

    @property
    def flagged_fraction(self) -> float:
        return self.flagged.size / self.n_rows


def elpd_loo(loglik: np.ndarray) -> LooResult:
    """PSIS estimate of leave-one-out fit from an (draws, rows) matrix."""
    ll = np.asarray(loglik, dtype=float)
    if ll.ndim != 2:
        raise ValueError(f"expected (draws, rows) log likelihood, got {ll.shape}")
    if not np.all(np.isfinite(ll)):
        raise ValueError("log likelihood matrix contains non-finite entries")
    log_weights, k = psis_smooth(-ll)
    pointwise = logsumexp(log_weights + ll, axis=0)
    n = pointwise.size
    elpd = float(np.sum(pointwise))
    se = float(np.sqrt(n * np.var(pointwise, ddof=1))) if n > 1 else 0.0
    n_bad = int(np.sum(k > K_FLAG))
    if n_bad:
        logger.warning(
            "%d of %d rows have Pareto shape above %.1f; their contributions "
            "are unreliable", n_bad, n, K_FLAG)
    return LooResult(elpd=elpd, se=se, looic=-2.0 * elpd,
                     pointwise=pointwise, pareto_k=k)


def _drop_row(data: ModelData, i: int) -> ModelData:
    keep = np.ones(data.n_rows, dtype=bool)
    keep[i] = False
    return replace(
        data,
        X=data.X[keep],
        genre_sets=[g for j, g in enumerate(data.genre_sets) if j != i],
        y_raw=data.y_raw[keep],
        y=data.y[keep],
        app_ids=[a for j, a in enumerate(data.app_ids) if j != i],
    )


def exact_loo_pointwise(spec: ModelSpec, data: ModelData,
                        config: SamplerConfig) -> np.ndarray:
    """Per-row log predictive density with that row refit out of the data.

    Training statistics are kept fixed so every refit sees the same
    feature scaling as the full fit.
    """
    if data.n_rows > EXACT_LOO_MAX_ROWS:
        raise ValueError(
            f"{data.n_rows} rows would need {data.n_rows} refits; "
            f"refusing above {EXACT_LOO_MAX_ROWS}")
    layout = param_layout(spec, data)
    pointwise = np.empty(data.n_rows)
    for i in range(data.n_rows):
        held_out = _drop_row(data, i)
        # give each refit its own chain keys so draws stay independent
        refit_config = replace(config, seed=config.seed + 1 + i)
        target = PosteriorTarget(spec, held_out)
        samples = sample_posterior(target, refit_config)
        ll_i = loglik_matrix(spec, samples.draws, layout, data)[:, i]
        pointwise[i] = logsumexp(ll_i) - np.log(ll_i.size)
        logger.debug("refit %d/%d: lpd %.3f", i + 1, data.n_rows, pointwise[i])
    return pointwise


def exact_loo(spec: ModelSpec, data: ModelData, config: SamplerConfig) -> float:
    """Total leave-one-out log predictive density by brute-force refitting."""
    return float(np.sum(exact_loo_pointwise(spec, data, config)))


@dataclass(frozen=True)
class ComparisonResult:
    """Pairwise difference in predictive fit between two fitted models."""

    name_a: str
    name_b: str
    delta_looic: float  # looic_a - looic_b; negative favours a
    se: float
    p_a_better: float
    ci_low: float
    ci_high: float
    n_boot: int

    @property
    def favoured(self) -> str:
        if self.p_a_better == 0.5:
            return "tied"
        return self.name_a if self.p_a_better > 0.5 else self.name_b


def compare_models(loo_a: LooResult, loo_b: LooResult,
                   name_a: str = "a", name_b: str = "b",
                   n_boot: int = 10000, seed: int = 0) -> ComparisonResult:
    """Bootstrap the pointwise LOOIC difference over rows.

    ``p_a_better`` is the bootstrap probability that model a's criterion
    comes out lower; identical pointwise inputs score 0.5 by convention.
    """
    if loo_a.n_rows != loo_b.n_rows:
        raise ValueError(
            f"models were scored on different row counts: "
            f"{loo_a.n_rows} vs {loo_b.n_rows}")
    if n_boot < 1:
        raise ValueError("n_boot must be positive")
    d = -2.0 * (loo_a.pointwise - loo_b.pointwise)
    n = d.size
    delta = float(np.sum(d))
    se = float(np.sqrt(n * np.var(d, ddof=1))) if n > 1 else 0.0

    if np.array_equal(loo_a.pointwise, loo_b.pointwise):
        return ComparisonResult(name_a, name_b, 0.0, 0.0, 0.5, 0.0, 0.0, n_boot)

    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    idx = rng.integers(0, n, size=(n_boot, n))
    sums = d[idx].sum(axis=1)
    p_a = float(np.mean(sums < 0.0))
    lo, hi = np.percentile(sums, [5.0, 95.0])
    return ComparisonResult(name_a, name_b, delta, se, p_a,
                            float(lo), float(hi), n_boot)


def looic_over_months(spec: ModelSpec, records, months,
                      config: SamplerConfig) -> dict[int, LooResult]:
    """Refit one model family across target months and score each fit.

    Feature scaling is recomputed per month from that month's training
    rows, so each fit is self-contained.
    """
    out: dict[int, LooResult] = {}
    for month in months:
        month_spec = replace(spec, target_month=month)
        data, _ = build_model_data(records, target_month=month)
        target = PosteriorTarget(month_spec, data)
        samples = sample_posterior(target, config)
        ll = loglik_matrix(month_spec, samples.draws, target.layout, data)
        out[month] = elpd_loo(ll)
        logger.info("month %d: looic %.2f (se %.2f)", month,
                    out[month].looic, out[month].se)
    return out
