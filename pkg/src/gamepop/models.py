"""The six regression model variants: parameters, posteriors, gradients.

Likelihoods
-----------
* normal: the transformed target ``log((1+y)/mean_y)`` is Normal with mean
  equal to the raw linear predictor and either a shared variance or a
  per-game log-linear one.
* folded normal: the target ``log(1+y)`` is FN(softplus(eta), sigma^2),
  which keeps support on [0, inf) with positive density at zero.

Hierarchical variants give every genre its own intercept drawn from a
shared normal, and a game's effective intercept is the mean over its genre
set.  Heteroscedastic variants replace the shared scale with
``sigma_i = exp(gamma_0 + gamma . x_i)`` (per-genre gamma intercepts in the
hierarchical case).

All positive parameters are sampled on the log scale; the log-Jacobian is
added to the posterior so the unconstrained density is proper.  Gradients
are analytic and exact.

The per-genre noise intercepts are sampled as standardized offsets
``gamma0_z`` with ``gamma0 = gamma0_mu + sigma_gamma0 * gamma0_z``: noise
scales are weakly identified even with hundreds of rows per genre, and
sampling the offsets directly, with the group scale multiplied back in,
removes the funnel that otherwise appears whenever the posterior for
``sigma_gamma0`` reaches toward zero.  The mean intercepts stay centered;
they are data-dominated and mix better that way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .features import ModelData

_LOG_2PI = float(np.log(2.0 * np.pi))

#: (likelihood, hierarchical, heteroscedastic) for the six variants.
VARIANTS: dict[str, tuple[str, bool, bool]] = {
    "normal": ("normal", False, False),
    "normal_hetero": ("normal", False, True),
    "folded": ("folded_normal", False, False),
    "folded_hetero": ("folded_normal", False, True),
    "hier": ("folded_normal", True, False),
    "hier_hetero": ("folded_normal", True, True),
}


@dataclass(frozen=True)
class ModelSpec:
    """Selects one of the six model variants plus prior scales."""

    likelihood: str = "folded_normal"
    hierarchical: bool = False
    heteroscedastic: bool = False
    prior_scale_coeff: float = 5.0
    prior_scale_sigma: float = 5.0
    target_month: int = 2

    def __post_init__(self) -> None:
        if self.likelihood not in ("normal", "folded_normal"):
            raise ValueError(f"unknown likelihood {self.likelihood!r}")
        if self.hierarchical and self.likelihood != "folded_normal":
            raise ValueError("hierarchical variants are folded-normal only")
        if not (self.prior_scale_coeff > 0 and self.prior_scale_sigma > 0):
            raise ValueError("prior scales must be positive")
        if self.target_month not in (2, 3, 4, 5):
            raise ValueError(f"target_month must be in 2..5, got {self.target_month}")

    @classmethod
    def variant(cls, name: str, target_month: int = 2) -> "ModelSpec":
        """Canonical spec for a named variant (hierarchical priors tighten to 1)."""
        try:
            likelihood, hier, hetero = VARIANTS[name]
        except KeyError:
            raise ValueError(
                f"unknown model {name!r}; choose from {sorted(VARIANTS)}"
            ) from None
        return cls(
            likelihood=likelihood,
            hierarchical=hier,
            heteroscedastic=hetero,
            prior_scale_coeff=1.0 if hier else 5.0,
            prior_scale_sigma=5.0,
            target_month=target_month,
        )

    @property
    def name(self) -> str:
        for name, combo in VARIANTS.items():
            if combo == (self.likelihood, self.hierarchical, self.heteroscedastic):
                return name
        raise AssertionError("unreachable: spec validated at construction")


@dataclass(frozen=True)
class ParamLayout:
    """Fixed ordering of the flat parameter vector for one spec/data pair.

    The unconstrained vector stores log(sigma), log(sigma_beta0), and
    log(sigma_gamma0) in the slots named "sigma", "sigma_beta0",
    "sigma_gamma0"; ``constrain`` exponentiates exactly those slots.
    The ``gamma0_z[...]`` slots are standardized offsets on both scales;
    ``ParamVector.unpack`` turns them back into per-genre intercepts.
    """

    names: tuple[str, ...]
    positive: tuple[int, ...]  # indices holding log-scale positives
    blocks: dict[str, slice]
    n_features: int
    n_genres: int

    @property
    def size(self) -> int:
        return len(self.names)

    def constrain(self, theta: np.ndarray) -> np.ndarray:
        out = np.array(theta, dtype=float, copy=True)
        idx = list(self.positive)
        out[..., idx] = np.exp(out[..., idx])
        return out

    def unconstrain(self, draw: np.ndarray) -> np.ndarray:
        out = np.array(draw, dtype=float, copy=True)
        idx = list(self.positive)
        out[..., idx] = np.log(out[..., idx])
        return out

    def index(self, name: str) -> int:
        return self.names.index(name)


def param_layout(spec: ModelSpec, data: ModelData) -> ParamLayout:
    """Build the parameter ordering for a spec against a dataset."""
    genre = (
        data.genre_names
        if data.genre_names is not None and len(data.genre_names) == data.n_genres
        else [str(i) for i in range(data.n_genres)]
    )
    return make_layout(spec, data.feature_names, genre)


def make_layout(spec: ModelSpec, feature_names: tuple[str, ...] | list[str],
                genre_names: list[str]) -> ParamLayout:
    """Parameter ordering from names alone (no dataset required)."""
    feat = tuple(feature_names)
    genre = list(genre_names)
    k = len(feat)
    j = len(genre)

    names: list[str] = []
    positive: list[int] = []
    blocks: dict[str, slice] = {}

    def block(label: str, entries: list[str], log_scale: bool = False) -> None:
        start = len(names)
        names.extend(entries)
        blocks[label] = slice(start, len(names))
        if log_scale:
            positive.extend(range(start, len(names)))

    if spec.hierarchical:
        block("beta0_mu", ["beta0_mu"])
        block("sigma_beta0", ["sigma_beta0"], log_scale=True)
        block("beta0_genre", [f"beta0[{g}]" for g in genre])
    else:
        block("beta0", ["beta0"])
    block("beta", [f"beta[{f}]" for f in feat])
    if spec.heteroscedastic:
        if spec.hierarchical:
            block("gamma0_mu", ["gamma0_mu"])
            block("sigma_gamma0", ["sigma_gamma0"], log_scale=True)
            block("gamma0_z", [f"gamma0_z[{g}]" for g in genre])
        else:
            block("gamma0", ["gamma0"])
        block("gamma", [f"gamma[{f}]" for f in feat])
    else:
        block("sigma", ["sigma"], log_scale=True)

    return ParamLayout(
        names=tuple(names),
        positive=tuple(positive),
        blocks=blocks,
        n_features=k,
        n_genres=j,
    )


@dataclass
class ParamVector:
    """Structured, constrained-scale view of one parameter point.

    Pooled models fill ``beta0``/``gamma0``; hierarchical ones fill the
    per-genre arrays plus their hyperparameters instead.  ``gamma0_genre``
    always holds actual per-genre intercepts; pack/unpack convert to and
    from the standardized offsets the sampler works in.
    """

    beta: np.ndarray
    beta0: float | None = None
    sigma: float | None = None
    beta0_genre: np.ndarray | None = None
    beta0_mu: float | None = None
    sigma_beta0: float | None = None
    gamma: np.ndarray | None = None
    gamma0: float | None = None
    gamma0_genre: np.ndarray | None = None
    gamma0_mu: float | None = None
    sigma_gamma0: float | None = None

    def pack(self, spec: ModelSpec, layout: ParamLayout) -> np.ndarray:
        """Flatten to the unconstrained vector the sampler works in."""
        theta = np.empty(layout.size)

        def put(label: str, value) -> None:
            theta[layout.blocks[label]] = value

        if spec.hierarchical:
            put("beta0_mu", self.beta0_mu)
            put("sigma_beta0", np.log(self.sigma_beta0))
            put("beta0_genre", self.beta0_genre)
        else:
            put("beta0", self.beta0)
        put("beta", self.beta)
        if spec.heteroscedastic:
            if spec.hierarchical:
                put("gamma0_mu", self.gamma0_mu)
                put("sigma_gamma0", np.log(self.sigma_gamma0))
                put("gamma0_z",
                    (np.asarray(self.gamma0_genre) - self.gamma0_mu) / self.sigma_gamma0)
            else:
                put("gamma0", self.gamma0)
            put("gamma", self.gamma)
        else:
            put("sigma", np.log(self.sigma))
        return theta

    @classmethod
    def unpack(cls, spec: ModelSpec, layout: ParamLayout, theta: np.ndarray) -> "ParamVector":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (layout.size,):
            raise ValueError(f"expected vector of length {layout.size}, got {theta.shape}")

        def get(label: str) -> np.ndarray:
            return theta[layout.blocks[label]]

        pv = cls(beta=get("beta").copy())
        if spec.hierarchical:
            pv.beta0_mu = float(get("beta0_mu")[0])
            pv.sigma_beta0 = float(np.exp(get("sigma_beta0")[0]))
            pv.beta0_genre = get("beta0_genre").copy()
        else:
            pv.beta0 = float(get("beta0")[0])
        if spec.heteroscedastic:
            if spec.hierarchical:
                pv.gamma0_mu = float(get("gamma0_mu")[0])
                pv.sigma_gamma0 = float(np.exp(get("sigma_gamma0")[0]))
                pv.gamma0_genre = pv.gamma0_mu + pv.sigma_gamma0 * get("gamma0_z")
            else:
                pv.gamma0 = float(get("gamma0")[0])
            pv.gamma = get("gamma").copy()
        else:
            pv.sigma = float(np.exp(get("sigma")[0]))
        return pv


def genre_intercept_mean(coeffs: np.ndarray, genre_set: frozenset[int] | set[int]) -> float:
    """Mean of the per-genre coefficients selected by a game's genre set."""
    if not genre_set:
        raise ValueError("genre set must be non-empty")
    idx = sorted(genre_set)
    if idx[0] < 0 or idx[-1] >= len(coeffs):
        raise ValueError(f"genre index out of range: {idx}")
    return float(np.mean([coeffs[i] for i in idx]))


def genre_matrix(genre_sets: list[frozenset[int]], n_genres: int) -> np.ndarray:
    """Row-stochastic membership matrix G with G[i, j] = 1/|G_i| for j in G_i."""
    G = np.zeros((len(genre_sets), n_genres))
    for i, s in enumerate(genre_sets):
        if not s:
            raise ValueError(f"row {i} has an empty genre set")
        w = 1.0 / len(s)
        for j in s:
            G[i, j] = w
    return G


def predictive_params(
    spec: ModelSpec,
    params: ParamVector,
    x: np.ndarray,
    genre_set: frozenset[int] | set[int] | None = None,
) -> tuple[float, float]:
    """(mu, sigma) of the predictive distribution for one feature vector.

    mu is softplus-linked for the folded-normal likelihoods and the raw
    linear predictor for the normal one; sigma is the shared scale or
    ``exp(gamma intercept + gamma . x)``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite feature vector: {x}")
    if spec.hierarchical:
        if genre_set is None:
            raise ValueError("hierarchical models need the game's genre set")
        a_beta = genre_intercept_mean(params.beta0_genre, genre_set)
    else:
        a_beta = params.beta0
    eta = a_beta + float(params.beta @ x)
    if not np.isfinite(eta):
        raise ValueError(f"non-finite linear predictor (intercept={a_beta}, x={x})")
    mu = float(np.logaddexp(0.0, eta)) if spec.likelihood == "folded_normal" else eta

    if spec.heteroscedastic:
        if spec.hierarchical:
            a_gamma = genre_intercept_mean(params.gamma0_genre, genre_set)
        else:
            a_gamma = params.gamma0
        sigma = float(np.exp(a_gamma + float(params.gamma @ x)))
    else:
        sigma = params.sigma
    return mu, sigma


# ---------------------------------------------------------------------------
# Posterior evaluation
# ---------------------------------------------------------------------------

@dataclass
class PosteriorTarget:
    """Precomputed posterior for one spec/data pair; the sampler's target.

    Evaluates the joint log density over the unconstrained parameter vector
    and its exact gradient in a single pass.
    """

    spec: ModelSpec
    data: ModelData
    layout: ParamLayout = field(init=False)
    init_scales: np.ndarray = field(init=False)
    _G: np.ndarray | None = field(init=False, default=None)
    _t: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.layout = param_layout(self.spec, self.data)
        if self.spec.hierarchical:
            self._G = genre_matrix(self.data.genre_sets, self.data.n_genres)
        self._t = target_vector(self.spec, self.data)
        # Initial draws for a coefficient should move the linear predictor
        # by O(1), not O(column scale); otherwise wide raw columns (day of
        # month spans 1..31) start chains deep in implausible regions.
        scales = np.ones(self.layout.size)
        col_rms = np.sqrt(np.mean(self.data.X**2, axis=0))
        coeff_scale = 1.0 / np.maximum(1.0, col_rms)
        scales[self.layout.blocks["beta"]] = coeff_scale
        if self.spec.heteroscedastic:
            scales[self.layout.blocks["gamma"]] = coeff_scale
        self.init_scales = scales

    @property
    def n_dim(self) -> int:
        return self.layout.size

    @property
    def names(self) -> tuple[str, ...]:
        return self.layout.names

    def initial_point(self) -> np.ndarray:
        """A ridge-regression starting point for the chains.

        The folded-normal link saturates: once the linear predictor is
        very negative for every row the likelihood is flat and a chain
        started there never finds its way back.  Starting from a rough
        least-squares fit of the transformed target keeps every chain
        inside the basin the data actually supports.
        """
        X = self.data.X
        t = self._t
        A = np.column_stack([np.ones(t.size), X])
        coef = np.linalg.solve(A.T @ A + 1e-6 * np.eye(A.shape[1]), A.T @ t)
        resid_sd = max(float(np.std(t - A @ coef)), 1e-2)
        log_sd = float(np.log(resid_sd))

        b = self.layout.blocks
        theta = np.zeros(self.layout.size)
        if self.spec.hierarchical:
            theta[b["beta0_mu"]] = coef[0]
            theta[b["sigma_beta0"]] = np.log(0.5)
            theta[b["beta0_genre"]] = coef[0]
        else:
            theta[b["beta0"]] = coef[0]
        theta[b["beta"]] = coef[1:]
        if self.spec.heteroscedastic:
            if self.spec.hierarchical:
                theta[b["gamma0_mu"]] = log_sd
                theta[b["sigma_gamma0"]] = np.log(0.5)
                theta[b["gamma0_z"]] = 0.0
            else:
                theta[b["gamma0"]] = log_sd
        else:
            theta[b["sigma"]] = log_sd
        return theta

    def constrain(self, theta: np.ndarray) -> np.ndarray:
        return self.layout.constrain(theta)

    def logp_and_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        return _logp_and_grad(self.spec, self.layout, self.data, self._G, self._t, theta)

    def logp(self, theta: np.ndarray) -> float:
        return self.logp_and_grad(theta)[0]

    def pointwise_loglik(self, theta: np.ndarray) -> np.ndarray:
        return _pointwise_loglik(self.spec, self.layout, self.data, self._G, self._t, theta)


def target_vector(spec: ModelSpec, data: ModelData) -> np.ndarray:
    """The target the likelihood sees: log1p counts, mean-shifted for normal."""
    if spec.likelihood == "normal":
        if not data.stats.target_mean > 0:
            raise ValueError("normal likelihood needs a positive training target mean")
        return data.y - np.log(data.stats.target_mean)
    return data.y


def _as_theta(spec: ModelSpec, layout: ParamLayout, params) -> np.ndarray:
    if isinstance(params, ParamVector):
        return params.pack(spec, layout)
    theta = np.asarray(params, dtype=float)
    if theta.shape != (layout.size,):
        raise ValueError(
            f"parameter vector has length {theta.shape}, expected ({layout.size},)"
        )
    return theta


def _forward(spec, layout, data, G, t, theta):
    """Shared likelihood pass: returns per-row pieces used by value and grad."""
    b = layout.blocks
    X = data.X

    if spec.hierarchical:
        a_beta = G @ theta[b["beta0_genre"]]
    else:
        a_beta = theta[b["beta0"]][0]
    eta = a_beta + X @ theta[b["beta"]]

    if spec.likelihood == "folded_normal":
        mu = np.logaddexp(0.0, eta)
        dmu_deta = expit(eta)
    else:
        mu = eta
        dmu_deta = None  # identity link

    if spec.heteroscedastic:
        if spec.hierarchical:
            g0 = (theta[b["gamma0_mu"]][0]
                  + np.exp(theta[b["sigma_gamma0"]][0]) * theta[b["gamma0_z"]])
            a_gamma = G @ g0
        else:
            a_gamma = theta[b["gamma0"]][0]
        log_sigma = a_gamma + X @ theta[b["gamma"]]
    else:
        log_sigma = np.full(data.n_rows, theta[b["sigma"]][0])

    inv_var = np.exp(-2.0 * log_sigma)

    if spec.likelihood == "folded_normal":
        d1 = t - mu
        d2 = t + mu
        l1 = -log_sigma - 0.5 * _LOG_2PI - 0.5 * d1 * d1 * inv_var
        l2 = -log_sigma - 0.5 * _LOG_2PI - 0.5 * d2 * d2 * inv_var
        loglik = np.logaddexp(l1, l2)
        w1 = expit(l1 - l2)
        w2 = 1.0 - w1
        g_mu = inv_var * (w1 * d1 - w2 * d2)
        g_log_sigma = (w1 * d1 * d1 + w2 * d2 * d2) * inv_var - 1.0
    else:
        d1 = t - mu
        loglik = -log_sigma - 0.5 * _LOG_2PI - 0.5 * d1 * d1 * inv_var
        g_mu = inv_var * d1
        g_log_sigma = d1 * d1 * inv_var - 1.0

    g_eta = g_mu * dmu_deta if dmu_deta is not None else g_mu
    return loglik, g_eta, g_log_sigma


def _cauchy_lp(z, s):
    z = np.asarray(z, dtype=float)
    return float(np.sum(-np.log(np.pi * s) - np.log1p((z / s) ** 2)))


def _cauchy_grad(z, s):
    z = np.asarray(z, dtype=float)
    return -2.0 * z / (s * s + z * z)


def _half_cauchy_log_lp(log_s_value, s):
    # density of log(x) for x ~ HalfCauchy(0, s); includes the +log_s Jacobian
    x2 = np.exp(2.0 * log_s_value)
    return float(np.log(2.0) - np.log(np.pi * s) - np.log1p(x2 / (s * s)) + log_s_value)


def _half_cauchy_log_grad(log_s_value, s):
    x2 = np.exp(2.0 * log_s_value)
    return 1.0 - 2.0 * x2 / (s * s + x2)


def _prior_and_grad(spec, layout, theta):
    """Log prior over the unconstrained vector, Jacobians included."""
    b = layout.blocks
    s_c = spec.prior_scale_coeff
    s_s = spec.prior_scale_sigma
    lp = 0.0
    grad = np.zeros(layout.size)

    beta = theta[b["beta"]]
    lp += _cauchy_lp(beta, s_c)
    grad[b["beta"]] += _cauchy_grad(beta, s_c)

    if spec.hierarchical:
        mu_b = theta[b["beta0_mu"]][0]
        log_sb = theta[b["sigma_beta0"]][0]
        sigma_b = np.exp(log_sb)
        b0 = theta[b["beta0_genre"]]
        lp += _cauchy_lp(mu_b, s_c)
        grad[b["beta0_mu"]] += _cauchy_grad(mu_b, s_c)
        lp += _half_cauchy_log_lp(log_sb, s_c)
        grad[b["sigma_beta0"]] += _half_cauchy_log_grad(log_sb, s_c)
        delta = b0 - mu_b
        lp += float(np.sum(-log_sb - 0.5 * _LOG_2PI - 0.5 * (delta / sigma_b) ** 2))
        grad[b["beta0_genre"]] += -delta / sigma_b**2
        grad[b["beta0_mu"]] += float(np.sum(delta)) / sigma_b**2
        grad[b["sigma_beta0"]] += float(np.sum((delta / sigma_b) ** 2 - 1.0))
    else:
        b0 = theta[b["beta0"]][0]
        lp += _cauchy_lp(b0, s_c)
        grad[b["beta0"]] += _cauchy_grad(b0, s_c)

    if spec.heteroscedastic:
        gamma = theta[b["gamma"]]
        lp += _cauchy_lp(gamma, s_c)
        grad[b["gamma"]] += _cauchy_grad(gamma, s_c)
        if spec.hierarchical:
            mu_g = theta[b["gamma0_mu"]][0]
            log_sg = theta[b["sigma_gamma0"]][0]
            z = theta[b["gamma0_z"]]
            lp += _cauchy_lp(mu_g, s_c)
            grad[b["gamma0_mu"]] += _cauchy_grad(mu_g, s_c)
            lp += _half_cauchy_log_lp(log_sg, s_c)
            grad[b["sigma_gamma0"]] += _half_cauchy_log_grad(log_sg, s_c)
            # the offsets carry the group structure into the likelihood, so
            # their prior is plain standard normal
            lp += float(np.sum(-0.5 * _LOG_2PI - 0.5 * z * z))
            grad[b["gamma0_z"]] += -z
        else:
            g0 = theta[b["gamma0"]][0]
            lp += _cauchy_lp(g0, s_c)
            grad[b["gamma0"]] += _cauchy_grad(g0, s_c)
    else:
        log_s = theta[b["sigma"]][0]
        lp += _half_cauchy_log_lp(log_s, s_s)
        grad[b["sigma"]] += _half_cauchy_log_grad(log_s, s_s)

    return lp, grad


def _pointwise_loglik(spec, layout, data, G, t, theta):
    loglik, _, _ = _forward(spec, layout, data, G, t, theta)
    return loglik


def _logp_and_grad(spec, layout, data, G, t, theta):
    b = layout.blocks
    X = data.X
    loglik, g_eta, g_log_sigma = _forward(spec, layout, data, G, t, theta)
    lp, grad = _prior_and_grad(spec, layout, theta)
    lp += float(np.sum(loglik))

    grad[b["beta"]] += X.T @ g_eta
    if spec.hierarchical:
        grad[b["beta0_genre"]] += G.T @ g_eta
    else:
        grad[b["beta0"]] += float(np.sum(g_eta))

    if spec.heteroscedastic:
        grad[b["gamma"]] += X.T @ g_log_sigma
        if spec.hierarchical:
            gg = G.T @ g_log_sigma  # d loglik / d per-genre intercept
            sigma_g = np.exp(theta[b["sigma_gamma0"]][0])
            z = theta[b["gamma0_z"]]
            grad[b["gamma0_z"]] += sigma_g * gg
            grad[b["gamma0_mu"]] += float(np.sum(gg))
            grad[b["sigma_gamma0"]] += sigma_g * float(np.dot(z, gg))
        else:
            grad[b["gamma0"]] += float(np.sum(g_log_sigma))
    else:
        grad[b["sigma"]] += float(np.sum(g_log_sigma))

    return lp, grad


def log_posterior(spec: ModelSpec, params, data: ModelData) -> float:
    """Joint log density (likelihood + priors + Jacobians), unconstrained scale.

    ``params`` is either a flat unconstrained vector or a ParamVector.
    """
    layout = param_layout(spec, data)
    theta = _as_theta(spec, layout, params)
    G = genre_matrix(data.genre_sets, data.n_genres) if spec.hierarchical else None
    return _logp_and_grad(spec, layout, data, G, target_vector(spec, data), theta)[0]


def log_posterior_gradient(spec: ModelSpec, params, data: ModelData) -> np.ndarray:
    """Exact gradient of ``log_posterior`` in the unconstrained parameterization."""
    layout = param_layout(spec, data)
    theta = _as_theta(spec, layout, params)
    G = genre_matrix(data.genre_sets, data.n_genres) if spec.hierarchical else None
    return _logp_and_grad(spec, layout, data, G, target_vector(spec, data), theta)[1]


def pointwise_loglik(spec: ModelSpec, params, data: ModelData) -> np.ndarray:
    """Per-row log likelihood (no priors); sums to the likelihood portion."""
    layout = param_layout(spec, data)
    theta = _as_theta(spec, layout, params)
    G = genre_matrix(data.genre_sets, data.n_genres) if spec.hierarchical else None
    return _pointwise_loglik(spec, layout, data, G, target_vector(spec, data), theta)


def loglik_matrix(spec: ModelSpec, draws: np.ndarray, layout: ParamLayout, data: ModelData) -> np.ndarray:
    """S x N pointwise log likelihood over constrained draws (chains flattened)."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 3:
        draws = draws.reshape(-1, draws.shape[-1])
    G = genre_matrix(data.genre_sets, data.n_genres) if spec.hierarchical else None
    t = target_vector(spec, data)
    out = np.empty((draws.shape[0], data.n_rows))
    for s in range(draws.shape[0]):
        theta = layout.unconstrain(draws[s])
        out[s] = _pointwise_loglik(spec, layout, data, G, t, theta)
    return out
