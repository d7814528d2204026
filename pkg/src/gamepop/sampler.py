"""No-U-Turn sampler with step size and diagonal mass matrix adaptation.

The target is any object exposing ``n_dim`` and ``logp_and_grad(theta)``
over an unconstrained parameter vector; ``constrain`` and ``names`` are
used when present.  Trajectories are built by iterative doubling with
multinomial sampling of the proposal (uniform within a subtree, biased
toward the new half when merging at the top level) and stop on a
divergence or when either end of the trajectory turns back.

Warmup follows the windowed scheme used by most HMC implementations:
an initial stretch adapts only the step size, a sequence of doubling
windows estimates the posterior variance for the mass matrix, and a
final stretch lets the step size settle against the last metric.

Chains are deterministic given (seed, chain index): each chain owns a
counter-based Philox generator keyed by exactly that pair, so results
are reproducible bit for bit regardless of how many chains run.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

_LOG_HALF = float(np.log(0.5))


@dataclass(frozen=True)
class SamplerConfig:
    n_chains: int = 4
    n_warmup: int = 1000
    n_draws: int = 1000
    seed: int = 0
    target_accept: float = 0.8
    max_tree_depth: int = 10
    divergence_threshold: float = 1000.0
    step_size: float | None = None  # fixed step size; disables step adaptation
    adapt_mass: bool = True
    init_radius: float = 2.0
    max_init_tries: int = 100
    init_buffer: int = 75
    term_buffer: int = 50
    base_window: int = 25

    def __post_init__(self) -> None:
        if self.n_chains < 1 or self.n_draws < 1 or self.n_warmup < 0:
            raise ValueError("need n_chains >= 1, n_draws >= 1, n_warmup >= 0")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie strictly in (0, 1)")
        if self.max_tree_depth < 1:
            raise ValueError("max_tree_depth must be at least 1")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("fixed step_size must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class ChainStats:
    step_size: float
    inv_mass: np.ndarray
    accept_rate: float
    divergences: int
    warmup_divergences: int
    max_depth_hits: int
    elapsed: float


@dataclass
class PosteriorSamples:
    """Draws from every chain plus per-chain adaptation outcomes.

    ``draws`` hold constrained-scale values, ``theta`` the raw
    unconstrained vectors the sampler worked in; both are indexed
    (chain, draw, parameter).
    """

    draws: np.ndarray
    theta: np.ndarray
    logp: np.ndarray
    names: tuple[str, ...]
    stats: list[ChainStats]
    seed: int

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_draws(self) -> int:
        return self.draws.shape[1]

    @property
    def n_params(self) -> int:
        return self.draws.shape[2]

    def get(self, name: str) -> np.ndarray:
        """Constrained draws of one parameter, shape (chains, draws)."""
        try:
            j = self.names.index(name)
        except ValueError:
            raise KeyError(f"no parameter named {name!r}; have {self.names}") from None
        return self.draws[:, :, j]

    def flat(self, name: str | None = None) -> np.ndarray:
        """Chains stacked: (chains*draws,) for one name or (chains*draws, dim)."""
        if name is None:
            return self.draws.reshape(-1, self.n_params)
        return self.get(name).reshape(-1)

    @property
    def total_divergences(self) -> int:
        return sum(s.divergences for s in self.stats)


# ---------------------------------------------------------------------------
# Adaptation helpers
# ---------------------------------------------------------------------------

class _Welford:
    """Streaming mean/variance of the draws inside one adaptation window."""

    def __init__(self, dim: int) -> None:
        self.dim = dim
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros(self.dim)

    def push(self, x: np.ndarray) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def regularized_variance(self) -> np.ndarray:
        """Sample variance shrunk toward 1e-3 for short windows."""
        if self.n < 2:
            return np.ones(self.dim)
        var = self.m2 / (self.n - 1)
        w = self.n / (self.n + 5.0)
        return w * var + 1e-3 * (1.0 - w)


class _DualAveraging:
    """Nesterov dual averaging of log step size toward a target accept rate."""

    def __init__(self, step_size: float, target_accept: float,
                 gamma: float = 0.05, t0: float = 10.0, kappa: float = 0.75) -> None:
        self.mu = float(np.log(10.0 * step_size))
        self.target = target_accept
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.m = 0
        self.h_bar = 0.0
        self.log_eps = float(np.log(step_size))
        self.log_eps_bar = 0.0

    def update(self, accept_prob: float) -> float:
        self.m += 1
        frac = 1.0 / (self.m + self.t0)
        self.h_bar = (1.0 - frac) * self.h_bar + frac * (self.target - accept_prob)
        self.log_eps = self.mu - np.sqrt(self.m) / self.gamma * self.h_bar
        w = self.m ** -self.kappa
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar
        return float(np.exp(self.log_eps))

    @property
    def averaged(self) -> float:
        return float(np.exp(self.log_eps_bar))


def mass_window_ends(n_warmup: int, init_buffer: int = 75,
                     term_buffer: int = 50, base_window: int = 25) -> tuple[int, list[int]]:
    """(first slow iteration, iteration counts at which the metric updates).

    Windows double in length and the last one absorbs any remainder so it
    always finishes ``term_buffer`` iterations before warmup ends.  Short
    warmups fall back to 15% / 75% / 10% splits; below 20 iterations there
    is no metric adaptation at all.
    """
    if n_warmup < 20:
        return n_warmup, []
    if init_buffer + base_window + term_buffer > n_warmup:
        init_buffer = int(0.15 * n_warmup)
        term_buffer = int(0.10 * n_warmup)
        base_window = n_warmup - init_buffer - term_buffer
    ends: list[int] = []
    pos = init_buffer
    width = base_window
    last = n_warmup - term_buffer
    while True:
        end = pos + width
        if end + 2 * width > last:
            end = last
        ends.append(end)
        if end >= last:
            break
        pos = end
        width *= 2
    return init_buffer, ends


# ---------------------------------------------------------------------------
# Hamiltonian pieces
# ---------------------------------------------------------------------------

def _eval_target(target, theta: np.ndarray) -> tuple[float, np.ndarray]:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        logp, grad = target.logp_and_grad(theta)
    if not np.isfinite(logp) or not np.all(np.isfinite(grad)):
        return -np.inf, np.zeros_like(theta)
    return float(logp), grad


def _kinetic(r: np.ndarray, inv_mass: np.ndarray) -> float:
    # momenta explode right before a divergence is declared; the inf this
    # produces is how the trajectory gets rejected, so don't warn about it
    with np.errstate(over="ignore"):
        return 0.5 * float(np.dot(r * r, inv_mass))


def _leapfrog(target, theta, r, grad, eps, inv_mass):
    r_half = r + 0.5 * eps * grad
    theta1 = theta + eps * inv_mass * r_half
    logp1, grad1 = _eval_target(target, theta1)
    r1 = r_half + 0.5 * eps * grad1
    return theta1, r1, logp1, grad1


def _no_uturn(theta_minus, r_minus, theta_plus, r_plus, inv_mass) -> bool:
    span = theta_plus - theta_minus
    return (span @ (inv_mass * r_minus)) >= 0.0 and (span @ (inv_mass * r_plus)) >= 0.0


def find_reasonable_epsilon(target, theta, logp, grad, inv_mass, rng) -> float:
    """Double/halve an initial step until one leapfrog crosses 50% acceptance."""
    eps = 1.0
    r = rng.standard_normal(theta.size) / np.sqrt(inv_mass)
    joint0 = logp - _kinetic(r, inv_mass)

    def joint_after(step: float) -> float:
        _, r1, logp1, _ = _leapfrog(target, theta, r, grad, step, inv_mass)
        return logp1 - _kinetic(r1, inv_mass) if np.isfinite(logp1) else -np.inf

    delta = joint_after(eps) - joint0
    direction = 1.0 if delta > _LOG_HALF else -1.0
    while direction * delta > -direction * np.log(2.0):
        eps *= 2.0**direction
        if not 1e-10 < eps < 1e7:
            raise RuntimeError(f"step size search diverged (reached {eps:g})")
        delta = joint_after(eps) - joint0
    return eps


@dataclass
class _Subtree:
    theta_minus: np.ndarray
    r_minus: np.ndarray
    grad_minus: np.ndarray
    theta_plus: np.ndarray
    r_plus: np.ndarray
    grad_plus: np.ndarray
    prop_theta: np.ndarray
    prop_logp: float
    prop_grad: np.ndarray
    log_w: float
    alpha_sum: float
    n_alpha: int
    ok: bool
    divergent: bool


def _build_tree(target, theta, r, grad, joint0, direction, depth,
                eps, inv_mass, threshold, rng) -> _Subtree:
    if depth == 0:
        theta1, r1, logp1, grad1 = _leapfrog(target, theta, r, grad, direction * eps, inv_mass)
        joint = logp1 - _kinetic(r1, inv_mass) if np.isfinite(logp1) else -np.inf
        log_w = joint - joint0
        if not np.isfinite(log_w):
            log_w = -np.inf
        divergent = log_w < -threshold
        alpha = float(np.exp(min(0.0, log_w)))
        return _Subtree(theta1, r1, grad1, theta1, r1, grad1,
                        theta1, logp1, grad1, log_w, alpha, 1, not divergent, divergent)

    inner = _build_tree(target, theta, r, grad, joint0, direction, depth - 1,
                        eps, inv_mass, threshold, rng)
    if not inner.ok:
        return inner
    if direction > 0:
        outer = _build_tree(target, inner.theta_plus, inner.r_plus, inner.grad_plus,
                            joint0, direction, depth - 1, eps, inv_mass, threshold, rng)
        ends = (inner.theta_minus, inner.r_minus, inner.grad_minus,
                outer.theta_plus, outer.r_plus, outer.grad_plus)
    else:
        outer = _build_tree(target, inner.theta_minus, inner.r_minus, inner.grad_minus,
                            joint0, direction, depth - 1, eps, inv_mass, threshold, rng)
        ends = (outer.theta_minus, outer.r_minus, outer.grad_minus,
                inner.theta_plus, inner.r_plus, inner.grad_plus)

    alpha = inner.alpha_sum + outer.alpha_sum
    n_alpha = inner.n_alpha + outer.n_alpha
    divergent = inner.divergent or outer.divergent
    log_w = float(np.logaddexp(inner.log_w, outer.log_w))

    # Uniform multinomial choice between the two halves of this subtree.
    if outer.ok and log_w > -np.inf and np.log(rng.random()) < outer.log_w - log_w:
        prop = (outer.prop_theta, outer.prop_logp, outer.prop_grad)
    else:
        prop = (inner.prop_theta, inner.prop_logp, inner.prop_grad)

    ok = outer.ok and _no_uturn(ends[0], ends[1], ends[3], ends[4], inv_mass)
    return _Subtree(*ends, *prop, log_w, alpha, n_alpha, ok, divergent)


def _transition(target, theta, logp, grad, eps, inv_mass, max_depth, threshold, rng):
    """One NUTS update; returns the new state plus adaptation statistics."""
    r0 = rng.standard_normal(theta.size) / np.sqrt(inv_mass)
    joint0 = logp - _kinetic(r0, inv_mass)

    theta_minus = theta_plus = theta
    r_minus = r_plus = r0
    grad_minus = grad_plus = grad
    prop_theta, prop_logp, prop_grad = theta, logp, grad
    log_w = 0.0
    alpha_sum = 0.0
    n_alpha = 0
    divergent = False
    doublings = 0

    for depth in range(max_depth):
        direction = 1 if rng.random() < 0.5 else -1
        if direction > 0:
            sub = _build_tree(target, theta_plus, r_plus, grad_plus, joint0,
                              1, depth, eps, inv_mass, threshold, rng)
        else:
            sub = _build_tree(target, theta_minus, r_minus, grad_minus, joint0,
                              -1, depth, eps, inv_mass, threshold, rng)
        alpha_sum += sub.alpha_sum
        n_alpha += sub.n_alpha
        divergent = divergent or sub.divergent
        doublings = depth + 1
        if not sub.ok:
            break
        # Biased progressive sampling favours the fresh half of the trajectory.
        if sub.log_w > -np.inf and np.log(rng.random()) < sub.log_w - log_w:
            prop_theta, prop_logp, prop_grad = sub.prop_theta, sub.prop_logp, sub.prop_grad
        log_w = float(np.logaddexp(log_w, sub.log_w))
        if direction > 0:
            theta_plus, r_plus, grad_plus = sub.theta_plus, sub.r_plus, sub.grad_plus
        else:
            theta_minus, r_minus, grad_minus = sub.theta_minus, sub.r_minus, sub.grad_minus
        if not _no_uturn(theta_minus, r_minus, theta_plus, r_plus, inv_mass):
            break

    accept = alpha_sum / n_alpha if n_alpha else 0.0
    return prop_theta, prop_logp, prop_grad, accept, divergent, doublings


# ---------------------------------------------------------------------------
# Chain driver
# ---------------------------------------------------------------------------

def _initial_point(target, rng, config: SamplerConfig, init):
    if init is not None:
        theta = np.asarray(init, dtype=float).copy()
        if theta.shape != (target.n_dim,):
            raise ValueError(f"init has shape {theta.shape}, expected ({target.n_dim},)")
        logp, grad = _eval_target(target, theta)
        if not np.isfinite(logp):
            raise ValueError("supplied initial point has non-finite density")
        return theta, logp, grad
    scales = getattr(target, "init_scales", None)
    if scales is None:
        scales = np.ones(target.n_dim)
    base_fn = getattr(target, "initial_point", None)
    base = np.asarray(base_fn(), dtype=float) if base_fn is not None else None
    for _ in range(config.max_init_tries):
        jitter = rng.uniform(-config.init_radius, config.init_radius, target.n_dim) * scales
        # jitter around a target-supplied point when there is one,
        # otherwise around the origin
        theta = base + 0.25 * jitter if base is not None else jitter
        logp, grad = _eval_target(target, theta)
        if np.isfinite(logp):
            return theta, logp, grad
    raise RuntimeError(
        f"no finite starting point found in {config.max_init_tries} tries; "
        "check the model against the data"
    )


def _run_chain(target, config: SamplerConfig, chain: int, init):
    rng = np.random.Generator(np.random.Philox(key=[config.seed, chain]))
    start = time.perf_counter()
    dim = target.n_dim
    inv_mass = np.ones(dim)
    theta, logp, grad = _initial_point(target, rng, config, init)

    adapt_step = config.step_size is None
    eps = config.step_size if config.step_size is not None else \
        find_reasonable_epsilon(target, theta, logp, grad, inv_mass, rng)
    averaging = _DualAveraging(eps, config.target_accept) if adapt_step else None

    if config.adapt_mass and config.n_warmup > 0:
        slow_start, window_ends = mass_window_ends(
            config.n_warmup, config.init_buffer, config.term_buffer, config.base_window)
    else:
        slow_start, window_ends = config.n_warmup, []
    welford = _Welford(dim)
    next_window = 0
    warmup_div = 0

    for m in range(config.n_warmup):
        theta, logp, grad, accept, divergent, _ = _transition(
            target, theta, logp, grad, eps, inv_mass,
            config.max_tree_depth, config.divergence_threshold, rng)
        warmup_div += divergent
        if adapt_step:
            eps = averaging.update(accept)
        if next_window < len(window_ends) and m >= slow_start:
            welford.push(theta)
            if m + 1 == window_ends[next_window]:
                inv_mass = welford.regularized_variance()
                welford.reset()
                next_window += 1
                if adapt_step:
                    eps = find_reasonable_epsilon(target, theta, logp, grad, inv_mass, rng)
                    averaging = _DualAveraging(eps, config.target_accept)
    if adapt_step and config.n_warmup > 0:
        eps = averaging.averaged

    theta_out = np.empty((config.n_draws, dim))
    logp_out = np.empty(config.n_draws)
    divergences = 0
    depth_hits = 0
    accept_total = 0.0
    for s in range(config.n_draws):
        theta, logp, grad, accept, divergent, doublings = _transition(
            target, theta, logp, grad, eps, inv_mass,
            config.max_tree_depth, config.divergence_threshold, rng)
        theta_out[s] = theta
        logp_out[s] = logp
        divergences += divergent
        depth_hits += doublings >= config.max_tree_depth
        accept_total += accept

    elapsed = time.perf_counter() - start
    rate = divergences / config.n_draws
    if rate > 0.10:
        logger.warning(
            "chain %d: %d of %d draws diverged (%.1f%%); results are unreliable, "
            "consider a higher target_accept or a reparameterization",
            chain, divergences, config.n_draws, 100.0 * rate)
    stats = ChainStats(
        step_size=float(eps),
        inv_mass=inv_mass.copy(),
        accept_rate=accept_total / config.n_draws,
        divergences=divergences,
        warmup_divergences=warmup_div,
        max_depth_hits=depth_hits,
        elapsed=elapsed,
    )
    return theta_out, logp_out, stats


def sample_posterior(target, config: SamplerConfig | None = None,
                     init: np.ndarray | None = None) -> PosteriorSamples:
    """Run all chains against a target and collect draws on both scales."""
    config = config or SamplerConfig()
    names = tuple(getattr(target, "names", ()) or
                  (f"x{i}" for i in range(target.n_dim)))
    if len(names) != target.n_dim:
        raise ValueError(f"target exposes {len(names)} names for {target.n_dim} dims")
    constrain = getattr(target, "constrain", None)

    theta = np.empty((config.n_chains, config.n_draws, target.n_dim))
    logp = np.empty((config.n_chains, config.n_draws))
    stats: list[ChainStats] = []
    for chain in range(config.n_chains):
        theta_c, logp_c, stats_c = _run_chain(target, config, chain, init)
        theta[chain] = theta_c
        logp[chain] = logp_c
        stats.append(stats_c)
        logger.info(
            "chain %d finished: %.1fs, step %.3g, accept %.2f, %d divergences",
            chain, stats_c.elapsed, stats_c.step_size,
            stats_c.accept_rate, stats_c.divergences)

    draws = constrain(theta) if constrain is not None else theta.copy()
    return PosteriorSamples(draws=draws, theta=theta, logp=logp,
                            names=names, stats=stats, seed=config.seed)
