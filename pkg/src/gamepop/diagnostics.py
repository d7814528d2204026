"""Convergence diagnostics over raw chain arrays.

Both statistics take draws shaped (chains, draws).  R-hat is the
rank-normalized split version: chains are halved, pooled draws are
replaced by normal scores, and the reported value is the worse of the
location-sensitive statistic and the one computed on absolute
deviations from the median, so both mean and tail disagreements
register.  Effective sample size combines chains through the usual
variance decomposition with Geyer's initial monotone sequence
truncation of the autocorrelation sum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

logger = logging.getLogger(__name__)

RHAT_THRESHOLD = 1.01


def _split_chains(x: np.ndarray) -> np.ndarray:
    """(C, S) -> (2C, S//2); the middle draw of odd-length chains is dropped."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected (chains, draws), got shape {x.shape}")
    half = x.shape[1] // 2
    if half < 1:
        raise ValueError("need at least 2 draws per chain to split")
    return np.vstack([x[:, :half], x[:, x.shape[1] - half:]])


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    """Map pooled draws to normal scores via fractional ranks."""
    ranks = rankdata(x, method="average").reshape(x.shape)
    return ndtri((ranks - 0.375) / (x.size + 0.25))


def _basic_rhat(x: np.ndarray) -> float:
    """Classic potential scale reduction on already-split chains."""
    n = x.shape[1]
    chain_means = x.mean(axis=1)
    w = float(np.mean(np.var(x, axis=1, ddof=1)))
    b = n * float(np.var(chain_means, ddof=1))
    if w <= 0.0:
        return np.inf
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def rhat(x: np.ndarray) -> float:
    """Rank-normalized split R-hat; 1.0 for constant input."""
    split = _split_chains(x)
    if np.allclose(split, split.flat[0], rtol=0.0, atol=0.0):
        return 1.0
    bulk = _basic_rhat(_rank_normalize(split))
    folded = np.abs(split - np.median(split))
    if np.allclose(folded, folded.flat[0], rtol=0.0, atol=0.0):
        return bulk
    tail = _basic_rhat(_rank_normalize(folded))
    return max(bulk, tail)


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased per-chain autocovariance via FFT, rows are chains."""
    n = x.shape[1]
    centered = x - x.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n]
    return acov / n


def ess(x: np.ndarray) -> float:
    """Multi-chain effective sample size; 0 with a warning when constant."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected (chains, draws), got shape {x.shape}")
    m, n = x.shape
    if n < 4:
        raise ValueError("need at least 4 draws per chain")
    if np.allclose(x, x.flat[0], rtol=0.0, atol=0.0):
        logger.warning("effective sample size of a constant sequence is 0")
        return 0.0

    acov = _autocovariance(x)
    mean_var = float(np.mean(acov[:, 0])) * n / (n - 1)
    var_plus = mean_var * (n - 1) / n
    if m > 1:
        var_plus += float(np.var(x.mean(axis=1), ddof=1))
    if var_plus <= 0.0:
        logger.warning("effective sample size of a constant sequence is 0")
        return 0.0

    mean_acov = acov.mean(axis=0)
    rho = np.zeros(n)
    rho[0] = 1.0
    rho[1] = 1.0 - (mean_var - mean_acov[1]) / var_plus

    # Sum paired autocorrelations while the pairs stay positive.
    s = 1
    rho_even, rho_odd = rho[0], rho[1]
    while s < n - 4 and rho_even + rho_odd > 0.0:
        rho_even = 1.0 - (mean_var - mean_acov[s + 1]) / var_plus
        rho_odd = 1.0 - (mean_var - mean_acov[s + 2]) / var_plus
        if rho_even + rho_odd >= 0.0:
            rho[s + 1] = rho_even
            rho[s + 2] = rho_odd
        s += 2
    max_s = s
    if rho_even > 0.0:
        rho[max_s + 1] = rho_even

    # Enforce a non-increasing sequence of pair sums.
    for t in range(1, max_s - 2, 2):
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]

    tau = -1.0 + 2.0 * float(np.sum(rho[:max_s])) + rho[max_s + 1]
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


@dataclass(frozen=True)
class ParameterDiagnostics:
    name: str
    rhat: float
    ess: float

    @property
    def converged(self) -> bool:
        return self.rhat <= RHAT_THRESHOLD


def diagnose(draws: np.ndarray, names: tuple[str, ...] | list[str]) -> list[ParameterDiagnostics]:
    """Per-parameter diagnostics over a (chains, draws, params) array."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 3 or draws.shape[2] != len(names):
        raise ValueError(
            f"expected (chains, draws, {len(names)}), got shape {draws.shape}")
    out = []
    for j, name in enumerate(names):
        x = draws[:, :, j]
        out.append(ParameterDiagnostics(name=name, rhat=rhat(x), ess=ess(x)))
    return out


def worst_rhat(results: list[ParameterDiagnostics]) -> ParameterDiagnostics:
    return max(results, key=lambda r: r.rhat)


def flag_convergence(results: list[ParameterDiagnostics]) -> list[str]:
    """Names of parameters whose R-hat exceeds the 1.01 threshold."""
    flagged = [r.name for r in results if not r.converged]
    if flagged:
        logger.warning("R-hat above %.2f for: %s", RHAT_THRESHOLD, ", ".join(flagged))
    return flagged
