"""Data-dependent regularization levels for the normalized-design LASSO.

All logarithms are natural. Three levels are provided, from cheapest to
most conservative:

  * d_easy(mu)   = sqrt(mu log p / (n q (1-q))), with mu an estimate of
                   ||x*||_1 (or the known value);
  * lambda_pg    = gamma * (d_old + Gaussian-noise terms), the level that
                   also dominates additive noise of scale sigma;
  * d_hat        = the fully data-driven level built from the count
                   statistics W and N_hat, valid without knowledge of
                   ||x*||_1 (Poisson-only route).

The solver's penalty convention is (1/2)||y~ - A~ x||^2 + lam ||x||_1, so
these d-scale quantities multiply gamma and feed the solver directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TuningReport",
    "compute_w",
    "compute_n_hat",
    "compute_d_hat",
    "compute_d_easy",
    "compute_lambda_pg",
    "tuning_report",
]


@dataclass(frozen=True)
class TuningReport:
    """All regularization quantities computed for one data set."""

    n_hat: float
    w: float
    d_hat: float
    d_easy: float
    lambda_pg: float
    c_q: float


def compute_w(a_raw: np.ndarray, q: float) -> float:
    """max_{u,k} sum_i a_{i,u} * V_{k,i} with
    V_{k,l} = ((n a_{l,k} - sum_i a_{i,k}) / (n (n-1) q (1-q)))^2.

    Because a is binary, V_{k,.} takes only two values per column k, so
    the maximum reduces to count algebra on the p x p co-occurrence
    matrix. Memory is O(p^2); intended for moderate p.
    """
    a = np.asarray(a_raw)
    n = a.shape[0]
    if n < 2:
        raise ValueError("W needs at least two rows")
    af = a.astype(np.float64, copy=False)
    counts = af.sum(axis=0)
    denom = n * (n - 1) * q * (1.0 - q)
    v_one = ((n - counts) / denom) ** 2     # V_{k,l} on rows with a_{l,k} = 1
    v_zero = (counts / denom) ** 2          # V_{k,l} on rows with a_{l,k} = 0
    cooc = af.T @ af                        # cooc[u, k] = #{i : a_iu = a_ik = 1}
    scores = cooc * v_one[np.newaxis, :] + (counts[:, np.newaxis] - cooc) * v_zero[np.newaxis, :]
    return float(scores.max())


def compute_n_hat(y: np.ndarray, n: int, p: int, q: float) -> float:
    """Count-based estimator of ||x*||_1:

        (sqrt(1.5 log p) + sqrt(2.5 log p + sum(y)))^2
        ----------------------------------------------
        n q - sqrt(6 n q (1-q) log p) - (1-q) log p

    The denominator must be positive, which bounds how small n can be at
    a given (q, p). A negative response sum (possible under additive
    Gaussian noise) is clamped to zero with a warning.
    """
    logp = math.log(p)
    denom = n * q - math.sqrt(6.0 * n * q * (1.0 - q) * logp) - (1.0 - q) * logp
    if denom <= 0:
        raise ValueError(f"n too small for N_hat at this (q, p): denominator {denom:.3g}")
    total = float(np.sum(y))
    if total < 0:
        warnings.warn("negative response sum clamped to 0 in N_hat", RuntimeWarning,
                      stacklevel=2)
        total = 0.0
    num = (math.sqrt(1.5 * logp) + math.sqrt(2.5 * logp + total)) ** 2
    return num / denom


def compute_d_hat(n_hat: float, w: float, n: int, p: int, q: float) -> float:
    """Fully data-driven regularization level built from N_hat and W."""
    logp = math.log(p)
    return (
        math.sqrt(6.0 * n_hat * w * logp)
        + logp / ((n - 1) * q * (1.0 - q))
        + (378.0 * logp / n) * (1.0 + ((1.0 - q) / q) * (3.0 * logp / n)) * n_hat
    )


def compute_d_easy(mu_hat: float, n: int, p: int, q: float) -> float:
    """sqrt(mu_hat log p / (n q (1-q))) for a known or estimated ||x*||_1."""
    if mu_hat < 0:
        raise ValueError("mu_hat must be nonnegative")
    return math.sqrt(mu_hat * math.log(p) / (n * q * (1.0 - q)))


def compute_lambda_pg(d_old: float, sigma: float, n: int, p: int, q: float,
                      gamma: float) -> float:
    """Penalty level for the combined Poisson plus Gaussian noise model:

        gamma * (d_old + sigma sqrt(8 log p / n)
                       + sigma sqrt(c_q log p / (q (1-q) n))),

    with c_q = 1 + sqrt(1 / (q (1-q))). Requires gamma > 2.
    """
    if gamma <= 2.0:
        raise ValueError("gamma must exceed 2")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    logp = math.log(p)
    c_q = 1.0 + math.sqrt(1.0 / (q * (1.0 - q)))
    return gamma * (
        d_old
        + sigma * math.sqrt(8.0 * logp / n)
        + sigma * math.sqrt(c_q * logp / (q * (1.0 - q) * n))
    )


def tuning_report(a_raw: np.ndarray, y: np.ndarray, q: float, mu_hat: float,
                  sigma: float, gamma: float) -> TuningReport:
    """Evaluate every tuning quantity on one data set."""
    n, p = np.asarray(a_raw).shape
    w = compute_w(a_raw, q)
    n_hat = compute_n_hat(y, n, p, q)
    d_easy = compute_d_easy(mu_hat, n, p, q)
    return TuningReport(
        n_hat=n_hat,
        w=w,
        d_hat=compute_d_hat(n_hat, w, n, p, q),
        d_easy=d_easy,
        lambda_pg=compute_lambda_pg(d_easy, sigma, n, p, q, gamma),
        c_q=1.0 + math.sqrt(1.0 / (q * (1.0 - q))),
    )
