"""Scalar nuisance estimators built from the all-ones hold-out rows.

On those rows the observations are i.i.d. with mean ||x*||_1 and variance
||x*||_1 + sigma^2, so estimating the three nuisance scalars (mu, V, and
nu = V/mu - 1 = sigma^2/||x*||_1) reduces to one-dimensional mean
estimation. The median-of-means route gives sub-Gaussian deviations from
a variance bound alone; the plain empirical mean is accurate here too
because both noise components are light-tailed, and it is what the
experiment presets use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScalarEstimates",
    "median_of_means",
    "empirical_mean",
    "estimate_mu",
    "estimate_v",
    "estimate_nu",
]


@dataclass(frozen=True)
class ScalarEstimates:
    """Nuisance scalars estimated (or supplied) for one run.

    nu_hat is stored in clamped form, max(0, v_hat / mu_hat - 1), since
    the target sigma^2 / ||x*||_1 is nonnegative.
    """

    mu_hat: float
    v_hat: float
    nu_hat: float
    holdout_count: int
    method: str  # "median-of-means" | "empirical-mean" | "supplied"

    def __post_init__(self):
        if self.mu_hat < 0:
            raise ValueError("mu_hat must be nonnegative")
        if self.mu_hat > 0:
            expect = max(0.0, self.v_hat / self.mu_hat - 1.0)
            if abs(self.nu_hat - expect) > 1e-12 * max(1.0, abs(expect)):
                raise ValueError("nu_hat inconsistent with v_hat / mu_hat - 1")


def median_of_means(samples, t: float) -> float:
    """Median of k = clamp(floor(8 t), 1, len) contiguous block means.

    Blocks are contiguous by index with sizes within one of each other
    (remainder spread over the leading blocks), so the output depends on
    sample order; for even k the median is the midpoint of the two
    central block means. t = log(1/delta) sets the confidence level.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    if not t > 0:
        raise ValueError("t must be positive")
    k = max(1, min(int(math.floor(8.0 * t)), x.size))
    base, extra = divmod(x.size, k)
    means = np.empty(k)
    start = 0
    for b in range(k):
        size = base + (1 if b < extra else 0)
        means[b] = x[start:start + size].mean()
        start += size
    return float(np.median(means))


def empirical_mean(samples) -> float:
    """Arithmetic mean; identical to median_of_means with a single block."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    return float(x.mean())


def estimate_mu(holdout_y, t: float | None = None) -> float:
    """Estimate ||x*||_1 from hold-out responses by median of means.

    Default t = 2 log(m) for m hold-out samples; callers tracking the
    full sample size n may pass t = 2 log(n) instead. A negative estimate
    (possible under heavy additive noise) is clamped to zero with a
    warning.
    """
    y = np.asarray(holdout_y, dtype=np.float64)
    if y.size == 0:
        raise ValueError("augmented rows required")
    if t is None:
        t = 2.0 * math.log(max(y.size, 2))
    est = median_of_means(y, t)
    if est < 0:
        warnings.warn("negative mean estimate clamped to 0", RuntimeWarning,
                      stacklevel=2)
        est = 0.0
    return est


def estimate_v(holdout_y, t: float | None = None) -> float:
    """Estimate Var(y) = ||x*||_1 + sigma^2 from hold-out responses.

    Consecutive responses are paired into symmetrized differences
    dy_j = (y_{2j-1} - y_{2j}) / sqrt(2), whose squares have mean Var(y);
    median of means is then applied to the squares. Pass t <= 1/8 to get
    the plain mean of squares.
    """
    y = np.asarray(holdout_y, dtype=np.float64)
    if y.size < 2:
        raise ValueError("need at least two hold-out samples")
    m = y.size // 2
    diffs = (y[0:2 * m:2] - y[1:2 * m:2]) / math.sqrt(2.0)
    if t is None:
        t = 2.0 * math.log(max(y.size, 2))
    return median_of_means(diffs ** 2, t)


def estimate_nu(mu_hat: float, v_hat: float) -> float:
    """nu = v_hat / mu_hat - 1, clamped below at zero with a warning."""
    if mu_hat <= 0:
        raise ValueError("mu estimate degenerate")
    nu = v_hat / mu_hat - 1.0
    if nu < 0:
        warnings.warn("negative nu estimate clamped to 0", RuntimeWarning,
                      stacklevel=2)
        nu = 0.0
    return nu
