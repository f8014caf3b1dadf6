"""Per-coordinate variances, confidence intervals, and coverage checks.

Interval construction: the debiased estimate x^d_i gets the interval

    x^d_i +/- z_{1-alpha/2} * sqrt(mu / n) * sigma_q_i,

where sigma_q_i = sqrt((1 + nu * (A~'A~)_ii) / (q (1-q))) and
nu = sigma^2 / ||x*||_1 (estimated or known). The diagonal of A~'A~ is
computed column by column, never as a full Gram matrix, so p in the tens
of thousands stays cheap.

A Monte-Carlo study of the standardized pivots sqrt(n/mu) (x^d_i - x*_i)
shows their variance is materially below sigma_q_i^2 when the Poisson
component dominates (the Poisson part of the variance scales with q, not
with 1); sigma_q is kept as the interval width because it is the
conservative side of that discrepancy. See the pivot-variance tests for
the measured profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UncertaintyReport",
    "CoverageSummary",
    "gram_diagonal",
    "sigma_q",
    "inv_norm_cdf",
    "build_intervals",
    "evaluate_coverage",
    "ks_normality",
]


@dataclass(frozen=True)
class UncertaintyReport:
    """Per-coordinate confidence intervals around the debiased estimate."""

    intervals: np.ndarray      # (p, 2) lower/upper
    std_devs: np.ndarray       # per-coordinate sigma_q_i * sqrt(mu/n)
    alpha: float
    z_crit: float
    mu_used: float
    nu_used: float

    @property
    def lower(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.intervals[:, 1]

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.intervals[:, 0] + self.intervals[:, 1])


@dataclass(frozen=True)
class CoverageSummary:
    """Truth-in-interval flags and mistake counts (synthetic runs only)."""

    covered: np.ndarray
    mistakes_on_support: int
    mistakes_total: int
    support_size: int


def gram_diagonal(a_tilde) -> np.ndarray:
    """Diagonal of A~'A~ via per-column norms (no p x p Gram)."""
    a = np.asarray(a_tilde, dtype=np.float64)
    return np.einsum("ij,ij->j", a, a)


def sigma_q(a_tilde, nu: float, q: float, i: int) -> float:
    """Asymptotic pivot scale for coordinate i:
    (1/sqrt(q(1-q))) * sqrt(1 + nu * (A~'A~)_ii)."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    a = np.asarray(a_tilde, dtype=np.float64)
    if not 0 <= i < a.shape[1]:
        raise ValueError("coordinate index out of range")
    dii = float(a[:, i] @ a[:, i])
    return math.sqrt((1.0 + nu * dii) / (q * (1.0 - q)))


_PPND16_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_PPND16_B = (
    4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_PPND16_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_PPND16_D = (
    2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_PPND16_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_PPND16_F = (
    5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-3, 1.84631831751005468180e-4, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, r):
    """Evaluate sum_k coeffs[k] * r**k (coefficients in ascending order)."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * r + c
    return acc


def inv_norm_cdf(u: float) -> float:
    """Inverse standard normal CDF (rational minimax approximation).

    Absolute error is below 1e-9 over (0, 1) (the approximation is
    accurate to near double precision); verified against an independent
    erf-based bisection oracle in the tests.
    """
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    qd = u - 0.5
    if abs(qd) <= 0.425:
        r = 0.180625 - qd * qd
        return qd * _poly(_PPND16_A, r) / _poly((1.0,) + _PPND16_B, r)
    r = u if qd < 0.0 else 1.0 - u
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_PPND16_C, r) / _poly((1.0,) + _PPND16_D, r)
    else:
        r -= 5.0
        val = _poly(_PPND16_E, r) / _poly((1.0,) + _PPND16_F, r)
    return -val if qd < 0.0 else val


def build_intervals(x_debiased, a_tilde, mu_hat: float, nu_hat: float, q: float,
                    alpha: float) -> UncertaintyReport:
    """Symmetric per-coordinate intervals x^d_i +/- z * sqrt(mu/n) * sigma_q_i."""
    if mu_hat <= 0:
        raise ValueError("mu_hat must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if nu_hat < 0:
        raise ValueError("nu_hat must be nonnegative")
    xd = np.asarray(x_debiased, dtype=np.float64)
    a = np.asarray(a_tilde, dtype=np.float64)
    n = a.shape[0]
    z = inv_norm_cdf(1.0 - alpha / 2.0)
    diag = gram_diagonal(a)
    stds = math.sqrt(mu_hat / n) * np.sqrt((1.0 + nu_hat * diag) / (q * (1.0 - q)))
    half = z * stds
    intervals = np.column_stack([xd - half, xd + half])
    return UncertaintyReport(intervals=intervals, std_devs=stds, alpha=alpha,
                             z_crit=z, mu_used=float(mu_hat), nu_used=float(nu_hat))


def evaluate_coverage(report: UncertaintyReport, truth) -> CoverageSummary:
    """Flag coordinates whose true value escapes its interval."""
    x = np.asarray(truth.x_star, dtype=np.float64)
    covered = (x >= report.lower) & (x <= report.upper)
    support = np.asarray(truth.support, dtype=np.int64)
    on_support_miss = int((~covered[support]).sum()) if support.size else 0
    return CoverageSummary(
        covered=covered,
        mistakes_on_support=on_support_miss,
        mistakes_total=int((~covered).sum()),
        support_size=int(support.size),
    )


def ks_normality(pivots) -> float:
    """Kolmogorov-Smirnov distance of studentized samples from N(0, 1).

    Samples are centered and scaled by their own mean and standard
    deviation, so the statistic measures shape. A degenerate (constant)
    sample puts all mass at z = 0 and returns the distance 0.5.
    """
    x = np.asarray(pivots, dtype=np.float64)
    if x.size < 50:
        raise ValueError("need at least 50 pivot samples")
    sd = x.std(ddof=1)
    if sd == 0.0:
        return 0.5
    z = np.sort((x - x.mean()) / sd)
    cdf = np.array([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in z])
    m = x.size
    grid = np.arange(1, m + 1) / m
    return float(max((grid - cdf).max(), (cdf - (grid - 1.0 / m)).max()))
