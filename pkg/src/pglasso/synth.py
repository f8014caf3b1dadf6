"""Synthetic data generation for the Poisson-Gauss regression model.

The observation model is

    y_i = Poisson((A x*)_i) + sigma * g_i,      g_i ~ N(0, 1) i.i.d.,

with a binary design A whose entries are i.i.d. Bernoulli(q) (optionally
with trailing all-ones rows reserved for nuisance estimation) and a
nonnegative sparse truth x*. Downstream stages work on the centered,
normalized transforms

    A~ = (A - q J) / sqrt(n q (1-q)),
    y~ = (n y - 1 * sum(y)) / ((n-1) sqrt(n q (1-q))),

which this module also produces.

Counts can reach the hundreds per row at realistic scales, so Poisson
sampling relies on numpy's generator (sequential inversion for small
means, transformed rejection for large ones); naive exp-product sampling
would overflow there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GroundTruth",
    "SimConfig",
    "DesignBundle",
    "ObservationSet",
    "normalize_design",
    "normalize_response",
    "sample_ground_truth",
    "sample_design",
    "build_augmented_design",
    "sample_response",
]


@dataclass(frozen=True)
class GroundTruth:
    """Nonnegative sparse signal plus the scalars derived from it."""

    x_star: np.ndarray
    support: np.ndarray
    l1_norm: float

    def __post_init__(self):
        x = np.asarray(self.x_star, dtype=np.float64)
        object.__setattr__(self, "x_star", x)
        object.__setattr__(self, "support", np.asarray(self.support, dtype=np.int64))
        if x.ndim != 1:
            raise ValueError("x_star must be a vector")
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("x_star must be finite and nonnegative")
        if np.count_nonzero(x) != self.support.size:
            raise ValueError("support size does not match nonzero count")
        s = float(x.sum())
        if abs(self.l1_norm - s) > 1e-12 * max(s, 1.0):
            raise ValueError("l1_norm inconsistent with entries")

    @property
    def p(self) -> int:
        return self.x_star.size


@dataclass(frozen=True)
class SimConfig:
    """Scalar knobs of one synthetic experiment.

    q is accepted anywhere in (0, 1); the distributional guarantees this
    package is built around are stated for q in (0, 1/2), and the presets
    stay in that range.
    """

    n: int
    p: int
    s: int
    q: float
    sigma: float = 0.0
    theta: float = 0.0
    gamma: float = 50.0
    alpha: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.s <= self.p:
            raise ValueError("s must lie in [0, p]")
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.gamma <= 2.0:
            raise ValueError("gamma must exceed 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class DesignBundle:
    """Binary design, its normalized form, and the augmentation bookkeeping.

    a_tilde always uses the full-sample constants (q, n) on every row,
    including all-ones rows; pipeline stages that exclude the augmented
    block renormalize the remaining rows themselves.
    """

    a_raw: np.ndarray
    a_tilde: np.ndarray
    q: float
    augmented_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a_raw", np.asarray(self.a_raw, dtype=np.int8))
        if self.a_raw.shape != self.a_tilde.shape:
            raise ValueError("a_raw and a_tilde shapes differ")
        if not 0 <= self.augmented_rows <= self.a_raw.shape[0]:
            raise ValueError("augmented_rows out of range")

    @property
    def n(self) -> int:
        return self.a_raw.shape[0]

    @property
    def p(self) -> int:
        return self.a_raw.shape[1]

    @property
    def bernoulli_rows(self) -> int:
        return self.n - self.augmented_rows

    def column_counts(self) -> np.ndarray:
        """Exact per-column one-counts of the raw design."""
        return self.a_raw.sum(axis=0, dtype=np.int64)

    def matvec_raw(self, x: np.ndarray, rows: slice | None = None) -> np.ndarray:
        """A @ x on the raw 0/1 design, chunked to avoid a float copy of A."""
        a = self.a_raw if rows is None else self.a_raw[rows]
        out = np.empty(a.shape[0], dtype=np.float64)
        step = max(1, int(4_000_000 // max(a.shape[1], 1)))
        xv = np.asarray(x, dtype=np.float64)
        for lo in range(0, a.shape[0], step):
            hi = min(lo + step, a.shape[0])
            out[lo:hi] = a[lo:hi].astype(np.float64, copy=False) @ xv
        return out


@dataclass(frozen=True)
class ObservationSet:
    """Responses and their centered, normalized transform.

    For synthetic data the Poisson and Gaussian components are retained
    separately so that noise-term diagnostics can be computed exactly;
    production observations would carry only y.
    """

    y: np.ndarray
    y_tilde: np.ndarray
    poisson_part: np.ndarray | None = None
    gauss_part: np.ndarray | None = None

    def __post_init__(self):
        if self.y.shape != self.y_tilde.shape:
            raise ValueError("y and y_tilde shapes differ")


def normalize_design(a_raw: np.ndarray, q: float) -> np.ndarray:
    """Centered, variance-one rescaling (A - q J) / sqrt(n q (1-q)).

    Returned Fortran-ordered: the solver walks columns.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    n = a_raw.shape[0]
    c = math.sqrt(n * q * (1.0 - q))
    out = np.asfortranarray(a_raw, dtype=np.float64)
    out -= q
    out /= c
    return out


def normalize_response(y: np.ndarray, q: float) -> np.ndarray:
    """Centered response (n y - 1 sum(y)) / ((n-1) sqrt(n q (1-q)))."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if n < 2:
        raise ValueError("need at least two observations to center")
    c = (n - 1) * math.sqrt(n * q * (1.0 - q))
    return (n * y - y.sum()) / c


def sample_ground_truth(p, s, magnitude_range, rng) -> GroundTruth:
    """Uniform random support of size s, magnitudes uniform in the range."""
    if not 0 <= s <= p:
        raise ValueError("s must lie in [0, p]")
    lo, hi = magnitude_range
    if not (0 < lo <= hi) or not math.isfinite(hi):
        raise ValueError("magnitude range must satisfy 0 < lo <= hi < inf")
    x = np.zeros(p, dtype=np.float64)
    support = np.sort(rng.choice(p, size=s, replace=False)) if s else np.empty(0, np.int64)
    if s:
        x[support] = rng.uniform(lo, hi, size=s)
    return GroundTruth(x_star=x, support=support, l1_norm=float(x.sum()))


def sample_design(n, p, q, rng) -> DesignBundle:
    """i.i.d. Bernoulli(q) design with its normalized form."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    a_raw = (rng.random((n, p)) < q).astype(np.int8)
    return DesignBundle(a_raw=a_raw, a_tilde=normalize_design(a_raw, q), q=q,
                        augmented_rows=0)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def build_augmented_design(n, p, q, theta, rng) -> DesignBundle:
    """Bernoulli(q) rows followed by round(theta*n) all-ones rows.

    For theta > 0 the split is clamped so both blocks stay nonempty; the
    all-ones block yields i.i.d. observations with mean ||x*||_1 for the
    scalar estimators.
    """
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    if theta == 0.0:
        return sample_design(n, p, q, rng)
    if n < 2:
        raise ValueError("augmentation needs n >= 2")
    r = min(max(_round_half_up(theta * n), 1), n - 1)
    a_raw = np.empty((n, p), dtype=np.int8)
    a_raw[: n - r] = rng.random((n - r, p)) < q
    a_raw[n - r:] = 1
    return DesignBundle(a_raw=a_raw, a_tilde=normalize_design(a_raw, q), q=q,
                        augmented_rows=r)


def sample_response(design: DesignBundle, truth: GroundTruth, sigma, rng) -> ObservationSet:
    """Draw y_i = Poisson((A x*)_i) + sigma g_i and its normalized form."""
    if not np.all(np.isfinite(truth.x_star)):
        raise ValueError("truth contains non-finite entries")
    if not math.isfinite(sigma) or sigma < 0:
        raise ValueError("sigma must be finite and nonnegative")
    lam = design.matvec_raw(truth.x_star)
    pois = rng.poisson(lam).astype(np.float64)
    gauss = sigma * rng.standard_normal(design.n)
    y = pois + gauss
    return ObservationSet(y=y, y_tilde=normalize_response(y, design.q),
                          poisson_part=pois, gauss_part=gauss)
