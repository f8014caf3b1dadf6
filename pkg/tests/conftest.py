"""Shared fixtures and independent oracles for the test suite."""

import itertools
import math

import numpy as np
import pytest

from pglasso import make_rng

# Base seed for every seeded test in the suite.
BASE_SEED = 20260810


@pytest.fixture
def rng():
    return make_rng(BASE_SEED)


def seeded(offset: int):
    return make_rng(BASE_SEED + offset)


class ConstantRNG:
    """Stub generator whose uniform stream is a constant; for limit checks."""

    def __init__(self, value: float):
        self.value = value

    def random(self, size=None):
        return np.full(size, self.value) if size is not None else self.value


def lasso_objective(a, y, x, lam):
    r = y - a @ x
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())


def lasso_sign_oracle(a, y, lam, nonneg=False):
    """Global minimum of the L1 program by sign-pattern enumeration.

    For each support and sign pattern, solves the stationarity system
    A_S' A_S x_S = A_S' y - lam * s_S via normal equations and keeps
    sign-consistent candidates; the best objective over all patterns
    (including x = 0) is the global optimum for p <= ~8. Entirely
    independent of the coordinate-descent path.
    """
    p = a.shape[1]
    best = 0.5 * float(y @ y)
    aty = a.T @ y
    for support in range(1, 2 ** p):
        idx = np.flatnonzero([(support >> j) & 1 for j in range(p)])
        a_s = a[:, idx]
        gram = a_s.T @ a_s
        choices = ([(1.0,)] if nonneg else [(-1.0, 1.0)]) * idx.size
        for signs in itertools.product(*choices):
            s = np.array(signs)
            try:
                sol = np.linalg.solve(gram, aty[idx] - lam * s)
            except np.linalg.LinAlgError:
                continue
            if np.any(np.sign(sol) != s):
                continue
            r = y - a_s @ sol
            obj = 0.5 * float(r @ r) + lam * float(np.abs(sol).sum())
            if obj < best:
                best = obj
    return best


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def bisect_inv_normal(u: float, tol: float = 1e-13) -> float:
    """Independent inverse-CDF oracle: bisection on the erf-based CDF."""
    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
