"""L1-penalized least squares on the normalized design.

Objective convention, used everywhere in this package:

    minimize (1/2) ||y~ - A~ x||_2^2 + lam ||x||_1,

so the stationarity threshold is exactly lam: |A~_j' (y~ - A~ x^)| <= lam
for every coordinate, with equality (up to tolerance) on active ones.
Tuning levels are fed in on this same scale (lam = gamma * d).

The solver is cyclic coordinate descent with cached column norms and
in-place residual updates, interleaving full sweeps with sweeps over the
current active set. It is deterministic: fixed cyclic order, and a
coordinate sitting exactly at the threshold stays at zero. A single
solve is sequential; independent solves are safe to run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LassoOptions",
    "LassoFit",
    "ScaledLassoFit",
    "solve_lasso",
    "solve_nonneg_lasso",
    "solve_scaled_lasso",
    "coherence",
    "kkt_check",
]


@dataclass(frozen=True)
class LassoOptions:
    tol: float = 1e-8                # duality-gap stopping target
    dx_tol: float = 1e-10            # max coordinate change fallback stop
    max_sweeps: int = 100_000
    kkt_tol: float = 1e-6            # certificate slack on the correlation scale
    sigma_floor: float = 1e-10       # scaled-lasso degeneracy floor
    sigma_rel_tol: float = 1e-8      # scaled-lasso outer stopping (relative)
    max_outer: int = 200             # scaled-lasso alternation cap
    track_objective: bool = False


@dataclass(frozen=True)
class LassoFit:
    x_hat: np.ndarray
    lam: float
    objective: float
    duality_gap: float
    iterations: int
    converged: bool
    kkt_violation: float
    objective_history: tuple = ()


@dataclass(frozen=True)
class ScaledLassoFit:
    x_hat: np.ndarray
    sigma_hat: float
    lam: float
    iterations: int
    converged: bool
    degenerate: bool = False


def _check_inputs(a_tilde, y_tilde, lam):
    a = np.asarray(a_tilde, dtype=np.float64)
    y = np.asarray(y_tilde, dtype=np.float64)
    if a.ndim != 2 or y.ndim != 1 or a.shape[0] != y.size:
        raise ValueError("design and response dimensions disagree")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite entries in solver input")
    if not (math.isfinite(lam) and lam >= 0):
        raise ValueError("lam must be finite and nonnegative")
    return a, y


def _sweep(a, x, r, nsq, lam, idx, nonneg):
    """One cyclic pass over idx; returns the max coordinate change."""
    maxdx = 0.0
    for j in idx:
        nj = nsq[j]
        old = x[j]
        if nj == 0.0:
            if old != 0.0 and lam > 0.0:
                x[j] = 0.0
                maxdx = max(maxdx, abs(old))
            continue
        col = a[:, j]
        rho = col @ r + nj * old
        if nonneg:
            new = max(rho - lam, 0.0) / nj
        else:
            mag = abs(rho) - lam
            new = math.copysign(mag, rho) / nj if mag > 0.0 else 0.0
        if new != old:
            r += (old - new) * col
            x[j] = new
            maxdx = max(maxdx, abs(new - old))
    return maxdx


def _gap_and_corr(a, y, x, r, lam, nonneg):
    """Duality gap from the scaled-residual dual point, plus A~' r."""
    corr = a.T @ r
    primal = 0.5 * float(r @ r) + lam * float(np.abs(x).sum())
    worst = float(corr.max()) if nonneg else float(np.abs(corr).max())
    alpha = 1.0 if worst <= lam or worst <= 0.0 else lam / worst
    dual = alpha * float(r @ y) - 0.5 * alpha * alpha * float(r @ r)
    return max(primal - dual, 0.0), corr, primal


def _kkt_violation(corr, x, lam, nonneg):
    if nonneg:
        over = max(float(corr.max(initial=0.0)) - lam, 0.0)
    else:
        over = max(float(np.abs(corr).max(initial=0.0)) - lam, 0.0)
    active = np.flatnonzero(x)
    if active.size:
        target = lam * (np.ones(active.size) if nonneg else np.sign(x[active]))
        dev = float(np.abs(corr[active] - target).max())
    else:
        dev = 0.0
    return max(over, dev)


def _cd(a, y, lam, opts, nonneg, x0=None):
    n, p = a.shape
    x = np.zeros(p) if x0 is None else np.array(x0, dtype=np.float64)
    r = y - a @ x if x0 is not None else y.copy()
    nsq = np.einsum("ij,ij->j", a, a)
    idx_all = range(p)
    sweeps = 0
    converged = False
    history = []
    gap = math.inf
    while sweeps < opts.max_sweeps:
        maxdx = _sweep(a, x, r, nsq, lam, idx_all, nonneg)
        sweeps += 1
        gap, corr, primal = _gap_and_corr(a, y, x, r, lam, nonneg)
        if opts.track_objective:
            history.append(primal)
        if gap <= opts.tol or maxdx <= opts.dx_tol:
            converged = True
            break
        active = np.flatnonzero(x)
        while sweeps < opts.max_sweeps and active.size:
            dxa = _sweep(a, x, r, nsq, lam, active, nonneg)
            sweeps += 1
            if opts.track_objective:
                history.append(0.5 * float(r @ r) + lam * float(np.abs(x).sum()))
            if dxa <= opts.dx_tol:
                break
    gap, corr, primal = _gap_and_corr(a, y, x, r, lam, nonneg)
    fit = LassoFit(
        x_hat=x,
        lam=float(lam),
        objective=primal,
        duality_gap=gap,
        iterations=sweeps,
        converged=converged,
        kkt_violation=_kkt_violation(corr, x, lam, nonneg),
        objective_history=tuple(history),
    )
    return fit, r


def solve_lasso(a_tilde, y_tilde, lam, opts: LassoOptions | None = None,
                x0=None) -> LassoFit:
    """Minimize (1/2)||y~ - A~ x||^2 + lam ||x||_1 by coordinate descent.

    Deterministic given inputs and options. If the sweep cap is reached
    the best iterate is returned with converged=False, never silently.
    """
    opts = opts or LassoOptions()
    a, y = _check_inputs(a_tilde, y_tilde, lam)
    fit, _ = _cd(a, y, lam, opts, nonneg=False, x0=x0)
    return fit


def solve_nonneg_lasso(a_tilde, y_tilde, lam, opts: LassoOptions | None = None,
                       x0=None) -> LassoFit:
    """solve_lasso with the additional constraint x >= 0.

    Stationarity becomes one-sided: A~_j'(y~ - A~ x^) <= lam for all j,
    with equality on active coordinates.
    """
    opts = opts or LassoOptions()
    a, y = _check_inputs(a_tilde, y_tilde, lam)
    fit, _ = _cd(a, y, lam, opts, nonneg=True, x0=x0)
    return fit


def solve_scaled_lasso(a_tilde, y_tilde, lam, opts: LassoOptions | None = None
                       ) -> ScaledLassoFit:
    """Joint (x, sigma) fit by alternating minimization of

        (1/(n sigma)) ||y~ - A~ x||^2 + sigma/2 + lam ||x||_1.

    The x-step is solve_lasso with effective penalty n*sigma*lam/2 on the
    (1/2)-scaled objective; the sigma-step sets
    sigma = sqrt(2/n) ||y~ - A~ x||_2 (the stationary point in sigma).
    Stops when successive sigma values differ by less than sigma_rel_tol
    relative; an identically-zero residual returns sigma_floor with the
    degenerate flag set.
    """
    opts = opts or LassoOptions()
    if lam <= 0:
        raise ValueError("scaled lasso needs lam > 0")
    a, y = _check_inputs(a_tilde, y_tilde, lam)
    n = a.shape[0]
    scale = math.sqrt(2.0 / n)
    sigma = max(scale * float(np.linalg.norm(y)), opts.sigma_floor)
    x = None
    converged = False
    degenerate = False
    outer = 0
    for outer in range(1, opts.max_outer + 1):
        fit, r = _cd(a, y, 0.5 * n * sigma * lam, opts, nonneg=False, x0=x)
        x = fit.x_hat
        new = scale * float(np.linalg.norm(r))
        if new <= opts.sigma_floor:
            sigma = opts.sigma_floor
            degenerate = True
            converged = True
            break
        done = abs(new - sigma) < opts.sigma_rel_tol * sigma
        sigma = new
        if done:
            converged = True
            break
    return ScaledLassoFit(x_hat=x, sigma_hat=sigma, lam=float(lam),
                          iterations=outer, converged=converged,
                          degenerate=degenerate)


def coherence(a_tilde, y_tilde, x_ref) -> float:
    """||A~' (y~ - A~ x_ref)||_inf, the level a valid penalty must dominate."""
    a = np.asarray(a_tilde, dtype=np.float64)
    y = np.asarray(y_tilde, dtype=np.float64)
    x = np.asarray(x_ref, dtype=np.float64)
    if a.shape[0] != y.size or a.shape[1] != x.size:
        raise ValueError("dimension mismatch")
    r = y - a @ x
    return float(np.abs(a.T @ r).max())


def kkt_check(a_tilde, y_tilde, fit: LassoFit, nonneg: bool = False) -> float:
    """Recompute the stationarity violation of a fit (0 means certified)."""
    a = np.asarray(a_tilde, dtype=np.float64)
    y = np.asarray(y_tilde, dtype=np.float64)
    corr = a.T @ (y - a @ fit.x_hat)
    return _kkt_violation(corr, fit.x_hat, fit.lam, nonneg)
