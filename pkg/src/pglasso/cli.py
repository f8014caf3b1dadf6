"""Command line harness: seeded Monte-Carlo experiments and tuning reports.

Subcommands
-----------
run               execute `trials` independent seeded pipelines and write
                  trials.csv, summary.json, and per-trial interval data
tune              print every tuning quantity for one generated data set
estimate-scalars  print the hold-out nuisance estimates for one data set
version           print the package version

Configuration precedence is defaults < preset < config file < flags. The
config file is a flat, typed key=value format (# comments allowed) whose
keys are the field names printed by `run` into summary.json.

Determinism contract: a fixed (config, seed) pair produces byte-identical
trials.csv, independent of --jobs, because every trial derives its own
counter-based stream from the base seed and records are sorted by trial
index before writing. Wall-clock times are reported in summary.json only,
which keeps trials.csv stable across reruns.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import __version__
from .debias import generate_instance, run_pipeline
from .inference import UncertaintyReport, evaluate_coverage
from .rng import make_rng, trial_seed
from .scalars import estimate_mu, estimate_nu, estimate_v
from .synth import SimConfig
from .tuning import tuning_report

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "desk_preset",
    "paper_preset",
    "run_experiment",
    "emit_plot_data",
    "main",
]

_TRIAL_COLUMNS = (
    "trial_index", "seed", "mistakes_on_support", "mistakes_total",
    "l2_error", "eps_mean", "eps_var", "lambda_used", "solver_iterations",
    "status",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a SimConfig plus harness policy knobs."""

    sim: SimConfig
    trials: int = 20
    mode: str = "poisson-gauss"        # "poisson-only" forces sigma = 0
    tuning_rule: str = "d_easy"        # d_easy | lambda_pg | d_hat
    sigma_source: str = "known"        # known | scaled-lasso | nu-hat
    split: bool = False
    output_dir: str = "pglasso_out"
    mag_lo: float = 1.0
    mag_hi: float = 6.0
    scalar_method: str = "empirical-mean"
    jobs: int = 1
    top_k: int | None = None           # None writes all coordinates

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.mode not in ("poisson-gauss", "poisson-only"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "poisson-only" and self.sim.sigma != 0.0:
            raise ValueError("poisson-only mode requires sigma = 0")
        if self.tuning_rule not in ("d_easy", "lambda_pg", "d_hat"):
            raise ValueError(f"unknown tuning_rule {self.tuning_rule!r}")
        if self.sigma_source not in ("known", "scaled-lasso", "nu-hat"):
            raise ValueError(f"unknown sigma_source {self.sigma_source!r}")
        if not 0 < self.mag_lo <= self.mag_hi:
            raise ValueError("need 0 < mag_lo <= mag_hi")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    mistakes_on_support: int
    mistakes_total: int
    l2_error: float
    eps_mean: float
    eps_var: float
    lambda_used: float
    solver_iterations: int
    wall_time: float
    status: str = "ok"


def _ceil_n(s: int, p: int) -> int:
    return math.ceil(s * math.log(p) ** 2)


def desk_preset(seed: int = 0) -> ExperimentConfig:
    """Minutes-scale preset: p=2000, s=20, n = ceil(s log^2 p) = 1156."""
    sim = SimConfig(n=_ceil_n(20, 2000), p=2000, s=20, q=0.25, sigma=1.0,
                    theta=0.0, gamma=50.0, alpha=0.1, seed=seed)
    return ExperimentConfig(sim=sim, trials=20, mag_lo=1.0, mag_hi=6.0,
                            output_dir="pglasso_desk")


def paper_preset(seed: int = 0) -> ExperimentConfig:
    """Full-scale preset: p=20000, s=100, n = ceil(s log^2 p) = 9808."""
    sim = SimConfig(n=_ceil_n(100, 20000), p=20000, s=100, q=0.25, sigma=1.0,
                    theta=0.0, gamma=50.0, alpha=0.1, seed=seed)
    return ExperimentConfig(sim=sim, trials=10, mag_lo=1.0, mag_hi=3.0,
                            output_dir="pglasso_paper", jobs=1)


_PRESETS = {"desk": desk_preset, "paper": paper_preset}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _relative_error_pair(true_val: float, est: float) -> float:
    """max(|true/est - 1|, |est/true - 1|); 0 when both vanish."""
    if true_val == 0.0 and est == 0.0:
        return 0.0
    if true_val == 0.0 or est == 0.0 or not math.isfinite(est):
        return math.inf
    return max(abs(true_val / est - 1.0), abs(est / true_val - 1.0))


def _run_trial(config: ExperimentConfig, index: int):
    """One seeded pipeline; returns (record, plot_rows)."""
    seed = trial_seed(config.sim.seed, index)
    rng = make_rng(seed)
    start = time.perf_counter()
    try:
        res = run_pipeline(
            config.sim, rng,
            magnitude_range=(config.mag_lo, config.mag_hi),
            tuning_rule=config.tuning_rule,
            sigma_source=config.sigma_source,
            scalar_method=config.scalar_method,
            split=config.split,
            keep_instance=True,
        )
        truth = res.instance.truth
        cov = evaluate_coverage(res.report, truth)
        if res.scalars.method == "supplied":
            eps_mean = 0.0
            eps_var = 0.0
        else:
            nu_true = (config.sim.sigma ** 2 / truth.l1_norm
                       if truth.l1_norm > 0 else 0.0)
            eps_mean = _relative_error_pair(truth.l1_norm, res.scalars.mu_hat)
            eps_var = _relative_error_pair(nu_true, res.scalars.nu_hat)
        record = TrialRecord(
            trial_index=index,
            seed=seed,
            mistakes_on_support=cov.mistakes_on_support,
            mistakes_total=cov.mistakes_total,
            l2_error=float(np.linalg.norm(res.fit.x_hat - truth.x_star)),
            eps_mean=eps_mean,
            eps_var=eps_var,
            lambda_used=res.lambda_used,
            solver_iterations=res.fit.iterations,
            wall_time=time.perf_counter() - start,
        )
        rows = _plot_rows(res.report, truth, config.top_k)
        return record, rows
    except Exception as exc:  # trial isolation: a failure never aborts the run
        record = TrialRecord(
            trial_index=index, seed=seed, mistakes_on_support=-1,
            mistakes_total=-1, l2_error=math.nan, eps_mean=math.nan,
            eps_var=math.nan, lambda_used=math.nan, solver_iterations=0,
            wall_time=time.perf_counter() - start,
            status=f"error:{type(exc).__name__}",
        )
        return record, []


def _plot_rows(report: UncertaintyReport, truth, top_k: int | None = None):
    """(index, truth, estimate, lower, upper, covered) sorted by truth desc."""
    x = truth.x_star
    order = np.lexsort((np.arange(x.size), -x))
    if top_k is not None:
        order = order[:top_k]
    centers = report.centers
    lo, hi = report.lower, report.upper
    rows = []
    for i in order:
        covered = int(lo[i] <= x[i] <= hi[i])
        rows.append((int(i), x[i], centers[i], lo[i], hi[i], covered))
    return rows


def emit_plot_data(report: UncertaintyReport, truth, path, top_k: int | None = None) -> str:
    """Write interval plot data as CSV, rows sorted non-increasing by truth."""
    rows = _plot_rows(report, truth, top_k)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,truth,estimate,lower,upper,covered\n")
        for idx, tv, est, lo, hi, cov in rows:
            fh.write(f"{idx},{_fmt(tv)},{_fmt(est)},{_fmt(lo)},{_fmt(hi)},{cov}\n")
    return str(path)


def _write_rows(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,truth,estimate,lower,upper,covered\n")
        for idx, tv, est, lo, hi, cov in rows:
            fh.write(f"{idx},{_fmt(tv)},{_fmt(est)},{_fmt(lo)},{_fmt(hi)},{cov}\n")


def _config_dict(config: ExperimentConfig) -> dict:
    out = asdict(config.sim)
    for f in fields(config):
        if f.name == "sim":
            continue
        out[f.name] = getattr(config, f.name)
    return out


def run_experiment(config: ExperimentConfig):
    """Run all trials, write outputs, and return (records, summary dict).

    Output files land in config.output_dir: trials.csv (one row per
    trial, no timing columns so reruns are byte-identical), summary.json
    (aggregates plus the full config echo), and intervals_trial<k>.csv.
    Failed trials are recorded with an error status and the run continues.
    """
    outdir = config.output_dir
    os.makedirs(outdir, exist_ok=True)
    probe = os.path.join(outdir, ".write_probe")
    try:
        with open(probe, "w") as fh:
            fh.write("ok")
        os.remove(probe)
    except OSError as exc:
        raise OSError(f"output directory {outdir!r} is not writable") from exc

    t0 = time.perf_counter()
    if config.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as ex:
            results = list(ex.map(_run_trial, [config] * config.trials,
                                  range(config.trials)))
    else:
        results = [_run_trial(config, i) for i in range(config.trials)]
    wall_total = time.perf_counter() - t0

    results.sort(key=lambda pair: pair[0].trial_index)
    records = [rec for rec, _ in results]

    trials_path = os.path.join(outdir, "trials.csv")
    with open(trials_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(_TRIAL_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(_fmt(getattr(rec, c)) for c in _TRIAL_COLUMNS) + "\n")

    for rec, rows in results:
        if rows:
            _write_rows(os.path.join(outdir, f"intervals_trial{rec.trial_index}.csv"),
                        rows)

    ok = [r for r in records if r.status == "ok"]
    s = config.sim.s
    summary = {
        "package_version": __version__,
        "config": _config_dict(config),
        "trials_ok": len(ok),
        "trials_failed": len(records) - len(ok),
        "mean_mistakes_on_support": (float(np.mean([r.mistakes_on_support for r in ok]))
                                     if ok else math.nan),
        "max_mistakes_on_support": (max(r.mistakes_on_support for r in ok)
                                    if ok else -1),
        "miscoverage_on_support": (float(np.sum([r.mistakes_on_support for r in ok]))
                                   / (len(ok) * s) if ok and s else math.nan),
        "mean_mistakes_total": (float(np.mean([r.mistakes_total for r in ok]))
                                if ok else math.nan),
        "mean_l2_error": float(np.mean([r.l2_error for r in ok])) if ok else math.nan,
        "max_eps_mean": max((r.eps_mean for r in ok), default=math.nan),
        "max_eps_var": max((r.eps_var for r in ok), default=math.nan),
        "mean_wall_time": (float(np.mean([r.wall_time for r in records]))
                           if records else math.nan),
        "total_wall_time": wall_total,
        "errors": [r.status for r in records if r.status != "ok"],
    }
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return records, summary


# ---------------------------------------------------------------------------
# configuration plumbing

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}

_SIM_FIELDS = {f.name: f.type for f in fields(SimConfig)}
_EXP_FIELDS = {f.name: f.type for f in fields(ExperimentConfig) if f.name != "sim"}


def _coerce(name: str, raw: str):
    if name in ("n", "p", "s", "seed", "trials", "jobs", "top_k"):
        return int(raw)
    if name in ("q", "sigma", "theta", "gamma", "alpha", "mag_lo", "mag_hi"):
        return float(raw)
    if name == "split":
        low = raw.strip().lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ValueError(f"cannot parse boolean {raw!r} for {name}")
    return raw.strip()


def load_config_file(path) -> dict:
    """Parse the flat key=value config format into a typed dict."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in _SIM_FIELDS and key not in _EXP_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _coerce(key, raw.strip())
    return out


def _build_config(args) -> ExperimentConfig:
    if args.preset:
        config = _PRESETS[args.preset]()
    else:
        config = desk_preset()
    overrides = {}
    if args.config:
        overrides.update(load_config_file(args.config))
    for name in list(_SIM_FIELDS) + list(_EXP_FIELDS):
        flag = getattr(args, name, None)
        if flag is not None:
            overrides[name] = flag
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    sim_over = {k: v for k, v in overrides.items() if k in _SIM_FIELDS}
    exp_over = {k: v for k, v in overrides.items() if k in _EXP_FIELDS}
    sim = replace(config.sim, **sim_over) if sim_over else config.sim
    if "mode" in exp_over and exp_over["mode"] == "poisson-only" and "sigma" not in sim_over:
        sim = replace(sim, sigma=0.0)
    return replace(config, sim=sim, **exp_over)


def _add_config_flags(parser):
    parser.add_argument("--preset", choices=sorted(_PRESETS), default=None)
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    for name in ("n", "p", "s"):
        parser.add_argument(f"--{name}", type=int, default=None)
    for name in ("q", "sigma", "theta", "gamma", "alpha", "mag_lo", "mag_hi"):
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float,
                            default=None)
    parser.add_argument("--mode", choices=("poisson-gauss", "poisson-only"),
                        default=None)
    parser.add_argument("--tuning-rule", dest="tuning_rule",
                        choices=("d_easy", "lambda_pg", "d_hat"), default=None)
    parser.add_argument("--sigma-source", dest="sigma_source",
                        choices=("known", "scaled-lasso", "nu-hat"), default=None)
    parser.add_argument("--scalar-method", dest="scalar_method",
                        choices=("empirical-mean", "median-of-means"), default=None)
    parser.add_argument("--top-k", dest="top_k", type=int, default=None)
    split = parser.add_mutually_exclusive_group()
    split.add_argument("--split", dest="split", action="store_true", default=None)
    split.add_argument("--no-split", dest="split", action="store_false", default=None)


def _cmd_run(args) -> int:
    config = _build_config(args)
    records, summary = run_experiment(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary["trials_failed"] == 0 else 1


def _cmd_tune(args) -> int:
    config = _build_config(args)
    rng = make_rng(config.sim.seed)
    inst = generate_instance(config.sim, rng, (config.mag_lo, config.mag_hi))
    report = tuning_report(inst.design.a_raw, inst.obs.y, config.sim.q,
                           inst.truth.l1_norm, config.sim.sigma, config.sim.gamma)
    print(json.dumps({k: getattr(report, k) for k in
                      ("n_hat", "w", "d_hat", "d_easy", "lambda_pg", "c_q")},
                     indent=2, sort_keys=True))
    return 0


def _cmd_estimate_scalars(args) -> int:
    config = _build_config(args)
    sim = config.sim
    if sim.theta <= 0:
        raise SystemExit("estimate-scalars needs theta > 0 (augmented rows)")
    rng = make_rng(sim.seed)
    inst = generate_instance(sim, rng, (config.mag_lo, config.mag_hi))
    holdout = inst.obs.y[inst.design.bernoulli_rows:]
    t = 0.125 if config.scalar_method == "empirical-mean" else 2.0 * math.log(sim.n)
    mu_hat = estimate_mu(holdout, t)
    v_hat = estimate_v(holdout, t)
    nu_hat = estimate_nu(mu_hat, v_hat) if mu_hat > 0 else 0.0
    nu_true = sim.sigma ** 2 / inst.truth.l1_norm if inst.truth.l1_norm else 0.0
    print(json.dumps({
        "holdout_count": int(holdout.size),
        "method": config.scalar_method,
        "mu_hat": mu_hat,
        "v_hat": v_hat,
        "nu_hat": nu_hat,
        "true_l1": inst.truth.l1_norm,
        "true_nu": nu_true,
        "eps_mean": _relative_error_pair(inst.truth.l1_norm, mu_hat),
        "eps_var": _relative_error_pair(nu_true, nu_hat),
    }, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pglasso", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in (("run", _cmd_run), ("tune", _cmd_tune),
                          ("estimate-scalars", _cmd_estimate_scalars)):
        p = sub.add_parser(name)
        _add_config_flags(p)
        p.set_defaults(handler=handler)
    ver = sub.add_parser("version")
    ver.set_defaults(handler=lambda args: (print(__version__), 0)[1])
    args = parser.parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
