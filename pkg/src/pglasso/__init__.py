"""Sparse regression with confidence intervals under Poisson-Gauss noise.

The package covers the full workflow: synthetic data generation on binary
Bernoulli designs, L1-penalized fitting on the normalized data with
data-dependent penalty levels, scalar nuisance estimation from augmented
all-ones rows, exact debiasing of the fit, per-coordinate confidence
intervals, and a seeded Monte-Carlo harness (see `pglasso.cli`).
"""

__version__ = "0.1.0"

from .debias import (DebiasResult, DecompositionDiag, PipelineResult,
                     SyntheticInstance, compute_bias, debias_poisson, decompose,
                     generate_instance, run_pipeline)
from .inference import (CoverageSummary, UncertaintyReport, build_intervals,
                        evaluate_coverage, gram_diagonal, inv_norm_cdf,
                        ks_normality, sigma_q)
from .lasso import (LassoFit, LassoOptions, ScaledLassoFit, coherence, kkt_check,
                    solve_lasso, solve_nonneg_lasso, solve_scaled_lasso)
from .rng import make_rng, splitmix64, trial_seed
from .scalars import (ScalarEstimates, empirical_mean, estimate_mu, estimate_nu,
                      estimate_v, median_of_means)
from .synth import (DesignBundle, GroundTruth, ObservationSet, SimConfig,
                    build_augmented_design, normalize_design, normalize_response,
                    sample_design, sample_ground_truth, sample_response)
from .tuning import (TuningReport, compute_d_easy, compute_d_hat, compute_lambda_pg,
                     compute_n_hat, compute_w, tuning_report)

__all__ = [name for name in dir() if not name.startswith("_")]
