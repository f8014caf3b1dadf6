import math

import numpy as np
import pytest
from scipy import stats

from pglasso import (GroundTruth, SimConfig, build_augmented_design, make_rng,
                     normalize_design, normalize_response, sample_design,
                     sample_ground_truth, sample_response)

from conftest import BASE_SEED, ConstantRNG, seeded


class TestGroundTruth:
    def test_empty_support(self, rng):
        truth = sample_ground_truth(5, 0, (1.0, 2.0), rng)
        assert truth.l1_norm == 0.0
        assert truth.support.size == 0
        assert np.all(truth.x_star == 0)

    def test_degenerate_range_forces_values(self, rng):
        truth = sample_ground_truth(5, 5, (1.0, 1.0), rng)
        assert np.all(truth.x_star == 1.0)
        assert truth.l1_norm == 5.0

    def test_paper_scale_config(self, rng):
        truth = sample_ground_truth(20_000, 100, (1.0, 3.0), rng)
        assert truth.support.size == 100
        assert np.count_nonzero(truth.x_star) == 100
        assert truth.l1_norm == pytest.approx(truth.x_star.sum(), rel=1e-12)

    def test_s_larger_than_p_rejected(self, rng):
        with pytest.raises(ValueError):
            sample_ground_truth(3, 4, (1.0, 2.0), rng)

    def test_invariant_checks(self):
        with pytest.raises(ValueError):
            GroundTruth(x_star=np.array([1.0, -0.5]), support=np.array([0, 1]),
                        l1_norm=0.5)
        with pytest.raises(ValueError):
            GroundTruth(x_star=np.array([1.0, 2.0]), support=np.array([0, 1]),
                        l1_norm=5.0)


class TestSimConfig:
    def test_valid(self):
        SimConfig(n=100, p=50, s=5, q=0.25, sigma=1.0, gamma=2.01, alpha=0.1)

    @pytest.mark.parametrize("kw", [
        dict(q=0.0), dict(q=1.0), dict(gamma=2.0), dict(alpha=0.0),
        dict(alpha=1.0), dict(s=51), dict(theta=1.0), dict(sigma=-1.0),
    ])
    def test_invalid(self, kw):
        base = dict(n=100, p=50, s=5, q=0.25, sigma=1.0, gamma=2.01, alpha=0.1)
        base.update(kw)
        with pytest.raises(ValueError):
            SimConfig(**base)


class TestDesign:
    def test_entry_mean_clt(self):
        n, p, q = 1000, 1000, 0.25
        design = sample_design(n, p, q, seeded(1))
        mean = design.a_raw.mean()
        assert abs(mean - q) < 3.0 * math.sqrt(q * (1 - q) / (n * p))

    def test_forced_all_zero_stream(self):
        n, p, q = 6, 4, 0.25
        design = sample_design(n, p, q, ConstantRNG(0.75))
        assert np.all(design.a_raw == 0)
        expected = -q / math.sqrt(n * q * (1 - q))
        assert np.allclose(design.a_tilde, expected, atol=1e-15)

    def test_column_means_centered(self):
        n, p, q = 4000, 50, 0.3
        design = sample_design(n, p, q, seeded(2))
        col_means = design.a_tilde.mean(axis=0)
        # normalized entries have sd 1/sqrt(n), so column means have sd 1/n
        assert np.all(np.abs(col_means) < 4.5 / n)
        assert np.all(np.abs(col_means) < 3.0 / math.sqrt(n))

    def test_normalization_identity(self):
        design = sample_design(300, 40, 0.2, seeded(3))
        n = 300
        ref = (design.a_raw.astype(float) - 0.2) / math.sqrt(n * 0.2 * 0.8)
        assert np.abs(design.a_tilde - ref).max() < 1e-12

    def test_q_out_of_range(self, rng):
        with pytest.raises(ValueError):
            sample_design(10, 5, 1.5, rng)


class TestAugmentedDesign:
    def test_theta_zero_matches_plain_contract(self, rng):
        design = build_augmented_design(50, 10, 0.25, 0.0, rng)
        assert design.augmented_rows == 0

    def test_rows_split_by_definition(self, rng):
        design = build_augmented_design(10, 7, 0.25, 0.3, rng)
        assert design.augmented_rows == 3
        assert np.all(design.a_raw[7:] == 1)

    def test_augmented_row_response_mean(self):
        # observations on all-ones rows have mean ||x*||_1, var ||x*||_1 + sigma^2
        rng = seeded(4)
        truth = sample_ground_truth(40, 10, (2.0, 8.0), rng)
        sigma = 1.5
        n, r = 500, 400
        design = build_augmented_design(n, 40, 0.25, r / n, rng)
        assert design.augmented_rows == r
        obs = sample_response(design, truth, sigma, rng)
        hold = obs.y[n - r:]
        mu = truth.l1_norm
        assert abs(hold.mean() - mu) < 3.0 * math.sqrt((mu + sigma ** 2) / r)

    def test_theta_one_rejected(self, rng):
        with pytest.raises(ValueError):
            build_augmented_design(10, 5, 0.25, 1.0, rng)

    def test_clamp_keeps_both_blocks(self, rng):
        design = build_augmented_design(10, 5, 0.25, 0.97, rng)
        assert 1 <= design.augmented_rows <= 9


class TestResponse:
    def test_zero_signal_zero_noise(self, rng):
        truth = sample_ground_truth(8, 0, (1.0, 2.0), rng)
        design = sample_design(30, 8, 0.25, rng)
        obs = sample_response(design, truth, 0.0, rng)
        assert np.all(obs.y == 0.0)

    def test_pure_gaussian_case(self):
        rng = seeded(5)
        truth = sample_ground_truth(8, 0, (1.0, 2.0), rng)
        n = 4000
        design = sample_design(n, 8, 0.25, rng)
        obs = sample_response(design, truth, 1.0, rng)
        assert abs(obs.y.mean()) < 3.0 / math.sqrt(n)

    def test_constant_response_centers_to_zero(self):
        y = np.full(17, 3.25)
        yt = normalize_response(y, 0.25)
        assert np.all(yt == 0.0)

    def test_centering_identity(self):
        rng = seeded(6)
        truth = sample_ground_truth(30, 6, (1.0, 9.0), rng)
        design = sample_design(200, 30, 0.25, rng)
        obs = sample_response(design, truth, 2.0, rng)
        assert abs(obs.y_tilde.sum()) < 1e-9 * np.linalg.norm(obs.y)

    def test_stored_parts_recompose(self):
        rng = seeded(7)
        truth = sample_ground_truth(30, 6, (1.0, 9.0), rng)
        design = sample_design(100, 30, 0.25, rng)
        obs = sample_response(design, truth, 0.7, rng)
        assert np.allclose(obs.y, obs.poisson_part + obs.gauss_part, atol=0)

    def test_nan_sigma_rejected(self, rng):
        design = sample_design(10, 3, 0.25, rng)
        truth = GroundTruth(x_star=np.array([1.0, 0.0, 2.0]),
                            support=np.array([0, 2]), l1_norm=3.0)
        with pytest.raises(ValueError):
            sample_response(design, truth, float("nan"), rng)

    def test_conditional_moments(self):
        # fixed design: E[y|A] = A x*, Var[y_i|A] = (A x*)_i + sigma^2
        rng = seeded(8)
        n, p, s, sigma = 40, 12, 4, 1.0
        truth = sample_ground_truth(p, s, (2.0, 10.0), rng)
        design = sample_design(n, p, 0.3, rng)
        lam = design.matvec_raw(truth.x_star)
        reps = 20_000
        draws = rng.poisson(lam, size=(reps, n)) + sigma * rng.standard_normal((reps, n))
        target_var = lam + sigma ** 2
        mean_err = np.abs(draws.mean(axis=0) - lam)
        assert np.all(mean_err < 4.0 * np.sqrt(target_var / reps))
        var_err = np.abs(draws.var(axis=0, ddof=1) - target_var)
        assert np.all(var_err < 4.0 * target_var * np.sqrt(3.0 / reps))


@pytest.mark.parametrize("lam", [0.5, 5.0, 50.0, 500.0])
def test_poisson_sampler_gof(lam):
    rng = seeded(int(lam * 10))
    draws = rng.poisson(lam, size=100_000)
    lo = int(stats.poisson.ppf(1e-6, lam))
    hi = int(stats.poisson.ppf(1 - 1e-6, lam))
    edges = np.arange(lo, hi + 2)
    counts = np.bincount(np.clip(draws, lo, hi) - lo, minlength=edges.size - 1)
    pmf = stats.poisson.pmf(edges[:-1], lam)
    pmf[0] = stats.poisson.cdf(lo, lam)
    pmf[-1] = stats.poisson.sf(hi - 1, lam)
    # merge bins until every expected count is >= 5
    exp = pmf * draws.size
    merged_obs, merged_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, exp):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            merged_obs.append(acc_o)
            merged_exp.append(acc_e)
            acc_o = acc_e = 0.0
    merged_obs[-1] += acc_o
    merged_exp[-1] += acc_e
    merged_exp = np.array(merged_exp) * (draws.size / sum(merged_exp))
    chi2, pval = stats.chisquare(merged_obs, merged_exp)
    assert pval > 0.001
