import math

import numpy as np
import pytest

from pglasso import (ScalarEstimates, empirical_mean, estimate_mu, estimate_nu,
                     estimate_v, median_of_means)

from conftest import seeded


class TestMedianOfMeans:
    def test_constant_data(self):
        assert median_of_means(np.full(11, 4.2), 1.0) == 4.2

    def test_hand_computation_three_blocks(self):
        # floor(8 * 0.4) = 3 blocks: means {1.5, 3.5, 5.5}, median 3.5
        assert median_of_means([1, 2, 3, 4, 5, 6], 0.4) == 3.5

    def test_single_block_equals_mean(self):
        rng = seeded(70)
        x = rng.standard_normal(37)
        assert median_of_means(x, 0.124) == empirical_mean(x)

    def test_poisson_deviation_bound(self):
        # 1e4 Poisson(50) samples, t = 2 log n: the sub-Gaussian deviation
        # bound 8 sqrt(50 log n / n) holds across seeded replicates
        n, lam = 10_000, 50.0
        t = 2.0 * math.log(n)
        bound = 8.0 * math.sqrt(lam * math.log(n) / n)
        for rep in range(20):
            rng = seeded(1400 + rep)
            est = median_of_means(rng.poisson(lam, size=n).astype(float), t)
            assert abs(est - lam) <= bound

    def test_output_within_block_mean_range(self):
        # block partitioning is contiguous-by-index: shuffles may change the
        # value, but it always lies between the extreme block means
        rng = seeded(71)
        x = rng.standard_normal(53) * 3 + 1
        t = 1.1
        k = max(1, min(int(8 * t), x.size))
        base, extra = divmod(x.size, k)
        means, start = [], 0
        for b in range(k):
            size = base + (1 if b < extra else 0)
            means.append(x[start:start + size].mean())
            start += size
        got = median_of_means(x, t)
        assert min(means) <= got <= max(means)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            median_of_means([], 1.0)


class TestEmpiricalMean:
    def test_singleton(self):
        assert empirical_mean([3.5]) == 3.5

    def test_small(self):
        assert empirical_mean([1.0, 2.0, 3.0]) == 2.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_mean([])


class TestEstimateMu:
    def test_all_zero_holdout(self):
        assert estimate_mu(np.zeros(40)) == 0.0

    def test_empty_holdout_rejected(self):
        with pytest.raises(ValueError, match="augmented rows"):
            estimate_mu(np.array([]))

    def test_negative_estimate_clamped(self):
        with pytest.warns(RuntimeWarning):
            assert estimate_mu(np.full(10, -3.0), 0.1) == 0.0

    def test_deviation_bound_poisson_gauss(self):
        # |mu_hat - mu| <= 8 (sqrt(mu) + sigma) sqrt(log n / (theta n))
        # in at least 95 of 100 seeded trials
        n_total, holdout, mu, sigma = 10_000, 400, 35.0, 2.0
        t = 2.0 * math.log(n_total)
        bound = 8.0 * (math.sqrt(mu) + sigma) * math.sqrt(math.log(n_total) / holdout)
        hits = 0
        for rep in range(100):
            rng = seeded(1500 + rep)
            y = rng.poisson(mu, size=holdout) + sigma * rng.standard_normal(holdout)
            hits += abs(estimate_mu(y, t) - mu) <= bound
        assert hits >= 95

    def test_error_shrinks_with_holdout_size(self):
        mu, sigma = 40.0, 1.0
        medians = []
        for holdout in (25, 100, 400):
            errs = []
            for rep in range(50):
                rng = seeded(1600 + rep)
                y = rng.poisson(mu, size=holdout) + sigma * rng.standard_normal(holdout)
                errs.append(abs(estimate_mu(y) - mu) / mu)
            medians.append(np.median(errs))
        assert medians[0] > medians[1] > medians[2]


class TestEstimateV:
    def test_constant_holdout(self):
        assert estimate_v(np.full(12, 7.0), 1.0) == 0.0

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            estimate_v(np.array([1.0]))

    def test_gaussian_variance_band(self):
        # i.i.d. N(0, 4): mean of squared pair-differences concentrates at 4
        # within the 4-sd band 3 sqrt(2 * 16 / m)
        sigma2 = 4.0
        n = 2000
        m = n // 2
        band = 3.0 * math.sqrt(2.0 * sigma2 ** 2 / m)
        for rep in range(10):
            rng = seeded(1700 + rep)
            y = math.sqrt(sigma2) * rng.standard_normal(n)
            assert abs(estimate_v(y, 1.0) - sigma2) <= band

    def test_relative_error_band_poisson_gauss(self):
        # max(V_hat/V - 1, V/V_hat - 1) <= C sqrt(log n / theta n) with the
        # pilot-frozen constant C = 3.0, in at least 95 of 100 trials
        n_total, holdout, mu, sigma = 10_000, 400, 60.0, 3.0
        v_true = mu + sigma ** 2
        bound = 3.0 * math.sqrt(math.log(n_total) / holdout)
        hits = 0
        for rep in range(100):
            rng = seeded(1800 + rep)
            y = rng.poisson(mu, size=holdout) + sigma * rng.standard_normal(holdout)
            v_hat = estimate_v(y, 0.125)
            rel = max(abs(v_hat / v_true - 1), abs(v_true / v_hat - 1))
            hits += rel <= bound
        assert hits >= 95


class TestEstimateNu:
    def test_equal_gives_zero(self):
        assert estimate_nu(5.0, 5.0) == 0.0

    def test_double_gives_one(self):
        assert estimate_nu(5.0, 10.0) == 1.0

    def test_degenerate_mu_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            estimate_nu(0.0, 4.0)

    def test_negative_clamped(self):
        with pytest.warns(RuntimeWarning):
            assert estimate_nu(10.0, 8.0) == 0.0


def test_scalar_estimates_invariants():
    ScalarEstimates(mu_hat=4.0, v_hat=6.0, nu_hat=0.5, holdout_count=10,
                    method="empirical-mean")
    with pytest.raises(ValueError):
        ScalarEstimates(mu_hat=4.0, v_hat=6.0, nu_hat=0.2, holdout_count=10,
                        method="empirical-mean")
    with pytest.raises(ValueError):
        ScalarEstimates(mu_hat=-1.0, v_hat=6.0, nu_hat=0.5, holdout_count=10,
                        method="empirical-mean")
