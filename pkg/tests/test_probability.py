"""Distribution primitives against closed forms and scipy references."""
import math

import numpy as np
import pytest
from scipy import stats

from bayescal.errors import ValidationError
from bayescal.probability import (Beta, LogNormal, MomentPair, Normal,
                                  TruncatedNormal, Uniform,
                                  lognormal_from_moments)
from bayescal import autodiff as ad


class TestLogDensityOracles:
    def test_normal_matches_scipy(self):
        d = Normal(1.5, 0.7)
        xs = np.linspace(-2, 5, 11)
        assert np.allclose(d.log_density(xs), stats.norm.logpdf(xs, 1.5, 0.7))

    def test_truncated_normal_matches_scipy(self):
        d = TruncatedNormal(2.0, 0.5, 1.0, 4.0)
        xs = np.linspace(1.01, 3.99, 9)
        a, b = (1.0 - 2.0) / 0.5, (4.0 - 2.0) / 0.5
        assert np.allclose(d.log_density(xs),
                           stats.truncnorm.logpdf(xs, a, b, loc=2.0, scale=0.5))

    def test_one_sided_truncation_matches_scipy(self):
        d = TruncatedNormal(2.8, 0.10, 0.0, np.inf)
        xs = np.array([2.5, 2.8, 3.1])
        a = (0.0 - 2.8) / 0.10
        assert np.allclose(d.log_density(xs),
                           stats.truncnorm.logpdf(xs, a, np.inf, loc=2.8, scale=0.10))

    def test_lognormal_matches_scipy(self):
        d = LogNormal(mu_hat=-1.0, sigma_hat=0.4)
        xs = np.array([0.1, 0.3, 0.8, 2.0])
        assert np.allclose(d.log_density(xs),
                           stats.lognorm.logpdf(xs, 0.4, scale=np.exp(-1.0)))

    def test_beta_matches_scipy(self):
        d = Beta(3.0, 8.0)
        xs = np.linspace(0.05, 0.95, 7)
        assert np.allclose(d.log_density(xs), stats.beta.logpdf(xs, 3.0, 8.0))

    def test_uniform_matches_scipy(self):
        d = Uniform(-1.0, 3.0)
        xs = np.array([-0.5, 0.0, 2.9])
        assert np.allclose(d.log_density(xs), stats.uniform.logpdf(xs, -1.0, 4.0))

    def test_outside_support_is_minus_inf_not_an_error(self):
        assert TruncatedNormal(2, 0.5, 1, 4).log_density(0.5) == -np.inf
        assert LogNormal(0.0, 1.0).log_density(-1.0) == -np.inf
        assert Beta(3, 8).log_density(1.5) == -np.inf
        assert Uniform(0, 1).log_density(2.0) == -np.inf
        arr = Beta(3, 8).log_density(np.array([-0.1, 0.5, 1.1]))
        assert arr[0] == -np.inf and np.isfinite(arr[1]) and arr[2] == -np.inf

    def test_non_finite_input_maps_to_minus_inf(self):
        assert Normal(0, 1).log_density(np.nan) == -np.inf
        assert Normal(0, 1).log_density(np.inf) == -np.inf

    def test_dual_input_carries_score_function(self):
        d = Normal(1.0, 2.0)
        x = ad.seed([0.5])
        out = d.log_density(x[0])
        assert np.allclose(out.tan, [(1.0 - 0.5) / 4.0])


class TestNominal:
    def test_closed_form_locations(self):
        assert Normal(40.0, 0.19).nominal() == 40.0
        assert Beta(3.0, 8.0).nominal() == pytest.approx(3.0 / 11.0)
        assert Uniform(2.0, 6.0).nominal() == 4.0

    def test_lognormal_nominal_is_linear_mean(self):
        d = LogNormal.from_moments(0.20e-6, 2.2e-8)
        assert d.nominal() == pytest.approx(0.20e-6, rel=1e-12)


class TestMomentMatching:
    def test_lognormal_from_moments_inverts_exactly(self):
        mean, std = 0.87, 0.012
        mu, sg = lognormal_from_moments(MomentPair(mean, std))
        # analytic mean and variance of LogNormal(mu, sg)
        m = math.exp(mu + sg ** 2 / 2)
        v = (math.exp(sg ** 2) - 1) * math.exp(2 * mu + sg ** 2)
        assert m == pytest.approx(mean, rel=1e-14)
        assert math.sqrt(v) == pytest.approx(std, rel=1e-12)

    def test_sample_moments_agree(self, rng):
        d = LogNormal.from_moments(4.54e-2, 2.53e-3)
        draws = d.draw(rng, size=200_000)
        assert draws.mean() == pytest.approx(4.54e-2, rel=5e-4)
        assert draws.std(ddof=1) == pytest.approx(2.53e-3, rel=2e-2)


class TestSampling:
    """Draws follow the declared law (Kolmogorov-Smirnov at fixed seeds)."""

    def test_truncated_normal_ks(self, rng):
        d = TruncatedNormal(1.0, 0.5, 0.1, 10.0)
        draws = d.draw(rng, size=20_000)
        a, b = (0.1 - 1.0) / 0.5, (10.0 - 1.0) / 0.5
        p = stats.kstest(draws, stats.truncnorm(a, b, loc=1.0, scale=0.5).cdf).pvalue
        assert p > 0.01
        assert draws.min() >= 0.1 and draws.max() <= 10.0

    def test_beta_ks(self, rng):
        draws = Beta(3.0, 8.0).draw(rng, size=20_000)
        assert stats.kstest(draws, stats.beta(3.0, 8.0).cdf).pvalue > 0.01

    def test_lognormal_ks(self, rng):
        d = LogNormal(mu_hat=-0.5, sigma_hat=0.3)
        draws = d.draw(rng, size=20_000)
        assert stats.kstest(draws, stats.lognorm(0.3, scale=np.exp(-0.5)).cdf).pvalue > 0.01

    def test_uniform_ks(self, rng):
        draws = Uniform(-2.0, 5.0).draw(rng, size=20_000)
        assert stats.kstest(draws, stats.uniform(-2.0, 7.0).cdf).pvalue > 0.01

    def test_draws_deterministic_under_seed(self):
        d = TruncatedNormal(2.8, 0.1, 0.0, np.inf)
        a = d.draw(np.random.default_rng(3), size=10)
        b = d.draw(np.random.default_rng(3), size=10)
        assert np.array_equal(a, b)


class TestValidation:
    def test_bad_parameters_rejected(self):
        with pytest.raises(ValidationError):
            Normal(0.0, 0.0)
        with pytest.raises(ValidationError):
            TruncatedNormal(0.0, 1.0, 2.0, 1.0)
        with pytest.raises(ValidationError):
            LogNormal(0.0, -1.0)
        with pytest.raises(ValidationError):
            Beta(0.0, 1.0)
        with pytest.raises(ValidationError):
            Uniform(1.0, 1.0)

    def test_truncation_must_keep_mass(self):
        # both bounds far in one tail leave no representable probability mass
        with pytest.raises(ValidationError):
            TruncatedNormal(0.0, 1.0, 50.0, 60.0)

    def test_from_moments_input_domain(self):
        with pytest.raises(ValidationError):
            lognormal_from_moments(MomentPair(-1.0, 0.1))
        with pytest.raises(ValidationError):
            lognormal_from_moments(MomentPair(2.0, -0.1))
        # zero spread is the exact degenerate limit, not an error
        mu_hat, sigma_hat = lognormal_from_moments(MomentPair(2.0, 0.0))
        assert sigma_hat == 0.0
        assert mu_hat == pytest.approx(np.log(2.0), rel=1e-15)
