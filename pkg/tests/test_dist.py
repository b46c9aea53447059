from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from app.core.dist import (
    NEG_INF,
    Bernoulli,
    Beta,
    Binomial,
    Dirichlet,
    Discrete,
    Gamma,
    Normal,
    Poisson,
    PrimKind,
    Uniform,
    get_obs,
    log_prob,
    sample,
)
from app.core.errors import DistParamError


class TestLogProb:
    def test_standard_normal_at_zero(self):
        assert log_prob(Normal(0, 1), 0.0) == pytest.approx(-0.9189385332, abs=1e-9)

    def test_fair_coin(self):
        assert log_prob(Bernoulli(0.5), True) == pytest.approx(math.log(0.5))
        assert log_prob(Bernoulli(0.5), False) == pytest.approx(math.log(0.5))

    def test_uniform_inside_and_outside(self):
        assert log_prob(Uniform(0, 4), 1.0) == pytest.approx(-math.log(4))
        assert log_prob(Uniform(0, 4), 5.0) == NEG_INF

    def test_poisson_unit_rate_at_zero(self):
        assert log_prob(Poisson(1.0), 0) == -1.0

    def test_binomial_matches_closed_form(self):
        expected = math.log(math.comb(10, 3)) + 3 * math.log(0.3) + 7 * math.log(0.7)
        assert log_prob(Binomial(10, 0.3), 3) == pytest.approx(expected)
        assert log_prob(Binomial(10, 0.3), 11) == NEG_INF

    def test_degenerate_bernoulli(self):
        assert log_prob(Bernoulli(1.0), True) == 0.0
        assert log_prob(Bernoulli(1.0), False) == NEG_INF

    def test_integer_accepted_for_real_family(self):
        assert log_prob(Normal(0, 1), 0) == pytest.approx(log_prob(Normal(0, 1), 0.0))

    def test_wrong_kind_is_rejected(self):
        with pytest.raises(DistParamError):
            log_prob(Bernoulli(0.5), 1.5)
        with pytest.raises(DistParamError):
            log_prob(Poisson(2.0), 1.5)


class TestValidation:
    @pytest.mark.parametrize(
        "build",
        [
            lambda: Normal(0, 0),
            lambda: Normal(0, -1),
            lambda: Normal(float("nan"), 1),
            lambda: Uniform(1, 1),
            lambda: Bernoulli(1.5),
            lambda: Binomial(-1, 0.5),
            lambda: Binomial(2.5, 0.5),
            lambda: Beta(0, 1),
            lambda: Gamma(1, 0),
            lambda: Poisson(-0.1),
            lambda: Discrete(()),
            lambda: Discrete(((1, 0.0), (2, 0.0))),
            lambda: Discrete(((1, -1.0), (2, 2.0))),
            lambda: Dirichlet((1.0,)),
            lambda: Dirichlet((1.0, 0.0)),
        ],
    )
    def test_invalid_parameters(self, build):
        with pytest.raises(DistParamError):
            build()

    def test_observed_value_of_wrong_kind(self):
        with pytest.raises(DistParamError):
            Bernoulli(0.5, obs=0.3)
        with pytest.raises(DistParamError):
            Poisson(1.0, obs=True)

    def test_observed_value_out_of_support_is_legal(self):
        d = Uniform(0, 1, obs=2.0)
        assert get_obs(d) == 2.0
        assert log_prob(d, get_obs(d)) == NEG_INF

    def test_integer_observation_of_real_family_is_coerced(self):
        d = Normal(0, 1, obs=2)
        assert isinstance(get_obs(d), float)
        assert d.kind is PrimKind.REAL

    def test_discrete_weights_are_normalised(self):
        d = Discrete(((10, 1.0), (20, 3.0)))
        assert d.kind is PrimKind.INT
        assert d.probs == pytest.approx((0.25, 0.75))
        assert log_prob(d, 20) == pytest.approx(math.log(0.75))
        assert log_prob(d, 30) == NEG_INF

    def test_discrete_zero_weight_outcome(self, rng):
        d = Discrete(((True, 1.0), (False, 0.0)))
        assert all(sample(d, rng) is True for _ in range(200))
        assert log_prob(d, False) == NEG_INF


class TestNormalisation:
    @pytest.mark.parametrize(
        "d, lo, hi",
        [
            (Normal(1.0, 2.0), -np.inf, np.inf),
            (Uniform(-1.0, 3.0), -1.0, 3.0),
            (Beta(2.0, 7.0), 0.0, 1.0),
            (Gamma(2.0, 1.0), 0.0, np.inf),
        ],
    )
    def test_continuous_density_integrates_to_one(self, d, lo, hi):
        total, _ = integrate.quad(lambda x: math.exp(log_prob(d, x)), lo, hi)
        assert total == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize(
        "d, support",
        [
            (Binomial(12, 0.35), range(13)),
            (Poisson(3.5), range(80)),
            (Bernoulli(0.3), (True, False)),
            (Discrete(((0, 1.0), (1, 2.0), (4, 1.0))), range(5)),
        ],
    )
    def test_discrete_mass_sums_to_one(self, d, support):
        assert math.fsum(math.exp(log_prob(d, k)) for k in support) == pytest.approx(1.0, abs=1e-9)


def assert_mean_within(draws, mean, sigmas=4.0):
    draws = np.asarray(draws, dtype=float)
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    assert abs(draws.mean() - mean) <= sigmas * max(se, 1e-12)


def assert_variance_within(draws, variance, sigmas=4.0):
    draws = np.asarray(draws, dtype=float)
    squared = (draws - draws.mean()) ** 2
    se = squared.std(ddof=1) / math.sqrt(len(draws))
    assert abs(squared.mean() - variance) <= sigmas * max(se, 1e-12)


class TestSampling:
    def test_uniform_draws_stay_in_range(self, rng):
        draws = [sample(Uniform(0, 1), rng) for _ in range(10_000)]
        assert all(0.0 <= x <= 1.0 for x in draws)
        assert abs(np.mean(draws) - 0.5) < 0.02

    @pytest.mark.parametrize(
        "d, mean, variance",
        [
            (Normal(2.0, 3.0), 2.0, 9.0),
            (Uniform(-1.0, 3.0), 1.0, 16.0 / 12.0),
            (Bernoulli(0.3), 0.3, 0.21),
            (Binomial(20, 0.4), 8.0, 4.8),
            (Beta(2.0, 7.0), 2.0 / 9.0, 14.0 / (81.0 * 10.0)),
            (Gamma(2.0, 1.5), 3.0, 4.5),
            (Poisson(4.0), 4.0, 4.0),
            (Discrete(((0, 1.0), (1, 2.0), (4, 1.0))), 1.5, 2.25),
        ],
    )
    def test_moments(self, rng, d, mean, variance):
        draws = [float(sample(d, rng)) for _ in range(100_000)]
        assert_mean_within(draws, mean)
        assert_variance_within(draws, variance)

    def test_dirichlet_component_moments(self, rng):
        alphas = (0.5, 1.0, 2.0)
        total = math.fsum(alphas)
        d = Dirichlet(alphas)
        draws = np.array([sample(d, rng) for _ in range(100_000)])
        for component, alpha in enumerate(alphas):
            assert_mean_within(draws[:, component], alpha / total)
            assert_variance_within(draws[:, component], alpha * (total - alpha) / (total**2 * (total + 1.0)))

    def test_draws_have_the_family_kind(self, rng):
        assert isinstance(sample(Bernoulli(0.5), rng), bool)
        assert isinstance(sample(Poisson(2.0), rng), int)
        assert isinstance(sample(Binomial(5, 0.5), rng), int)
        assert isinstance(sample(Normal(0, 1), rng), float)

    def test_degenerate_families(self, rng):
        assert all(sample(Bernoulli(1.0), rng) for _ in range(100))
        assert all(sample(Binomial(7, 0.0), rng) == 0 for _ in range(100))

    def test_dirichlet_draws_lie_on_the_simplex(self, rng):
        d = Dirichlet((0.5, 1.0, 2.0))
        for _ in range(200):
            xs = sample(d, rng)
            assert len(xs) == 3
            assert all(x >= 0.0 for x in xs)
            assert math.fsum(xs) == pytest.approx(1.0, abs=1e-9)
            assert log_prob(d, xs) > NEG_INF

    def test_dirichlet_off_simplex_scores_neg_inf(self):
        assert log_prob(Dirichlet((1.0, 1.0)), (0.7, 0.7)) == NEG_INF

    def test_discrete_frequencies(self, rng):
        d = Discrete(((10, 1.0), (20, 3.0)))
        draws = [sample(d, rng) for _ in range(100_000)]
        assert set(draws) == {10, 20}
        assert_mean_within([x == 20 for x in draws], 0.75)


class TestPoissonRateZero:
    def test_point_mass_at_zero(self, rng):
        d = Poisson(0.0)
        assert all(sample(d, rng) == 0 for _ in range(50))
        assert log_prob(d, 0) == 0.0
        assert log_prob(d, 1) == NEG_INF
