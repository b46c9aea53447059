from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.dist import NEG_INF, Binomial, Normal, PrimKind, Uniform, log_prob
from app.core.env import Env, env_of
from app.core.errors import NothingToInferError
from app.core.model import Addr, bernoulli, binomial, discrete, model, uniform
from app.services.inference_service import (
    DUMMY_PROPOSAL,
    iterate_lw,
    iterate_mh,
    lookup_sample,
    lw,
    mh,
    observed_log_prob,
    run_lw,
    run_mh,
    run_simulate,
    simulate,
)
from app.services.rng_service import iteration_rng, run_rng
from app.services.zoo_service import Popl, coin_flip, hmm_modular, hmm_sir, lin_regr, lin_regr_many


@model
def two_flips():
    p = yield uniform(0, 1, "p")
    a = yield bernoulli(p, "y")
    b = yield bernoulli(p, "y")
    return a, b


PRIOR = (0.2, 0.5, 0.3)
LIKELIHOOD = (0.1, 0.6, 0.9)
EXACT_POSTERIOR = tuple(p * l / 0.59 for p, l in zip(PRIOR, LIKELIHOOD))


@model
def three_states():
    z = yield discrete(list(zip(range(3), PRIOR)), "z")
    y = yield bernoulli(LIKELIHOOD[z], "y")
    return y


@model
def thinning():
    n = yield binomial(10, 0.5, "n")
    k = yield binomial(n, 0.5, "k")
    return n, k


def enumeration_env():
    return env_of(("z", [], PrimKind.INT), ("y", [True]))


def total_variation(draws, exact):
    counts = np.bincount(np.asarray(draws, dtype=int), minlength=len(exact))
    return 0.5 * float(np.abs(counts / counts.sum() - np.asarray(exact)).sum())


class TestTraces:
    def test_sample_trace_holds_only_sampled_sites(self, coin_env, rng):
        run = run_simulate(coin_env, coin_flip(), rng)
        assert set(run.strace) == {Addr("y", 0)}
        assert isinstance(run.strace[Addr("y", 0)], bool)
        assert run.value is run.strace[Addr("y", 0)]

    def test_lp_trace_holds_every_site(self, coin_env, rng):
        run = run_mh(coin_env, {}, DUMMY_PROPOSAL, coin_flip(), rng)
        assert set(run.lptrace) == {Addr("p", 0), Addr("y", 0)}
        assert run.lptrace[Addr("y", 0)] == pytest.approx(math.log(0.5))
        assert observed_log_prob(run.lptrace, run.strace) == pytest.approx(0.0)

    def test_simulate_reifies_samples_into_env(self, coin_env, rng):
        value, env_out = simulate(lambda _: coin_flip(), coin_env, None, rng)
        assert env_out.names == ["p", "y"]
        assert env_out.get("p") == []
        assert env_out.get("y") == [value]

    def test_sampled_reals_widen_an_int_entry(self, rng):
        env = env_of(
            ("mu", [], PrimKind.REAL),
            ("c", [], PrimKind.REAL),
            ("sigma", [], PrimKind.REAL),
            ("y", [0, 3], PrimKind.INT),
        )
        _, env_out = simulate(lin_regr_many, env, [0.0, 1.0, 2.0], rng)
        assert env_out.kind("y") is PrimKind.REAL
        assert len(env_out.get("y")) == 1
        assert Env.from_json(env_out.to_json()) == env_out

    def test_mh_history_widens_an_int_entry(self):
        env = env_of(("mu", [], PrimKind.REAL), ("c", [0.0]), ("sigma", [1.5]), ("y", [1], PrimKind.INT))
        env_out = mh(20, lin_regr_many, [0.0, 1.0], env, seed=2)
        assert env_out.kind("y") is PrimKind.REAL
        assert len(env_out.get("y")) == 20
        assert Env.from_json(env_out.to_json()) == env_out


class TestLikelihoodWeighting:
    def test_weight_sums_observed_sites(self, rng):
        env = env_of(("p", [0.5]), ("y", [True, False]))
        assert run_lw(env, two_flips(), rng).log_weight == pytest.approx(2 * math.log(0.5))

    def test_weight_is_zero_when_nothing_is_observed(self, rng):
        env = env_of(("p", [], PrimKind.REAL), ("y", [], PrimKind.BOOL))
        assert run_lw(env, two_flips(), rng).log_weight == 0.0

    def test_out_of_support_observation(self, rng):
        env = env_of(("mu", [], PrimKind.REAL), ("c", [], PrimKind.REAL), ("sigma", [5.0]), ("y", [], PrimKind.REAL))
        assert run_lw(env, lin_regr(1.0), rng).log_weight == NEG_INF

    def test_weight_matches_closed_form_density(self, rng):
        env = env_of(("mu", [1.0]), ("c", [0.5]), ("sigma", [2.0]), ("y", [3.0]))
        expected = (
            log_prob(Normal(0, 3), 1.0)
            + log_prob(Normal(0, 2), 0.5)
            + log_prob(Uniform(1, 3), 2.0)
            + log_prob(Normal(2.5, 2.0), 3.0)
        )
        assert run_lw(env, lin_regr(2.0), rng).log_weight == pytest.approx(expected)

    def test_zero_iterations(self, coin_env):
        assert lw(0, lambda _: coin_flip(), None, coin_env, seed=1) == []

    def test_lw_and_simulate_draw_the_same_trace(self):
        env = env_of(("mu", [], PrimKind.REAL), ("c", [0.5]), ("sigma", [], PrimKind.REAL), ("y", [1.0, 2.0]))
        m = lin_regr_many([0.0, 1.0, 2.0])
        sim = run_simulate(env, m, iteration_rng(5, 3))
        weighted = run_lw(env, m, iteration_rng(5, 3))
        assert sim.strace == weighted.strace
        assert sim.value == weighted.value

    def test_workers_do_not_change_results(self, coin_env):
        serial = iterate_lw(40, coin_flip(), coin_env, seed=9, workers=1)
        pooled = iterate_lw(40, coin_flip(), coin_env, seed=9, workers=4)
        assert [(r.strace, r.log_weight) for r in serial] == [(r.strace, r.log_weight) for r in pooled]

    def test_weighted_slope(self):
        xs = [float(x) for x in range(101)]
        env = env_of(
            ("mu", [], PrimKind.REAL),
            ("c", [], PrimKind.REAL),
            ("sigma", [], PrimKind.REAL),
            ("y", [3.0 * x for x in xs]),
        )
        results = lw(200, lin_regr_many, xs, env, seed=11)
        mus = np.array([env_out.get("mu")[0] for env_out, _ in results])
        log_weights = np.array([log_weight for _, log_weight in results])
        weights = np.exp(log_weights - log_weights.max())
        assert 2.5 <= float(np.sum(weights * mus) / np.sum(weights)) <= 3.5


class TestMetropolisHastings:
    def test_observed_log_prob_matches_lw_weight(self):
        env = env_of(("mu", [], PrimKind.REAL), ("c", [0.5]), ("sigma", [], PrimKind.REAL), ("y", [1.0, 2.0]))
        m = lin_regr_many([0.0, 1.0])
        weighted = run_lw(env, m, iteration_rng(2, 0))
        replay = run_mh(env, weighted.strace, DUMMY_PROPOSAL, m, iteration_rng(2, 1))
        assert replay.strace == weighted.strace
        assert replay.fresh == frozenset()
        assert observed_log_prob(replay.lptrace, replay.strace) == pytest.approx(weighted.log_weight)

    def test_lookup_reuses_stored_values(self, rng):
        here, other = Addr("x", 0), Addr("x", 1)
        d = Normal(100.0, 1.0)
        assert lookup_sample({here: 1.0}, d, here, other, rng) == 1.0

    def test_lookup_redraws_at_proposal(self, rng):
        here = Addr("x", 0)
        assert lookup_sample({here: 1.0}, Normal(100.0, 1.0), here, here, rng) > 50.0

    def test_lookup_redraws_when_absent(self, rng):
        assert lookup_sample({}, Normal(100.0, 1.0), Addr("x", 0), DUMMY_PROPOSAL, rng) > 50.0

    def test_lookup_redraws_on_kind_mismatch(self, rng):
        here = Addr("x", 0)
        value = lookup_sample({here: True}, Normal(100.0, 1.0), here, DUMMY_PROPOSAL, rng)
        assert isinstance(value, float) and value > 50.0

    def test_lookup_redraws_outside_the_support(self, rng):
        here = Addr("k", 0)
        assert lookup_sample({here: 7}, Binomial(3, 0.5), here, DUMMY_PROPOSAL, rng) <= 3

    def test_redraw_outside_the_support_is_fresh(self):
        env = env_of(("n", [], PrimKind.INT), ("k", [], PrimKind.INT))
        stored = {Addr("n", 0): 9, Addr("k", 0): 8}
        run = run_mh(env, stored, Addr("n", 0), thinning(), iteration_rng(0, 1))
        n, k = run.value
        assert k <= n
        assert Addr("n", 0) in run.fresh
        assert (Addr("k", 0) in run.fresh) == (n < 8)

    def test_chain_keeps_every_value_inside_its_support(self):
        env = env_of(("n", [], PrimKind.INT), ("k", [], PrimKind.INT))
        states = list(iterate_mh(2000, thinning(), env, seed=5))
        assert all(0 <= k <= n for n, k in (state.value for state in states))
        assert all(state.strace[Addr("k", 0)] <= state.strace[Addr("n", 0)] for state in states)

    def test_proposal_site_is_the_only_fresh_site(self, coin_env):
        first = run_mh(coin_env, {}, DUMMY_PROPOSAL, coin_flip(), iteration_rng(0, 0))
        assert first.fresh == {Addr("y", 0)}
        again = run_mh(coin_env, first.strace, Addr("y", 0), coin_flip(), iteration_rng(0, 1))
        assert again.fresh == {Addr("y", 0)}

    def test_fully_observed_model_has_nothing_to_infer(self):
        env = env_of(("p", [0.5]), ("y", [True]))
        with pytest.raises(NothingToInferError):
            mh(10, lambda _: coin_flip(), None, env, seed=0)

    def test_unproposed_sites_are_reused_bit_exactly(self):
        env = env_of(("dx", [], PrimKind.REAL), ("dy", [], PrimKind.REAL), ("y", [1, 1, 2, 2, 3]))
        states = list(iterate_mh(300, hmm_modular(5, 0), env, seed=4))
        assert states[0].accepted and states[0].proposal is None
        for previous, state in zip(states, states[1:]):
            if not state.accepted:
                assert state.strace == previous.strace
                continue
            for addr, value in state.strace.items():
                if addr != state.proposal and addr in previous.strace:
                    assert value == previous.strace[addr]

    def test_iterations_are_reproducible(self, coin_env):
        first = [s.strace for s in iterate_mh(50, coin_flip(), coin_env, seed=3)]
        second = [s.strace for s in iterate_mh(50, coin_flip(), coin_env, seed=3)]
        assert first == second

    def test_history_has_one_entry_per_iteration(self):
        env = env_of(("p", [], PrimKind.REAL), ("y", [True]))
        env_out = mh(25, lambda _: coin_flip(), None, env, seed=0)
        assert len(env_out.get("p")) == 25
        assert env_out.get("y") == []

    def test_coin_flip_posterior_mean(self):
        env = env_of(("p", [], PrimKind.REAL), ("y", [True]))
        draws = mh(20_000, lambda _: coin_flip(), None, env, seed=17).get("p")
        assert abs(float(np.mean(draws[1000:])) - 2.0 / 3.0) < 0.05

    def test_matches_enumerated_posterior(self):
        draws = mh(20_000, lambda _: three_states(), None, enumeration_env(), seed=23).get("z")
        assert total_variation(draws, EXACT_POSTERIOR) < 0.05

    @pytest.mark.slow
    def test_matches_enumerated_posterior_long_chain(self):
        draws = mh(100_000, lambda _: three_states(), None, enumeration_env(), seed=29).get("z")
        assert total_variation(draws, EXACT_POSTERIOR) < 0.02


class TestSimulation:
    def test_sir_produces_one_reading_per_day(self, rng):
        env = env_of(("beta", [0.7]), ("gamma", [0.009]), ("rho", [0.3]), ("xi", [], PrimKind.INT))
        value, env_out = simulate(lambda n: hmm_sir(n, Popl(762, 1, 0)), env, 100, rng)
        assert len(env_out.get("xi")) == 100
        assert value.total == 763

    def test_least_squares_recovers_the_line(self):
        xs = [float(x) for x in range(101)]
        env = env_of(("mu", [3.0]), ("c", [0.0]), ("sigma", [1.0]), ("y", [], PrimKind.REAL))
        hits = 0
        for seed in range(100):
            _, env_out = simulate(lin_regr_many, env, xs, run_rng(seed))
            slope, intercept = np.polyfit(xs, env_out.get("y"), 1)
            hits += 2.8 <= slope <= 3.2 and -0.7 <= intercept <= 0.7
        assert hits >= 95
