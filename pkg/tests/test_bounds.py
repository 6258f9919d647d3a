import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayes_explore.agents import KLearningParams
from bayes_explore.environments import make_problem1_prior
from bayes_explore.harness.bounds import (kl_divergence, optimism_check, random_belief,
                                          theorem1_check)
from bayes_explore.harness.sweeps import check_bounds, horizon_sigma
from bayes_explore.posterior import BeliefState

simplex = st.integers(2, 6).flatmap(
    lambda k: st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)).map(
    lambda xs: np.array(xs) / np.sum(xs))


@settings(max_examples=100, deadline=None)
@given(simplex, st.data())
def test_kl_is_nonnegative_and_zero_on_equality(p, data):
    q = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=len(p), max_size=len(p))))
    q /= q.sum()
    assert kl_divergence(p, q) >= 0
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-12)


def test_kl_known_value_and_support():
    assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(
        0.5 * np.log(2) + 0.5 * np.log(2 / 3))
    assert kl_divergence([0.0, 1.0], [0.5, 0.5]) == pytest.approx(np.log(2))
    assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == np.inf
    with pytest.raises(ValueError):
        kl_divergence([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(ValueError):
        kl_divergence([1.0], [0.5, 0.5])


def test_checks_need_enough_samples():
    b = BeliefState.prior(1, 2, 1)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        theorem1_check(b, 1.0, 10, rng)
    with pytest.raises(ValueError):
        optimism_check(b, 1, KLearningParams(), 10, rng)


def test_theorem1_on_the_prior_bandit():
    rep = theorem1_check(BeliefState.prior(1, 3, 1), 1.0, 20_000, np.random.default_rng(1))
    assert rep.passed
    # symmetric prior: P(optimal) and pi^K are both uniform, so the KL term vanishes
    assert rep.rhs[0, 0] == pytest.approx(1.5 / np.sqrt(np.pi) * 1.0, abs=0.03)


def test_theorem1_flags_zero_mass_on_an_optimal_action():
    # beta * K gap of ~1e4 leaves pi^K with no mass on the arm that is optimal half the time
    prior = make_problem1_prior(3)
    with pytest.raises(FloatingPointError):
        theorem1_check(prior, 1e4, 2000, np.random.default_rng(0))


def test_optimism_chain_with_horizon_sigma():
    rng = np.random.default_rng(3)
    for _ in range(5):
        b = random_belief(2, 2, 2, rng)
        rep = optimism_check(b, b.episode, KLearningParams(1.0, horizon_sigma(2)), 5000, rng)
        assert rep.passed


def test_random_belief_shapes():
    b = random_belief(3, 2, 2, np.random.default_rng(0), max_episodes=5)
    assert b.shape == (3, 2, 2)
    assert b.counts.sum() % 2 == 0  # whole episodes of length H = 2


def test_small_battery_passes():
    results = check_bounds(trials=8, mc_samples=3000, master_seed=1)
    assert len(results) == 24
    assert all(r.theorem1 and r.optimism for r in results)


def test_horizon_sigma_values():
    assert horizon_sigma(1) == pytest.approx(np.sqrt(1.25))
    assert horizon_sigma(2) == pytest.approx(2.0)
