import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayes_explore.agents import (BETA_CAP, BETA_SEARCH_RANGE, KLearningAgent, KLearningParams,
                                  SoftQParams, ThompsonAgent, arm_cgfs, bandit_k_probs,
                                  bandit_objective, bandit_optimal_beta, bayes_optimal_problem1,
                                  boltzmann_policy, estimate_optimality, k_policy, k_values,
                                  soft_bellman, soft_q_policy, thompson_policy)
from bayes_explore.environments import make_problem1_prior, make_random_mdp
from bayes_explore.mdp import Transition, optimal_values
from bayes_explore.posterior import BeliefState, GaussianRewardPosterior, TwoPointBelief


def random_belief(seed, S=2, A=2, H=2, episodes=3):
    rng = np.random.default_rng(seed)
    env = make_random_mdp(S, A, H, rng)
    b = BeliefState.prior_for(env)
    for _ in range(episodes):
        for s in range(S):
            for a in range(A):
                b.observe(Transition(0, 0, s, a, int(rng.integers(S)), float(rng.normal())))
    return b


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 50.0))
def test_soft_values_sandwich_hard_values(seed, beta):
    S, A, H = 3, 2, 3
    mdp = make_random_mdp(S, A, H, np.random.default_rng(seed))
    _, v_soft = soft_bellman(mdp, beta)
    _, v_hard = optimal_values(mdp)
    assert np.all(v_soft >= v_hard - 1e-12)
    # each step adds at most log(A) / beta of entropy value
    steps = np.arange(H, -1, -1)[:, None]
    assert np.all(v_soft <= v_hard + steps * np.log(A) / beta + 1e-12)


def test_soft_bellman_large_beta_is_hard():
    mdp = make_random_mdp(3, 3, 4, np.random.default_rng(2))
    _, v_soft = soft_bellman(mdp, 1e6)
    np.testing.assert_allclose(v_soft, optimal_values(mdp)[1], atol=1e-4)


def test_boltzmann_rows():
    q = np.array([[[0.0, 1.0, 1.0]]])
    pi = boltzmann_policy(q, 2.0)
    e = np.exp(2.0)
    np.testing.assert_allclose(pi.probs[0, 0], [1 / (1 + 2 * e), e / (1 + 2 * e), e / (1 + 2 * e)])
    big = boltzmann_policy(np.array([[[1e4, 0.0]]]), 100.0)
    np.testing.assert_allclose(big.probs[0, 0], [1.0, 0.0])


def test_soft_q_uses_the_mean_mdp():
    b = random_belief(0)
    pi = soft_q_policy(b, SoftQParams(3.0))
    q, _ = soft_bellman(b.mean_mdp(), 3.0)
    np.testing.assert_allclose(pi.probs, boltzmann_policy(q, 3.0).probs)
    with pytest.raises(ValueError):
        SoftQParams(0.0)


def test_k_values_bonus_formula():
    b = random_belief(1, episodes=0)
    b.observe(Transition(0, 0, 0, 0, 1, 0.5))
    params = KLearningParams(beta=2.0, sigma=1.5)
    k, v, beta_l = k_values(b, 4, params)
    assert beta_l == pytest.approx(4.0)
    n = np.maximum(b.counts, 1)
    bonus = 1.5 ** 2 * 4.0 / (2 * n)
    q, v_ref = soft_bellman(b.mean_mdp(), 4.0, bonus)
    np.testing.assert_allclose(k, q)
    np.testing.assert_allclose(v, v_ref)
    # the unvisited pairs share the n = 1 bonus, the visited one has count 1 too
    assert bonus[0, 0] == bonus[1, 1]


def test_more_data_shrinks_the_bonus():
    b = random_belief(4)
    params = KLearningParams()
    k1, _, _ = k_values(b, 5, params)
    b2 = b.copy()
    b2.counts = b2.counts * 10  # same means, ten times the counts
    k2, _, _ = k_values(b2, 5, params)
    assert np.all(k2 <= k1 + 1e-12)


def test_k_learning_turns_greedy_with_data():
    b = random_belief(5, episodes=1)
    b.counts = np.full_like(b.counts, 10**9)
    q_ce, _ = optimal_values(b.mean_mdp())
    pi = k_policy(b, 10**6, KLearningParams())
    np.testing.assert_array_equal(pi.probs.argmax(-1), q_ce.argmax(-1))
    assert pi.probs.max(-1).min() > 0.99


def test_k_params_schedule():
    p = KLearningParams(beta=0.5)
    assert p.beta_at(1) == 0.5 and p.beta_at(9) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        p.beta_at(0)
    with pytest.raises(ValueError):
        KLearningParams(sigma=-1.0)


# -- bandit K-learning ------------------------------------------------------------

def _grid_argmin(cgfs, points=2_001):
    betas = np.geomspace(*BETA_SEARCH_RANGE, points)
    vals = np.array([bandit_objective(cgfs, b) for b in betas])
    return betas[vals.argmin()], vals.min()


def test_bandit_beta_frozen_values():
    probs, beta = bandit_k_probs(make_problem1_prior(3))
    assert beta == pytest.approx(2.9668186967, rel=1e-6)
    assert probs[1] == pytest.approx(0.8294895125, rel=1e-6)
    probs, beta = bandit_k_probs(make_problem1_prior(1000))
    assert beta == pytest.approx(10.3237957336, rel=1e-6)
    assert probs[1] == pytest.approx(0.9390152097, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(0.01, 2.0)), min_size=2, max_size=5))
def test_bandit_beta_matches_grid_search(arms):
    cgfs = arm_cgfs([GaussianRewardPosterior(m, v) for m, v in arms])
    beta = bandit_optimal_beta(cgfs)
    _, grid_min = _grid_argmin(cgfs)
    assert bandit_objective(cgfs, min(beta, BETA_SEARCH_RANGE[1])) <= grid_min + 1e-6


def test_deterministic_arms_give_the_cap():
    prior = make_problem1_prior(4)
    resolved = TwoPointBelief(1.0, prior.plus, prior.minus)
    probs, beta = bandit_k_probs(resolved)
    assert beta == BETA_CAP
    np.testing.assert_allclose(probs, [0.0, 1.0, 0.0, 0.0], atol=1e-12)


def test_objective_decreases_then_increases():
    cgfs = arm_cgfs(make_problem1_prior(10).arm_beliefs(0))
    beta = bandit_optimal_beta(cgfs)
    f = lambda b: bandit_objective(cgfs, b)
    assert f(beta / 2) > f(beta) < f(beta * 2)


def test_bayes_optimal_rule():
    prior = make_problem1_prior(3)
    assert bayes_optimal_problem1(prior, 100).probs[0, 0].argmax() == 1
    assert bayes_optimal_problem1(prior, 3).probs[0, 0].argmax() == 0  # 0.5*3 = 3*0.5 is no gain
    assert bayes_optimal_problem1(prior, 4).probs[0, 0].argmax() == 1
    minus = TwoPointBelief(0.0, prior.plus, prior.minus)
    assert bayes_optimal_problem1(minus, 100).probs[0, 0].argmax() == 0
    with pytest.raises(ValueError):
        bayes_optimal_problem1(BeliefState.prior(1, 3, 1), 10)


def test_thompson_frequency_follows_the_prior():
    prior = make_problem1_prior(3, p_plus=0.3)
    rng = np.random.default_rng(0)
    picks = [thompson_policy(prior, rng).probs[0, 0].argmax() for _ in range(5000)]
    assert np.mean(np.array(picks) == 1) == pytest.approx(0.3, abs=0.02)


def test_optimality_estimate_on_two_point_prior():
    est = estimate_optimality(make_problem1_prior(5), 20_000, np.random.default_rng(2))
    assert est.probs[0, 0, 1] == pytest.approx(0.5, abs=4 * est.stderr()[0, 0, 1])
    assert est.probs[0, 0, 0] == pytest.approx(0.5, abs=4 * est.stderr()[0, 0, 0])
    assert est.probs[0, 0, 2:].sum() == 0


def test_agent_objects():
    prior = make_problem1_prior(3)
    agent = ThompsonAgent(prior)
    b = agent.initial_belief()
    assert b is not prior and b.p_plus == prior.p_plus
    k = KLearningAgent(BeliefState.prior(1, 3, 1), KLearningParams(2.0, 0.5))
    assert k.params() == {"beta": 2.0, "sigma": 0.5}
