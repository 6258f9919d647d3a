import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayes_explore.environments import make_random_mdp
from bayes_explore.mdp import (Deterministic, Gaussian, Policy, TabularMdp, evaluate_policy,
                               greedy_actions, greedy_policy, optimal_return, optimal_values,
                               per_episode_regret, policy_return, sample_episode,
                               sample_returns, state_occupancy)
from oracles import brute_force_optimal_start_values, forward_return


def hand_mdp():
    p = np.array([[[1.0, 0.0], [0.0, 1.0]],
                  [[0.5, 0.5], [0.0, 1.0]]])
    mu = np.array([[0.0, -0.5], [1.0, 0.2]])
    return TabularMdp(p, mu, np.zeros((2, 2)), 2, np.array([1.0, 0.0]))


mdp_shapes = st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))


def random_policy(rng, S, A, H):
    return Policy(rng.dirichlet(np.ones(A), size=(H, S)))


# -- frozen hand-computed values ----------------------------------------------

def test_hand_mdp_values():
    q, v = optimal_values(hand_mdp())
    np.testing.assert_allclose(q[1], [[0.0, -0.5], [1.0, 0.2]])
    np.testing.assert_allclose(q[0], [[0.0, 0.5], [1.5, 1.2]])
    np.testing.assert_allclose(v, [[0.5, 1.5], [0.0, 1.0], [0.0, 0.0]])
    assert optimal_return(hand_mdp()) == pytest.approx(0.5)


def test_hand_mdp_greedy_policy_and_regret():
    mdp = hand_mdp()
    q, _ = optimal_values(mdp)
    pi = greedy_policy(q)
    np.testing.assert_array_equal(pi.probs.argmax(-1), [[1, 0], [0, 0]])
    always_zero = Policy.from_actions(np.zeros((2, 2), dtype=int), 2)
    assert policy_return(mdp, always_zero) == pytest.approx(0.0)
    assert per_episode_regret(mdp, always_zero) == pytest.approx(0.5)
    assert per_episode_regret(mdp, pi) == 0.0


# -- oracles --------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(mdp_shapes, st.integers(0, 2**32 - 1))
def test_optimal_values_match_enumeration(shape, seed):
    S, A, H = shape
    mdp = make_random_mdp(S, A, H, np.random.default_rng(seed))
    _, v = optimal_values(mdp)
    oracle = brute_force_optimal_start_values(mdp.transitions, mdp.reward_mean, H)
    np.testing.assert_allclose(v[0], oracle, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(mdp_shapes, st.integers(0, 2**32 - 1))
def test_deterministic_policy_value_matches_forward_pass(shape, seed):
    S, A, H = shape
    rng = np.random.default_rng(seed)
    mdp = make_random_mdp(S, A, H, rng)
    actions = rng.integers(0, A, size=(H, S))
    pi = Policy.from_actions(actions, A)
    expected = forward_return(mdp.transitions, mdp.reward_mean, mdp.initial_dist, actions)
    assert policy_return(mdp, pi) == pytest.approx(expected, abs=1e-12)


def test_evaluate_policy_matches_simulation():
    rng = np.random.default_rng(7)
    mdp = make_random_mdp(3, 2, 3, rng)
    pi = random_policy(rng, 3, 2, 3)
    returns = sample_returns(mdp, pi, 200_000, rng)
    se = returns.std(ddof=1) / np.sqrt(len(returns))
    assert abs(returns.mean() - policy_return(mdp, pi)) < 4 * se


def test_sample_episode_matches_batch_simulation():
    rng = np.random.default_rng(3)
    mdp = make_random_mdp(2, 2, 3, rng)
    pi = random_policy(rng, 2, 2, 3)
    returns = [sum(t.reward for t in sample_episode(mdp, pi, rng)) for _ in range(20_000)]
    se = np.std(returns, ddof=1) / np.sqrt(len(returns))
    assert abs(np.mean(returns) - policy_return(mdp, pi)) < 4 * se


# -- properties -----------------------------------------------------------------

@settings(max_examples=80, deadline=None)
@given(mdp_shapes, st.integers(0, 2**32 - 1))
def test_optimal_dominates_every_policy(shape, seed):
    S, A, H = shape
    rng = np.random.default_rng(seed)
    mdp = make_random_mdp(S, A, H, rng)
    _, v_star = optimal_values(mdp)
    v_pi = evaluate_policy(mdp, random_policy(rng, S, A, H))
    assert np.all(v_star >= v_pi - 1e-12)
    assert per_episode_regret(mdp, random_policy(rng, S, A, H)) >= 0.0


@settings(max_examples=80, deadline=None)
@given(mdp_shapes, st.integers(0, 2**32 - 1))
def test_greedy_on_optimal_q_is_optimal(shape, seed):
    S, A, H = shape
    mdp = make_random_mdp(S, A, H, np.random.default_rng(seed))
    q, v = optimal_values(mdp)
    np.testing.assert_allclose(evaluate_policy(mdp, greedy_policy(q)), v, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(mdp_shapes, st.integers(0, 2**32 - 1))
def test_occupancy_gives_the_same_return(shape, seed):
    S, A, H = shape
    rng = np.random.default_rng(seed)
    mdp = make_random_mdp(S, A, H, rng)
    pi = random_policy(rng, S, A, H)
    d = state_occupancy(mdp, pi)
    np.testing.assert_allclose(d.sum(axis=1), 1.0)
    via_occupancy = np.einsum("hs,hsa,sa->", d, pi.probs, mdp.reward_mean)
    assert via_occupancy == pytest.approx(policy_return(mdp, pi), abs=1e-12)


def test_terminal_boundary_is_zero():
    _, v = optimal_values(hand_mdp())
    assert np.all(v[-1] == 0)


def test_lowest_index_tie_break():
    q = np.array([[1.0, 1.0 + 1e-12, 0.5], [0.0, 2.0, 2.0]])
    np.testing.assert_array_equal(greedy_actions(q), [0, 1])


def test_episode_has_horizon_transitions():
    rng = np.random.default_rng(0)
    mdp = make_random_mdp(3, 2, 4, rng)
    ep = sample_episode(mdp, Policy.uniform(3, 2, 4), rng, episode=5)
    assert [t.step for t in ep] == [0, 1, 2, 3]
    assert all(t.episode == 5 for t in ep)
    for a, b in zip(ep, ep[1:]):
        assert a.next_state == b.state


# -- validation -----------------------------------------------------------------

def test_rejects_bad_rows():
    p = np.full((2, 1, 2), 0.6)
    with pytest.raises(ValueError, match="probability"):
        TabularMdp(p, np.zeros((2, 1)), np.zeros((2, 1)), 1, np.array([1.0, 0.0]))


def test_rejects_bad_shapes_and_values():
    p = np.ones((1, 1, 1))
    with pytest.raises(ValueError):
        TabularMdp(p, np.zeros((1, 2)), np.zeros((1, 1)), 1, np.ones(1))
    with pytest.raises(ValueError):
        TabularMdp(p, np.array([[np.nan]]), np.zeros((1, 1)), 1, np.ones(1))
    with pytest.raises(ValueError):
        TabularMdp(p, np.zeros((1, 1)), -np.ones((1, 1)), 1, np.ones(1))
    with pytest.raises(ValueError):
        TabularMdp(p, np.zeros((1, 1)), np.zeros((1, 1)), 0, np.ones(1))


def test_arrays_are_read_only():
    mdp = hand_mdp()
    with pytest.raises(ValueError):
        mdp.reward_mean[0, 0] = 3.0


def test_policy_validation_and_shape_mismatch():
    with pytest.raises(ValueError):
        Policy(np.full((1, 1, 2), 0.7))
    with pytest.raises(ValueError):
        evaluate_policy(hand_mdp(), Policy.uniform(3, 2, 2))


def test_reward_models_round_trip():
    p = np.ones((1, 2, 1))
    mdp = TabularMdp.from_models(p, [[Deterministic(1.0), Gaussian(0.5, 2.0)]], 1, np.ones(1))
    assert mdp.reward_model(0, 0) == Deterministic(1.0)
    assert mdp.reward_model(0, 1) == Gaussian(0.5, 2.0)
