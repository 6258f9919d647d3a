"""Decision rules: Thompson sampling, soft Q-learning, K-learning, Bayes-optimal reference."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, softmax

from .mdp import Policy, TabularMdp, greedy_actions, greedy_policy, optimal_values
from .posterior import (Belief, BeliefState, GaussianRewardPosterior, TwoPointArm,
                        TwoPointBelief, reward_cgf)

BETA_SEARCH_RANGE = (1e-4, 1e4)
BETA_CAP = 1e6
BETA_RTOL = 1e-8


@dataclass(frozen=True)
class SoftQParams:
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class KLearningParams:
    beta: float = 1.0
    sigma: float = 1.0
    pseudo_count: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and self.sigma > 0 and self.pseudo_count > 0):
            raise ValueError("beta, sigma and pseudo_count must be positive")

    def beta_at(self, episode: int) -> float:
        """Inverse temperature schedule beta * sqrt(episode), episodes counted from 1."""
        if episode < 1:
            raise ValueError("episodes are counted from 1")
        return self.beta * np.sqrt(episode)


@dataclass(frozen=True)
class OptimalityEstimate:
    """Monte-Carlo estimate of P(action a is optimal at (h, s))."""

    probs: np.ndarray  # (H, S, A)
    samples: int

    def stderr(self) -> np.ndarray:
        return np.sqrt(self.probs * (1 - self.probs) / self.samples)


# -- planning primitives ---------------------------------------------------

def soft_bellman(mdp: TabularMdp, beta: float, bonus: np.ndarray | float = 0.0
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Soft backward induction with log-sum-exp state values.

    Returns ``(q, v)``; q[h] = mean reward + bonus + P v[h + 1] and
    v[h] = logsumexp(beta * q[h]) / beta, with v[H] = 0.
    """
    S, A, H = mdp.shape
    r = mdp.reward_mean + bonus
    p = mdp.transitions.reshape(S * A, S)
    q = np.empty((H, S, A))
    v = np.zeros((H + 1, S))
    for h in reversed(range(H)):
        q[h] = r + (p @ v[h + 1]).reshape(S, A)
        v[h] = np.logaddexp.reduce(beta * q[h], axis=1) / beta
    return q, v


def boltzmann_policy(q: np.ndarray, beta: float) -> Policy:
    x = beta * np.asarray(q, dtype=float)
    w = np.exp(x - x.max(axis=-1, keepdims=True))
    return Policy(w / w.sum(axis=-1, keepdims=True))


def posterior_optimal_values(belief: Belief, n: int, rng: np.random.Generator,
                             chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Optimal (q, v) of ``n`` posterior-sampled MDPs, shapes (n,H,S,A) and (n,H+1,S)."""
    S, A, H = belief.shape
    qs, vs = [], []
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        mu, p = belief.sample_params(m, rng)
        q = np.empty((m, H, S, A))
        v = np.zeros((m, H + 1, S))
        for h in reversed(range(H)):
            q[:, h] = mu + np.einsum("nsat,nt->nsa", p, v[:, h + 1])
            v[:, h] = q[:, h].max(axis=-1)
        qs.append(q)
        vs.append(v)
    return np.concatenate(qs), np.concatenate(vs)


def optimality_frequencies(q_samples: np.ndarray) -> np.ndarray:
    """Fraction of samples in which each action is the (lowest-index) argmax."""
    A = q_samples.shape[-1]
    best = greedy_actions(q_samples)
    return np.eye(A)[best].mean(axis=0)


# -- agents' policies -------------------------------------------------------

def thompson_policy(belief: Belief, rng: np.random.Generator) -> Policy:
    """Sample one MDP from the posterior and act greedily on it."""
    q, _ = optimal_values(belief.sample_mdp(rng))
    return greedy_policy(q)


def soft_q_values(belief: Belief, params: SoftQParams) -> tuple[np.ndarray, np.ndarray]:
    return soft_bellman(belief.mean_mdp(), params.beta)


def soft_q_policy(belief: Belief, params: SoftQParams) -> Policy:
    """Boltzmann policy over soft Q-values of the posterior-mean MDP."""
    q, _ = soft_q_values(belief, params)
    return boltzmann_policy(q, params.beta)


def k_values(belief: Belief, episode: int, params: KLearningParams
             ) -> tuple[np.ndarray, np.ndarray, float]:
    """K-values, soft values and the inverse temperature used at ``episode``."""
    beta_l = params.beta_at(episode)
    n = np.maximum(belief.counts, params.pseudo_count)
    bonus = params.sigma ** 2 * beta_l / (2.0 * n)
    k, v = soft_bellman(belief.mean_mdp(), beta_l, bonus)
    return k, v, beta_l


def k_policy(belief: Belief, episode: int, params: KLearningParams) -> Policy:
    k, _, beta_l = k_values(belief, episode, params)
    return boltzmann_policy(k, beta_l)


def bandit_objective(cgfs: Sequence[Callable[[float], float]], beta: float) -> float:
    """beta^-1 * log sum_i exp G_i(beta)."""
    return float(logsumexp([g(beta) for g in cgfs]) / beta)


def bandit_optimal_beta(cgfs: Sequence[Callable[[float], float]]) -> float:
    """Minimise the bandit K-learning objective over beta.

    Bounded Brent search in log(beta) over ``BETA_SEARCH_RANGE``. When the
    objective is no higher at the upper end than at the interior optimum
    (all-deterministic arms make it decrease, or go flat in floating point,
    all the way out) the minimiser is unbounded and ``BETA_CAP`` is returned.
    """
    lo, hi = np.log(BETA_SEARCH_RANGE[0]), np.log(BETA_SEARCH_RANGE[1])

    def f(log_beta):
        val = bandit_objective(cgfs, np.exp(log_beta))
        if not np.isfinite(val):
            raise FloatingPointError(f"non-finite objective at beta={np.exp(log_beta)}")
        return val

    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": BETA_RTOL, "maxiter": 2000})
    x = float(res.x)
    # still decreasing at the upper end, or flat out to it in floating point
    if f(hi) <= f(x) or (hi - x < 1e-4 and f(hi) <= f(hi - 1e-3)):
        return BETA_CAP
    if x - lo < 1e-4:
        return float(BETA_SEARCH_RANGE[0])
    return float(np.exp(x))


def _arm_beliefs(belief) -> list:
    if isinstance(belief, TwoPointBelief):
        if belief.shape[::2] != (1, 1):
            raise ValueError("bandit K-learning needs S = H = 1")
        return belief.arm_beliefs(0)
    if isinstance(belief, BeliefState):
        if belief.shape[::2] != (1, 1):
            raise ValueError("bandit K-learning needs S = H = 1")
        return [belief.reward_posterior(0, a) for a in range(belief.num_actions)]
    return list(belief)


def arm_cgfs(arms: Sequence[GaussianRewardPosterior | TwoPointArm]) -> list[Callable[[float], float]]:
    return [lambda b, arm=arm: reward_cgf(arm, b) for arm in arms]


@lru_cache(maxsize=4096)
def _bandit_k_solution(arms: tuple) -> tuple[tuple[float, ...], float]:
    cgfs = arm_cgfs(arms)
    beta = bandit_optimal_beta(cgfs)
    return tuple(softmax([g(beta) for g in cgfs])), beta


def bandit_k_probs(belief) -> tuple[np.ndarray, float]:
    """Arm probabilities proportional to exp G_i(beta*) and the beta* used.

    Solutions are memoised on the (hashable, frozen) arm beliefs.
    """
    probs, beta = _bandit_k_solution(tuple(_arm_beliefs(belief)))
    return np.array(probs), beta


def bandit_k_policy(belief) -> Policy:
    """Analytic K-learning policy for a single-state, single-step bandit."""
    probs, _ = bandit_k_probs(belief)
    return Policy(probs[None, None, :])


def bayes_optimal_problem1(belief: TwoPointBelief, episodes_remaining: int) -> Policy:
    """Explore-once policy for the one-unknown-arm bandit.

    Pulls arm index 1 while unresolved if the expected saving p+ * remaining
    exceeds the expected cost 3 p-; otherwise acts greedily on the known MDP
    (resolved) or plays arm index 0.
    """
    if not isinstance(belief, TwoPointBelief) or belief.shape != (1, belief.num_actions, 1):
        raise ValueError("expected a two-point belief over single-step bandits")
    A = belief.num_actions
    known_arms = np.delete(np.arange(A), 1)
    if A < 3 or not np.array_equal(belief.plus.reward_mean[0, known_arms],
                                   belief.minus.reward_mean[0, known_arms]):
        raise ValueError("belief does not have the one-unknown-arm structure")
    if belief.resolved:
        known = belief.plus if belief.p_plus == 1.0 else belief.minus
        return greedy_policy(optimal_values(known)[0])
    action = 1 if belief.p_plus * episodes_remaining > 3.0 * belief.p_minus else 0
    return Policy.from_actions(np.full((1, 1), action), A)


def estimate_optimality(belief: Belief, samples: int, rng: np.random.Generator
                        ) -> OptimalityEstimate:
    if samples < 1:
        raise ValueError("samples must be positive")
    q, _ = posterior_optimal_values(belief, samples, rng)
    return OptimalityEstimate(optimality_frequencies(q), samples)


# -- agent objects used by the experiment loop ----------------------------

class Agent:
    """A decision rule plus the prior it starts from."""

    name = "agent"

    def __init__(self, prior: Belief):
        self.prior = prior

    def initial_belief(self) -> Belief:
        return self.prior.copy()

    def policy(self, belief: Belief, episode: int, episodes_remaining: int,
               rng: np.random.Generator) -> Policy:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


class ThompsonAgent(Agent):
    name = "thompson"

    def policy(self, belief, episode, episodes_remaining, rng):
        return thompson_policy(belief, rng)


class SoftQAgent(Agent):
    name = "soft_q"

    def __init__(self, prior, beta: float):
        super().__init__(prior)
        self.soft = SoftQParams(beta)

    def policy(self, belief, episode, episodes_remaining, rng):
        return soft_q_policy(belief, self.soft)

    def params(self):
        return {"beta": self.soft.beta}


class KLearningAgent(Agent):
    name = "k_learning"

    def __init__(self, prior, params: KLearningParams = KLearningParams()):
        super().__init__(prior)
        self.k = params

    def policy(self, belief, episode, episodes_remaining, rng):
        return k_policy(belief, episode, self.k)

    def params(self):
        return {"beta": self.k.beta, "sigma": self.k.sigma}


class BanditKAgent(Agent):
    name = "bandit_k"

    def policy(self, belief, episode, episodes_remaining, rng):
        return bandit_k_policy(belief)


class BayesOptimalProblem1Agent(Agent):
    name = "bayes_optimal"

    def policy(self, belief, episode, episodes_remaining, rng):
        return bayes_optimal_problem1(belief, episodes_remaining)


class GreedyAgent(Agent):
    """Certainty-equivalent greedy play on the posterior-mean MDP."""

    name = "greedy"

    def policy(self, belief, episode, episodes_remaining, rng):
        return greedy_policy(optimal_values(belief.mean_mdp())[0])


class OracleAgent(Agent):
    """Plays the optimal policy of a fixed, known MDP."""

    name = "oracle"

    def __init__(self, prior, mdp: TabularMdp):
        super().__init__(prior)
        self._policy = greedy_policy(optimal_values(mdp)[0])

    def policy(self, belief, episode, episodes_remaining, rng):
        return self._policy
