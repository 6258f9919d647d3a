"""Monte-Carlo checks of K-learning's optimism and its KL bound against Thompson sampling."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from ..agents import (KLearningParams, k_values, optimality_frequencies,
                      posterior_optimal_values)
from ..environments import make_random_mdp
from ..mdp import Policy, sample_episode
from ..posterior import Belief, BeliefState

MIN_MC_SAMPLES = 1000
Z = 3.0


def kl_divergence(p, q, atol: float = 1e-9) -> float:
    """KL(p || q) with 0 log 0 = 0; +inf where p > 0 and q = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same shape")
    for x in (p, q):
        if np.any(x < -atol) or abs(x.sum() - 1) > atol:
            raise ValueError("inputs must be probability vectors")
    support = p > 0
    if np.any(q[support] <= 0):
        return float("inf")
    return float(max(np.sum(p[support] * np.log(p[support] / q[support])), 0.0))


def _kl_stderr(p: np.ndarray, q: np.ndarray, n: int) -> float:
    # delta method for the plug-in estimate of KL(p || q) from n categorical draws
    support = p > 0
    g = np.log(p[support] / q[support]) + 1.0
    var = np.sum(p[support] * g ** 2) - np.sum(p[support] * g) ** 2
    return float(np.sqrt(max(var, 0.0) / n))


@dataclass
class Theorem1Report:
    lhs: np.ndarray  # V^K, (H, S)
    rhs: np.ndarray  # E V* + KL / beta, (H, S)
    stderr: np.ndarray  # (H, S)
    beta: float

    @property
    def margin(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margin >= -Z * self.stderr))


@dataclass
class OptimismReport:
    k: np.ndarray  # (H, S, A)
    cgf_bound: np.ndarray  # beta_l^-1 * log E exp(beta_l Q*)
    mean_q: np.ndarray  # E Q*
    cgf_stderr: np.ndarray
    mean_stderr: np.ndarray
    beta: float

    @property
    def upper_ok(self) -> bool:
        return bool(np.all(self.k >= self.cgf_bound - Z * self.cgf_stderr))

    @property
    def lower_ok(self) -> bool:
        se = np.hypot(self.cgf_stderr, self.mean_stderr)
        return bool(np.all(self.cgf_bound >= self.mean_q - Z * se))

    @property
    def passed(self) -> bool:
        return self.upper_ok and self.lower_ok


def theorem1_check(belief: Belief, beta: float, mc_samples: int, rng: np.random.Generator,
                   params: KLearningParams | None = None) -> Theorem1Report:
    """Check V^K_h(s) >= E V*_h(s) + KL(P(O_h(s)) || pi^K_h(s)) / beta at every (h, s).

    K-values use episode index 1, so the inverse temperature is ``beta``.
    Optimality probabilities and E V* come from ``mc_samples`` posterior draws.
    """
    if mc_samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} Monte-Carlo samples")
    params = KLearningParams(beta) if params is None else KLearningParams(
        beta, params.sigma, params.pseudo_count)
    k, v_k, _ = k_values(belief, 1, params)
    pi_k = softmax(beta * k, axis=-1)
    q_star, v_star = posterior_optimal_values(belief, mc_samples, rng)
    p_opt = optimality_frequencies(q_star)
    H, S = v_k.shape[0] - 1, v_k.shape[1]
    rhs = np.empty((H, S))
    se = np.empty((H, S))
    for h in range(H):
        for s in range(S):
            kl = kl_divergence(p_opt[h, s], pi_k[h, s])
            if not np.isfinite(kl):
                raise FloatingPointError(
                    f"pi^K puts zero mass on a possibly optimal action at (h={h}, s={s})")
            ev = v_star[:, h, s]
            rhs[h, s] = ev.mean() + kl / beta
            se_kl = _kl_stderr(p_opt[h, s], pi_k[h, s], mc_samples)
            se[h, s] = np.hypot(ev.std(ddof=1) / np.sqrt(mc_samples), se_kl / beta)
    return Theorem1Report(v_k[:-1], rhs, se, beta)


def optimism_check(belief: Belief, episode: int, params: KLearningParams, mc_samples: int,
                   rng: np.random.Generator) -> OptimismReport:
    """Check K_h(s,a) >= beta_l^-1 G^Q_h(s,a,beta_l) >= E Q*_h(s,a) by posterior sampling."""
    if mc_samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} Monte-Carlo samples")
    k, _, beta_l = k_values(belief, episode, params)
    q_star, _ = posterior_optimal_values(belief, mc_samples, rng)
    spread = q_star.max(axis=0) - q_star.min(axis=0)
    if np.any(beta_l * spread > 20):
        warnings.warn("beta * range(Q*) > 20: Monte-Carlo CGF estimate is unreliable",
                      RuntimeWarning, stacklevel=2)
    n = mc_samples
    x = beta_l * q_star
    cgf = (logsumexp(x, axis=0) - np.log(n)) / beta_l
    w = np.exp(x - x.max(axis=0))
    cgf_se = w.std(axis=0, ddof=1) / (w.mean(axis=0) * np.sqrt(n)) / beta_l
    return OptimismReport(k, cgf, q_star.mean(axis=0), cgf_se,
                          q_star.std(axis=0, ddof=1) / np.sqrt(n), beta_l)


def random_belief(num_states: int, num_actions: int, horizon: int, rng: np.random.Generator,
                  max_episodes: int = 5) -> BeliefState:
    """Prior for a random MDP updated with 0..max_episodes uniformly random episodes.

    ``belief.episode`` is set to the index of the next episode.
    """
    env = make_random_mdp(num_states, num_actions, horizon, rng)
    belief = BeliefState.prior_for(env)
    uniform = Policy.uniform(num_states, num_actions, horizon)
    episodes = int(rng.integers(0, max_episodes + 1))
    for ell in range(1, episodes + 1):
        for t in sample_episode(env, uniform, rng, ell):
            belief.observe(t)
    belief.episode = episodes + 1
    return belief
