"""Conjugate beliefs over unknown tabular MDPs.

Two belief families are provided:

* ``BeliefState``: independent Gaussian posteriors over mean rewards and
  Dirichlet posteriors over transition rows, one per (s, a).
* ``TwoPointBelief``: a prior supported on two known MDPs, used for the
  one-unknown-arm bandit.

Both expose ``observe``, ``sample_mdp``, ``sample_params``, ``mean_mdp`` and
``counts`` so the agents can treat them interchangeably.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .mdp import Deterministic, TabularMdp, Transition


@dataclass(frozen=True)
class GaussianRewardPosterior:
    mean: float
    variance: float
    obs_noise_variance: float = 1.0
    count: int = 0

    def updated(self, reward: float) -> GaussianRewardPosterior:
        precision = 1.0 / self.variance + 1.0 / self.obs_noise_variance
        mean = (self.mean / self.variance + reward / self.obs_noise_variance) / precision
        return GaussianRewardPosterior(mean, 1.0 / precision, self.obs_noise_variance,
                                       self.count + 1)


@dataclass(frozen=True)
class DirichletTransitionPosterior:
    concentration: np.ndarray

    def mean(self) -> np.ndarray:
        return self.concentration / self.concentration.sum()


@dataclass(frozen=True)
class TwoPointArm:
    """Reward of one arm under a two-point belief: ``r_plus`` w.p. ``p_plus``."""

    p_plus: float
    r_plus: float
    r_minus: float


def sample_dirichlet(concentration: np.ndarray, rng: np.random.Generator,
                     size: tuple[int, ...] = ()) -> np.ndarray:
    """Dirichlet draws along the last axis, stable for tiny concentrations.

    Uses Gamma(a) = Gamma(a + 1) * U**(1/a) in log space so that rows with
    concentrations far below one never underflow to an all-zero vector.
    """
    alpha = np.broadcast_to(concentration, size + np.shape(concentration))
    log_g = np.log(rng.standard_gamma(alpha + 1.0)) + np.log(rng.random(alpha.shape)) / alpha
    log_g -= log_g.max(axis=-1, keepdims=True)
    g = np.exp(log_g)
    return g / g.sum(axis=-1, keepdims=True)


class BeliefState:
    """Gaussian-reward / Dirichlet-transition posterior for a tabular MDP.

    Mutated in place by ``observe``; use ``update`` for a functional copy.
    """

    def __init__(self, reward_mean, reward_var, obs_noise_var, concentration,
                 horizon: int, initial_dist, counts=None, episode: int = 1):
        self.reward_mean = np.array(reward_mean, dtype=float)
        self.reward_var = np.array(reward_var, dtype=float)
        self.obs_noise_var = np.array(np.broadcast_to(obs_noise_var, self.reward_mean.shape),
                                      dtype=float)
        self.concentration = np.array(concentration, dtype=float)
        self.horizon = int(horizon)
        self.initial_dist = np.array(initial_dist, dtype=float)
        S, A = self.reward_mean.shape
        self.counts = np.zeros((S, A), dtype=int) if counts is None else np.array(counts)
        self.episode = episode
        if self.concentration.shape != (S, A, S):
            raise ValueError("concentration must be (S, A, S)")
        if np.any(self.concentration <= 0):
            raise ValueError("Dirichlet concentrations must be positive")
        if np.any(self.reward_var <= 0) or np.any(self.obs_noise_var <= 0):
            raise ValueError("variances must be positive")

    @classmethod
    def prior(cls, num_states: int, num_actions: int, horizon: int, initial_dist=None,
              reward_mean: float = 0.0, reward_var: float = 1.0, obs_noise_var: float = 1.0,
              concentration: float | None = None) -> BeliefState:
        """Independent N(reward_mean, reward_var) and symmetric Dirichlet priors.

        The default Dirichlet concentration is 1 / num_states per successor.
        """
        S, A = num_states, num_actions
        if initial_dist is None:
            initial_dist = np.full(S, 1.0 / S)
        alpha = 1.0 / S if concentration is None else concentration
        return cls(np.full((S, A), reward_mean), np.full((S, A), reward_var), obs_noise_var,
                   np.full((S, A, S), alpha), horizon, initial_dist)

    @classmethod
    def prior_for(cls, mdp: TabularMdp, **kwargs) -> BeliefState:
        """Prior with the structural data (S, A, H, rho) of ``mdp``."""
        return cls.prior(mdp.num_states, mdp.num_actions, mdp.horizon, mdp.initial_dist,
                         **kwargs)

    @property
    def num_states(self) -> int:
        return self.reward_mean.shape[0]

    @property
    def num_actions(self) -> int:
        return self.reward_mean.shape[1]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.num_states, self.num_actions, self.horizon

    def copy(self) -> BeliefState:
        return copy.deepcopy(self)

    def reward_posterior(self, s: int, a: int) -> GaussianRewardPosterior:
        return GaussianRewardPosterior(float(self.reward_mean[s, a]), float(self.reward_var[s, a]),
                                       float(self.obs_noise_var[s, a]), int(self.counts[s, a]))

    def transition_posterior(self, s: int, a: int) -> DirichletTransitionPosterior:
        return DirichletTransitionPosterior(self.concentration[s, a].copy())

    def observe(self, t: Transition) -> None:
        s, a = t.state, t.action
        if not (0 <= s < self.num_states and 0 <= a < self.num_actions
                and 0 <= t.next_state < self.num_states):
            raise IndexError(f"transition out of range: {t}")
        precision = 1.0 / self.reward_var[s, a] + 1.0 / self.obs_noise_var[s, a]
        self.reward_mean[s, a] = (self.reward_mean[s, a] / self.reward_var[s, a]
                                  + t.reward / self.obs_noise_var[s, a]) / precision
        self.reward_var[s, a] = 1.0 / precision
        self.concentration[s, a, t.next_state] += 1.0
        self.counts[s, a] += 1

    def sample_params(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """``n`` posterior draws of (reward means (n,S,A), transitions (n,S,A,S))."""
        mu = self.reward_mean + np.sqrt(self.reward_var) * rng.standard_normal((n,) + self.reward_mean.shape)
        p = sample_dirichlet(self.concentration, rng, (n,))
        return mu, p

    def sample_mdp(self, rng: np.random.Generator) -> TabularMdp:
        mu, p = self.sample_params(1, rng)
        return TabularMdp(p[0], mu[0], self.obs_noise_var, self.horizon, self.initial_dist)

    def mean_mdp(self) -> TabularMdp:
        p = self.concentration / self.concentration.sum(axis=-1, keepdims=True)
        return TabularMdp.trusted(p, self.reward_mean.copy(), self.obs_noise_var,
                                  self.horizon, self.initial_dist)


class TwoPointBelief:
    """Belief that the environment is ``plus`` with probability ``p_plus``, else ``minus``.

    Both candidates must share (S, A, H, rho) and have deterministic rewards.
    An observation whose reward matches only one candidate resolves the belief.
    """

    def __init__(self, p_plus: float, plus: TabularMdp, minus: TabularMdp,
                 counts=None, episode: int = 1):
        if not 0.0 <= p_plus <= 1.0:
            raise ValueError("p_plus must lie in [0, 1]")
        if plus.shape != minus.shape:
            raise ValueError("candidate MDPs must share (S, A, H)")
        if np.any(plus.reward_noise_var > 0) or np.any(minus.reward_noise_var > 0):
            raise ValueError("two-point beliefs need deterministic rewards")
        self.p_plus = float(p_plus)
        self.plus = plus
        self.minus = minus
        self.counts = np.zeros(plus.shape[:2], dtype=int) if counts is None else np.array(counts)
        self.episode = episode

    @property
    def p_minus(self) -> float:
        return 1.0 - self.p_plus

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.plus.shape

    @property
    def num_states(self) -> int:
        return self.plus.num_states

    @property
    def num_actions(self) -> int:
        return self.plus.num_actions

    @property
    def horizon(self) -> int:
        return self.plus.horizon

    @property
    def initial_dist(self) -> np.ndarray:
        return self.plus.initial_dist

    @property
    def resolved(self) -> bool:
        return self.p_plus in (0.0, 1.0)

    def copy(self) -> TwoPointBelief:
        return TwoPointBelief(self.p_plus, self.plus, self.minus, self.counts.copy(), self.episode)

    def observe(self, t: Transition) -> None:
        s, a = t.state, t.action
        self.counts[s, a] += 1
        r_plus, r_minus = self.plus.reward_mean[s, a], self.minus.reward_mean[s, a]
        if r_plus == r_minus or self.resolved:
            return
        if np.isclose(t.reward, r_plus):
            self.p_plus = 1.0
        elif np.isclose(t.reward, r_minus):
            self.p_plus = 0.0
        else:
            raise ValueError(f"reward {t.reward} is impossible under both candidates")

    def arm_beliefs(self, state: int = 0) -> list[TwoPointArm]:
        return [TwoPointArm(self.p_plus, float(rp), float(rm))
                for rp, rm in zip(self.plus.reward_mean[state], self.minus.reward_mean[state])]

    def sample_mdp(self, rng: np.random.Generator) -> TabularMdp:
        return self.plus if rng.random() < self.p_plus else self.minus

    def sample_params(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        is_plus = rng.random(n) < self.p_plus
        mu = np.where(is_plus[:, None, None], self.plus.reward_mean, self.minus.reward_mean)
        p = np.where(is_plus[:, None, None, None], self.plus.transitions, self.minus.transitions)
        return mu, p

    def mean_mdp(self) -> TabularMdp:
        w = self.p_plus
        return TabularMdp(w * self.plus.transitions + (1 - w) * self.minus.transitions,
                          w * self.plus.reward_mean + (1 - w) * self.minus.reward_mean,
                          np.zeros(self.plus.shape[:2]), self.horizon, self.initial_dist)


Belief = BeliefState | TwoPointBelief


def update(belief: Belief, t: Transition) -> Belief:
    """Return a copy of ``belief`` conditioned on one more transition."""
    new = belief.copy()
    new.observe(t)
    return new


def sample_mdp(belief: Belief, rng: np.random.Generator) -> TabularMdp:
    return belief.sample_mdp(rng)


def mean_mdp(belief: Belief) -> TabularMdp:
    return belief.mean_mdp()


def reward_cgf(posterior, beta: float) -> float:
    """Cumulant generating function log E exp(beta * r) of a reward belief."""
    beta = float(beta)
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    if isinstance(posterior, GaussianRewardPosterior):
        return posterior.mean * beta + 0.5 * posterior.variance * beta ** 2
    if isinstance(posterior, TwoPointArm):
        if posterior.r_plus == posterior.r_minus:
            return posterior.r_plus * beta
        return float(logsumexp([beta * posterior.r_plus, beta * posterior.r_minus],
                               b=[posterior.p_plus, 1.0 - posterior.p_plus]))
    if isinstance(posterior, Deterministic):
        return posterior.value * beta
    raise TypeError(f"no CGF for {type(posterior).__name__}")


__all__ = [
    "Belief", "BeliefState", "DirichletTransitionPosterior", "GaussianRewardPosterior",
    "TwoPointArm", "TwoPointBelief", "mean_mdp", "reward_cgf", "sample_dirichlet",
    "sample_mdp", "update",
]
