"""Finite-horizon tabular MDPs: backward induction, policy evaluation, simulation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

ROW_TOL = 1e-12
POLICY_TOL = 1e-9
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Deterministic:
    value: float

    @property
    def mean(self) -> float:
        return self.value

    @property
    def noise_variance(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Gaussian:
    mean: float
    noise_variance: float


RewardModel = Deterministic | Gaussian


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite-horizon MDP with rewards paid on taking (s, a).

    Rewards are stored as two S x A arrays: the mean and the observation
    noise variance (zero for deterministic rewards).
    """

    transitions: np.ndarray  # (S, A, S)
    reward_mean: np.ndarray  # (S, A)
    reward_noise_var: np.ndarray  # (S, A)
    horizon: int
    initial_dist: np.ndarray  # (S,)

    def __post_init__(self):
        p = np.array(self.transitions, dtype=float)
        mu = np.array(self.reward_mean, dtype=float)
        var = np.array(self.reward_noise_var, dtype=float)
        rho = np.array(self.initial_dist, dtype=float)
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise ValueError(f"transitions must be (S, A, S), got {p.shape}")
        S, A, _ = p.shape
        if mu.shape != (S, A) or var.shape != (S, A):
            raise ValueError("reward arrays must be (S, A)")
        if rho.shape != (S,):
            raise ValueError("initial_dist must have length S")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be positive")
        if np.any(p < 0) or np.any(np.abs(p.sum(-1) - 1) > ROW_TOL):
            raise ValueError("every transition row must be a probability vector")
        if np.any(rho < 0) or abs(rho.sum() - 1) > ROW_TOL:
            raise ValueError("initial_dist must be a probability vector")
        if not np.all(np.isfinite(mu)):
            raise ValueError("reward means must be finite")
        if np.any(var < 0) or not np.all(np.isfinite(var)):
            raise ValueError("noise variances must be finite and nonnegative")
        for name, arr in (("transitions", p), ("reward_mean", mu),
                          ("reward_noise_var", var), ("initial_dist", rho)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "horizon", int(self.horizon))

    @classmethod
    def trusted(cls, transitions, reward_mean, reward_noise_var, horizon: int,
                initial_dist) -> TabularMdp:
        """Skip validation; for models built internally from already-valid arrays."""
        mdp = object.__new__(cls)
        for name, arr in (("transitions", transitions), ("reward_mean", reward_mean),
                          ("reward_noise_var", reward_noise_var),
                          ("initial_dist", initial_dist)):
            object.__setattr__(mdp, name, np.asarray(arr, dtype=float))
        object.__setattr__(mdp, "horizon", int(horizon))
        return mdp

    @classmethod
    def from_models(cls, transitions, rewards, horizon, initial_dist) -> TabularMdp:
        """Build from an S x A nested sequence of reward models."""
        mean = np.array([[r.mean for r in row] for row in rewards], dtype=float)
        var = np.array([[r.noise_variance for r in row] for row in rewards], dtype=float)
        return cls(transitions, mean, var, horizon, initial_dist)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.num_states, self.num_actions, self.horizon

    @cached_property
    def transition_cdf(self) -> np.ndarray:
        return np.cumsum(self.transitions, axis=-1)

    def reward_model(self, s: int, a: int) -> RewardModel:
        var = self.reward_noise_var[s, a]
        if var == 0:
            return Deterministic(float(self.reward_mean[s, a]))
        return Gaussian(float(self.reward_mean[s, a]), float(var))

    def with_rewards(self, reward_mean, reward_noise_var=None) -> TabularMdp:
        if reward_noise_var is None:
            reward_noise_var = self.reward_noise_var
        return TabularMdp(self.transitions, reward_mean, reward_noise_var,
                          self.horizon, self.initial_dist)


@dataclass(frozen=True, eq=False)
class Policy:
    """Stage-indexed stochastic policy, probs[h, s] is a distribution over actions."""

    probs: np.ndarray  # (H, S, A)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 3:
            raise ValueError(f"policy must be (H, S, A), got {probs.shape}")
        if np.any(probs < -POLICY_TOL) or np.any(probs > 1 + POLICY_TOL):
            raise ValueError("policy entries must lie in [0, 1]")
        if np.any(np.abs(probs.sum(-1) - 1) > POLICY_TOL):
            raise ValueError("policy rows must sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_actions(cls, actions: np.ndarray, num_actions: int) -> Policy:
        """Deterministic policy from an (H, S) array of action indices."""
        return cls(np.eye(num_actions)[np.asarray(actions)])

    @classmethod
    def uniform(cls, num_states: int, num_actions: int, horizon: int) -> Policy:
        return cls(np.full((horizon, num_states, num_actions), 1.0 / num_actions))

    @property
    def horizon(self) -> int:
        return self.probs.shape[0]

    def is_deterministic(self) -> bool:
        return bool(np.all((self.probs == 0) | (self.probs == 1)))


class Transition(NamedTuple):
    episode: int
    step: int
    state: int
    action: int
    next_state: int
    reward: float


def _check_policy(mdp: TabularMdp, policy: Policy) -> None:
    if policy.probs.shape != (mdp.horizon, mdp.num_states, mdp.num_actions):
        raise ValueError(
            f"policy shape {policy.probs.shape} does not match MDP "
            f"(H, S, A) = {(mdp.horizon, mdp.num_states, mdp.num_actions)}")


def optimal_values(mdp: TabularMdp) -> tuple[np.ndarray, np.ndarray]:
    """Backward induction.

    Returns ``(q, v)`` with ``q`` of shape (H, S, A) and ``v`` of shape
    (H + 1, S); ``v[H]`` is the zero terminal boundary.
    """
    S, A, H = mdp.shape
    q = np.empty((H, S, A))
    v = np.zeros((H + 1, S))
    p = mdp.transitions.reshape(S * A, S)
    for h in reversed(range(H)):
        q[h] = mdp.reward_mean + (p @ v[h + 1]).reshape(S, A)
        v[h] = q[h].max(axis=1)
    return q, v


def evaluate_policy(mdp: TabularMdp, policy: Policy) -> np.ndarray:
    """Value of ``policy`` on ``mdp`` as an (H + 1, S) table."""
    _check_policy(mdp, policy)
    S, A, H = mdp.shape
    v = np.zeros((H + 1, S))
    p = mdp.transitions.reshape(S * A, S)
    for h in reversed(range(H)):
        q = mdp.reward_mean + (p @ v[h + 1]).reshape(S, A)
        v[h] = (policy.probs[h] * q).sum(axis=1)
    return v


def greedy_actions(q: np.ndarray, tie_tolerance: float = TIE_TOLERANCE) -> np.ndarray:
    """Lowest-index action within ``tie_tolerance`` of the row maximum."""
    q = np.asarray(q)
    near_max = q >= q.max(axis=-1, keepdims=True) - tie_tolerance
    return np.argmax(near_max, axis=-1)


def greedy_policy(q: np.ndarray, tie_tolerance: float = TIE_TOLERANCE) -> Policy:
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("q-values must be finite")
    return Policy.from_actions(greedy_actions(q, tie_tolerance), q.shape[-1])


def _sample_from_cdf(c: np.ndarray, rng: np.random.Generator) -> int:
    # clip guards against the cumulative sum landing just below 1
    return int(min(np.searchsorted(c, rng.random() * c[-1], side="right"), len(c) - 1))


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    return _sample_from_cdf(np.cumsum(probs), rng)


def sample_episode(mdp: TabularMdp, policy: Policy, rng: np.random.Generator,
                   episode: int = 0) -> list[Transition]:
    """Simulate one episode, returning exactly H transitions."""
    _check_policy(mdp, policy)
    s = _sample_index(mdp.initial_dist, rng)
    out = []
    for h in range(mdp.horizon):
        a = _sample_index(policy.probs[h, s], rng)
        s_next = _sample_from_cdf(mdp.transition_cdf[s, a], rng)
        r = mdp.reward_mean[s, a]
        var = mdp.reward_noise_var[s, a]
        if var > 0:
            r = r + np.sqrt(var) * rng.standard_normal()
        out.append(Transition(episode, h, s, a, s_next, float(r)))
        s = s_next
    return out


def _sample_rows(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorised inverse-cdf sampling, one uniform per row of ``cdf``."""
    idx = (u[:, None] * cdf[:, -1:] >= cdf).sum(axis=1)
    return np.minimum(idx, cdf.shape[1] - 1)


def sample_returns(mdp: TabularMdp, policy: Policy, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Realised returns of ``n`` independent episodes, simulated in a batch."""
    _check_policy(mdp, policy)
    S, A, H = mdp.shape
    pi_cdf = np.cumsum(policy.probs, axis=-1)
    p_cdf = mdp.transition_cdf
    noise_sd = np.sqrt(mdp.reward_noise_var)
    s = _sample_rows(np.broadcast_to(np.cumsum(mdp.initial_dist), (n, S)), rng.random(n))
    total = np.zeros(n)
    for h in range(H):
        a = _sample_rows(pi_cdf[h, s], rng.random(n))
        total += mdp.reward_mean[s, a] + noise_sd[s, a] * rng.standard_normal(n)
        s = _sample_rows(p_cdf[s, a], rng.random(n))
    return total


def state_occupancy(mdp: TabularMdp, policy: Policy) -> np.ndarray:
    """Forward DP: probability of being in each state at each step, (H, S)."""
    _check_policy(mdp, policy)
    S, A, H = mdp.shape
    d = np.zeros((H, S))
    d[0] = mdp.initial_dist
    for h in range(H - 1):
        d[h + 1] = np.einsum("s,sa,sat->t", d[h], policy.probs[h], mdp.transitions)
    return d


def policy_return(mdp: TabularMdp, policy: Policy) -> float:
    """Expected return from the initial distribution."""
    return float(mdp.initial_dist @ evaluate_policy(mdp, policy)[0])


def optimal_return(mdp: TabularMdp) -> float:
    return float(mdp.initial_dist @ optimal_values(mdp)[1][0])


def per_episode_regret(mdp: TabularMdp, policy: Policy) -> float:
    """Expected shortfall of one episode of ``policy`` against the optimum."""
    gap = optimal_return(mdp) - policy_return(mdp, policy)
    # rounding can leave tiny negatives when the policy is optimal
    return max(gap, 0.0)
