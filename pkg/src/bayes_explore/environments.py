"""Benchmark environments: one-unknown-arm bandit, DeepSea, random MDPs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp
from .posterior import TwoPointBelief


@dataclass(frozen=True)
class Problem1Spec:
    num_actions: int
    epsilon: float = 1e-3
    variant: str = "plus"

    def __post_init__(self):
        if self.num_actions < 3:
            raise ValueError("the one-unknown-arm bandit needs at least 3 arms")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.variant not in ("plus", "minus"):
            raise ValueError("variant must be 'plus' or 'minus'")


def problem1_rewards(num_actions: int, epsilon: float, variant: str) -> np.ndarray:
    """Arm rewards (1, +-2, 1 - eps, ..., 1 - eps) with arm a stored at index a - 1."""
    r = np.full(num_actions, 1.0 - epsilon)
    r[0] = 1.0
    r[1] = 2.0 if variant == "plus" else -2.0
    return r


def make_problem1(spec: Problem1Spec) -> TabularMdp:
    r = problem1_rewards(spec.num_actions, spec.epsilon, spec.variant)
    A = spec.num_actions
    return TabularMdp(np.ones((1, A, 1)), r[None, :], np.zeros((1, A)), 1, np.ones(1))


def make_problem1_pair(num_actions: int, epsilon: float = 1e-3) -> tuple[TabularMdp, TabularMdp]:
    return (make_problem1(Problem1Spec(num_actions, epsilon, "plus")),
            make_problem1(Problem1Spec(num_actions, epsilon, "minus")))


def make_problem1_prior(num_actions: int, epsilon: float = 1e-3,
                        p_plus: float = 0.5) -> TwoPointBelief:
    plus, minus = make_problem1_pair(num_actions, epsilon)
    return TwoPointBelief(p_plus, plus, minus)


@dataclass(frozen=True)
class DeepSeaSpec:
    size: int
    right_cost: float | None = None  # defaults to 0.01 / size
    goal_reward: float = 1.0
    randomize_action_map: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("DeepSea needs size >= 2")
        if self.right_cost is not None and self.right_cost < 0:
            raise ValueError("right_cost must be nonnegative")

    @property
    def cost(self) -> float:
        return 0.01 / self.size if self.right_cost is None else self.right_cost


def deep_sea_state(size: int, row: int, col: int) -> int:
    return row * size + col


def deep_sea_right_actions(spec: DeepSeaSpec) -> np.ndarray:
    """Index of the primitive action meaning "right" in each state, shape (S,)."""
    S = spec.size ** 2
    if not spec.randomize_action_map:
        return np.ones(S, dtype=int)
    return np.random.default_rng(spec.seed).integers(0, 2, size=S)


def make_deep_sea(spec: DeepSeaSpec) -> TabularMdp:
    """N x N grid, one row per step, deterministic left/right moves.

    Every right move costs ``cost``; the right move out of the bottom-right
    cell also pays ``goal_reward``. Moves are clamped at the grid edges and
    the last row maps onto itself (its successor is never valued).
    """
    N = spec.size
    S, A = N * N, 2
    right = deep_sea_right_actions(spec)
    p = np.zeros((S, A, S))
    mu = np.zeros((S, A))
    for row in range(N):
        next_row = min(row + 1, N - 1)
        for col in range(N):
            s = deep_sea_state(N, row, col)
            r_act = right[s]
            l_act = 1 - r_act
            p[s, r_act, deep_sea_state(N, next_row, min(col + 1, N - 1))] = 1.0
            p[s, l_act, deep_sea_state(N, next_row, max(col - 1, 0))] = 1.0
            mu[s, r_act] = -spec.cost
            if row == N - 1 and col == N - 1:
                mu[s, r_act] += spec.goal_reward
    rho = np.zeros(S)
    rho[0] = 1.0
    return TabularMdp(p, mu, np.zeros((S, A)), N, rho)


def make_random_mdp(num_states: int, num_actions: int, horizon: int,
                    rng: np.random.Generator) -> TabularMdp:
    """Uniform-simplex transitions, N(mu, 1) rewards with mu ~ U[-1, 1], uniform rho."""
    S, A = num_states, num_actions
    if min(S, A, horizon) < 1:
        raise ValueError("S, A and H must be positive")
    p = rng.dirichlet(np.ones(S), size=(S, A))
    mu = rng.uniform(-1.0, 1.0, size=(S, A))
    return TabularMdp(p, mu, np.ones((S, A)), horizon, np.full(S, 1.0 / S))
