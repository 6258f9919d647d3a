"""Experiment grids: the bandit regret table, DeepSea learning times, the
bandit K-learning beta table and the bound-check battery."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..agents import (KLearningAgent, KLearningParams, SoftQAgent, ThompsonAgent,
                      arm_cgfs, bandit_k_probs, bandit_objective, BETA_SEARCH_RANGE)
from ..environments import DeepSeaSpec, make_deep_sea, make_problem1_prior
from ..mdp import optimal_return
from ..posterior import BeliefState
from .bounds import optimism_check, random_belief, theorem1_check
from .experiment import (ExperimentConfig, SummaryRow, _map, _summary, bayes_regret, cell_rng,
                         make_agent, make_env_setup, run_episode_loop, time_to_learn,
                         uniform_return, worst_case_regret)

PROBLEM1_SIZES = (3, 5, 10, 30, 100)
PROBLEM1_AGENTS = ("bayes_optimal", "thompson", "bandit_k", "soft_q")
SOFT_Q_BETA_GRID = tuple(float(b) for b in np.logspace(-3, 2, 16))

DEEPSEA_SIZES = tuple(range(4, 15))
DEEPSEA_AGENTS = ("thompson", "k_learning", "soft_q")
DEEPSEA_SOFT_Q_BETA = 100.0
DEEPSEA_K_BETA = 0.3
DEEPSEA_CAP = 50_000

BOUND_BETAS = (0.1, 1.0, 10.0)


# -- one-unknown-arm bandit ---------------------------------------------------

def problem1_sweep(sizes: Sequence[int] = PROBLEM1_SIZES,
                   agents: Sequence[str] = PROBLEM1_AGENTS, episodes: int = 100,
                   prior_draws: int = 10_000, seeds: int = 1, master_seed: int = 0,
                   epsilon: float = 1e-3, beta_grid: Sequence[float] = SOFT_Q_BETA_GRID,
                   sigma: float = 1.0, parallelism: int = 1, beta: float | None = None,
                   worst_case: bool = True) -> list[SummaryRow]:
    """Bayes regret (and worst-case regret) of each agent at each number of arms.

    Soft Q-learning is run at every beta in ``beta_grid``; one row per beta is
    emitted (metric ``bayes_regret@beta=<b>``) plus the best one under the
    plain ``bayes_regret`` metric and its beta under ``best_beta``. A fixed
    ``beta`` replaces the grid.
    """
    rows: list[SummaryRow] = []
    for n in sizes:
        for name in agents:
            config = ExperimentConfig(agent=name, env="problem1", param_n=int(n),
                                      epsilon=epsilon, episodes=episodes,
                                      prior_draws=prior_draws, seeds=seeds,
                                      master_seed=master_seed, beta=beta, sigma=sigma,
                                      parallelism=parallelism)
            if name == "soft_q" and beta is None:
                best = None
                for b in beta_grid:
                    config.beta = float(b)
                    row = bayes_regret(config, experiment="problem1")
                    rows.append(SummaryRow(row.experiment, row.agent, row.env, row.param_n,
                                           f"bayes_regret@beta={b:.6g}", row.value,
                                           row.stderr, row.samples))
                    if best is None or row.value < best[1].value:
                        best = (float(b), row)
                rows.append(best[1])
                rows.append(SummaryRow("problem1", name, "problem1", int(n), "best_beta",
                                       best[0], 0.0, best[1].samples))
                config.beta = best[0]
            else:
                rows.append(bayes_regret(config, experiment="problem1"))
            if worst_case:
                worst, per_env = worst_case_regret(config)
                rows.extend(SummaryRow("problem1", r.agent, r.env, r.param_n, r.metric,
                                       r.value, r.stderr, r.samples) for r in per_env)
                rows.append(SummaryRow("problem1", worst.agent, worst.env, worst.param_n,
                                       worst.metric, worst.value, worst.stderr, worst.samples))
    return rows


def lookup(rows: Sequence[SummaryRow], agent: str, param_n: int,
           metric: str = "bayes_regret", env: str | None = None) -> SummaryRow:
    for row in rows:
        if (row.agent, row.param_n, row.metric) == (agent, param_n, metric) and (
                env is None or row.env == env):
            return row
    raise KeyError((agent, param_n, metric, env))


# -- DeepSea learning times ---------------------------------------------------

@dataclass(frozen=True)
class LearningTime:
    agent: str
    size: int
    seed: int
    episode: int | None  # None: not learned within the cap
    cap: int

    @property
    def value(self) -> int:
        """Episode count used for aggregation; the cap when not learned."""
        return self.cap if self.episode is None else self.episode


def deepsea_cap(size: int, cap: int = DEEPSEA_CAP) -> int:
    return int(min(10 * 2 ** size, cap))


def _deepsea_agent(name: str, prior: BeliefState, soft_q_beta: float, k_beta: float,
                   sigma: float):
    if name == "soft_q":
        return SoftQAgent(prior, soft_q_beta)
    if name == "k_learning":
        return KLearningAgent(prior, KLearningParams(k_beta, sigma))
    if name == "thompson":
        return ThompsonAgent(prior)
    return make_agent(name, prior, None, sigma)


def _deepsea_cell(args) -> LearningTime:
    name, size, seed, master_seed, soft_q_beta, k_beta, sigma, gap_fraction, cap = args
    env = make_deep_sea(DeepSeaSpec(size))
    agent = _deepsea_agent(name, BeliefState.prior_for(env), soft_q_beta, k_beta, sigma)
    gap = optimal_return(env) - uniform_return(env)
    agent_index = sorted(DEEPSEA_AGENTS + ("greedy",)).index(name)
    curve = run_episode_loop(agent, env, deepsea_cap(size, cap),
                             cell_rng(master_seed, 5, agent_index, size, seed),
                             stop_below=gap_fraction * gap, reference_gap=gap)
    return LearningTime(name, size, seed, time_to_learn(curve, gap_fraction),
                        deepsea_cap(size, cap))


def deepsea_learning_times(sizes: Sequence[int] = DEEPSEA_SIZES,
                           agents: Sequence[str] = DEEPSEA_AGENTS, seeds: int = 3,
                           master_seed: int = 0, soft_q_beta: float = DEEPSEA_SOFT_Q_BETA,
                           k_beta: float = DEEPSEA_K_BETA, sigma: float = 1.0,
                           gap_fraction: float = 0.5, cap: int = DEEPSEA_CAP,
                           parallelism: int = 1) -> list[LearningTime]:
    """Time to learn for each (agent, size, seed), each run stopping once learned."""
    for name in agents:
        if name not in DEEPSEA_AGENTS + ("greedy",):
            raise ValueError(f"agent {name!r} cannot run on DeepSea")
    jobs = [(name, int(n), s, master_seed, soft_q_beta, k_beta, sigma, gap_fraction, cap)
            for name in agents for n in sizes for s in range(seeds)]
    return _map(_deepsea_cell, jobs, parallelism)


def summarize_learning_times(times: Sequence[LearningTime]) -> list[SummaryRow]:
    """Mean time to learn (cap for unlearned runs), learned fraction and cap."""
    groups: dict[tuple[str, int], list[LearningTime]] = {}
    for t in times:
        groups.setdefault((t.agent, t.size), []).append(t)
    rows = []
    for (agent, size), group in groups.items():
        rows.append(_summary("deepsea", agent, "deepsea", size, "time_to_learn",
                             [t.value for t in group]))
        rows.append(_summary("deepsea", agent, "deepsea", size, "learned_fraction",
                             [t.episode is not None for t in group]))
        rows.append(SummaryRow("deepsea", agent, "deepsea", size, "cap", float(group[0].cap),
                               0.0, len(group)))
    return rows


def deepsea_sweep(sizes: Sequence[int] = DEEPSEA_SIZES, agents: Sequence[str] = DEEPSEA_AGENTS,
                  seeds: int = 3, master_seed: int = 0, **kwargs) -> list[SummaryRow]:
    return summarize_learning_times(
        deepsea_learning_times(sizes, agents, seeds, master_seed, **kwargs))


def growth_ratios(rows: Sequence[SummaryRow], agent: str, step: int = 4) -> dict[int, float]:
    """t(N + step) / t(N) for every N where both sizes are present."""
    t = {r.param_n: r.value for r in rows if r.agent == agent and r.metric == "time_to_learn"}
    return {n: t[n + step] / t[n] for n in sorted(t) if n + step in t}


# -- analytic bandit K-learning table -----------------------------------------

@dataclass(frozen=True)
class BanditRow:
    num_actions: int
    beta_star: float
    pi2: float  # probability of pulling the unknown arm
    objective: float
    grid_objective: float  # minimum over a log-spaced beta grid

    @property
    def grid_gap(self) -> float:
        return self.objective - self.grid_objective


def bandit_table_sizes(count: int = 25, largest: int = 1000) -> tuple[int, ...]:
    return tuple(int(n) for n in np.unique(np.round(np.geomspace(3, largest, count))))


def bandit_table(sizes: Sequence[int] | None = None, epsilon: float = 1e-3,
                 grid_points: int = 100_000) -> list[BanditRow]:
    """beta* and the unknown arm's probability under the uniform two-point prior.

    ``grid_points`` > 0 also evaluates the objective on a log-spaced beta grid
    over the search range, as an independent check on the optimiser.
    """
    rows = []
    for n in bandit_table_sizes() if sizes is None else sizes:
        prior = make_problem1_prior(int(n), epsilon)
        probs, beta = bandit_k_probs(prior)
        cgfs = arm_cgfs(prior.arm_beliefs(0))
        grid_min = math.nan
        if grid_points > 0:
            grid_min = _grid_min(prior, grid_points)
        rows.append(BanditRow(int(n), beta, float(probs[1]), bandit_objective(cgfs, beta),
                              grid_min))
    return rows


def _grid_min(prior, points: int) -> float:
    # all arms of the two-point prior at once, vectorised over the grid
    betas = np.geomspace(*BETA_SEARCH_RANGE, points)
    arms = prior.arm_beliefs(0)
    g = np.empty((len(arms), points))
    for i, arm in enumerate(arms):
        if arm.r_plus == arm.r_minus:
            g[i] = arm.r_plus * betas
        else:
            g[i] = np.logaddexp(np.log(arm.p_plus) + betas * arm.r_plus,
                                np.log1p(-arm.p_plus) + betas * arm.r_minus)
    return float((np.logaddexp.reduce(g, axis=0) / betas).min())


def bandit_rows_to_summary(rows: Sequence[BanditRow]) -> list[SummaryRow]:
    out = []
    for r in rows:
        for metric, value in (("beta_star", r.beta_star), ("pi2", r.pi2),
                              ("objective", r.objective), ("grid_objective", r.grid_objective)):
            out.append(SummaryRow("bandit_table", "bandit_k", "problem1", r.num_actions, metric,
                                  float(value), 0.0, 1))
    return out


# -- bound checks ----------------------------------------------------------------

def horizon_sigma(horizon: int) -> float:
    """Bonus scale sigma with sigma^2 = H (1 + H^2 / 4).

    Covers the reward variance summed over H steps plus the variance of a
    continuation value of range H; with sigma = 1 the optimism chain fails
    whenever transition uncertainty matters.
    """
    return math.sqrt(horizon * (1.0 + horizon ** 2 / 4.0))


@dataclass(frozen=True)
class BoundResult:
    trial: int
    beta: float
    shape: tuple[int, int, int]
    episode: int
    sigma: float
    theorem1: bool
    theorem1_margin: float  # min over (h, s) of margin / stderr, inf when exact
    optimism: bool


def _margin_z(margin: np.ndarray, stderr: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stderr > 0, margin / stderr, np.where(margin >= 0, np.inf, -np.inf))
    return float(z.min())


def _bound_trial(args) -> list[BoundResult]:
    trial, betas, mc_samples, master_seed, sigma = args
    rng = cell_rng(master_seed, 4, trial)
    S, A, H = (int(x) for x in (rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 3)))
    belief = random_belief(S, A, H, rng)
    sig = horizon_sigma(H) if sigma is None else sigma
    out = []
    for beta in betas:
        params = KLearningParams(beta, sig)
        t1 = theorem1_check(belief, beta, mc_samples, rng, params)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            opt = optimism_check(belief, belief.episode, params, mc_samples, rng)
        out.append(BoundResult(trial, beta, (S, A, H), belief.episode, sig, t1.passed,
                               _margin_z(t1.margin, t1.stderr), opt.passed))
    return out


def check_bounds(trials: int = 100, betas: Sequence[float] = BOUND_BETAS,
                 mc_samples: int = 10_000, master_seed: int = 0, sigma: float | None = None,
                 parallelism: int = 1) -> list[BoundResult]:
    """Theorem-1 and optimism checks on random small beliefs (S, A <= 3, H <= 2).

    ``sigma=None`` uses ``horizon_sigma`` for each belief's horizon.
    """
    jobs = [(i, tuple(betas), mc_samples, master_seed, sigma) for i in range(trials)]
    return [r for chunk in _map(_bound_trial, jobs, parallelism) for r in chunk]


def bound_summary(results: Sequence[BoundResult]) -> list[SummaryRow]:
    rows = []
    for beta in sorted({r.beta for r in results}):
        group = [r for r in results if r.beta == beta]
        for metric, vals in (("theorem1_pass_rate", [r.theorem1 for r in group]),
                             ("optimism_pass_rate", [r.optimism for r in group])):
            rows.append(_summary("check_bounds", "k_learning", "random", 0,
                                 f"{metric}@beta={beta:.6g}", vals))
    return rows


__all__ = [
    "BanditRow", "BoundResult", "DEEPSEA_AGENTS", "DEEPSEA_K_BETA", "DEEPSEA_SIZES",
    "DEEPSEA_SOFT_Q_BETA", "LearningTime", "PROBLEM1_AGENTS", "PROBLEM1_SIZES",
    "SOFT_Q_BETA_GRID", "bandit_rows_to_summary", "bandit_table", "bandit_table_sizes",
    "bound_summary", "check_bounds", "deepsea_cap", "deepsea_learning_times", "deepsea_sweep",
    "growth_ratios", "horizon_sigma", "lookup", "problem1_sweep", "summarize_learning_times",
]
