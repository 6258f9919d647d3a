"""Episode loops, regret estimation and time-to-learn."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..agents import (Agent, BanditKAgent, BayesOptimalProblem1Agent, GreedyAgent,
                      KLearningAgent, KLearningParams, SoftQAgent, ThompsonAgent)
from ..environments import DeepSeaSpec, make_deep_sea, make_problem1_prior
from ..mdp import Policy, TabularMdp, optimal_return, policy_return, sample_episode
from ..posterior import Belief, BeliefState, TwoPointBelief

AGENTS = ("thompson", "soft_q", "k_learning", "bandit_k", "bayes_optimal", "greedy")
ENVS = ("problem1", "deepsea")


def cell_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream for one work unit, split from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


@dataclass
class RegretCurve:
    regret: np.ndarray  # expected regret of each episode's policy
    agent: str = ""
    env: str = ""
    draw: int = 0
    seed: int = 0
    reference_gap: float = 1.0
    params: dict = field(default_factory=dict)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def total(self) -> float:
        return float(self.regret.sum())

    def __len__(self):
        return len(self.regret)


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    agent: str
    env: str
    param_n: int
    metric: str
    value: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


@dataclass
class ExperimentConfig:
    agent: str = "thompson"
    env: str = "problem1"
    param_n: int = 10
    epsilon: float = 1e-3
    episodes: int = 100
    prior_draws: int = 100
    seeds: int = 1
    master_seed: int = 0
    beta: float | None = None
    sigma: float = 1.0
    beta_grid: tuple[float, ...] = tuple(np.logspace(-3, 2, 16))
    parallelism: int = 1

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.prior_draws < 1 or self.seeds < 1:
            raise ValueError("prior_draws and seeds must be >= 1")
        if self.agent not in AGENTS:
            raise ValueError(f"unknown agent {self.agent!r}; choose from {AGENTS}")
        if self.env not in ENVS:
            raise ValueError(f"unknown env {self.env!r}; choose from {ENVS}")


# -- environments and agents from names ------------------------------------

@dataclass
class EnvSetup:
    """Environment family: the agent's prior and how to draw a true environment."""

    name: str
    prior: Belief
    draw: Callable[[np.random.Generator], TabularMdp]
    members: list[TabularMdp]


def uniform_return(mdp: TabularMdp) -> float:
    S, A, H = mdp.shape
    return policy_return(mdp, Policy.uniform(S, A, H))


def make_env_setup(config: ExperimentConfig) -> EnvSetup:
    if config.env == "problem1":
        prior = make_problem1_prior(config.param_n, config.epsilon, 0.5)
        members = [prior.plus, prior.minus]
        return EnvSetup("problem1", prior, prior.sample_mdp, members)
    sea = make_deep_sea(DeepSeaSpec(config.param_n))
    prior = BeliefState.prior_for(sea)
    return EnvSetup("deepsea", prior, lambda rng: sea, [sea])


def make_agent(name: str, prior: Belief, beta: float | None = None, sigma: float = 1.0) -> Agent:
    if name == "thompson":
        return ThompsonAgent(prior)
    if name == "soft_q":
        return SoftQAgent(prior, 1.0 if beta is None else beta)
    if name == "k_learning":
        return KLearningAgent(prior, KLearningParams(1.0 if beta is None else beta, sigma))
    if name == "bandit_k":
        return BanditKAgent(prior)
    if name == "bayes_optimal":
        return BayesOptimalProblem1Agent(prior)
    if name == "greedy":
        return GreedyAgent(prior)
    raise ValueError(f"unknown agent {name!r}; choose from {AGENTS}")


# -- the episode loop -------------------------------------------------------

def run_episode_loop(agent: Agent, env: TabularMdp, episodes: int, rng: np.random.Generator,
                     stop_below: float | None = None, reference_gap: float | None = None
                     ) -> RegretCurve:
    """Run ``episodes`` episodes of ``agent`` on ``env``, recording expected regret.

    Each episode the agent's policy is scored exactly by policy evaluation on
    the true environment, then one episode is simulated and every transition
    is fed to the belief. With ``stop_below`` the loop ends after the first
    episode whose regret falls below that threshold.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    belief = agent.initial_belief()
    if belief.shape != env.shape:
        raise ValueError(f"agent belief shape {belief.shape} does not match env {env.shape}")
    best = optimal_return(env)
    regret = []
    for ell in range(1, episodes + 1):
        belief.episode = ell
        policy = agent.policy(belief, ell, episodes - ell + 1, rng)
        regret.append(max(best - policy_return(env, policy), 0.0))
        if stop_below is not None and regret[-1] < stop_below:
            break
        for t in sample_episode(env, policy, rng, ell):
            belief.observe(t)
    gap = best - uniform_return(env) if reference_gap is None else reference_gap
    return RegretCurve(np.array(regret), agent.name, "", reference_gap=gap, params=agent.params())


def time_to_learn(curve: RegretCurve, gap_fraction: float = 0.5) -> int | None:
    """First episode (from 1) whose expected regret is below ``gap_fraction`` of the
    reference gap; ``None`` when that never happens."""
    if not 0 < gap_fraction < 1:
        raise ValueError("gap_fraction must lie in (0, 1)")
    below = np.flatnonzero(curve.regret < gap_fraction * curve.reference_gap)
    return int(below[0]) + 1 if below.size else None


# -- one-unknown-arm bandit in batch --------------------------------------

def _problem1_policy_table(agent: Agent, prior: TwoPointBelief, episodes: int):
    """Action probabilities for each (belief status, episode) of the two-point bandit.

    Status 0 is the unresolved prior, 1 resolved to ``plus``, 2 to ``minus``.
    """
    A = prior.num_actions
    beliefs = [prior.copy(), TwoPointBelief(1.0, prior.plus, prior.minus),
               TwoPointBelief(0.0, prior.plus, prior.minus)]
    table = np.empty((episodes, 3, A))
    cache = {}
    for ell in range(1, episodes + 1):
        for k, b in enumerate(beliefs):
            b.episode = ell
            key = (k, ell, episodes - ell + 1) if isinstance(agent, BayesOptimalProblem1Agent) else k
            if key not in cache:
                cache[key] = agent.policy(b, ell, episodes - ell + 1, None).probs[0, 0]
            table[ell - 1, k] = cache[key]
    return table


def run_problem1_batch(agent: Agent, env_is_plus: bool, runs: int, episodes: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Vectorised episode loop for the one-unknown-arm bandit.

    Equivalent in distribution to ``run_episode_loop`` on the same agent, but
    advances ``runs`` independent runs at once. Supported agents are those
    whose policy depends only on the belief status and the episode index,
    plus Thompson sampling. Returns the (runs, episodes) expected-regret array.
    """
    prior = agent.prior
    if not isinstance(prior, TwoPointBelief) or prior.shape[::2] != (1, 1):
        raise ValueError("batch runner needs a two-point single-step bandit prior")
    if isinstance(agent, KLearningAgent):
        raise ValueError("tabular K-learning depends on counts; use run_episode_loop")
    env = prior.plus if env_is_plus else prior.minus
    r = env.reward_mean[0]
    gap = r.max() - r
    informative = prior.plus.reward_mean[0] != prior.minus.reward_mean[0]
    resolved_status = 1 if env_is_plus else 2
    A = len(r)
    status = np.zeros(runs, dtype=int)
    out = np.empty((runs, episodes))
    if isinstance(agent, ThompsonAgent):
        greedy_plus = int(np.argmax(prior.plus.reward_mean[0]))
        greedy_minus = int(np.argmax(prior.minus.reward_mean[0]))
        greedy_by_status = np.array([-1, greedy_plus, greedy_minus])
        for ell in range(episodes):
            sample_plus = rng.random(runs) < prior.p_plus
            pick = np.where(sample_plus, greedy_plus, greedy_minus)
            actions = np.where(status == 0, pick, greedy_by_status[status])
            out[:, ell] = gap[actions]
            status[(status == 0) & informative[actions]] = resolved_status
        return out
    table = _problem1_policy_table(agent, prior, episodes)
    for ell in range(episodes):
        probs = table[ell, status]  # (runs, A)
        out[:, ell] = probs @ gap
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(runs)[:, None] * cdf[:, -1:]
        actions = np.minimum((u >= cdf).sum(axis=1), A - 1)
        status[(status == 0) & informative[actions]] = resolved_status
    return out


# -- Bayes and worst-case regret -------------------------------------------

def _summary(experiment: str, agent: str, env: str, n: int, metric: str,
             values: Sequence[float]) -> SummaryRow:
    values = np.asarray(values, dtype=float)
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return SummaryRow(experiment, agent, env, n, metric, float(values.mean()), se, len(values))


def _run_cell(args) -> np.ndarray:
    agent, env, episodes, master_seed, key = args
    return run_episode_loop(agent, env, episodes, cell_rng(master_seed, *key)).regret


def _map(fn, jobs, parallelism: int):
    if parallelism <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * parallelism))))


def draw_environments(setup: EnvSetup, draws: int, master_seed: int) -> list[TabularMdp]:
    return [setup.draw(cell_rng(master_seed, 0, d)) for d in range(draws)]


def _batchable(agent: Agent) -> bool:
    return isinstance(agent.prior, TwoPointBelief) and not isinstance(agent, KLearningAgent)


def regret_matrix(agent: Agent, envs: Sequence[TabularMdp], seeds: int, episodes: int,
                  master_seed: int, parallelism: int = 1, stream: tuple[int, ...] = (1,)
                  ) -> np.ndarray:
    """Per-episode expected regret of every (draw, seed) cell, shape (draws * seeds, L).

    Rows are ordered by draw then seed. Cell (d, s) draws from the stream
    keyed ``(*stream, d, s)``. Two-point bandit agents run through
    ``run_problem1_batch`` instead, one stream per environment variant.
    """
    if _batchable(agent):
        prior = agent.prior
        is_plus = np.array([np.array_equal(env.reward_mean, prior.plus.reward_mean)
                            for env in envs])
        out = np.empty((len(envs), seeds, episodes))
        for variant in (True, False):
            idx = np.flatnonzero(is_plus == variant)
            if idx.size == 0:
                continue
            rng = cell_rng(master_seed, *stream, 2 + int(variant))
            regret = run_problem1_batch(agent, variant, idx.size * seeds, episodes, rng)
            out[idx] = regret.reshape(idx.size, seeds, episodes)
        return out.reshape(len(envs) * seeds, episodes)
    jobs = [(agent, env, episodes, master_seed, (*stream, d, s))
            for d, env in enumerate(envs) for s in range(seeds)]
    return np.array(_map(_run_cell, jobs, parallelism)).reshape(len(jobs), episodes)


def cumulative_regrets(agent: Agent, envs: Sequence[TabularMdp], seeds: int, episodes: int,
                       master_seed: int, parallelism: int = 1, stream: tuple[int, ...] = (1,)
                       ) -> np.ndarray:
    """Total regret of every (draw, seed) cell, ordered by draw then seed."""
    return regret_matrix(agent, envs, seeds, episodes, master_seed, parallelism,
                         stream).sum(axis=1)


def bayes_regret_curves(config: ExperimentConfig, agent: Agent | None = None
                        ) -> list[RegretCurve]:
    """One curve per (prior draw, seed), sorted by draw then seed."""
    setup = make_env_setup(config)
    if agent is None:
        agent = make_agent(config.agent, setup.prior, config.beta, config.sigma)
    envs = draw_environments(setup, config.prior_draws, config.master_seed)
    regret = regret_matrix(agent, envs, config.seeds, config.episodes,
                           config.master_seed, config.parallelism)
    params = agent.params()
    return [RegretCurve(row, agent.name, config.env, i // config.seeds, i % config.seeds,
                        params=params) for i, row in enumerate(regret)]


def bayes_regret(config: ExperimentConfig, agent: Agent | None = None,
                 experiment: str = "bayes_regret") -> SummaryRow:
    """Mean total regret over environments drawn from the prior (and seeds)."""
    curves = bayes_regret_curves(config, agent)
    return _summary(experiment, curves[0].agent, config.env, config.param_n, "bayes_regret",
                    [c.total for c in curves])


def worst_case_regret(config: ExperimentConfig, env_list: Sequence[TabularMdp] | None = None,
                      agent: Agent | None = None) -> tuple[SummaryRow, list[SummaryRow]]:
    """Max over ``env_list`` of the mean total regret; the agent keeps its prior.

    Returns the worst-case row and the per-environment rows. Each environment
    is run for ``prior_draws * seeds`` cells.
    """
    setup = make_env_setup(config)
    env_list = setup.members if env_list is None else list(env_list)
    if not env_list:
        raise ValueError("env_list must be nonempty")
    if agent is None:
        agent = make_agent(config.agent, setup.prior, config.beta, config.sigma)
    cells = config.prior_draws * config.seeds
    rows = []
    for i, env in enumerate(env_list):
        totals = cumulative_regrets(agent, [env] * config.prior_draws, config.seeds,
                                    config.episodes, config.master_seed, config.parallelism,
                                    stream=(2, i))
        rows.append(_summary("worst_case", agent.name, f"{config.env}[{i}]", config.param_n,
                             "regret", totals))
    worst = max(rows, key=lambda row: row.value)
    return (SummaryRow("worst_case", agent.name, config.env, config.param_n,
                       "worst_case_regret", worst.value, worst.stderr, cells), rows)
