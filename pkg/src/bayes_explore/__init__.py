"""Bayesian exploration in finite-horizon tabular MDPs.

Thompson sampling, soft Q-learning and K-learning, conjugate beliefs,
benchmark environments and an experiment harness.
"""
from .agents import (BanditKAgent, BayesOptimalProblem1Agent, GreedyAgent, KLearningAgent,
                     KLearningParams, OptimalityEstimate, SoftQAgent, SoftQParams,
                     ThompsonAgent, bandit_k_policy, bandit_k_probs, bandit_optimal_beta,
                     bayes_optimal_problem1, estimate_optimality, k_policy, k_values,
                     soft_bellman, soft_q_policy, thompson_policy)
from .environments import (DeepSeaSpec, Problem1Spec, make_deep_sea, make_problem1,
                           make_problem1_prior, make_random_mdp)
from .mdp import (Deterministic, Gaussian, Policy, TabularMdp, Transition, evaluate_policy,
                  greedy_policy, optimal_return, optimal_values, per_episode_regret,
                  policy_return, sample_episode)
from .posterior import (BeliefState, GaussianRewardPosterior, TwoPointBelief, mean_mdp,
                        reward_cgf, sample_mdp, update)

__version__ = "0.1.0"
