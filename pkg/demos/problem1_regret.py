"""Problem 1: one unknown arm worth +2 or -2, among N arms worth about 1.

Thompson sampling pays roughly 2 whatever N is. The Bayes-optimal agent
pays 1.5. Soft Q-learning keeps paying for the N - 2 distractors, so even
its best inverse temperature does worse as N grows.

    python3 demos/problem1_regret.py
"""
from bayes_explore.harness.sweeps import lookup, problem1_sweep

SIZES = (3, 10, 30)

rows = problem1_sweep(SIZES, episodes=100, prior_draws=2000, worst_case=False)
print(f"{'agent':>14} " + " ".join(f"N={n:<6}" for n in SIZES))
for agent in ("bayes_optimal", "thompson", "bandit_k", "soft_q"):
    values = [lookup(rows, agent, n).value for n in SIZES]
    print(f"{agent:>14} " + " ".join(f"{v:<8.3f}" for v in values))
betas = [lookup(rows, "soft_q", n, "best_beta").value for n in SIZES]
print("best soft-Q beta per N:", [round(b, 3) for b in betas])
