"""K-learning on the Problem 1 bandit, solved in closed form.

For every number of arms the inverse temperature beta* minimises the
K-learning objective. The row near N = 1000 lands close to beta* = 10.2,
where about 94% of the mass goes on the unknown arm.

    python3 demos/bandit_table.py
"""
from bayes_explore.harness.sweeps import bandit_table

for row in bandit_table(sizes=(3, 10, 30, 100, 300, 1000), grid_points=20_000):
    print(f"N={row.num_actions:<5} beta*={row.beta_star:7.3f}  pi_2={row.pi2:.4f}"
          f"  optimiser minus grid={row.grid_gap:+.1e}")
