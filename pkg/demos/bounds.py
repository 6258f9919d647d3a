"""Monte Carlo checks of the K-learning guarantees on random small beliefs.

The first check compares the expected gap between the optimal and the
K-learning values with the KL-plus-variance bound. The second checks that
the K-values sit above the expected optimal Q-values. A case fails only if
it misses by more than three standard errors.

    python3 demos/bounds.py
"""
from bayes_explore.harness.sweeps import check_bounds

results = check_bounds(trials=10, mc_samples=5000, master_seed=3)
for r in results[:6]:
    print(f"trial {r.trial} beta={r.beta:<5} shape={r.shape} "
          f"bound margin {r.theorem1_margin:+.2f} s.e.  optimistic={r.optimism}")
passed = sum(r.theorem1 and r.optimism for r in results)
print(f"{passed}/{len(results)} cases pass both checks")
