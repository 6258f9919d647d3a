"""DeepSea: only the all-right path pays, and every right step costs a little.

An agent that is only dithering needs about 2^N episodes to stumble on the
reward. Thompson sampling and K-learning explore deliberately, so their
learning times grow polynomially in N. K-learning starts slow, since its
bonus keeps the policy soft, but soft Q-learning's times double with every
extra row and overtake it around N = 10 (run ``bayes-explore deepsea-sweep``
for the full 4..14 range). Sizes here stay small so the script finishes in
about a minute.

    python3 demos/deepsea.py
"""
from bayes_explore.harness.sweeps import deepsea_learning_times, summarize_learning_times

SIZES = (4, 6, 8)

times = deepsea_learning_times(SIZES, seeds=3, master_seed=1)
for row in summarize_learning_times(times):
    if row.metric == "time_to_learn":
        print(f"{row.agent:>10}  N={row.param_n:<3} episodes to learn {row.value:8.0f}"
              f"   (2^N = {2 ** row.param_n})")
