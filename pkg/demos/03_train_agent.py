"""Train the actor-critic agent on small dense 2.4 GHz instances.

A scaled-down run: 4,000 iterations instead of the 50,000 used for the
convergence benchmark. Enough to watch the eval regret fall well below the
untrained policy and close most of the gap to greedy. The checkpoint lands in
demos/out/ and feeds the robustness and replay demos.
"""

import os
import time

import numpy as np

from wlanrrm import band_from_name, evaluate
from wlanrrm.baselines import greedy
from wlanrrm.trainer import TrainConfig, make_eval_set, train

OUT = os.path.join(os.path.dirname(__file__), "out")

cfg = TrainConfig(iterations=4000, n_range=(3, 6), density=2.5,
                  eval_every=500, checkpoint_every=4000, seed=0,
                  lr_initial=1e-3, lr_final=3e-4)

t0 = time.time()
model, log = train(cfg, OUT)
print(f"trained {cfg.iterations} iterations in {time.time() - t0:.0f}s\n")

print(f"{'iter':>6} {'eval regret':>12}")
for it, reg in log.eval_rows:
    print(f"{it:>6} {reg:>12.4f}")

# reference point: greedy on the same frozen eval set
env = cfg.env
nets = make_eval_set(cfg, band_from_name(cfg.band_name))
g = float(np.mean([evaluate(n, greedy(n, env), env).regret for n in nets]))
print(f"\ngreedy on the eval set: {g:.4f}")
print(f"checkpoint written under {OUT}")
