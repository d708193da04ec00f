"""Closed-loop replay: per-slot reconfiguration vs a static daily plan.

The trace alternates two hotspot phases (morning lobby, evening wing). A
static plan chosen from the daily mean load cannot serve both phases; a
policy re-run every slot follows the hotspot around. We replay greedy, the
trained agent if a checkpoint exists, and the static plan, then compare
utilizations in matched load bins.
"""

import os

import numpy as np

from wlanrrm import NeighborhoodModel
from wlanrrm.agent import load_model
from wlanrrm.harness import (DrlPolicy, GreedyPolicy, StaticPolicy, compare,
                             replay, two_phase_trace)

OUT = os.path.join(os.path.dirname(__file__), "out")
CKPT = os.path.join(OUT, "ckpt_4000")

env = NeighborhoodModel.threshold()
trace = two_phase_trace()
print(f"trace: {trace.n_slots} slots, {trace.network.n_aps} APs, two phases\n")

policies = [("greedy", GreedyPolicy()), ("static", StaticPolicy())]
if os.path.exists(CKPT):
    policies.insert(0, ("drl", DrlPolicy(load_model(CKPT), k_rollouts=8)))
else:
    print("(no checkpoint from 03_train_agent.py; skipping the drl row)\n")

reports = {}
for name, pol in policies:
    rep = replay(trace, pol, env, seed=0)
    reports[name] = rep
    utils = [r.utilization for r in rep.rows]
    print(f"{name:>6}: mean regret {rep.mean_regret():.4f}  "
          f"p95 utilization {np.percentile(utils, 95):.3f}")

# compare the stronger per-slot policy against the static plan; a briefly
# trained agent can still lose to static here, greedy never does
name, per_slot = min(((n, reports[n]) for n in reports if n != "static"),
                     key=lambda kv: kv[1].mean_regret())
os.makedirs(OUT, exist_ok=True)
compare(per_slot, reports["static"], OUT)
print(f"\nwrote compare_scatter.csv / compare_summary.csv under {OUT} "
      f"(per-slot side: {name})")
d = reports["static"].mean_regret() - per_slot.mean_regret()
print(f"static plans look fine on the daily mean load, but per-slot {name} "
      f"beats them by {d:.4f} mean regret on the alternating phases.")
