"""Observation-noise sweep around a trained policy.

RSSI reports in the field drift: calibration offsets (mean shift) and
measurement jitter (std). The sweep perturbs only the observation the policy
sees; scoring stays on the clean ground truth. Expect underestimated RSSI
(negative mean, neighbors look weaker, policy packs too tight) to hurt more
than overestimation, and the sigmoid policy head to degrade more gently than
the hard threshold.
"""

import os

from wlanrrm import BAND_2G4, random_mesh_network
from wlanrrm.agent import load_model
from wlanrrm.robustness import run_grid
from wlanrrm.trainer import TrainConfig, train

OUT = os.path.join(os.path.dirname(__file__), "out")
CKPT = os.path.join(OUT, "ckpt_4000")

if not os.path.exists(CKPT):
    print("no checkpoint from 03_train_agent.py; training a short one")
    model, _ = train(TrainConfig(iterations=4000, n_range=(3, 6), density=2.5,
                                 eval_every=500, checkpoint_every=4000, seed=0,
                                 lr_initial=1e-3, lr_final=3e-4), OUT)
else:
    model = load_model(CKPT)

# interference-limited instances: every pair sits near the sensing margin
nets = [random_mesh_network(4, BAND_2G4, rssi_range=(-86.0, -76.0), seed=200 + i)
        for i in range(8)]

MEANS = (-6.0, -3.0, 0.0, 3.0, 6.0)
STDS = (0.0, 1.5, 3.0)

for kind in ("threshold", "sigmoid"):
    grid = run_grid(model, nets, kind, means=MEANS, stds=STDS,
                    trials_per_cell=8, seed=0, k_rollouts=8)
    print(f"\n{kind}: clean baseline regret {grid.baseline_regret:.4f}")
    print("degradation vs clean, % (rows: mean shift dB; cols: std dB)")
    print(f"{'':>6}" + "".join(f"{s:>9.1f}" for s in grid.stds))
    for mi, mu in enumerate(grid.means):
        row = "".join(f"{grid.cells[mi, si]:>9.2f}" for si in range(len(grid.stds)))
        print(f"{mu:>6.1f}{row}")
    print(f"grid mean {grid.cells.mean():.2f}%")
