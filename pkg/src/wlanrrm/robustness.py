"""Noise-robustness sweeps: degrade observed RSSIs, keep scoring on truth.

For every (mean, std) noise cell the trained policy acts on perturbed
observations while evaluation stays on the unperturbed network, and the cell
reports the relative regret increase over the clean-observation baseline.
The policy's sampling streams are shared between the baseline and every cell,
so the zero-noise cell is identically zero.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .agent import decode_sequential, encode_features, select_best
from .environment import NeighborhoodModel, NoiseSpec, evaluate, observe
from .errors import FormatError, ValidationError
from .seeds import TAG_ROBUST_NOISE, TAG_ROBUST_POLICY, spawn

DEFAULT_MEANS = (-12.0, -9.0, -6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0)
DEFAULT_STDS = (0.0, 1.5, 3.0, 6.0)

GRID_COLUMNS = ["mean_db", "std_db", "value", "stderr", "metric", "env_kind", "baseline_regret"]


@dataclass(frozen=True)
class RobustnessGrid:
    means: tuple
    stds: tuple
    env_kind: str
    cells: np.ndarray    # |means| x |stds|; % regret increase, or absolute regret
    stderr: np.ndarray   # same shape
    baseline_regret: float
    absolute: bool = False  # True when baseline is 0 and % is undefined

    @property
    def metric(self):
        return "absolute_regret" if self.absolute else "degradation_pct"


def _choose(model, obs, env, rngs):
    features = encode_features(obs, env)
    rollouts = [decode_sequential(model, obs, features, env, rng=rng) for rng in rngs]
    rollouts.append(decode_sequential(model, obs, features, env, mode="greedy"))
    _, cfg = select_best(model, obs, rollouts, env)
    return cfg


def run_grid(model, eval_set, env_kind, means=DEFAULT_MEANS, stds=DEFAULT_STDS,
             trials_per_cell=20, seed=0, k_rollouts=8):
    """Sweep observation noise; returns per-cell degradation vs the clean run.

    The (instance, trial, rollout) sampling streams are derived once and reused
    across all cells and the baseline, so cell regrets differ from the baseline
    only through the perturbed observations.
    """
    if not eval_set:
        raise ValidationError("eval_set must be nonempty")
    if trials_per_cell < 1:
        raise ValidationError("trials_per_cell must be >= 1")
    env = NeighborhoodModel(env_kind)
    n_e, n_t = len(eval_set), trials_per_cell

    def policy_rngs(e, t):
        return [spawn(seed, TAG_ROBUST_POLICY, e, t, r) for r in range(k_rollouts)]

    base = np.zeros((n_e, n_t))
    for e, net in enumerate(eval_set):
        obs = observe(net)
        for t in range(n_t):
            cfg = _choose(model, obs, env, policy_rngs(e, t))
            base[e, t] = evaluate(net, cfg, env).regret
    baseline = float(base.mean())

    cells = np.zeros((len(means), len(stds)))
    stderr = np.zeros_like(cells)
    for mi, mu in enumerate(means):
        for si, sd in enumerate(stds):
            spec = NoiseSpec(mean_db=mu, std_db=sd)
            regrets = np.zeros((n_e, n_t))
            for e, net in enumerate(eval_set):
                for t in range(n_t):
                    obs = observe(net, spec, rng=spawn(seed, TAG_ROBUST_NOISE, mi, si, e, t))
                    cfg = _choose(model, obs, env, policy_rngs(e, t))
                    regrets[e, t] = evaluate(net, cfg, env).regret
            flat = regrets.ravel()
            sem = float(flat.std(ddof=1) / np.sqrt(flat.size)) if flat.size > 1 else 0.0
            if baseline > 0:
                cells[mi, si] = 100.0 * (float(flat.mean()) - baseline) / baseline
                stderr[mi, si] = 100.0 * sem / baseline
            else:
                cells[mi, si] = float(flat.mean())
                stderr[mi, si] = sem
    return RobustnessGrid(tuple(means), tuple(stds), env_kind, cells, stderr,
                          baseline, absolute=baseline == 0)


def report_grid(grid, path):
    """Long-format CSV, row-major by (mean, std); parse it back with read_grid_csv."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(GRID_COLUMNS)
        for mi, mu in enumerate(grid.means):
            for si, sd in enumerate(grid.stds):
                wr.writerow([repr(float(mu)), repr(float(sd)),
                             repr(float(grid.cells[mi, si])), repr(float(grid.stderr[mi, si])),
                             grid.metric, grid.env_kind, repr(grid.baseline_regret)])


def read_grid_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != GRID_COLUMNS:
        raise FormatError(f"{path}: expected header {','.join(GRID_COLUMNS)}")
    if len(rows) < 2:
        raise FormatError(f"{path}: no grid cells")
    means, stds, vals = [], [], {}
    env_kind, metric, baseline = None, None, None
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            mu, sd, val, se = (float(v) for v in row[:4])
            metric, env_kind, baseline = row[4], row[5], float(row[6])
        except (ValueError, IndexError):
            raise FormatError(f"{path}: malformed row at line {lineno}") from None
        if mu not in means:
            means.append(mu)
        if sd not in stds:
            stds.append(sd)
        vals[(mu, sd)] = (val, se)
    cells = np.zeros((len(means), len(stds)))
    stderr = np.zeros_like(cells)
    for mi, mu in enumerate(means):
        for si, sd in enumerate(stds):
            if (mu, sd) not in vals:
                raise FormatError(f"{path}: missing cell ({mu}, {sd})")
            cells[mi, si], stderr[mi, si] = vals[(mu, sd)]
    return RobustnessGrid(tuple(means), tuple(stds), env_kind, cells, stderr,
                          baseline, absolute=metric == "absolute_regret")
