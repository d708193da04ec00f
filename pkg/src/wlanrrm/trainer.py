"""Training loop: seeded episode generation, K-rollout A2C updates, step-decay
learning rate, CSV logging, periodic checkpoints, resume."""

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .agent import (decode_sequential, dims_for_band, encode_features, gradients,
                    init_model, load_model, save_model, select_best)
from .environment import NeighborhoodModel, evaluate, observe
from .errors import NumericsError, ValidationError
from .seeds import (TAG_EVALRUN, TAG_EVALSET, TAG_NETWORK, TAG_ROLLOUT, derive_seed, spawn)
from .topology import band_from_name, random_network


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 50000
    k_rollouts: int = 8
    lr_initial: float = 5e-3
    lr_final: float = 5e-4
    lr_decay_every: int = 2000
    batch_instances: int = 1
    eval_every: int = 5000
    eval_set_size: int = 20
    checkpoint_every: int = 10000
    seed: int = 0
    band_name: str = "2g4"
    n_range: tuple = (3, 12)
    density: float = 1.0
    load_range: tuple = (0.05, 0.9)
    env: NeighborhoodModel = field(default_factory=NeighborhoodModel.threshold)
    moving_avg_window: int = 100

    def __post_init__(self):
        if not (self.lr_initial >= self.lr_final > 0):
            raise ValidationError("need lr_initial >= lr_final > 0")
        if self.k_rollouts < 1 or self.batch_instances < 1:
            raise ValidationError("k_rollouts and batch_instances must be >= 1")
        if self.iterations < 0:
            raise ValidationError("iterations must be >= 0")
        lo, hi = self.n_range
        if not (1 <= lo <= hi):
            raise ValidationError(f"bad n_range {self.n_range}")
        if self.eval_every < 1 or self.checkpoint_every < 1 or self.eval_set_size < 1:
            raise ValidationError("eval_every, checkpoint_every, eval_set_size must be >= 1")
        band_from_name(self.band_name)


@dataclass
class TrainLog:
    iter_rows: list = field(default_factory=list)  # (iteration, mean_regret, moving_avg, lr, wall_s)
    eval_rows: list = field(default_factory=list)  # (iteration, eval_regret)


def lr_schedule(cfg, k):
    """Step decay hitting lr_final exactly at the last iteration; k is 0-based."""
    steps_total = (cfg.iterations - 1) // cfg.lr_decay_every if cfg.iterations > 1 else 0
    if steps_total <= 0 or cfg.lr_initial <= cfg.lr_final:
        gamma = 1.0
    else:
        gamma = (cfg.lr_final / cfg.lr_initial) ** (1.0 / steps_total)
    return max(cfg.lr_final, cfg.lr_initial * gamma ** (k // cfg.lr_decay_every))


def sample_network(cfg, band, *path):
    """Fresh training instance; size and contents from one derived stream."""
    rng = spawn(cfg.seed, *path)
    lo, hi = cfg.n_range
    n = int(rng.integers(lo, hi + 1))
    return random_network(n, band, density=cfg.density,
                          seed=derive_seed(cfg.seed, *path), load_range=cfg.load_range)


def make_eval_set(cfg, band):
    return [sample_network(cfg, band, TAG_EVALSET, j) for j in range(cfg.eval_set_size)]


def evaluate_policy(model, eval_set, model_env, noise=None, k_rollouts=8, seed=0):
    """Mean ground-truth regret of selector-chosen configs over an eval set.

    Per instance: K seeded stochastic rollouts plus one greedy rollout on the
    (possibly noisy) observation; the selector picks; scoring uses the clean
    network. Returns (mean regret, per-instance EvalRecords).
    """
    if not eval_set:
        raise ValidationError("eval_set must be nonempty")
    records = []
    for e, net in enumerate(eval_set):
        rng_obs = spawn(noise.seed, TAG_EVALRUN, e) if noise is not None else None
        obs = observe(net, noise, rng=rng_obs)
        features = encode_features(obs, model_env)
        rollouts = [decode_sequential(model, obs, features, model_env,
                                      rng=spawn(seed, TAG_EVALRUN, e, r))
                    for r in range(k_rollouts)]
        rollouts.append(decode_sequential(model, obs, features, model_env, mode="greedy"))
        _, cfg = select_best(model, obs, rollouts, model_env)
        records.append(evaluate(net, cfg, model_env))
    return float(np.mean([r.regret for r in records])), records


def _write_logs(log, out_dir):
    with open(os.path.join(out_dir, "train_log.csv"), "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["iteration", "mean_regret", "moving_avg_regret", "lr", "wall_s"])
        for row in log.iter_rows:
            wr.writerow([row[0]] + [repr(v) for v in row[1:]])
    with open(os.path.join(out_dir, "eval_log.csv"), "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["iteration", "eval_regret"])
        for it, reg in log.eval_rows:
            wr.writerow([it, repr(reg)])


def _ckpt_path(out_dir, iteration):
    return os.path.join(out_dir, f"ckpt_{iteration}")


def train(cfg, out_dir, resume_from=None):
    """Run (or resume) training; returns (model, TrainLog for the new rows).

    Reproducible from cfg.seed: every network, rollout, and evaluation stream
    is derived from (seed, purpose, iteration, ...), so a resumed run walks
    the same path as an uninterrupted one. A non-finite loss aborts with the
    last periodic checkpoint left in place.
    """
    os.makedirs(out_dir, exist_ok=True)
    band = band_from_name(cfg.band_name)
    if resume_from is not None:
        model = load_model(resume_from)
        model.require_band(band)
        start = int(model.meta.get("iteration", 0))
        # the smoothing window rides along in the checkpoint so a resumed
        # run's moving-average column matches the uninterrupted one
        window = [float(v) for v in model.meta.get("regret_window", [])]
    else:
        model = init_model(dims_for_band(band), cfg.seed, band.name)
        start = 0
        save_model(model, _ckpt_path(out_dir, 0))
        window = []
    eval_set = make_eval_set(cfg, band)
    log = TrainLog()
    last_good = _ckpt_path(out_dir, start)
    t0 = time.perf_counter()

    try:
        for k in range(start, cfg.iterations):
            lr = lr_schedule(cfg, k)
            total = None
            regrets = []
            for b in range(cfg.batch_instances):
                net = sample_network(cfg, band, TAG_NETWORK, k, b)
                obs = observe(net)
                features = encode_features(obs, cfg.env)
                for r in range(cfg.k_rollouts):
                    rollout = decode_sequential(model, obs, features, cfg.env,
                                                rng=spawn(cfg.seed, TAG_ROLLOUT, k, b, r))
                    regret = evaluate(net, rollout.config, cfg.env).regret
                    regrets.append(regret)
                    g = gradients(model, obs, rollout, regret, cfg.env)
                    if total is None:
                        total = g
                    else:
                        for name in total:
                            total[name] += g[name]
            scale = lr / (cfg.k_rollouts * cfg.batch_instances)
            for name in total:
                model.params[name] -= scale * total[name]
            mean_regret = float(np.mean(regrets))
            window.append(mean_regret)
            if len(window) > cfg.moving_avg_window:
                window.pop(0)
            log.iter_rows.append((k + 1, mean_regret, float(np.mean(window)), lr,
                                  time.perf_counter() - t0))
            done = k + 1 == cfg.iterations
            if (k + 1) % cfg.eval_every == 0 or done:
                eval_regret, _ = evaluate_policy(model, eval_set, cfg.env,
                                                 k_rollouts=cfg.k_rollouts,
                                                 seed=derive_seed(cfg.seed, TAG_EVALRUN, k + 1))
                log.eval_rows.append((k + 1, eval_regret))
            if (k + 1) % cfg.checkpoint_every == 0 or done:
                model.meta["iteration"] = k + 1
                model.meta["regret_window"] = list(window)
                save_model(model, _ckpt_path(out_dir, k + 1))
                last_good = _ckpt_path(out_dir, k + 1)
    except NumericsError as exc:
        _write_logs(log, out_dir)
        raise NumericsError(f"training aborted at a non-finite loss: {exc}; "
                            f"last good checkpoint: {last_good}") from exc
    model.meta["iteration"] = cfg.iterations
    _write_logs(log, out_dir)
    return model, log
