"""Reference policies: exhaustive oracle, load-ordered greedy, daily static, random.

The oracle enumerates every joint configuration and is the ground-truth
optimum for small instances; the others are comparison policies for the
closed-loop experiments.
"""

import itertools

import numpy as np

from .environment import Observation, weight_matrix
from .errors import CapacityError, ValidationError
from .seeds import TAG_RANDOM_POLICY, spawn
from .topology import ChannelConfig, Network, action_space, channel_mask


def _rssi_of(net_or_obs):
    if isinstance(net_or_obs, Observation):
        return net_or_obs.observed_rssi
    return net_or_obs.rssi


def _interference_tables(net_or_obs, model):
    """Per-pair weighted loads, per-action masks, and the action overlap table."""
    band = net_or_obs.band
    w = weight_matrix(_rssi_of(net_or_obs), model)
    wl = w * net_or_obs.load[None, :]  # wl[i, j] = w_ij * rho_j
    actions = action_space(band)
    masks = np.array([channel_mask(a, band) for a in actions], dtype=bool)
    overlap = (masks @ masks.T) > 0  # overlap[a, b]: blocks share a channel
    widths = np.array([a.width for a in actions], dtype=np.float64)
    return actions, wl, overlap, widths


ORACLE_MAX_CONFIGS = 10**7


def oracle(net, model, max_configs=ORACLE_MAX_CONFIGS):
    """Exhaustive minimizer of regret; ties go to the lexicographically
    smallest action-index vector. Guarded against oversized instances."""
    actions, wl, overlap, widths = _interference_tables(net, model)
    n, a_count = net.n_aps, len(actions)
    if a_count**n > max_configs:
        raise CapacityError(f"{a_count}^{n} joint configs exceed the {max_configs} guard")
    load = net.load
    bound = float(np.sum(load) * net.band.max_width)
    best_util = -np.inf
    best_idx = None
    for idx in itertools.product(range(a_count), repeat=n):
        ii = np.array(idx)
        busy = np.minimum(1.0, (wl * overlap[np.ix_(ii, ii)]).sum(axis=1))
        util = float(np.sum(load * (1.0 - busy) * widths[ii]))
        if util > best_util:  # strict: first optimum in product order is lex-smallest
            best_util = util
            best_idx = idx
    cfg = ChannelConfig(tuple(actions[i] for i in best_idx))
    regret = 1.0 - best_util / bound if bound > 0 else 0.0
    return cfg, regret


def greedy(net_or_obs, model):
    """Heaviest-first marginal-utility heuristic.

    Each AP, visited in descending load order, picks the block maximizing its
    own load * (1 - busy) * width against the already-placed APs; ties prefer
    wider blocks, then lower block index.
    """
    actions, wl, overlap, widths = _interference_tables(net_or_obs, model)
    n = net_or_obs.n_aps
    load = net_or_obs.load
    order = np.lexsort((np.arange(n), -load))
    chosen = np.full(n, -1, dtype=int)
    for i in order:
        placed = chosen >= 0
        best_key = None
        best_a = None
        for ai, a in enumerate(actions):
            busy = min(1.0, float(wl[i, placed] @ overlap[ai, chosen[placed]])) if placed.any() else 0.0
            key = (load[i] * (1.0 - busy) * widths[ai], widths[ai], -a.block_start)
            if best_key is None or key > best_key:
                best_key = key
                best_a = ai
        chosen[i] = best_a
    return ChannelConfig(tuple(actions[ai] for ai in chosen))


def static_daily(net_sequence, model, method="greedy"):
    """One configuration for a whole sequence, optimized for the mean load.

    All networks must share band and RSSI. method="oracle" swaps the greedy
    solve for the exhaustive one (subject to the oracle's capacity guard).
    """
    if not net_sequence:
        raise ValidationError("net_sequence must be nonempty")
    first = net_sequence[0]
    for net in net_sequence[1:]:
        if net.band != first.band or not np.array_equal(net.rssi, first.rssi):
            raise ValidationError("networks in the sequence do not share a topology")
    mean_load = np.mean([net.load for net in net_sequence], axis=0)
    forecast = Network(first.band, first.rssi, mean_load)
    if method == "oracle":
        cfg, _ = oracle(forecast, model)
        return cfg
    if method != "greedy":
        raise ValidationError(f"unknown static method {method!r}")
    return greedy(forecast, model)


def random_policy(net, seed):
    """Uniform independent assignment per AP, seeded."""
    actions = action_space(net.band)
    rng = spawn(seed, TAG_RANDOM_POLICY)
    idx = rng.integers(0, len(actions), size=net.n_aps)
    return ChannelConfig(tuple(actions[i] for i in idx))
