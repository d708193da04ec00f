"""Deterministic RNG stream derivation.

Every random draw in the package comes from a stream derived from a master
seed plus an integer purpose path, so results are reproducible regardless of
evaluation order or worker count.
"""

import numpy as np

# Purpose tags for derived streams. Fixed values; changing them changes
# every downstream random sequence.
TAG_INIT = 1
TAG_NETWORK = 2
TAG_OBSERVE = 3
TAG_ROLLOUT = 4
TAG_EVALSET = 5
TAG_EVALRUN = 6
TAG_RANDOM_POLICY = 7
TAG_TELEMETRY = 8
TAG_ROBUST_NOISE = 9
TAG_ROBUST_POLICY = 10
TAG_TRACE = 11
TAG_REPLAY = 12


def spawn(seed, *path):
    """Generator for (seed, *path); same arguments always give the same stream."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path)))


def derive_seed(seed, *path):
    """Collapse (seed, *path) to a single integer usable as another master seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
