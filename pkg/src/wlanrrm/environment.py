"""Airtime interference model: busy fractions, achieved airtime, and regret.

Interference is CSMA-style airtime sharing: an AP's busy fraction is the
summed offered load of its co-channel neighbors, where neighborship is a
threshold or sigmoid function of the RSSI the AP senses. Achieved airtime is
the offered load thinned by the busy fraction; regret compares the achieved
width-weighted airtime against an interference-free, fully-bonded bound.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .seeds import TAG_OBSERVE, spawn
from .topology import RSSI_MAX_DBM, RSSI_MIN_DBM, config_masks

THRESHOLD = "threshold"
SIGMOID = "sigmoid"

DEFAULT_THRESHOLD_DBM = -82.0
DEFAULT_SPREAD_DB = 6.0


@dataclass(frozen=True)
class NeighborhoodModel:
    """Maps a sensed RSSI to a neighbor weight in [0, 1]."""

    kind: str
    threshold_dbm: float = DEFAULT_THRESHOLD_DBM
    spread_db: float = DEFAULT_SPREAD_DB

    def __post_init__(self):
        if self.kind not in (THRESHOLD, SIGMOID):
            raise ValidationError(f"unknown neighborhood kind {self.kind!r}")
        if not RSSI_MIN_DBM <= self.threshold_dbm <= RSSI_MAX_DBM:
            raise ValidationError(f"threshold {self.threshold_dbm} dBm outside [{RSSI_MIN_DBM}, {RSSI_MAX_DBM}]")
        if self.spread_db <= 0:
            raise ValidationError("spread_db must be > 0")

    @classmethod
    def threshold(cls, threshold_dbm=DEFAULT_THRESHOLD_DBM):
        return cls(THRESHOLD, threshold_dbm)

    @classmethod
    def sigmoid(cls, threshold_dbm=DEFAULT_THRESHOLD_DBM, spread_db=DEFAULT_SPREAD_DB):
        return cls(SIGMOID, threshold_dbm, spread_db)


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian perturbation applied to every observed off-diagonal RSSI."""

    mean_db: float = 0.0
    std_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.std_db < 0:
            raise ValidationError("std_db must be >= 0")


class Observation:
    """RSSIs and loads as the agent sees them; may differ from ground truth."""

    def __init__(self, observed_rssi, load, band):
        observed_rssi = np.array(observed_rssi, dtype=np.float64)
        load = np.array(load, dtype=np.float64)
        n = load.shape[0] if load.ndim == 1 else -1
        if load.ndim != 1 or n < 1:
            raise ValidationError("load must be a non-empty 1-d vector")
        if observed_rssi.shape != (n, n):
            raise ValidationError(f"observed_rssi shape {observed_rssi.shape} does not match {n} APs")
        observed_rssi.flags.writeable = False
        load.flags.writeable = False
        self.observed_rssi = observed_rssi
        self.load = load
        self.band = band

    @property
    def n_aps(self):
        return self.load.shape[0]


@dataclass(frozen=True)
class EvalRecord:
    """Outcome of evaluating one configuration on one network."""

    regret: float
    busy_fraction: np.ndarray
    utilization: np.ndarray
    achieved_airtime: np.ndarray
    config: object


def neighbor_weight(rssi_dbm, model):
    """Neighbor weight for a sensed RSSI; vectorized over arrays.

    Threshold: a step, inclusive at the threshold. Sigmoid: centered at the
    threshold, traversing ~[0.12, 0.88] across one spread.
    """
    r = np.asarray(rssi_dbm, dtype=np.float64)
    if model.kind == THRESHOLD:
        w = (r >= model.threshold_dbm).astype(np.float64)
    else:
        w = 1.0 / (1.0 + np.exp(-4.0 * (r - model.threshold_dbm) / model.spread_db))
    return w if w.ndim else float(w)


def weight_matrix(rssi, model):
    """Pairwise neighbor weights with the (ignored) diagonal zeroed."""
    w = neighbor_weight(rssi, model)
    np.fill_diagonal(w, 0.0)
    return w


def busy_fraction(net, cfg, model):
    """Per-AP airtime fraction occupied by co-channel neighbors, capped at 1.

    Entry i sums neighbor loads weighted by the RSSI received BY i FROM j;
    a neighbor counts only if its bonded block shares a base channel with i's.
    Accepts a Network (ground truth) or an Observation (agent's view).
    """
    cfg.require_valid(net.band, net.n_aps)
    rssi = net.observed_rssi if isinstance(net, Observation) else net.rssi
    w = weight_matrix(rssi, model)
    masks = config_masks(cfg, net.band)
    overlap = (masks @ masks.T) > 0
    return np.minimum(1.0, (w * overlap) @ net.load)


def evaluate(net, cfg, model):
    """Score a configuration: airtime, utilization, and regret in [0, 1].

    Utility is the width-weighted achieved airtime; the bound assumes every
    AP interference-free at the band's maximum width. Ground truth only:
    observations are rejected so noisy RSSIs can never leak into scoring.
    """
    if isinstance(net, Observation):
        raise ValidationError("evaluate() scores ground-truth networks, not observations")
    b = busy_fraction(net, cfg, model)
    airtime = net.load * (1.0 - b)
    utilization = np.minimum(1.0, net.load + b)
    widths = cfg.widths()
    utility = float(np.sum(airtime * widths))
    bound = float(np.sum(net.load) * net.band.max_width)
    regret = 1.0 - utility / bound if bound > 0 else 0.0
    return EvalRecord(regret, b, utilization, airtime, cfg)


def observe(net, noise=None, rng=None):
    """Agent-facing view of a network, optionally with noisy RSSIs.

    Noise perturbs every off-diagonal entry independently; the diagonal and
    the loads are copied untouched. With noise=None the view is exact.
    The stream comes from noise.seed unless an owned rng is passed.
    """
    if noise is None:
        return Observation(net.rssi, net.load, net.band)
    if rng is None:
        rng = spawn(noise.seed, TAG_OBSERVE)
    n = net.n_aps
    eps = rng.normal(noise.mean_db, noise.std_db, size=(n, n))
    np.fill_diagonal(eps, 0.0)
    return Observation(net.rssi + eps, net.load, net.band)


def write_eval_record(rec, path, policy=""):
    """One CSV row per AP plus a summary row carrying the regret."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["row", "policy", "ap", "block_start", "width", "busy", "utilization", "airtime", "regret"])
        for i, a in enumerate(rec.config.assignments):
            wr.writerow(
                ["ap", policy, i, a.block_start, a.width,
                 repr(float(rec.busy_fraction[i])), repr(float(rec.utilization[i])),
                 repr(float(rec.achieved_airtime[i])), ""]
            )
        wr.writerow(["summary", policy, "", "", "", "", "", "", repr(float(rec.regret))])
