"""Closed-loop machinery: load traces, per-slot replay under a chosen policy,
policy-vs-policy comparison exports, and the master run configuration."""

import csv
import json
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .agent import decode_sequential, encode_features, load_model, select_best
from .baselines import greedy, random_policy, static_daily
from .environment import NeighborhoodModel, NoiseSpec, evaluate, observe
from .errors import FormatError, ValidationError
from .seeds import TAG_OBSERVE, TAG_REPLAY, TAG_TRACE, derive_seed, spawn
from .topology import BAND_2G4, Network, band_from_name, network_from_doc, network_to_doc
from .trainer import TrainConfig

TRACE_FORMAT = "wlanrrm-trace"
TRACE_VERSION = 1
DEFAULT_SLOT_MINUTES = 10

REPORT_COLUMNS = ["slot", "ap", "policy", "load", "busy", "utilization",
                  "regret_contribution", "slot_mean_load"]


class LoadTrace:
    """A fixed topology plus a per-slot load schedule at a fixed cadence."""

    def __init__(self, network, slots, slot_minutes=DEFAULT_SLOT_MINUTES):
        n = network.n_aps
        prev = None
        clean = []
        for idx, load in slots:
            if prev is not None and idx <= prev:
                raise ValidationError(f"slot indices must be strictly increasing, got {idx} after {prev}")
            prev = idx
            load = np.asarray(load, dtype=np.float64)
            if load.shape != (n,):
                raise ValidationError(f"slot {idx}: load shape {load.shape} does not match {n} APs")
            if np.any(load < 0) or np.any(load > 1):
                raise ValidationError(f"slot {idx}: load entries must lie in [0, 1]")
            clean.append((int(idx), load))
        if not clean:
            raise ValidationError("a trace needs at least one slot")
        if slot_minutes <= 0:
            raise ValidationError("slot_minutes must be > 0")
        self.network = network
        self.slots = clean
        self.slot_minutes = slot_minutes

    @property
    def n_slots(self):
        return len(self.slots)

    def networks(self):
        return [self.network.with_load(load) for _, load in self.slots]


def save_trace(trace, path):
    doc = {
        "format": TRACE_FORMAT,
        "version": TRACE_VERSION,
        "slot_minutes": trace.slot_minutes,
        "network": network_to_doc(trace.network),
        "slots": [{"slot": idx, "load": [float(v) for v in load]} for idx, load in trace.slots],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_trace(path):
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: not valid JSON at line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != TRACE_FORMAT:
        raise FormatError(f"{path}: not a {TRACE_FORMAT} file")
    if doc.get("version") != TRACE_VERSION:
        raise FormatError(f"{path}: unsupported trace version {doc.get('version')}")
    unknown = set(doc) - {"format", "version", "slot_minutes", "network", "slots"}
    if unknown:
        raise FormatError(f"{path}: unknown fields {sorted(unknown)}")
    for fld in ("network", "slots"):
        if fld not in doc:
            raise FormatError(f"{path}: missing field {fld!r}")
    net = network_from_doc(doc["network"], f"{path}: network")
    slots = []
    for k, entry in enumerate(doc["slots"]):
        if not isinstance(entry, dict) or set(entry) != {"slot", "load"}:
            raise FormatError(f"{path}: slots[{k}] must have exactly 'slot' and 'load'")
        if not isinstance(entry["slot"], int):
            raise FormatError(f"{path}: slots[{k}].slot must be an integer")
        slots.append((entry["slot"], entry["load"]))
    try:
        return LoadTrace(net, slots, doc.get("slot_minutes", DEFAULT_SLOT_MINUTES))
    except ValidationError as e:
        raise FormatError(f"{path}: {e}") from None


def gen_diurnal_trace(net, n_slots=144, seed=0, amplitude=0.35, noise_std=0.03):
    """Sinusoidal day profile with a per-AP phase and small seeded noise."""
    if n_slots < 1:
        raise ValidationError("n_slots must be >= 1")
    rng = spawn(seed, TAG_TRACE)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=net.n_aps)
    slots = []
    for s in range(n_slots):
        wave = amplitude * np.sin(2.0 * np.pi * s / n_slots + phase)
        noise = rng.normal(0.0, noise_std, size=net.n_aps) if noise_std > 0 else 0.0
        slots.append((s, np.clip(net.load + wave + noise, 0.0, 1.0)))
    return LoadTrace(net, slots)


def two_phase_trace(n_slots=24, heavy=0.9, medium=0.7, light=0.1, rssi_dbm=-60.0, band=BAND_2G4):
    """Alternating hotspot trace on a 4-AP full mesh.

    Even slots load APs (0, 1) at (heavy, medium), odd slots swap the pattern
    onto APs (2, 3). The long-run mean load is symmetric, so a single static
    configuration must compromise while a per-slot policy can track the swap.
    """
    if n_slots < 2:
        raise ValidationError("the two-phase trace needs at least 2 slots")
    rssi = np.full((4, 4), float(rssi_dbm))
    np.fill_diagonal(rssi, -40.0)
    net = Network(band, rssi, np.zeros(4))
    a = np.array([heavy, medium, light, light])
    b = np.array([light, light, heavy, medium])
    slots = [(s, a if s % 2 == 0 else b) for s in range(n_slots)]
    return LoadTrace(net, slots)


class Row(NamedTuple):
    slot: int
    ap: int
    policy: str
    load: float
    busy: float
    utilization: float
    regret_contribution: float
    slot_mean_load: float


@dataclass
class ComparisonReport:
    policy: str
    rows: list

    def keys(self):
        return {(r.slot, r.ap) for r in self.rows}

    def slot_regrets(self):
        out = {}
        for r in self.rows:
            out[r.slot] = out.get(r.slot, 0.0) + r.regret_contribution
        return out

    def mean_regret(self):
        per_slot = self.slot_regrets()
        return float(np.mean(list(per_slot.values()))) if per_slot else 0.0


class GreedyPolicy:
    name = "greedy"

    def prepare(self, trace, model_env):
        pass

    def decide(self, slot, obs, model_env, seed):
        return greedy(obs, model_env)


class RandomPolicy:
    name = "random"

    def prepare(self, trace, model_env):
        pass

    def decide(self, slot, obs, model_env, seed):
        return random_policy(obs, derive_seed(seed, TAG_REPLAY, slot))


class StaticPolicy:
    """One configuration for the whole trace, from the mean-load forecast."""

    name = "static"

    def __init__(self, method="greedy"):
        self.method = method
        self._config = None

    def prepare(self, trace, model_env):
        self._config = static_daily(trace.networks(), model_env, method=self.method)

    def decide(self, slot, obs, model_env, seed):
        return self._config


class DrlPolicy:
    name = "drl"

    def __init__(self, model, k_rollouts=8):
        self.model = model
        self.k_rollouts = k_rollouts

    @classmethod
    def from_checkpoint(cls, path, k_rollouts=8):
        return cls(load_model(path), k_rollouts)

    def prepare(self, trace, model_env):
        self.model.require_band(trace.network.band)

    def decide(self, slot, obs, model_env, seed):
        features = encode_features(obs, model_env)
        rollouts = [decode_sequential(self.model, obs, features, model_env,
                                      rng=spawn(seed, TAG_REPLAY, slot, r))
                    for r in range(self.k_rollouts)]
        rollouts.append(decode_sequential(self.model, obs, features, model_env, mode="greedy"))
        _, cfg = select_best(self.model, obs, rollouts, model_env)
        return cfg


def replay(trace, policy, model_env, noise=None, seed=0):
    """Drive the trace slot by slot under one policy; score on ground truth.

    The static policy plans once from the whole trace; the others act per slot
    on the (optionally noisy) observation. Deterministic given (trace, policy,
    noise spec, seed).
    """
    policy.prepare(trace, model_env)
    w_max = trace.network.band.max_width
    rows = []
    for s, (idx, load) in enumerate(trace.slots):
        net = trace.network.with_load(load)
        obs = observe(net, noise, rng=spawn(seed, TAG_OBSERVE, TAG_REPLAY, idx) if noise else None)
        cfg = policy.decide(idx, obs, model_env, seed)
        rec = evaluate(net, cfg, model_env)
        bound = float(np.sum(load) * w_max)
        mean_load = float(load.mean())
        widths = cfg.widths()
        for i in range(net.n_aps):
            contrib = (load[i] * w_max - rec.achieved_airtime[i] * widths[i]) / bound if bound > 0 else 0.0
            rows.append(Row(idx, i, policy.name, float(load[i]), float(rec.busy_fraction[i]),
                            float(rec.utilization[i]), float(contrib), mean_load))
    return ComparisonReport(policy.name, rows)


def write_report(report, path):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(REPORT_COLUMNS)
        for r in report.rows:
            wr.writerow([r.slot, r.ap, r.policy] + [repr(v) for v in r[3:]])


def read_report(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != REPORT_COLUMNS:
        raise FormatError(f"{path}: expected header {','.join(REPORT_COLUMNS)}")
    parsed = []
    names = set()
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            parsed.append(Row(int(row[0]), int(row[1]), row[2], *(float(v) for v in row[3:8])))
            names.add(row[2])
        except (ValueError, IndexError):
            raise FormatError(f"{path}: malformed row at line {lineno}") from None
    if len(names) > 1:
        raise FormatError(f"{path}: multiple policies in one report: {sorted(names)}")
    return ComparisonReport(names.pop() if names else "", parsed)


UTIL_BINS = 10


def compare(report_a, report_b, out_dir):
    """Emit the scatter and percentile-summary CSVs for two replay reports.

    Scatter: one row per (slot, ap) with both policies' utilizations.
    Summary: median and 95th-percentile utilization per policy within equal-
    width bins of the slot's mean network load. Returns the summary rows.
    """
    keys_a, keys_b = report_a.keys(), report_b.keys()
    if keys_a != keys_b:
        missing = sorted(keys_a ^ keys_b)[:5]
        raise ValidationError(f"reports cover different (slot, ap) keys, e.g. {missing}")
    if not keys_a:
        raise ValidationError("reports have no rows to compare")

    by_key_a = {(r.slot, r.ap): r for r in report_a.rows}
    by_key_b = {(r.slot, r.ap): r for r in report_b.rows}
    os.makedirs(out_dir, exist_ok=True)
    scatter_path = os.path.join(out_dir, "compare_scatter.csv")
    with open(scatter_path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["slot", "ap", "policy_a", "util_a", "policy_b", "util_b"])
        for key in sorted(keys_a):
            ra, rb = by_key_a[key], by_key_b[key]
            wr.writerow([key[0], key[1], ra.policy, repr(ra.utilization),
                         rb.policy, repr(rb.utilization)])

    summary_rows = []
    edges = np.linspace(0.0, 1.0, UTIL_BINS + 1)
    for side, rep in (("a", report_a), ("b", report_b)):
        for k in range(UTIL_BINS):
            lo, hi = float(edges[k]), float(edges[k + 1])
            last = k == UTIL_BINS - 1
            vals = [r.utilization for r in rep.rows
                    if lo <= r.slot_mean_load < hi or (last and r.slot_mean_load == hi)]
            if not vals:
                continue
            summary_rows.append((side, rep.policy, lo, hi, len(vals),
                                 float(np.percentile(vals, 50)), float(np.percentile(vals, 95))))
    summary_path = os.path.join(out_dir, "compare_summary.csv")
    with open(summary_path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["side", "policy", "bin_lo", "bin_hi", "n", "median_utilization",
                     "p95_utilization"])
        for row in summary_rows:
            wr.writerow([row[0], row[1], repr(row[2]), repr(row[3]), row[4],
                         repr(row[5]), repr(row[6])])
    return summary_rows


_TOP_KEYS = {"seed", "band", "neighborhood", "noise", "train", "paths"}
_NEIGH_KEYS = {"kind", "threshold_dbm", "spread_db"}
_NOISE_KEYS = {"mean_db", "std_db", "seed"}
_TRAIN_KEYS = {"iterations", "k_rollouts", "lr_initial", "lr_final", "lr_decay_every",
               "batch_instances", "eval_every", "eval_set_size", "checkpoint_every",
               "n_range", "density", "load_range", "moving_avg_window"}
_PATH_KEYS = {"network", "trace", "telemetry", "checkpoint", "out"}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    band_name: str = "2g4"
    env: NeighborhoodModel = field(default_factory=NeighborhoodModel.threshold)
    noise: object = None  # NoiseSpec or None
    train: TrainConfig = None
    paths: dict = field(default_factory=dict)


def _need(doc, where, keys):
    if not isinstance(doc, dict):
        raise FormatError(f"{where}: expected an object")
    unknown = set(doc) - keys
    if unknown:
        raise FormatError(f"{where}: unknown key {sorted(unknown)[0]!r}")


def _typed(doc, where, key, kinds, default):
    val = doc.get(key, default)
    if val is None and default is None:
        return val
    if kinds is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kinds) or isinstance(val, bool):
        raise FormatError(f"{where}.{key}: expected {getattr(kinds, '__name__', kinds)}, got {type(val).__name__}")
    return val


def _pair(doc, where, key, kind, default):
    val = doc.get(key, default)
    if isinstance(val, tuple):
        return val
    if not isinstance(val, list) or len(val) != 2 or not all(isinstance(v, kind) and not isinstance(v, bool) for v in val):
        raise FormatError(f"{where}.{key}: expected a two-element list")
    return (val[0], val[1])


def parse_run_config(doc, where="run config"):
    """Validate a plain-dict master configuration; unknown keys are rejected."""
    _need(doc, where, _TOP_KEYS)
    seed = _typed(doc, where, "seed", int, 0)
    band_name = _typed(doc, where, "band", str, "2g4")
    band_from_name(band_name)

    ndoc = doc.get("neighborhood", {})
    _need(ndoc, f"{where}.neighborhood", _NEIGH_KEYS)
    try:
        env = NeighborhoodModel(_typed(ndoc, f"{where}.neighborhood", "kind", str, "threshold"),
                                _typed(ndoc, f"{where}.neighborhood", "threshold_dbm", float, -82.0),
                                _typed(ndoc, f"{where}.neighborhood", "spread_db", float, 6.0))
    except ValidationError as e:
        raise FormatError(f"{where}.neighborhood: {e}") from None

    noise = None
    if doc.get("noise") is not None:
        sdoc = doc["noise"]
        _need(sdoc, f"{where}.noise", _NOISE_KEYS)
        try:
            noise = NoiseSpec(_typed(sdoc, f"{where}.noise", "mean_db", float, 0.0),
                              _typed(sdoc, f"{where}.noise", "std_db", float, 0.0),
                              _typed(sdoc, f"{where}.noise", "seed", int, 0))
        except ValidationError as e:
            raise FormatError(f"{where}.noise: {e}") from None

    tdoc = doc.get("train", {})
    _need(tdoc, f"{where}.train", _TRAIN_KEYS)
    tw = f"{where}.train"
    try:
        train = TrainConfig(
            iterations=_typed(tdoc, tw, "iterations", int, 50000),
            k_rollouts=_typed(tdoc, tw, "k_rollouts", int, 8),
            lr_initial=_typed(tdoc, tw, "lr_initial", float, 5e-3),
            lr_final=_typed(tdoc, tw, "lr_final", float, 5e-4),
            lr_decay_every=_typed(tdoc, tw, "lr_decay_every", int, 2000),
            batch_instances=_typed(tdoc, tw, "batch_instances", int, 1),
            eval_every=_typed(tdoc, tw, "eval_every", int, 5000),
            eval_set_size=_typed(tdoc, tw, "eval_set_size", int, 20),
            checkpoint_every=_typed(tdoc, tw, "checkpoint_every", int, 10000),
            seed=seed,
            band_name=band_name,
            n_range=_pair(tdoc, tw, "n_range", int, [3, 12]),
            density=_typed(tdoc, tw, "density", float, 1.0),
            load_range=_pair(tdoc, tw, "load_range", float, [0.05, 0.9]),
            env=env,
            moving_avg_window=_typed(tdoc, tw, "moving_avg_window", int, 100),
        )
    except ValidationError as e:
        raise FormatError(f"{where}.train: {e}") from None

    pdoc = doc.get("paths", {})
    _need(pdoc, f"{where}.paths", _PATH_KEYS)
    paths = {k: _typed(pdoc, f"{where}.paths", k, str, None) for k in sorted(pdoc)}
    return RunConfig(seed, band_name, env, noise, train, paths)


def run_config(path):
    """Parse and validate the JSON master configuration file."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: not valid JSON at line {e.lineno}: {e.msg}") from None
    return parse_run_config(doc, str(path))


def effective_config(cfg):
    """The fully-defaulted plain-dict form; re-parsing it reproduces cfg."""
    doc = {
        "seed": cfg.seed,
        "band": cfg.band_name,
        "neighborhood": {"kind": cfg.env.kind, "threshold_dbm": cfg.env.threshold_dbm,
                         "spread_db": cfg.env.spread_db},
        "noise": None if cfg.noise is None else {"mean_db": cfg.noise.mean_db,
                                                 "std_db": cfg.noise.std_db,
                                                 "seed": cfg.noise.seed},
        "train": {
            "iterations": cfg.train.iterations,
            "k_rollouts": cfg.train.k_rollouts,
            "lr_initial": cfg.train.lr_initial,
            "lr_final": cfg.train.lr_final,
            "lr_decay_every": cfg.train.lr_decay_every,
            "batch_instances": cfg.train.batch_instances,
            "eval_every": cfg.train.eval_every,
            "eval_set_size": cfg.train.eval_set_size,
            "checkpoint_every": cfg.train.checkpoint_every,
            "n_range": list(cfg.train.n_range),
            "density": cfg.train.density,
            "load_range": list(cfg.train.load_range),
            "moving_avg_window": cfg.train.moving_avg_window,
        },
        "paths": dict(cfg.paths),
    }
    return doc


def write_effective_config(cfg, path):
    with open(path, "w") as f:
        json.dump(effective_config(cfg), f, indent=1)
        f.write("\n")
