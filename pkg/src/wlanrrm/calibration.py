"""Threshold calibration: fit the sensing threshold to measured busy fractions.

Telemetry snapshots carry each AP's neighbor RSSIs, offered load, current
assignment, and the busy fraction it measured. A grid search over candidate
thresholds picks the one whose reconstructed busy fractions best match the
measurements (similarity = negative mean squared error).
"""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .environment import busy_fraction
from .errors import FormatError, ValidationError
from .seeds import TAG_TELEMETRY, spawn
from .topology import ChannelAssignment, occupied_set

DEFAULT_GRID = (-95.0, -60.0, 0.5)

TELEMETRY_COLUMNS = ["timestamp", "ap_id", "load", "busy", "block_start", "width", "neighbors"]


@dataclass(frozen=True)
class TelemetryRecord:
    timestamp: int
    ap_id: str
    neighbor_rssi: dict  # neighbor ap_id -> dBm as sensed by this AP
    measured_busy: float
    load: float
    assignment: ChannelAssignment

    def __post_init__(self):
        if not 0.0 <= self.measured_busy <= 1.0:
            raise ValidationError(f"measured_busy {self.measured_busy} outside [0, 1]")
        if not 0.0 <= self.load <= 1.0:
            raise ValidationError(f"load {self.load} outside [0, 1]")


@dataclass(frozen=True)
class CalibrationResult:
    best_threshold_dbm: float
    curve: tuple  # ((threshold, similarity), ...) thresholds strictly increasing
    n_records: int  # records actually scored
    n_skipped: int  # records dropped for missing neighbor context


def _grid_points(grid):
    lo, hi, step = grid
    if not (lo < hi and step > 0):
        raise ValidationError(f"grid must satisfy lo < hi and step > 0, got {grid}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def fit_threshold(records, grid=DEFAULT_GRID):
    """Grid-search the threshold maximizing simulator/measurement similarity.

    Each record's busy fraction is reconstructed from its own neighbor RSSIs
    and the loads/assignments its neighbors reported at the same timestamp.
    Records naming a neighbor with no record at that timestamp are skipped
    (counted, warned). Similarity ties break toward the grid midpoint, then
    toward the lower threshold.
    """
    if not records:
        raise ValidationError("fit_threshold needs at least one record")
    thresholds = _grid_points(grid)
    by_ts = {}
    for rec in records:
        by_ts.setdefault(rec.timestamp, {})[rec.ap_id] = rec

    contribs = []  # per-record squared errors; fsum keeps the curve order-invariant
    n_skipped = 0
    for rec in records:
        group = by_ts[rec.timestamp]
        try:
            ctx = [group[nid] for nid in rec.neighbor_rssi]
        except KeyError:
            n_skipped += 1
            continue
        own = occupied_set(rec.assignment)
        eff = np.array([n.load if own & occupied_set(n.assignment) else 0.0 for n in ctx])
        rssi = np.array([rec.neighbor_rssi[n.ap_id] for n in ctx])
        if len(ctx):
            b = np.minimum(1.0, ((rssi[None, :] >= thresholds[:, None]) * eff[None, :]).sum(axis=1))
        else:
            b = np.zeros(thresholds.shape[0])
        contribs.append((b - rec.measured_busy) ** 2)
    if n_skipped:
        warnings.warn(f"skipped {n_skipped} telemetry records with missing neighbor context")
    if not contribs:
        raise ValidationError("no usable records: every record lacked neighbor context")
    n_used = len(contribs)
    per_threshold = np.array(contribs).T
    similarity = -np.array([math.fsum(col) for col in per_threshold]) / n_used
    best_sim = similarity.max()
    mid = (grid[0] + grid[1]) / 2.0
    ties = [float(t) for t, s in zip(thresholds, similarity) if s == best_sim]
    best = min(ties, key=lambda t: (abs(t - mid), t))
    curve = tuple((float(t), float(s)) for t, s in zip(thresholds, similarity))
    return CalibrationResult(best, curve, n_used, n_skipped)


def _parse_neighbors(text):
    out = {}
    if text.strip() == "":
        return out
    for part in text.split(";"):
        nid, _, val = part.partition(":")
        if not nid or not val:
            raise ValueError(f"bad neighbor entry {part!r}")
        out[nid.strip()] = float(val)
    return out


def load_telemetry(path):
    """Read telemetry CSV; any malformed row fails the load with its line number."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        warnings.warn(f"{path}: empty telemetry file")
        return []
    if rows[0] != TELEMETRY_COLUMNS:
        raise FormatError(f"{path}: expected header {','.join(TELEMETRY_COLUMNS)}")
    records = []
    bad = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            if len(row) != len(TELEMETRY_COLUMNS):
                raise ValueError(f"expected {len(TELEMETRY_COLUMNS)} fields, found {len(row)}")
            ts, ap_id, load, busy, start, width, neigh = row
            records.append(TelemetryRecord(int(ts), ap_id, _parse_neighbors(neigh),
                                           float(busy), float(load),
                                           ChannelAssignment(int(start), int(width))))
        except (ValueError, ValidationError) as exc:
            bad.append(f"line {lineno} ({exc})")
    if bad:
        raise FormatError(f"{path}: {len(bad)} malformed rows: " + "; ".join(bad[:5]))
    if not records:
        warnings.warn(f"{path}: telemetry file has a header but no rows")
    return records


def save_telemetry(records, path):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(TELEMETRY_COLUMNS)
        for r in records:
            neigh = ";".join(f"{nid}:{repr(v)}" for nid, v in r.neighbor_rssi.items())
            wr.writerow([r.timestamp, r.ap_id, repr(r.load), repr(r.measured_busy),
                         r.assignment.block_start, r.assignment.width, neigh])


def synth_telemetry(net, cfg, true_model, sigma_busy=0.0, n_samples=1, seed=0):
    """Telemetry a fleet would report if the true world matched `true_model`.

    measured_busy = simulated busy + N(0, sigma_busy^2), clamped to [0, 1];
    loads and assignments are held fixed across samples.
    """
    if sigma_busy < 0:
        raise ValidationError("sigma_busy must be >= 0")
    cfg.require_valid(net.band, net.n_aps)
    b = busy_fraction(net, cfg, true_model)
    rng = spawn(seed, TAG_TELEMETRY)
    ids = [f"ap{i}" for i in range(net.n_aps)]
    records = []
    for s in range(n_samples):
        noise = rng.normal(0.0, sigma_busy, size=net.n_aps) if sigma_busy > 0 else np.zeros(net.n_aps)
        measured = np.clip(b + noise, 0.0, 1.0)
        for i in range(net.n_aps):
            neigh = {ids[j]: float(net.rssi[i, j]) for j in range(net.n_aps) if j != i}
            records.append(TelemetryRecord(s, ids[i], neigh, float(measured[i]),
                                           float(net.load[i]), cfg.assignments[i]))
    return records
