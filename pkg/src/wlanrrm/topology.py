"""Networks, bands, bonded channel blocks, and the per-AP action space.

A band exposes a number of non-overlapping base channels (4 on 2.4 GHz,
20 on 5 GHz) and a set of bonding widths. An assignment is a width-aligned
block of base channels; the interference model only ever looks at the
occupied set, so the primary channel position inside a block is not modeled.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .seeds import TAG_NETWORK, spawn

RSSI_MIN_DBM = -110.0
RSSI_MAX_DBM = 0.0

# Synthetic path-loss rule: -40 dBm at the 0.01 reference distance, 35 dB per
# decade, clamped into [-110, -40]. Fixed constants for reproducibility.
PATHLOSS_REF_DBM = -40.0
PATHLOSS_REF_DIST = 0.01
PATHLOSS_DB_PER_DECADE = 35.0
PATHLOSS_FLOOR_DBM = -110.0


@dataclass(frozen=True)
class Band:
    name: str
    base_channels: int
    allowed_widths: tuple

    def __post_init__(self):
        if self.base_channels < 1:
            raise ValidationError(f"band {self.name}: base_channels must be >= 1")
        widths = tuple(sorted(set(int(w) for w in self.allowed_widths)))
        object.__setattr__(self, "allowed_widths", widths)
        if not widths:
            raise ValidationError(f"band {self.name}: needs at least one allowed width")
        for w in widths:
            if w < 1 or w > self.base_channels or self.base_channels % w != 0:
                raise ValidationError(f"band {self.name}: width {w} does not divide {self.base_channels} channels")

    @property
    def max_width(self):
        return self.allowed_widths[-1]


BAND_2G4 = Band("2g4", 4, (1, 2))
BAND_5G = Band("5g", 20, (1, 2, 4))

_NAMED_BANDS = {b.name: b for b in (BAND_2G4, BAND_5G)}


def band_from_name(name):
    try:
        return _NAMED_BANDS[name]
    except KeyError:
        raise FormatError(f"unknown band {name!r}; expected one of {sorted(_NAMED_BANDS)}") from None


@dataclass(frozen=True)
class ChannelAssignment:
    block_start: int  # 1-based index of the first occupied base channel
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValidationError(f"width must be >= 1, got {self.width}")
        if self.block_start < 1:
            raise ValidationError(f"block_start must be >= 1, got {self.block_start}")
        if (self.block_start - 1) % self.width != 0:
            raise ValidationError(f"block ({self.block_start}, {self.width}) is not width-aligned")

    def valid_for(self, band):
        return (
            self.width in band.allowed_widths
            and self.block_start + self.width - 1 <= band.base_channels
        )

    def require_valid(self, band):
        if not self.valid_for(band):
            raise ValidationError(f"assignment ({self.block_start}, {self.width}) invalid for band {band.name}")


def occupied_set(a):
    """Base channels covered by an assignment's bonded block."""
    return set(range(a.block_start, a.block_start + a.width))


def channel_mask(a, band):
    """Occupied set as a boolean vector over the band's base channels."""
    m = np.zeros(band.base_channels, dtype=bool)
    m[a.block_start - 1 : a.block_start - 1 + a.width] = True
    return m


def action_space(band):
    """All width-aligned assignments, ordered by (width, block_start)."""
    actions = []
    for w in band.allowed_widths:
        for start in range(1, band.base_channels + 1, w):
            actions.append(ChannelAssignment(start, w))
    return actions


class Network:
    """Ground-truth state of an AP fleet: pairwise RSSI plus offered load.

    rssi[i, j] is the signal AP i receives from AP j, in dBm; the diagonal is
    ignored by every computation. load[i] is the offered airtime fraction of
    AP i. Instances are immutable after construction.
    """

    def __init__(self, band, rssi, load, positions=None):
        rssi = np.array(rssi, dtype=np.float64)
        load = np.array(load, dtype=np.float64)
        n = load.shape[0] if load.ndim == 1 else -1
        if load.ndim != 1 or n < 1:
            raise ValidationError("load must be a non-empty 1-d vector")
        if rssi.shape != (n, n):
            raise ValidationError(f"rssi shape {rssi.shape} does not match {n} APs")
        if np.any(load < 0.0) or np.any(load > 1.0):
            raise ValidationError("load entries must lie in [0, 1]")
        if not np.all((rssi >= RSSI_MIN_DBM) & (rssi <= RSSI_MAX_DBM)):
            raise ValidationError(f"rssi entries must lie in [{RSSI_MIN_DBM}, {RSSI_MAX_DBM}] dBm")
        if positions is not None:
            positions = np.array(positions, dtype=np.float64)
            if positions.shape != (n, 2):
                raise ValidationError(f"positions shape {positions.shape} does not match {n} APs")
            positions.flags.writeable = False
        rssi.flags.writeable = False
        load.flags.writeable = False
        self.band = band
        self.rssi = rssi
        self.load = load
        self.positions = positions

    @property
    def n_aps(self):
        return self.load.shape[0]

    def with_load(self, load):
        """Same topology (band, rssi, positions) under a different load vector."""
        return Network(self.band, self.rssi, load, self.positions)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        pos_eq = (self.positions is None) == (other.positions is None) and (
            self.positions is None or np.array_equal(self.positions, other.positions)
        )
        return (
            self.band == other.band
            and np.array_equal(self.rssi, other.rssi)
            and np.array_equal(self.load, other.load)
            and pos_eq
        )

    def __repr__(self):
        return f"Network(band={self.band.name}, n_aps={self.n_aps})"


@dataclass(frozen=True)
class ChannelConfig:
    assignments: tuple

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))

    def __len__(self):
        return len(self.assignments)

    def __getitem__(self, i):
        return self.assignments[i]

    def require_valid(self, band, n_aps):
        if len(self.assignments) != n_aps:
            raise ValidationError(f"config has {len(self.assignments)} assignments for {n_aps} APs")
        for a in self.assignments:
            a.require_valid(band)

    def widths(self):
        return np.array([a.width for a in self.assignments], dtype=np.float64)


def config_masks(cfg, band):
    """Boolean occupancy matrix (n_aps x base_channels) for a joint config."""
    return np.array([channel_mask(a, band) for a in cfg.assignments], dtype=bool)


def network_to_doc(net):
    """Plain-dict form of a network (the JSON topology schema)."""
    doc = {
        "band": net.band.name,
        "n_aps": net.n_aps,
        "rssi": [[float(v) for v in row] for row in net.rssi],
        "load": [float(v) for v in net.load],
    }
    if net.positions is not None:
        doc["positions"] = [[float(x), float(y)] for x, y in net.positions]
    return doc


def network_from_doc(doc, where):
    """Validate a plain-dict network; `where` names the source in errors."""
    if not isinstance(doc, dict):
        raise FormatError(f"{where}: network must be an object")
    for field in ("band", "n_aps", "rssi", "load"):
        if field not in doc:
            raise FormatError(f"{where}: missing field {field!r}")
    unknown = set(doc) - {"band", "n_aps", "rssi", "load", "positions"}
    if unknown:
        raise FormatError(f"{where}: unknown fields {sorted(unknown)}")
    band = band_from_name(doc["band"])
    n = doc["n_aps"]
    if not isinstance(n, int) or n < 1:
        raise FormatError(f"{where}: field 'n_aps' must be a positive integer")
    try:
        rssi = np.array(doc["rssi"], dtype=np.float64)
        load = np.array(doc["load"], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise FormatError(f"{where}: non-numeric or ragged array field ({e})") from None
    if rssi.shape != (n, n):
        raise FormatError(f"{where}: field 'rssi' has shape {rssi.shape}, expected ({n}, {n})")
    if load.shape != (n,):
        raise FormatError(f"{where}: field 'load' has shape {load.shape}, expected ({n},)")
    positions = doc.get("positions")
    try:
        return Network(band, rssi, load, positions)
    except ValidationError as e:
        raise FormatError(f"{where}: {e}") from None


def save_network(net, path):
    """Write a network to the JSON topology format (see README for the schema)."""
    with open(path, "w") as f:
        json.dump(network_to_doc(net), f, indent=1)
        f.write("\n")


def load_network(path):
    """Read a network from the JSON topology format, validating every field."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: not valid JSON at line {e.lineno}: {e.msg}") from None
    return network_from_doc(doc, str(path))


def pathloss_rssi(distances):
    """Log-distance path loss, vectorized over a distance array."""
    d = np.maximum(np.asarray(distances, dtype=np.float64), PATHLOSS_REF_DIST)
    rssi = PATHLOSS_REF_DBM - PATHLOSS_DB_PER_DECADE * np.log10(d / PATHLOSS_REF_DIST)
    return np.clip(rssi, PATHLOSS_FLOOR_DBM, PATHLOSS_REF_DBM)


def random_network(n_aps, band, density=1.0, seed=0, jitter_db=0.0, load_range=(0.05, 0.9)):
    """Synthetic network: APs uniform in the unit square, log-distance RSSI.

    density scales all pairwise distances down by its value, so density -> inf
    collapses the fleet to a single point (all RSSI at the zero-distance clamp).
    jitter_db adds a symmetric per-pair Gaussian perturbation to the RSSI.
    """
    if n_aps < 1:
        raise ValidationError("n_aps must be >= 1")
    if density <= 0:
        raise ValidationError("density must be > 0")
    rng = spawn(seed, TAG_NETWORK)
    pos = rng.uniform(0.0, 1.0, size=(n_aps, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2)) / density
    rssi = pathloss_rssi(dist)
    lo, hi = load_range
    load = rng.uniform(lo, hi, size=n_aps)
    if jitter_db > 0.0:
        noise = rng.normal(0.0, jitter_db, size=(n_aps, n_aps))
        noise = np.triu(noise, 1)
        rssi = np.clip(rssi + noise + noise.T, RSSI_MIN_DBM, PATHLOSS_REF_DBM)
    np.fill_diagonal(rssi, PATHLOSS_REF_DBM)
    return Network(band, rssi, load, positions=pos)

def random_mesh_network(n_aps, band, rssi_range=(-90.0, -70.0), seed=0, load_range=(0.05, 0.9)):
    """Synthetic network with symmetric uniform RSSIs instead of geometry.

    Handy for interference-limited studies: the range brackets the sensing
    threshold, so every pair can land on either side of it.
    """
    if n_aps < 1:
        raise ValidationError("n_aps must be >= 1")
    lo, hi = rssi_range
    if not (RSSI_MIN_DBM <= lo <= hi <= RSSI_MAX_DBM):
        raise ValidationError(f"rssi_range must be ordered within [{RSSI_MIN_DBM}, {RSSI_MAX_DBM}]")
    rng = spawn(seed, TAG_NETWORK)
    draws = rng.uniform(lo, hi, size=(n_aps, n_aps))
    rssi = np.triu(draws, 1)
    rssi = rssi + rssi.T
    np.fill_diagonal(rssi, PATHLOSS_REF_DBM)
    load = rng.uniform(load_range[0], load_range[1], size=n_aps)
    return Network(band, rssi, load)
