"""Zero-touch WLAN radio-resource management at desk scale.

A fast CSMA airtime simulator for AP fleets, an actor-critic channel/bonding
agent in plain numpy, an exhaustive oracle and heuristic baselines, threshold
calibration against telemetry, observation-noise robustness sweeps, and a
closed-loop replay harness.
"""

__version__ = "0.1.0"

from .environment import (NeighborhoodModel, NoiseSpec, Observation, busy_fraction,
                          evaluate, neighbor_weight, observe)
from .errors import (CapacityError, CheckpointError, FormatError, NumericsError,
                     ValidationError)
from .topology import (BAND_2G4, BAND_5G, Band, ChannelAssignment, ChannelConfig,
                       Network, action_space, band_from_name, load_network,
                       random_mesh_network, random_network, save_network)

__all__ = [
    "__version__",
    "BAND_2G4", "BAND_5G", "Band", "ChannelAssignment", "ChannelConfig", "Network",
    "action_space", "band_from_name", "load_network", "random_mesh_network",
    "random_network", "save_network",
    "NeighborhoodModel", "NoiseSpec", "Observation", "busy_fraction", "evaluate",
    "neighbor_weight", "observe",
    "CapacityError", "CheckpointError", "FormatError", "NumericsError", "ValidationError",
]
