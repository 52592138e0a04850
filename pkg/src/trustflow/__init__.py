"""Trust-aware multipath flow allocation for ad hoc networks.

Combines behavioral evidence with social-network trust, checks identities
through a voucher-based spoofing metric, allocates flow over trusted paths
by dual decomposition, and simulates the whole pipeline on mobile networks.
"""

from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # source checkout
    __version__ = "0.1.0"

from ._kernels import BACKEND
from .allocation import (AllocationProblem, FlowAllocation, SourceFlows, solve_centralized_reference,
                         solve_distributed)
from .config import ScenarioConfig, load_config, load_profile
from .errors import (ConfigError, ConvergenceError, DomainError, FormatError, IngestError,
                     InputError, TrustflowError, UndefinedTrustError)
from .identity import VoucherGraph, compute_ism, path_spoof_probability
from .network import Topology, admissible_paths, build_topology, discover_paths, path_trust
from .simulation import parameter_sweep, run_simulation
from .trust import (CombinedTrustState, EvidenceRecord, behavioral_trust, map_combined_trust,
                    social_trust, wallpost_trust)

__all__ = [
    "BACKEND", "AllocationProblem", "CombinedTrustState", "ConfigError", "ConvergenceError",
    "DomainError", "EvidenceRecord", "FlowAllocation", "FormatError", "IngestError", "InputError",
    "ScenarioConfig", "SourceFlows", "Topology", "TrustflowError", "UndefinedTrustError",
    "VoucherGraph", "admissible_paths", "behavioral_trust", "build_topology", "compute_ism",
    "discover_paths", "load_config", "load_profile", "map_combined_trust", "parameter_sweep",
    "path_spoof_probability", "path_trust", "run_simulation", "social_trust",
    "solve_centralized_reference", "solve_distributed", "wallpost_trust",
]
