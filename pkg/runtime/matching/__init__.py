"""Serial-section reconstruction: size statistics, assignment, chains and depth."""

from runtime.matching.assignment import CostStructure, build_cost_matrix, solve_assignment
from runtime.matching.chains import link_chains, match_stack
from runtime.matching.cloud import Reconstruction, reconstruct
from runtime.matching.depth import estimate_centroid
from runtime.matching.sizes import compute_size_stats

__all__ = [
    "CostStructure",
    "Reconstruction",
    "build_cost_matrix",
    "compute_size_stats",
    "estimate_centroid",
    "link_chains",
    "match_stack",
    "reconstruct",
    "solve_assignment",
]
