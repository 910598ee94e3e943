"""Stack → sparse 3D point cloud."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from contracts.cells import CellChain, MatchResult, Point3D, SectionTable, SizeStats
from runtime.matching.chains import link_chains, match_stack
from runtime.matching.depth import estimate_centroid
from runtime.matching.sizes import DEFAULT_MIN_COUNT, compute_size_stats


@dataclass(frozen=True)
class Reconstruction:
    stats: SizeStats
    matches: list[MatchResult]
    chains: list[CellChain]
    points: list[Point3D]

    @property
    def n_shared(self) -> int:
        return sum(1 for c in self.chains if len(c.members) >= 2)

    @property
    def n_split(self) -> int:
        return sum(1 for c in self.chains if c.flagged_split)


def reconstruct(
    stack: Sequence[SectionTable],
    delta_z: float,
    kappa: float = 1.0,
    min_count: int = DEFAULT_MIN_COUNT,
    split_long: bool = True,
    stats: SizeStats | None = None,
) -> Reconstruction:
    """Size statistics, matching, chains and one centroid per chain.

    Size statistics default to those of the stack itself.
    """
    stats = stats or compute_size_stats((c for s in stack for c in s.cells), min_count)
    matches = match_stack(stack, stats, delta_z, kappa)
    chains = link_chains(stack, stats, delta_z, kappa, split_long, matches=matches)
    points = [estimate_centroid(chain, delta_z) for chain in chains]
    return Reconstruction(stats=stats, matches=matches, chains=chains, points=points)
