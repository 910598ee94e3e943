"""Chain formation across a serial stack."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from contracts.cells import CellChain, CellRecord, MatchResult, SectionTable, SizeStats
from contracts.errors import InvalidInputError
from runtime.matching.assignment import build_cost_matrix, solve_assignment


def _ordered_stack(stack: Sequence[SectionTable], delta_z: float) -> list[SectionTable]:
    """Sections sorted by depth; gaps must be whole multiples of *delta_z* (missing sections are empty)."""
    if delta_z <= 0:
        raise InvalidInputError("delta_z must be > 0")
    ordered = sorted(stack, key=lambda s: s.z)
    steps = np.diff([s.z for s in ordered]) / delta_z
    if steps.size and not (np.allclose(steps, np.round(steps), rtol=0, atol=1e-9) and np.all(np.round(steps) >= 1)):
        raise InvalidInputError(f"section depths are not on a delta_z={delta_z} grid")
    return ordered


def _adjacent(a: SectionTable, b: SectionTable, delta_z: float) -> bool:
    return abs((b.z - a.z) - delta_z) <= 1e-9 * max(1.0, delta_z)


def match_stack(
    stack: Sequence[SectionTable], stats: SizeStats, delta_z: float, kappa: float = 1.0
) -> list[MatchResult]:
    """Solve the assignment between every pair of adjacent sections, top to bottom.

    Sections separated by an empty (absent) section are not matched.
    """
    ordered = _ordered_stack(stack, delta_z)
    return [
        solve_assignment(build_cost_matrix(a, b, stats, delta_z, kappa))
        for a, b in zip(ordered, ordered[1:])
        if _adjacent(a, b, delta_z)
    ]


def max_chain_length(stats: SizeStats, type_label: str, delta_z: float) -> int:
    """Longest plausible chain: ceil(2 R_t_max / dz) + 1 sections."""
    return math.ceil(2.0 * stats.for_type(type_label).max_radius / delta_z) + 1


def _split(chain: CellChain, limit: int) -> list[CellChain]:
    if len(chain.members) <= limit:
        return [chain]
    cut = int(np.argmax(chain.link_costs)) + 1
    head = CellChain(
        members=chain.members[:cut], link_costs=chain.link_costs[: cut - 1], flagged_split=True
    )
    tail = CellChain(
        members=chain.members[cut:], link_costs=chain.link_costs[cut:], flagged_split=True
    )
    return _split(head, limit) + _split(tail, limit)


def link_chains(
    stack: Sequence[SectionTable],
    stats: SizeStats,
    delta_z: float,
    kappa: float = 1.0,
    split_long: bool = True,
    matches: list[MatchResult] | None = None,
) -> list[CellChain]:
    """Merge adjacent-section matches into chains; every cell lands in exactly one chain.

    Chains longer than :func:`max_chain_length` are cut at their most
    expensive link (repeatedly) and the pieces flagged.
    """
    ordered = _ordered_stack(stack, delta_z)
    if matches is None:
        matches = match_stack(ordered, stats, delta_z, kappa)

    cells: list[CellRecord] = [c for s in ordered for c in sorted(s.cells, key=lambda c: c.cell_id)]
    index = {c.cell_id: n for n, c in enumerate(cells)}
    if len(index) != len(cells):
        raise InvalidInputError("cell_id values must be unique across the stack")

    link_cost: dict[tuple[int, int], float] = {}
    for result in matches:
        for p in result.pairs:
            link_cost[(index[p.id_a], index[p.id_b])] = p.cost

    n = len(cells)
    if link_cost:
        src, dst = zip(*link_cost)
        graph = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    else:
        graph = coo_matrix((n, n))
    _, comp = connected_components(graph, directed=False)

    groups: dict[int, list[int]] = {}
    for node, label in enumerate(comp):
        groups.setdefault(int(label), []).append(node)

    chains: list[CellChain] = []
    for nodes in groups.values():
        nodes.sort(key=lambda k: (cells[k].z, cells[k].cell_id))
        members = tuple(cells[k] for k in nodes)
        costs = tuple(link_cost[(a, b)] for a, b in zip(nodes, nodes[1:]))
        chain = CellChain(members=members, link_costs=costs)
        if split_long:
            chains.extend(_split(chain, max_chain_length(stats, chain.type_label, delta_z)))
        else:
            chains.append(chain)
    chains.sort(key=lambda ch: (ch.members[0].z, ch.members[0].cell_id))
    return chains
