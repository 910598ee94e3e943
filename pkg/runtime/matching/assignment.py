"""Constrained one-to-one matching between two adjacent sections.

A pair (a, b) is a candidate only if both cells share a type label and their
planar distance is within ``tol_t = kappa * max(R_t_max, delta_z)``. Leaving a
cell unmatched costs its own ``tol_t``, so the solved objective is

    sum(pair costs) + sum(tol of unmatched A cells) + sum(tol of unmatched B cells)

Each connected component of the candidate graph is solved exactly as an
augmented square assignment problem (dummy rows/columns carry the unmatched
penalties). Equal-objective optima are broken toward the lowest
``(cost, id_A, id_B)`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from contracts.cells import MatchPair, MatchResult, SectionTable, SizeStats
from contracts.errors import InvalidInputError


@dataclass(frozen=True)
class CostStructure:
    """Sparse candidate costs between sections A and B.

    Cells are held in canonical (sorted ``cell_id``) order; ``rows``/``cols``
    index into ``ids_a``/``ids_b``.
    """

    ids_a: tuple[str, ...]
    ids_b: tuple[str, ...]
    tol_a: np.ndarray
    tol_b: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    costs: np.ndarray
    delta_z: float
    _by_row: dict[int, list[tuple[int, float]]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for r, c, cost in zip(self.rows.tolist(), self.cols.tolist(), self.costs.tolist()):
            self._by_row.setdefault(r, []).append((c, cost))

    @property
    def n_candidates(self) -> int:
        return int(self.costs.size)

    def candidates(self, cell_id: str) -> list[tuple[str, float]]:
        """In-tolerance B partners of an A cell, as ``(id_b, cost)`` sorted by id."""
        row = self.ids_a.index(cell_id)
        return [(self.ids_b[c], cost) for c, cost in sorted(self._by_row.get(row, []))]

    def dense(self) -> np.ndarray:
        """Full |A|×|B| matrix with ``inf`` for forbidden pairs."""
        out = np.full((len(self.ids_a), len(self.ids_b)), np.inf)
        out[self.rows, self.cols] = self.costs
        return out


def tolerance(stats: SizeStats, type_label: str, delta_z: float, kappa: float = 1.0) -> float:
    return kappa * max(stats.for_type(type_label).max_radius, delta_z)


def build_cost_matrix(
    section_a: SectionTable,
    section_b: SectionTable,
    stats: SizeStats,
    delta_z: float,
    kappa: float = 1.0,
) -> CostStructure:
    """Candidate pairs with planar Euclidean cost, restricted by type and tolerance."""
    if delta_z <= 0 or kappa <= 0:
        raise InvalidInputError("delta_z and kappa must be > 0")
    cells_a = sorted(section_a.cells, key=lambda c: c.cell_id)
    cells_b = sorted(section_b.cells, key=lambda c: c.cell_id)
    tol_a = np.array([tolerance(stats, c.type_label, delta_z, kappa) for c in cells_a])
    tol_b = np.array([tolerance(stats, c.type_label, delta_z, kappa) for c in cells_b])

    rows: list[int] = []
    cols: list[int] = []
    costs: list[float] = []
    for t in sorted({c.type_label for c in cells_a} & {c.type_label for c in cells_b}):
        ia = [n for n, c in enumerate(cells_a) if c.type_label == t]
        ib = [n for n, c in enumerate(cells_b) if c.type_label == t]
        xy_a = np.array([[cells_a[n].x, cells_a[n].y] for n in ia])
        xy_b = np.array([[cells_b[n].x, cells_b[n].y] for n in ib])
        tol = tol_a[ia[0]]
        # widen the tree query slightly; the exact test below decides
        hits = cKDTree(xy_b).query_ball_point(xy_a, tol * (1 + 1e-9) + 1e-12)
        for local_a, found in enumerate(hits):
            for local_b in sorted(found):
                d = float(np.hypot(*(xy_a[local_a] - xy_b[local_b])))
                if d <= tol:
                    rows.append(ia[local_a])
                    cols.append(ib[local_b])
                    costs.append(d)

    return CostStructure(
        ids_a=tuple(c.cell_id for c in cells_a),
        ids_b=tuple(c.cell_id for c in cells_b),
        tol_a=tol_a,
        tol_b=tol_b,
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        costs=np.asarray(costs, dtype=float),
        delta_z=delta_z,
    )


def _augmented(
    rows: np.ndarray, cols: np.ndarray, costs: np.ndarray, tol_a: np.ndarray, tol_b: np.ndarray
) -> np.ndarray:
    """Square matrix with dummy rows/columns carrying the unmatched penalties."""
    n_a, n_b = tol_a.size, tol_b.size
    size = n_a + n_b
    M = np.full((size, size), np.inf)
    M[rows, cols] = costs
    M[np.arange(n_a), n_b + np.arange(n_a)] = tol_a  # A cell left unmatched
    M[n_a + np.arange(n_b), np.arange(n_b)] = tol_b  # B cell left unmatched
    M[n_a:, n_b:] = 0.0
    return M


def _optimum(M: np.ndarray) -> float:
    r, c = linear_sum_assignment(M)
    return float(M[r, c].sum())


def _force(M: np.ndarray, i: int, j: int) -> np.ndarray:
    out = M.copy()
    keep = out[i, j]
    out[i, :] = np.inf
    out[:, j] = np.inf
    out[i, j] = keep
    return out


def _solve_component(
    rows: np.ndarray, cols: np.ndarray, costs: np.ndarray, tol_a: np.ndarray, tol_b: np.ndarray
) -> list[tuple[int, int]]:
    """Exact augmented assignment on local indices; returns matched (row, col) pairs.

    Among optima of equal objective the pair set is chosen greedily in
    ``(cost, row, col)`` order: a candidate is fixed when some optimum still
    contains it, otherwise it is forbidden. Local indices follow sorted cell
    ids, so this is the ``(cost, id_A, id_B)`` order.
    """
    M = _augmented(rows, cols, costs, tol_a, tol_b)
    best = _optimum(M)
    slack = 1e-9 * max(1.0, abs(best))
    chosen: list[tuple[int, int]] = []
    for e in np.lexsort((cols, rows, costs)):
        i, j = int(rows[e]), int(cols[e])
        if not np.isfinite(M[i, j]):
            continue
        trial = _force(M, i, j)
        if _optimum(trial) <= best + slack:
            M = trial
            chosen.append((i, j))
        else:
            M[i, j] = np.inf
    return chosen


def solve_assignment(costs: CostStructure) -> MatchResult:
    """Minimum-objective one-to-one matching with unmatched penalties."""
    n_a, n_b = len(costs.ids_a), len(costs.ids_b)
    pairs: list[tuple[int, int]] = []
    cost_of = {(r, c): v for r, c, v in zip(costs.rows.tolist(), costs.cols.tolist(), costs.costs.tolist())}
    if costs.n_candidates:
        graph = coo_matrix(
            (np.ones(costs.n_candidates), (costs.rows, n_a + costs.cols)),
            shape=(n_a + n_b, n_a + n_b),
        )
        _, comp = connected_components(graph, directed=False)
        for label in np.unique(comp[costs.rows]):
            a_idx = np.flatnonzero(comp[:n_a] == label)
            b_idx = np.flatnonzero(comp[n_a:] == label)
            a_pos = {int(g): n for n, g in enumerate(a_idx)}
            b_pos = {int(g): n for n, g in enumerate(b_idx)}
            sel = comp[costs.rows] == label
            local = _solve_component(
                np.array([a_pos[int(r)] for r in costs.rows[sel]], dtype=np.int64),
                np.array([b_pos[int(c)] for c in costs.cols[sel]], dtype=np.int64),
                costs.costs[sel],
                costs.tol_a[a_idx],
                costs.tol_b[b_idx],
            )
            pairs.extend((int(a_idx[i]), int(b_idx[j])) for i, j in local)

    pairs.sort()
    matched_a = {i for i, _ in pairs}
    matched_b = {j for _, j in pairs}
    unmatched_a = [n for n in range(n_a) if n not in matched_a]
    unmatched_b = [n for n in range(n_b) if n not in matched_b]
    pair_models = [MatchPair(id_a=costs.ids_a[i], id_b=costs.ids_b[j], cost=cost_of[(i, j)]) for i, j in pairs]
    objective = (
        sum(p.cost for p in pair_models)
        + float(costs.tol_a[unmatched_a].sum())
        + float(costs.tol_b[unmatched_b].sum())
    )
    return MatchResult(
        pairs=pair_models,
        unmatched_a=[costs.ids_a[n] for n in unmatched_a],
        unmatched_b=[costs.ids_b[n] for n in unmatched_b],
        delta_z=costs.delta_z,
        objective=objective,
    )
