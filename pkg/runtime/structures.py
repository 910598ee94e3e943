"""Depth-aware analyses on a reconstructed point cloud."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from contracts.cells import Point3D, SectionTable
from contracts.errors import ContractViolation, InvalidInputError
from contracts.structures import (
    CellDistance,
    DistanceComparison,
    ProfileBin,
    ProfileValue,
    Structure3D,
)


# ── Components ──────────────────────────────────────────────────────


def _components(coords: np.ndarray, radius: float) -> np.ndarray:
    """Component label per point of the graph joining points within *radius*."""
    n = coords.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    pairs = cKDTree(coords).query_pairs(radius, output_type="ndarray")
    if len(pairs):
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    else:
        graph = coo_matrix((n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def principal_axis(coords: np.ndarray) -> np.ndarray:
    """Unit direction of largest variance; its largest-magnitude component is positive.

    Single points get the z axis.
    """
    if coords.shape[0] < 2:
        return np.array([0.0, 0.0, 1.0])
    centred = coords - coords.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    axis = vt[0]
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    return axis / np.linalg.norm(axis)


def _filter(cloud: Sequence[Point3D], type_filter: Sequence[str]) -> list[Point3D]:
    if not type_filter:
        return list(cloud)
    wanted = set(type_filter)
    return [p for p in cloud if p.type_label in wanted]


def build_structures(
    cloud: Sequence[Point3D], type_filter: Sequence[str], link_radius: float
) -> list[Structure3D]:
    """Connected components of the 3D radius graph over the filtered cells.

    Structures are numbered in order of their smallest member id. Each axis is
    the principal direction of the members, signed so that its largest-magnitude
    component is positive; arc length (``extent`` and profile bins) therefore
    increases along the dominant coordinate, e.g. towards +z for a vertical vessel.
    """
    if link_radius <= 0:
        raise InvalidInputError("link_radius must be > 0")
    points = sorted(_filter(cloud, type_filter), key=lambda p: p.cell_id)
    if not points:
        return []
    coords = np.array([p.xyz for p in points])
    labels = _components(coords, link_radius)

    groups: dict[int, list[int]] = defaultdict(list)
    for n, label in enumerate(labels):
        groups[int(label)].append(n)
    ordered = sorted(groups.values(), key=lambda idx: points[idx[0]].cell_id)

    out = []
    for sid, idx in enumerate(ordered):
        xyz = coords[idx]
        axis = principal_axis(xyz)
        origin = xyz.mean(axis=0)
        proj = (xyz - origin) @ axis
        out.append(
            Structure3D(
                structure_id=sid,
                type_filter=tuple(type_filter),
                member_ids=tuple(points[n].cell_id for n in idx),
                axis=tuple(float(v) for v in axis),
                origin=tuple(float(v) for v in origin),
                extent=(float(proj.min()), float(proj.max())),
            )
        )
    return out


def count_planar_components(
    sections: Sequence[SectionTable], type_filter: Sequence[str], link_radius: float
) -> dict[int, int]:
    """Number of 2D radius-graph components per section (filtered cells only)."""
    if link_radius <= 0:
        raise InvalidInputError("link_radius must be > 0")
    wanted = set(type_filter)
    out = {}
    for s in sections:
        xy = np.array([[c.x, c.y] for c in s.cells if not wanted or c.type_label in wanted]).reshape(-1, 2)
        labels = _components(xy, link_radius)
        out[s.section_index] = int(np.unique(labels).size)
    return out


# ── 2D vs 3D distances ──────────────────────────────────────────────


def _section_membership(cloud: Sequence[Point3D], sections: Sequence[SectionTable]) -> dict[str, set[int]]:
    """Sections each reconstructed point was observed in, via its member cross-sections."""
    section_of = {c.cell_id: s.section_index for s in sections for c in s.cells}
    out = {}
    for p in cloud:
        members = p.member_ids or (p.cell_id,)
        out[p.cell_id] = {section_of[m] for m in members if m in section_of}
    return out


def compare_distances(
    cloud: Sequence[Point3D],
    sections: Sequence[SectionTable],
    source_type: str,
    target_type: str | None = None,
    structures: Sequence[Structure3D] | None = None,
) -> DistanceComparison:
    """Nearest-target distance per source cell, within its own sections vs. in the volume.

    ``d2d`` searches only targets observed in a section the source was
    observed in, with the planar metric. ``d3d`` searches every target; pairs
    sharing a section keep their planar distance, all others use the 3D
    Euclidean distance. The target is a type or, with ``target_type=None``,
    the members of *structures*.
    """
    if target_type is None:
        if not structures:
            raise InvalidInputError("give a target type or a non-empty structure list")
        member_ids = {m for s in structures for m in s.member_ids}
        targets = [p for p in cloud if p.cell_id in member_ids]
        query = f"{source_type}->structures"
    else:
        targets = [p for p in cloud if p.type_label == target_type]
        query = f"{source_type}->{target_type}"
    sources = [p for p in cloud if p.type_label == source_type]
    if not sources or not targets:
        raise InvalidInputError(f"query {query} needs both source and target cells")

    membership = _section_membership(cloud, sections)
    t_xyz = np.array([p.xyz for p in targets])
    t_ids = np.array([p.cell_id for p in targets], dtype=object)
    by_section: dict[int, list[int]] = defaultdict(list)
    for n, p in enumerate(targets):
        for s in membership[p.cell_id]:
            by_section[s].append(n)

    rows = []
    for src in sorted(sources, key=lambda p: p.cell_id):
        not_self = t_ids != src.cell_id
        planar = np.hypot(t_xyz[:, 0] - src.x, t_xyz[:, 1] - src.y)
        full = np.linalg.norm(t_xyz - src.xyz, axis=1)
        shared = np.zeros(len(targets), dtype=bool)
        for s in membership[src.cell_id]:
            shared[by_section.get(s, [])] = True
        shared &= not_self
        metric = np.where(shared, planar, full)[not_self]
        d3d = float(metric.min()) if metric.size else None
        d2d = float(planar[shared].min()) if shared.any() else None
        rows.append(CellDistance(cell_id=src.cell_id, d2d=d2d, d3d=d3d, no_section_target=d2d is None))
    return DistanceComparison(query=query, cells=rows)


# ── Along-structure profiles ────────────────────────────────────────


def along_structure_profile(
    structure: Structure3D,
    cloud: Sequence[Point3D],
    band_radius: float,
    bins: int,
    value: ProfileValue = ProfileValue.COMPOSITION,
) -> list[ProfileBin]:
    """Bin cells within *band_radius* of the axis by arc length over the structure's extent.

    Bin 0 starts at ``extent[0]``, the low end of the signed axis (see
    :func:`build_structures`). Structures need at least 3 members and ``bins >= 2``
    (ContractViolation). A structure whose members all project to one point has
    zero extent and no arc to bin; it raises InvalidInputError rather than
    returning a single degenerate bin.
    """
    if len(structure.member_ids) < 3:
        raise ContractViolation(f"structure {structure.structure_id} has fewer than 3 members")
    if bins < 2:
        raise ContractViolation("bins must be >= 2")
    if band_radius <= 0:
        raise InvalidInputError("band_radius must be > 0")
    lo, hi = structure.extent
    if not hi > lo:
        raise InvalidInputError(f"structure {structure.structure_id} has zero extent")

    axis = np.asarray(structure.axis)
    origin = np.asarray(structure.origin)
    xyz = np.array([p.xyz for p in cloud]).reshape(-1, 3)
    rel = xyz - origin
    arc = rel @ axis
    perp = np.linalg.norm(rel - np.outer(arc, axis), axis=1)
    inside = (perp <= band_radius) & (arc >= lo) & (arc <= hi)

    edges = np.linspace(lo, hi, bins + 1)
    which = np.clip(np.searchsorted(edges, arc, side="right") - 1, 0, bins - 1)
    types = sorted({p.type_label for p, keep in zip(cloud, inside) if keep})
    width = (hi - lo) / bins

    out = []
    for b in range(bins):
        members = [p for p, keep, w in zip(cloud, inside, which) if keep and w == b]
        if value == ProfileValue.DENSITY:
            values = {"density": len(members) / width}
        else:
            counts = {t: 0 for t in types}
            for p in members:
                counts[p.type_label] += 1
            values = {t: (n / len(members) if members else 0.0) for t, n in counts.items()}
        out.append(
            ProfileBin(
                structure_id=structure.structure_id,
                bin=b,
                arc_lo=float(edges[b]),
                arc_hi=float(edges[b + 1]),
                count=len(members),
                values=values,
            )
        )
    return out


def default_link_radius(type_filter: Sequence[str], radii: dict[str, float]) -> float:
    """Twice the median equivalent radius of the structural types."""
    values = [radii[t] for t in (type_filter or sorted(radii)) if t in radii]
    if not values:
        raise InvalidInputError("no size statistics for the structural types")
    return 2.0 * float(np.median(values))
