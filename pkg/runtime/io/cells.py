"""Cell-table and point-cloud CSVs."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import pandas as pd
from pydantic import ValidationError

from contracts.cells import CellRecord, Point3D, Provenance, SectionTable
from contracts.errors import SchemaError
from contracts.evaluation import ReferenceCell, ReferenceStack
from runtime.evaluation import reference_from_sections
from runtime.io.tables import RunStamp, read_table, write_table

_MEMBER_SEP = ";"


def _present(value: object) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))


def _cells_from_frame(frame: pd.DataFrame, path: Path) -> list[CellRecord]:
    has_truth = "true_volume_id" in frame.columns
    cells = []
    for n, row in enumerate(frame.itertuples(index=False)):
        try:
            cells.append(
                CellRecord(
                    cell_id=row.cell_id,
                    x=float(row.x),
                    y=float(row.y),
                    z=float(row.z),
                    area=float(row.area),
                    type_label=row.type,
                    section_index=int(row.section),
                    true_volume_id=row.true_volume_id if has_truth and _present(row.true_volume_id) else None,
                )
            )
        except (ValidationError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: row {n + 1}: {exc}") from exc
    ids = [c.cell_id for c in cells]
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{path}: cell_id values are not unique", column="cell_id")
    return cells


def group_sections(cells: Iterable[CellRecord]) -> list[SectionTable]:
    """Group cells by section index (sections ordered by index, cells by id)."""
    by_section: dict[int, list[CellRecord]] = defaultdict(list)
    for c in cells:
        by_section[c.section_index].append(c)
    out = []
    for idx in sorted(by_section):
        members = sorted(by_section[idx], key=lambda c: c.cell_id)
        zs = {c.z for c in members}
        if len(zs) != 1:
            raise SchemaError(f"section {idx} has cells at several depths: {sorted(zs)}", column="z")
        out.append(SectionTable(section_index=idx, z=members[0].z, cells=tuple(members)))
    return out


def read_cells(path: str | Path) -> list[SectionTable]:
    p = Path(path)
    return group_sections(_cells_from_frame(read_table(p, "cells"), p))


def write_cells(
    path: str | Path,
    sections: Sequence[SectionTable],
    stamp: RunStamp,
    reference: Mapping[str, ReferenceCell] | None = None,
) -> Path:
    """Write a cell table; *reference* adds the ``ref_x, ref_y, ref_z`` centroid columns."""
    rows = []
    for s in sections:
        for c in s.cells:
            row = {
                "cell_id": c.cell_id,
                "x": c.x,
                "y": c.y,
                "z": c.z,
                "area": c.area,
                "type": c.type_label,
                "section": c.section_index,
            }
            if c.true_volume_id is not None:
                row["true_volume_id"] = c.true_volume_id
                if reference is not None and c.true_volume_id in reference:
                    ref = reference[c.true_volume_id]
                    row.update(ref_x=ref.x, ref_y=ref.y, ref_z=ref.z)
            rows.append(row)
    return write_table(path, "cells", rows, stamp)


def read_reference(path: str | Path, base_dz: float) -> ReferenceStack:
    """Dense reference stack from a cell CSV with a ``true_volume_id`` column.

    Optional ``ref_x, ref_y, ref_z`` columns give the reference centroid of
    each true id; otherwise it is estimated from the cross-sections.
    """
    p = Path(path)
    frame = read_table(p, "cells")
    if "true_volume_id" not in frame.columns:
        raise SchemaError(f"{p}: missing required column 'true_volume_id'", column="true_volume_id")
    sections = group_sections(_cells_from_frame(frame, p))
    ref = reference_from_sections(sections, base_dz)
    ref_cols = ("ref_x", "ref_y", "ref_z")
    if all(c in frame.columns for c in ref_cols):
        given = frame.dropna(subset=list(ref_cols)).groupby("true_volume_id")[list(ref_cols)].first()
        cells = {
            vid: ReferenceCell(
                true_volume_id=vid,
                type_label=cell.type_label,
                x=float(given.at[vid, "ref_x"]),
                y=float(given.at[vid, "ref_y"]),
                z=float(given.at[vid, "ref_z"]),
                radius=cell.radius,
            )
            if vid in given.index
            else cell
            for vid, cell in ref.cells.items()
        }
        ref = ReferenceStack(base_dz=ref.base_dz, sections=ref.sections, cells=cells)
    return ref


# ── Point clouds ────────────────────────────────────────────────────


def write_points(path: str | Path, points: Sequence[Point3D], stamp: RunStamp) -> Path:
    rows = [
        {
            "cell_id": p.cell_id,
            "x": p.x,
            "y": p.y,
            "z": p.z,
            "z_lo": p.z_lo,
            "z_hi": p.z_hi,
            "type": p.type_label,
            "provenance": p.provenance.value,
            "chain_len": p.chain_len,
            "members": _MEMBER_SEP.join(p.member_ids),
            "clamped": p.clamped,
        }
        for p in points
    ]
    return write_table(path, "points", rows, stamp)


def read_points(path: str | Path) -> list[Point3D]:
    p = Path(path)
    frame = read_table(p, "points")
    has_members = "members" in frame.columns
    has_clamped = "clamped" in frame.columns
    out = []
    for n, row in enumerate(frame.itertuples(index=False)):
        members = tuple(row.members.split(_MEMBER_SEP)) if has_members and _present(row.members) else ()
        try:
            out.append(
                Point3D(
                    cell_id=row.cell_id,
                    x=float(row.x),
                    y=float(row.y),
                    z=float(row.z),
                    type_label=row.type,
                    provenance=Provenance(row.provenance),
                    z_lo=float(row.z_lo),
                    z_hi=float(row.z_hi),
                    chain_len=int(row.chain_len),
                    member_ids=members,
                    clamped=bool(row.clamped) if has_clamped else False,
                )
            )
        except (ValidationError, ValueError) as exc:
            raise SchemaError(f"{p}: row {n + 1}: {exc}") from exc
    return out
