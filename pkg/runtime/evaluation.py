"""Dense-reference evaluation of serial-section reconstruction.

A dense stack at ``base_dz`` carries the true cell id of every cross-section.
Subsampling it at a coarser ``delta_z`` (one run per residue offset) and
reconstructing from the subsample gives shared/lone composition, unique-id
coverage, link errors and 3D localization error against the reference.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from contracts.cells import CellChain, CellRecord, SectionTable
from contracts.errors import InvalidInputError
from contracts.evaluation import CoverageReport, LocalizationSummary, ReferenceCell, ReferenceStack
from contracts.experiment import RadiusDist
from runtime.matching import reconstruct
from runtime.matching.depth import sphere_center_depth
from runtime.matching.sizes import DEFAULT_MIN_COUNT
from runtime.rng import make_rng


# ── Reference stacks ────────────────────────────────────────────────


def slice_spheres(spheres: Sequence[ReferenceCell], base_dz: float, depth: float) -> ReferenceStack:
    """Cut spheres with planes ``z = k * base_dz`` (k = 0 .. floor(depth / base_dz)).

    A plane intersects a sphere iff ``|z - z_c| < R``; the cross-section area
    is ``pi * (R^2 - (z - z_c)^2)``.
    """
    if base_dz <= 0:
        raise InvalidInputError("base_dz must be > 0")
    n_planes = int(math.floor(depth / base_dz + 1e-9)) + 1
    sections = []
    for k in range(n_planes):
        z = k * base_dz
        cells = []
        for s in spheres:
            if s.radius is None:
                raise InvalidInputError(f"sphere {s.true_volume_id} has no radius")
            h = z - s.z
            if abs(h) < s.radius:
                cells.append(
                    CellRecord(
                        cell_id=f"z{k:04d}_{s.true_volume_id}",
                        x=s.x,
                        y=s.y,
                        z=z,
                        area=math.pi * (s.radius**2 - h * h),
                        type_label=s.type_label,
                        section_index=k,
                        true_volume_id=s.true_volume_id,
                    )
                )
        sections.append(SectionTable(section_index=k, z=z, cells=tuple(cells)))
    return ReferenceStack(
        base_dz=base_dz, sections=sections, cells={s.true_volume_id: s for s in spheres}
    )


def synth_sphere_stack(
    n_cells: int,
    radius_dist: Mapping[str, RadiusDist],
    volume_dims: tuple[float, float, float],
    base_dz: float,
    seed: int,
    max_tries: int = 200,
) -> ReferenceStack:
    """Non-overlapping random spheres, sliced at ``base_dz``.

    Types are drawn by weight, radii from a normal floored at ``min``; each
    centre is redrawn until the sphere overlaps no earlier one.
    """
    if n_cells < 1 or not radius_dist:
        raise InvalidInputError("need n_cells >= 1 and at least one type")
    rng = make_rng(seed)
    types = sorted(radius_dist)
    weights = np.array([radius_dist[t].weight for t in types], dtype=float)
    weights /= weights.sum()
    X, Y, Z = volume_dims

    centres = np.empty((0, 3))
    radii = np.empty(0)
    spheres: list[ReferenceCell] = []
    for n in range(n_cells):
        t = types[int(rng.choice(len(types), p=weights))]
        dist = radius_dist[t]
        R = max(dist.min, float(rng.normal(dist.mean, dist.sd)))
        for _ in range(max_tries):
            c = rng.uniform((0.0, 0.0, 0.0), (X, Y, Z))
            if radii.size == 0 or np.all(np.linalg.norm(centres - c, axis=1) >= radii + R):
                break
        else:
            raise InvalidInputError(
                f"could not place sphere {n} without overlap after {max_tries} tries; "
                "lower n_cells or enlarge the volume"
            )
        centres = np.vstack([centres, c])
        radii = np.append(radii, R)
        spheres.append(
            ReferenceCell(
                true_volume_id=f"c{n:05d}",
                type_label=t,
                x=float(c[0]),
                y=float(c[1]),
                z=float(c[2]),
                radius=R,
            )
        )
    return slice_spheres(spheres, base_dz, Z)


def reference_from_sections(sections: Sequence[SectionTable], base_dz: float) -> ReferenceStack:
    """Build a reference from externally labelled cross-sections.

    Each true id's centroid is the area-weighted planar mean of its
    cross-sections, with depth from the sphere fit (or the single plane).
    """
    grouped: dict[str, list[CellRecord]] = defaultdict(list)
    for s in sections:
        for c in s.cells:
            if c.true_volume_id is None:
                raise InvalidInputError(f"cross-section {c.cell_id} has no true_volume_id")
            grouped[c.true_volume_id].append(c)
    cells = {}
    for vid in sorted(grouped):
        members = grouped[vid]
        if len({m.type_label for m in members}) != 1:
            raise InvalidInputError(f"true_volume_id {vid} spans several type labels")
        areas = np.array([m.area for m in members])
        zs = np.array([m.z for m in members])
        z = sphere_center_depth(zs, areas) if np.ptp(zs) > 0 else float(zs[0])
        cells[vid] = ReferenceCell(
            true_volume_id=vid,
            type_label=members[0].type_label,
            x=float(np.average([m.x for m in members], weights=areas)),
            y=float(np.average([m.y for m in members], weights=areas)),
            z=z,
            radius=float(math.sqrt(areas.max() / math.pi)),
        )
    return ReferenceStack(base_dz=base_dz, sections=list(sections), cells=cells)


# ── Subsampling ─────────────────────────────────────────────────────


def _steps(value: float, base: float, what: str) -> int:
    ratio = value / base
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9:
        raise InvalidInputError(f"{what}={value} is not a multiple of base spacing {base}")
    return n


def subsample_stack(ref: ReferenceStack, delta_z: float, offset: float = 0.0) -> list[SectionTable]:
    """Sections with ``z ≡ offset (mod delta_z)``, true ids stripped."""
    step = _steps(delta_z, ref.base_dz, "delta_z")
    if step < 1:
        raise InvalidInputError("delta_z must be >= base spacing")
    phase = _steps(offset, ref.base_dz, "offset")
    if not 0 <= phase < step:
        raise InvalidInputError(f"offset must lie in [0, {delta_z})")
    out = []
    for s in sorted(ref.sections, key=lambda s: s.z):
        k = int(round(s.z / ref.base_dz))
        if (k - phase) % step == 0:
            cells = tuple(c.model_copy(update={"true_volume_id": None}) for c in s.cells)
            out.append(SectionTable(section_index=s.section_index, z=s.z, cells=cells))
    return out


# ── Scoring ─────────────────────────────────────────────────────────


def attribute_chain(chain: CellChain, truth: Mapping[str, str]) -> tuple[str, bool]:
    """(majority true id, spans several ids). Ties go to the largest-area member's id."""
    ids = [truth[m.cell_id] for m in chain.members]
    counts = Counter(ids)
    top = max(counts.values())
    tied = {vid for vid, n in counts.items() if n == top}
    best = max((m for m in chain.members if truth[m.cell_id] in tied), key=lambda m: (m.area, m.cell_id))
    return truth[best.cell_id], len(counts) > 1


def summarize_errors(errors: np.ndarray) -> LocalizationSummary:
    if errors.size == 0:
        return LocalizationSummary()
    p50, p90 = np.percentile(errors, [50, 90])
    return LocalizationSummary(
        n=int(errors.size),
        mean=float(errors.mean()),
        std=float(errors.std()),
        p50=float(p50),
        p90=float(p90),
        max=float(errors.max()),
    )


@dataclass(frozen=True)
class OffsetEvaluation:
    report: CoverageReport
    errors: np.ndarray
    n_sc_cells: int


def reference_ids(ref: ReferenceStack) -> set[str]:
    """True ids with at least one cross-section in the dense stack."""
    return {c.true_volume_id for s in ref.sections for c in s.cells}


def evaluate_offset(
    ref: ReferenceStack,
    delta_z: float,
    offset: float,
    kappa: float = 1.0,
    min_count: int = DEFAULT_MIN_COUNT,
    split_long: bool = True,
) -> OffsetEvaluation:
    sections = subsample_stack(ref, delta_z, offset)
    truth = {c.cell_id: c.true_volume_id for s in ref.sections for c in s.cells}
    total_ids = reference_ids(ref)
    n_cross = sum(len(s.cells) for s in sections)

    captured = {truth[c.cell_id] for s in sections for c in s.cells}
    errors: list[float] = []
    link_errors = 0
    n_sc = 0
    if n_cross:
        rec = reconstruct(sections, delta_z, kappa, min_count, split_long)
        for chain, point in zip(rec.chains, rec.points):
            if len(chain.members) >= 2:
                n_sc += len(chain.members)
            vid, mixed = attribute_chain(chain, truth)
            if mixed:
                link_errors += 1
            cell = ref.cells[vid]
            errors.append(float(np.linalg.norm(point.xyz - np.array([cell.x, cell.y, cell.z]))))

    err = np.asarray(errors, dtype=float)
    sc_fraction = n_sc / n_cross if n_cross else 0.0
    report = CoverageReport(
        delta_z=delta_z,
        offset=offset,
        n_cross_sections=n_cross,
        sc_fraction=sc_fraction,
        lc_fraction=1.0 - sc_fraction if n_cross else 0.0,
        captured_unique=len(captured),
        missed_unique=len(total_ids) - len(captured),
        total_unique=len(total_ids),
        link_errors=link_errors,
        localization=summarize_errors(err),
    )
    return OffsetEvaluation(report=report, errors=err, n_sc_cells=n_sc)


def pool(evaluations: Sequence[OffsetEvaluation], delta_z: float) -> OffsetEvaluation:
    """Pooled report: counts summed over offsets, errors concatenated."""
    n_cross = sum(e.report.n_cross_sections for e in evaluations)
    n_sc = sum(e.n_sc_cells for e in evaluations)
    err = np.concatenate([e.errors for e in evaluations]) if evaluations else np.empty(0)
    sc_fraction = n_sc / n_cross if n_cross else 0.0
    report = CoverageReport(
        delta_z=delta_z,
        offset=None,
        n_cross_sections=n_cross,
        sc_fraction=sc_fraction,
        lc_fraction=1.0 - sc_fraction if n_cross else 0.0,
        captured_unique=sum(e.report.captured_unique for e in evaluations),
        missed_unique=sum(e.report.missed_unique for e in evaluations),
        total_unique=sum(e.report.total_unique for e in evaluations),
        link_errors=sum(e.report.link_errors for e in evaluations),
        localization=summarize_errors(err),
    )
    return OffsetEvaluation(report=report, errors=err, n_sc_cells=n_sc)


def default_offsets(ref: ReferenceStack, delta_z: float) -> list[float]:
    step = _steps(delta_z, ref.base_dz, "delta_z")
    return [k * ref.base_dz for k in range(step)]


def evaluate_all(
    ref: ReferenceStack,
    delta_z: float,
    offsets: Sequence[float] | None = None,
    kappa: float = 1.0,
    min_count: int = DEFAULT_MIN_COUNT,
    split_long: bool = True,
) -> list[OffsetEvaluation]:
    """Per-offset evaluations followed by the pooled one."""
    offsets = list(offsets) if offsets is not None else default_offsets(ref, delta_z)
    per_offset = [evaluate_offset(ref, delta_z, o, kappa, min_count, split_long) for o in offsets]
    return per_offset + [pool(per_offset, delta_z)]


def evaluate(
    ref: ReferenceStack,
    delta_z: float,
    offsets: Sequence[float] | None = None,
    kappa: float = 1.0,
    min_count: int = DEFAULT_MIN_COUNT,
    split_long: bool = True,
) -> list[CoverageReport]:
    """CoverageReport per offset, pooled report last."""
    return [e.report for e in evaluate_all(ref, delta_z, offsets, kappa, min_count, split_long)]


def localization_histogram(errors: np.ndarray, bin_width: float) -> list[tuple[float, float, int]]:
    """``(bin_lo, bin_hi, count)`` rows from 0 up to the largest error."""
    if bin_width <= 0:
        raise InvalidInputError("bin_width must be > 0")
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return []
    n_bins = max(1, int(math.floor(errors.max() / bin_width)) + 1)
    edges = np.arange(n_bins + 1) * bin_width
    counts, _ = np.histogram(errors, bins=edges)
    return [(float(edges[n]), float(edges[n + 1]), int(counts[n])) for n in range(n_bins)]
