"""Section-level spatial statistics: abundance, detectability, neighborhood enrichment."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from contracts.cells import CellRecord, SectionTable
from contracts.errors import InvalidInputError
from contracts.lattice import LabelVolume
from contracts.stats import (
    DetectabilityResult,
    EnrichmentResult,
    EnrichmentRun,
    PartnerStability,
    StabilityProfile,
)
from runtime.rng import make_rng


# ── Abundance and detectability ─────────────────────────────────────


def abundance(cells: Iterable[CellRecord]) -> dict[str, float]:
    """Fraction of cells per type label, keys sorted."""
    counts = Counter(c.type_label for c in cells)
    total = sum(counts.values())
    if total == 0:
        raise InvalidInputError("abundance needs at least one cell")
    return {t: counts[t] / total for t in sorted(counts)}


def type_counts_per_section(sections: Sequence[SectionTable], type_label: str) -> np.ndarray:
    return np.array(
        [sum(1 for c in s.cells if c.type_label == type_label) for s in sections],
        dtype=np.int64,
    )


def detectability(
    sections: Sequence[SectionTable],
    type_label: str,
    M: int,
    k: int,
    trials: int,
    seed: int,
) -> DetectabilityResult:
    """Fraction of random M-section draws containing at least k cells of *type_label*.

    Each trial takes the first M entries of a fresh permutation of the sections,
    so draws for different M under one seed are nested.
    """
    n = len(sections)
    if M < 1 or M > n:
        raise InvalidInputError(f"cannot draw M={M} of {n} sections")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    counts = type_counts_per_section(sections, type_label)
    rng = make_rng(seed)
    hits = 0
    for _ in range(trials):
        chosen = rng.permutation(n)[:M]
        if counts[chosen].sum() >= k:
            hits += 1
    return DetectabilityResult(type_label=type_label, M=M, k=k, trials=trials, fraction=hits / trials)


# ── Neighborhood enrichment ─────────────────────────────────────────


def _directed_pairs(xy: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """(src, dst) of every ordered pair of distinct cells within *radius*."""
    if xy.shape[0] < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    pairs = cKDTree(xy).query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return src, dst


def _partner_counts(codes: np.ndarray, src: np.ndarray, dst: np.ndarray, target: int, n_types: int) -> np.ndarray:
    anchored = codes[src] == target
    return np.bincount(codes[dst[anchored]], minlength=n_types)


def neighborhood_enrichment(
    section: SectionTable,
    target_type: str,
    radius: float,
    n_permutations: int,
    seed: int,
    partner_types: Sequence[str] | None = None,
) -> EnrichmentRun:
    """Target-anchored partner counts within *radius* vs. a label-permutation null.

    Each target cell contributes one count per partner cell within *radius*
    (self-pairs excluded). The null shuffles all labels over the fixed positions.
    """
    if radius <= 0:
        raise InvalidInputError("radius must be > 0")
    if n_permutations < 1:
        raise InvalidInputError("n_permutations must be >= 1")
    labels = [c.type_label for c in section.cells]
    if target_type not in labels:
        return EnrichmentRun(section_index=section.section_index, no_target=True)

    types = sorted(set(labels) | set(partner_types or ()))
    index = {t: n for n, t in enumerate(types)}
    codes = np.array([index[t] for t in labels], dtype=np.int64)
    target = index[target_type]
    src, dst = _directed_pairs(section.xy(), radius)

    observed = _partner_counts(codes, src, dst, target, len(types))
    rng = make_rng(seed)
    null = np.empty((n_permutations, len(types)), dtype=np.int64)
    for p in range(n_permutations):
        null[p] = _partner_counts(rng.permutation(codes), src, dst, target, len(types))
    null_mean = null.mean(axis=0)
    null_std = null.std(axis=0, ddof=1) if n_permutations > 1 else np.zeros(len(types))

    partners = partner_types if partner_types is not None else types
    results = []
    for partner in partners:
        n = index[partner]
        degenerate = not null_std[n] > 0
        z = 0.0 if degenerate else float((observed[n] - null_mean[n]) / null_std[n])
        results.append(
            EnrichmentResult(
                section_index=section.section_index,
                target_type=target_type,
                partner_type=partner,
                z_score=z,
                observed_count=int(observed[n]),
                null_mean=float(null_mean[n]),
                null_std=float(null_std[n]),
                radius=radius,
                n_permutations=n_permutations,
                degenerate_null=degenerate,
            )
        )
    return EnrichmentRun(section_index=section.section_index, results=results)


def section_stability_profile(
    sections: Sequence[SectionTable],
    target_type: str,
    radius: float,
    n_permutations: int,
    seed: int,
) -> StabilityProfile:
    """Enrichment z-scores per partner across sections, with IQR and |z| > 2 rate.

    Sections without the target are skipped; fewer than two usable sections
    leave the spread undefined (flagged). Every section uses the same null seed.
    """
    partners = sorted({c.type_label for s in sections for c in s.cells})
    per_partner: dict[str, list[tuple[int, float]]] = {p: [] for p in partners}
    for section in sections:
        run = neighborhood_enrichment(section, target_type, radius, n_permutations, seed, partners)
        for res in run.results:
            per_partner[res.partner_type].append((section.section_index, res.z_score))

    usable = max((len(v) for v in per_partner.values()), default=0)
    undefined = usable < 2
    out = []
    for partner in partners:
        rows = per_partner[partner]
        z = np.array([v for _, v in rows], dtype=float)
        iqr = frac = None
        if not undefined and z.size:
            q75, q25 = np.percentile(z, [75, 25])
            iqr = float(q75 - q25)
            frac = float(np.mean(np.abs(z) > 2.0))
        out.append(
            PartnerStability(
                partner_type=partner,
                section_indices=[s for s, _ in rows],
                z_scores=[float(v) for v in z],
                iqr=iqr,
                frac_abs_z_gt_2=frac,
            )
        )
    return StabilityProfile(target_type=target_type, radius=radius, partners=out, undefined_spread=undefined)


# ── Lattice → sections ──────────────────────────────────────────────


def sections_from_volume(
    volume: LabelVolume,
    planes: Sequence[int] | None = None,
    voxel_size: float = 1.0,
    type_names: Sequence[str] | None = None,
) -> list[SectionTable]:
    """Turn lattice planes into cell tables (voxel centre, area voxel_size²)."""
    nx, ny, nz = volume.spec.dims
    names = list(type_names) if type_names else [f"type{n + 1}" for n in range(volume.K)]
    if len(names) != volume.K:
        raise InvalidInputError(f"need {volume.K} type names, got {len(names)}")
    zs = list(planes) if planes is not None else list(range(nz))
    area = voxel_size * voxel_size
    out = []
    for k in zs:
        z = k * voxel_size
        cells = tuple(
            CellRecord(
                cell_id=f"v{i}_{j}_{k}",
                x=(i + 0.5) * voxel_size,
                y=(j + 0.5) * voxel_size,
                z=z,
                area=area,
                type_label=names[int(volume.labels[i, j, k])],
                section_index=k,
            )
            for i in range(nx)
            for j in range(ny)
        )
        out.append(SectionTable(section_index=k, z=z, cells=cells))
    return out
