"""Matched-budget sampling geometries over a label volume.

Independent 2D planes are analysed as isolated 2D lattices: sections cut at
different depths carry no usable cross-plane adjacency, so their restricted
neighborhoods never cross planes. Serial stacks keep every lattice edge whose
two endpoints were both observed.
"""

from __future__ import annotations

import numpy as np

from contracts.errors import ContractViolation, InvalidBudgetError
from contracts.lattice import LabelVolume, LatticeSpec
from contracts.observation import Geometry, ObservationSet
from runtime.mrf.lattice import Site, neighbor_label_counts, neighbor_offsets, neighbor_sites
from runtime.rng import make_rng


def _plane_budget(volume: LabelVolume, n_planes: int) -> int:
    nx, ny, _ = volume.spec.dims
    return n_planes * nx * ny


def sample_independent_planes(volume: LabelVolume, M: int, seed: int) -> ObservationSet:
    """Pick M distinct planes, one uniformly from each of M equal-width depth bins."""
    nz = volume.spec.dims[2]
    if M < 1 or M > nz:
        raise InvalidBudgetError(f"cannot draw M={M} planes from nz={nz}")
    rng = make_rng(seed)
    bins = np.array_split(np.arange(nz), M)
    zs = sorted(int(rng.choice(b)) for b in bins)
    return ObservationSet(
        geometry=Geometry.INDEPENDENT_2D,
        dims=volume.spec.dims,
        plane_zs=tuple(zs),
        budget=_plane_budget(volume, M),
        seed=seed,
    )


def sample_serial_stack(
    volume: LabelVolume, z0: int, delta_z: int, count: int
) -> ObservationSet:
    """Observe planes ``z0, z0 + delta_z, ..., z0 + (count - 1) * delta_z``."""
    nz = volume.spec.dims[2]
    if count < 1 or delta_z < 1 or z0 < 0 or z0 + (count - 1) * delta_z >= nz:
        raise InvalidBudgetError(
            f"stack z0={z0}, delta_z={delta_z}, count={count} exceeds nz={nz}"
        )
    zs = tuple(z0 + n * delta_z for n in range(count))
    return ObservationSet(
        geometry=Geometry.SERIAL_3D,
        dims=volume.spec.dims,
        plane_zs=zs,
        delta_z=delta_z,
        budget=_plane_budget(volume, count),
    )


def sample_random_serial_stack(
    volume: LabelVolume, delta_z: int, count: int, seed: int
) -> ObservationSet:
    """Serial stack with z0 drawn uniformly over every offset that fits."""
    nz = volume.spec.dims[2]
    span = (count - 1) * delta_z
    if count < 1 or delta_z < 1 or span >= nz:
        raise InvalidBudgetError(f"stack of {count} planes at delta_z={delta_z} exceeds nz={nz}")
    z0 = int(make_rng(seed).integers(0, nz - span))
    obs = sample_serial_stack(volume, z0, delta_z, count)
    return obs.model_copy(update={"seed": seed})


def sample_full_volume(volume: LabelVolume) -> ObservationSet:
    nz = volume.spec.dims[2]
    return ObservationSet(
        geometry=Geometry.FULL_VOLUME,
        dims=volume.spec.dims,
        plane_zs=tuple(range(nz)),
        budget=volume.spec.n_sites,
    )


# ── Restricted neighborhoods ────────────────────────────────────────


def _in_plane(obs: ObservationSet) -> bool:
    return obs.geometry == Geometry.INDEPENDENT_2D


def restricted_neighbors(obs: ObservationSet, spec: LatticeSpec, site: Site) -> list[Site]:
    """Lattice neighbors of an observed *site* that the geometry also observed."""
    if not obs.contains(site):
        raise ContractViolation(f"site {site} is not observed")
    out = []
    for nb in neighbor_sites(spec, site):
        if not obs.contains(nb):
            continue
        if _in_plane(obs) and nb[2] != site[2]:
            continue
        out.append(nb)
    return out


def observed_neighbor_counts(
    obs: ObservationSet, spec: LatticeSpec, labels: np.ndarray, K: int
) -> tuple[np.ndarray, np.ndarray]:
    """Labels and restricted neighbor-label counts of every observed site.

    Returns ``(x, C)``: ``x`` has shape (budget,), ``C`` has shape (budget, K),
    both in ``obs.observed_sites`` order.
    """
    offsets = neighbor_offsets(spec.neighborhood, in_plane_only=_in_plane(obs))
    mask = obs.site_mask
    counts = neighbor_label_counts(labels, K, offsets, observed=mask)
    zs = list(obs.plane_zs)
    # (nx, ny, M) → plane-major flattening, matching observed_sites
    x = np.moveaxis(labels[:, :, zs], 2, 0).reshape(-1)
    C = np.moveaxis(counts[:, :, zs, :], 2, 0).reshape(-1, K)
    return x, C
