"""Sphere-prior 3D centroid estimation for linked cell chains.

A cell is modelled as a sphere of unknown centre depth ``z_c`` and radius
``R``. A section at ``z_m`` cuts a disc of radius ``r_m = sqrt(area_m / pi)``
with ``r_m^2 = R^2 - (z_m - z_c)^2``, which is linear in ``z_m``::

    r_m^2 + z_m^2 = (R^2 - z_c^2) + 2 z_c z_m

so ``z_c`` is half the least-squares slope of ``r_m^2 + z_m^2`` against ``z_m``.
"""

from __future__ import annotations

import numpy as np

from contracts.cells import CellChain, Point3D, Provenance
from contracts.errors import InvalidInputError


def sphere_center_depth(zs: np.ndarray, areas: np.ndarray) -> float:
    """Least-squares sphere centre depth from >= 2 parallel cross-sections."""
    zs = np.asarray(zs, dtype=float)
    r2 = np.asarray(areas, dtype=float) / np.pi
    if zs.size < 2 or np.ptp(zs) == 0:
        raise InvalidInputError("sphere depth needs cross-sections on >= 2 distinct planes")
    z_mean = zs.mean()
    dz = zs - z_mean
    y = r2 + dz**2
    A = np.column_stack([np.ones_like(dz), 2.0 * dz])
    (_, zc_rel), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(z_mean + zc_rel)


def estimate_centroid(chain: CellChain, delta_z: float) -> Point3D:
    """3D centroid and depth interval of a chain.

    Shared cells take the sphere-fit depth, clamped (and flagged) into
    ``[min z - dz/2, max z + dz/2]``; lone cells sit on their section plane.
    x and y are area-weighted means of the member centroids.
    """
    if delta_z <= 0:
        raise InvalidInputError("delta_z must be > 0")
    members = chain.members
    areas = np.array([m.area for m in members], dtype=float)
    if np.any(~(areas > 0)):
        raise InvalidInputError("cross-section areas must be positive")
    zs = np.array([m.z for m in members], dtype=float)
    x = float(np.average([m.x for m in members], weights=areas))
    y = float(np.average([m.y for m in members], weights=areas))
    z_lo = float(zs.min() - delta_z / 2)
    z_hi = float(zs.max() + delta_z / 2)

    clamped = False
    if chain.classification == Provenance.SC:
        z = sphere_center_depth(zs, areas)
        if not z_lo <= z <= z_hi:
            z = min(max(z, z_lo), z_hi)
            clamped = True
    else:
        z = float(zs[0])

    return Point3D(
        cell_id=members[0].cell_id,
        x=x,
        y=y,
        z=z,
        type_label=chain.type_label,
        provenance=chain.classification,
        z_lo=z_lo,
        z_hi=z_hi,
        chain_len=len(members),
        member_ids=tuple(m.cell_id for m in members),
        clamped=clamped,
    )
