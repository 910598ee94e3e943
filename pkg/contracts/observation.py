"""Observation-set contracts: which lattice sites a sampling geometry observes."""

from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class Geometry(str, Enum):
    INDEPENDENT_2D = "Independent2D"
    SERIAL_3D = "Serial3D"
    FULL_VOLUME = "FullVolume"


class ObservationSet(BaseModel):
    """Whole planes observed out of a volume of shape ``dims``.

    Every geometry here observes complete z-planes, so the site list is a
    derived view of ``plane_zs``; ``budget`` is the observed voxel count.
    """

    model_config = ConfigDict(frozen=True)

    geometry: Geometry
    dims: tuple[int, int, int]
    plane_zs: tuple[int, ...]
    delta_z: int | None = None
    budget: int
    seed: int | None = None

    @model_validator(mode="after")
    def _check_invariants(self) -> "ObservationSet":
        nx, ny, nz = self.dims
        zs = self.plane_zs
        if list(zs) != sorted(set(zs)):
            raise ValueError("plane_zs must be sorted and distinct")
        if zs and (zs[0] < 0 or zs[-1] >= nz):
            raise ValueError(f"plane_zs out of range 0..{nz - 1}")
        if self.budget != len(zs) * nx * ny:
            raise ValueError(
                f"budget {self.budget} != {len(zs)} planes x {nx * ny} sites"
            )
        if self.geometry == Geometry.SERIAL_3D:
            if self.delta_z is None or self.delta_z < 1:
                raise ValueError("Serial3D observations need delta_z >= 1")
            steps = {b - a for a, b in zip(zs, zs[1:])}
            if steps and steps != {self.delta_z}:
                raise ValueError("Serial3D planes must step by delta_z")
        return self

    @property
    def plane_mask(self) -> np.ndarray:
        """Boolean mask over z of the observed planes."""
        mask = np.zeros(self.dims[2], dtype=bool)
        mask[list(self.plane_zs)] = True
        return mask

    @property
    def site_mask(self) -> np.ndarray:
        """Boolean volume mask, True at observed sites."""
        mask = np.zeros(self.dims, dtype=bool)
        mask[:, :, list(self.plane_zs)] = True
        return mask

    @property
    def observed_sites(self) -> np.ndarray:
        """(budget, 3) array of observed (i, j, k) sites, plane-major order."""
        nx, ny, _ = self.dims
        ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        blocks = [
            np.column_stack([ii.ravel(), jj.ravel(), np.full(nx * ny, z)])
            for z in self.plane_zs
        ]
        if not blocks:
            return np.empty((0, 3), dtype=np.int64)
        return np.vstack(blocks).astype(np.int64)

    def contains(self, site: tuple[int, int, int]) -> bool:
        i, j, k = site
        nx, ny, _ = self.dims
        return 0 <= i < nx and 0 <= j < ny and k in self.plane_zs
