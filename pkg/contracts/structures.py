"""Structure-level analysis contracts."""

from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, model_validator


class Structure3D(BaseModel):
    structure_id: int
    type_filter: tuple[str, ...]
    member_ids: tuple[str, ...]
    axis: tuple[float, float, float]
    origin: tuple[float, float, float]
    extent: tuple[float, float]  # arc-length range along the axis, relative to origin

    @model_validator(mode="after")
    def _unit_axis(self) -> "Structure3D":
        if abs(float(np.linalg.norm(self.axis)) - 1.0) > 1e-9:
            raise ValueError("axis must be a unit vector")
        return self


class CellDistance(BaseModel):
    cell_id: str
    d2d: float | None = None
    d3d: float | None = None
    no_section_target: bool = False


class DistanceComparison(BaseModel):
    query: str
    cells: list[CellDistance] = []

    @property
    def mean_d2d(self) -> float | None:
        values = [c.d2d for c in self.cells if c.d2d is not None and c.d3d is not None]
        return float(np.mean(values)) if values else None

    @property
    def mean_d3d(self) -> float | None:
        values = [c.d3d for c in self.cells if c.d2d is not None and c.d3d is not None]
        return float(np.mean(values)) if values else None


class ProfileValue(str, Enum):
    COMPOSITION = "composition"
    DENSITY = "density"


class ProfileBin(BaseModel):
    structure_id: int
    bin: int
    arc_lo: float
    arc_hi: float
    count: int
    values: dict[str, float]  # per-type fraction (composition) or {"density": cells/µm}

    @property
    def arc_coord(self) -> float:
        return 0.5 * (self.arc_lo + self.arc_hi)
