"""Segmented-cell contracts: per-section cell records and the reconstruction outputs built from them."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ── Section-level input ─────────────────────────────────────────────


class CellRecord(BaseModel):
    """One segmented cell cross-section. Coordinates in µm, area in µm²."""

    model_config = ConfigDict(frozen=True)

    cell_id: str
    x: float
    y: float
    z: float
    area: float = Field(gt=0.0)
    type_label: str
    section_index: int
    true_volume_id: str | None = None

    @field_validator("x", "y", "z")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("coordinates must be finite")
        return v

    @property
    def radius(self) -> float:
        """Equivalent circular radius sqrt(area / pi)."""
        return math.sqrt(self.area / math.pi)


class SectionTable(BaseModel):
    """All cells segmented in one section."""

    model_config = ConfigDict(frozen=True)

    section_index: int
    z: float
    cells: tuple[CellRecord, ...] = ()

    @model_validator(mode="after")
    def _cells_belong(self) -> "SectionTable":
        for c in self.cells:
            if c.section_index != self.section_index or c.z != self.z:
                raise ValueError(
                    f"cell {c.cell_id} does not belong to section {self.section_index}"
                )
        return self

    def xy(self) -> np.ndarray:
        if not self.cells:
            return np.empty((0, 2))
        return np.array([[c.x, c.y] for c in self.cells], dtype=float)

    def types(self) -> np.ndarray:
        return np.array([c.type_label for c in self.cells], dtype=object)

    def areas(self) -> np.ndarray:
        return np.array([c.area for c in self.cells], dtype=float)


# ── Size statistics ─────────────────────────────────────────────────


class TypeSizeStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    type_label: str
    n: int
    median_area: float = Field(gt=0.0)
    p10_area: float = Field(gt=0.0)
    p90_area: float = Field(gt=0.0)
    low_confidence: bool = False

    @model_validator(mode="after")
    def _ordered(self) -> "TypeSizeStats":
        if not (self.p10_area <= self.median_area <= self.p90_area):
            raise ValueError("expected p10 <= median <= p90")
        return self

    @property
    def radius(self) -> float:
        """R_t = sqrt(median_area / pi)."""
        return math.sqrt(self.median_area / math.pi)

    @property
    def max_radius(self) -> float:
        """R_t_max = sqrt(p90_area / pi)."""
        return math.sqrt(self.p90_area / math.pi)


class SizeStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_type: dict[str, TypeSizeStats]
    pooled: TypeSizeStats

    def for_type(self, type_label: str) -> TypeSizeStats:
        """Stats for a type; unseen types fall back to pooled stats."""
        return self.per_type.get(type_label, self.pooled)


# ── Matching and chains ─────────────────────────────────────────────


class MatchPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    id_a: str
    id_b: str
    cost: float


class MatchResult(BaseModel):
    """One-to-one assignment between two adjacent sections."""

    pairs: list[MatchPair] = []
    unmatched_a: list[str] = []
    unmatched_b: list[str] = []
    delta_z: float
    objective: float = 0.0  # sum of pair costs + unmatched penalties

    @model_validator(mode="after")
    def _one_to_one(self) -> "MatchResult":
        a_ids = [p.id_a for p in self.pairs]
        b_ids = [p.id_b for p in self.pairs]
        if len(set(a_ids)) != len(a_ids) or len(set(b_ids)) != len(b_ids):
            raise ValueError("an id appears in more than one pair")
        if set(a_ids) & set(self.unmatched_a) or set(b_ids) & set(self.unmatched_b):
            raise ValueError("an id is both matched and unmatched")
        return self


class Provenance(str, Enum):
    SC = "SC"  # shared cell, seen in >= 2 adjacent sections
    LC = "LC"  # lone cell, seen in one section


class CellChain(BaseModel):
    """Cross-sections of one putative biological cell, ordered by section."""

    members: tuple[CellRecord, ...]
    link_costs: tuple[float, ...] = ()
    flagged_split: bool = False

    @model_validator(mode="after")
    def _consistent(self) -> "CellChain":
        if not self.members:
            raise ValueError("a chain needs at least one member")
        if len({m.type_label for m in self.members}) != 1:
            raise ValueError("chain members must share a type label")
        if len(self.link_costs) != len(self.members) - 1:
            raise ValueError("need one link cost per consecutive member pair")
        return self

    @property
    def classification(self) -> Provenance:
        return Provenance.SC if len(self.members) >= 2 else Provenance.LC

    @property
    def type_label(self) -> str:
        return self.members[0].type_label


class Point3D(BaseModel):
    """A reconstructed cell centroid (µm)."""

    model_config = ConfigDict(frozen=True)

    cell_id: str
    x: float
    y: float
    z: float
    type_label: str
    provenance: Provenance
    z_lo: float
    z_hi: float
    chain_len: int = 1
    member_ids: tuple[str, ...] = ()
    clamped: bool = False

    @model_validator(mode="after")
    def _z_inside(self) -> "Point3D":
        if not (self.z_lo <= self.z <= self.z_hi):
            raise ValueError(f"z={self.z} outside depth interval [{self.z_lo}, {self.z_hi}]")
        return self

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)
