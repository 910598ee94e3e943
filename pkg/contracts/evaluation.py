"""Reconstruction evaluation contracts: reference stacks and coverage reports."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

from contracts.cells import SectionTable


class ReferenceCell(BaseModel):
    """Ground truth for one biological cell of a dense reference stack."""

    true_volume_id: str
    type_label: str
    x: float
    y: float
    z: float
    radius: float | None = None


class ReferenceStack(BaseModel):
    """Dense stack at ``base_dz`` spacing whose cross-sections carry true ids."""

    base_dz: float = Field(gt=0.0)
    sections: list[SectionTable]
    cells: dict[str, ReferenceCell]

    @model_validator(mode="after")
    def _ids_known(self) -> "ReferenceStack":
        for section in self.sections:
            for c in section.cells:
                if c.true_volume_id is None:
                    raise ValueError(f"cross-section {c.cell_id} has no true_volume_id")
                if c.true_volume_id not in self.cells:
                    raise ValueError(f"unknown true_volume_id {c.true_volume_id}")
        return self

    @property
    def n_unique(self) -> int:
        return len(self.cells)


class LocalizationSummary(BaseModel):
    n: int = 0
    mean: float | None = None
    std: float | None = None
    p50: float | None = None
    p90: float | None = None
    max: float | None = None


class CoverageReport(BaseModel):
    delta_z: float
    offset: float | None = None  # None for the pooled report
    n_cross_sections: int
    sc_fraction: float
    lc_fraction: float
    captured_unique: int
    missed_unique: int
    total_unique: int
    link_errors: int = 0
    localization: LocalizationSummary = LocalizationSummary()

    @model_validator(mode="after")
    def _balanced(self) -> "CoverageReport":
        if self.captured_unique + self.missed_unique != self.total_unique:
            raise ValueError("captured + missed must equal total reference ids")
        if self.n_cross_sections and abs(self.sc_fraction + self.lc_fraction - 1.0) > 1e-12:
            raise ValueError("sc_fraction + lc_fraction must be 1")
        return self

    @property
    def captured_fraction(self) -> float:
        return self.captured_unique / self.total_unique if self.total_unique else 0.0

    @property
    def missed_fraction(self) -> float:
        return self.missed_unique / self.total_unique if self.total_unique else 0.0
