"""Section-level statistics contracts."""

from __future__ import annotations

from pydantic import BaseModel, Field


class EnrichmentResult(BaseModel):
    """Target→partner pair excess within ``radius`` against a label-permutation null."""

    section_index: int | None = None
    target_type: str
    partner_type: str
    z_score: float
    observed_count: int
    null_mean: float
    null_std: float = Field(ge=0.0)
    radius: float
    n_permutations: int
    degenerate_null: bool = False


class EnrichmentRun(BaseModel):
    """Results of one section's enrichment analysis."""

    section_index: int | None = None
    results: list[EnrichmentResult] = []
    no_target: bool = False


class DetectabilityResult(BaseModel):
    type_label: str
    M: int
    k: int
    trials: int
    fraction: float = Field(ge=0.0, le=1.0)


class PartnerStability(BaseModel):
    """Per-section z-scores of one partner type and their spread."""

    partner_type: str
    section_indices: list[int]
    z_scores: list[float]
    iqr: float | None = None
    frac_abs_z_gt_2: float | None = None


class StabilityProfile(BaseModel):
    target_type: str
    radius: float
    partners: list[PartnerStability] = []
    undefined_spread: bool = False

    @property
    def median_iqr(self) -> float | None:
        values = sorted(p.iqr for p in self.partners if p.iqr is not None)
        if not values:
            return None
        n = len(values)
        mid = n // 2
        return values[mid] if n % 2 else 0.5 * (values[mid - 1] + values[mid])
