"""Experiment config (depthkit.yaml) schema: Pydantic models.

Every block forbids unknown keys; numeric ranges are checked at load time.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from contracts.estimation import MPLEConfig
from contracts.lattice import Neighborhood
from contracts.observation import Geometry
from contracts.structures import ProfileValue


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ── Top-level sections ──────────────────────────────────────────────


class ExperimentInfo(_Block):
    name: str
    version: str = "0.0.1"
    master_seed: int = Field(default=0, ge=0)


class InitKind(str, Enum):
    UNIFORM_RANDOM = "uniform_random"
    GIVEN = "given"


class Regime(str, Enum):
    WELL_MIXED = "well_mixed"
    CLUSTERED = "clustered"
    RARE_LOCALIZED = "rare_localized"


# ── Simulation / sampling / estimation ──────────────────────────────


class SimulationConfig(_Block):
    dims: tuple[int, int, int] = (32, 32, 32)
    K: int = Field(default=3, ge=2)
    neighborhood: Neighborhood = Neighborhood.N26
    regime: Regime | None = None
    alpha: list[float] | None = None
    B: list[list[float]] | None = None
    sweeps: int = Field(default=50, ge=0)
    init: InitKind = InitKind.UNIFORM_RANDOM
    n_volumes: int = Field(default=1, ge=1)
    seeds: list[int] | None = None  # explicit seeds override master-seed splitting

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, v: tuple[int, int, int]) -> tuple[int, int, int]:
        if any(d < 1 for d in v):
            raise ValueError("dims must be >= 1")
        return v

    @model_validator(mode="after")
    def _params_shape(self) -> "SimulationConfig":
        if (self.alpha is None) != (self.B is None):
            raise ValueError("alpha and B must be given together")
        if self.alpha is None and self.regime is None:
            raise ValueError("give either a regime or explicit alpha and B")
        if self.alpha is not None:
            if len(self.alpha) != self.K:
                raise ValueError(f"alpha must have K={self.K} entries")
            b = np.asarray(self.B, dtype=float)
            if b.shape != (self.K, self.K):
                raise ValueError(f"B must be {self.K}x{self.K}")
            if not np.array_equal(b, b.T):
                raise ValueError("B must be symmetric")
            if not (np.all(np.isfinite(b)) and np.all(np.isfinite(self.alpha))):
                raise ValueError("alpha and B must be finite")
        if self.init == InitKind.GIVEN:
            raise ValueError("init 'given' is only available through the library API")
        return self


class SamplingConfig(_Block):
    planes: int = Field(default=6, ge=1)  # M for Independent2D, count for Serial3D
    delta_z: int = Field(default=1, ge=1)
    geometries: list[Geometry] = [
        Geometry.FULL_VOLUME,
        Geometry.SERIAL_3D,
        Geometry.INDEPENDENT_2D,
    ]
    positions_per_seed: int = Field(default=1, ge=1)


# ── Section statistics ──────────────────────────────────────────────


class StatsConfig(_Block):
    cells: str | None = None
    target_type: str | None = None
    radius: float = Field(default=30.0, gt=0.0)
    n_permutations: int = Field(default=1000, ge=1)
    M: int = Field(default=20, ge=1)
    k: int = Field(default=100, ge=0)
    trials: int = Field(default=1000, ge=1)


# ── Reconstruction ──────────────────────────────────────────────────


class MatchingConfig(_Block):
    cells: str | None = None
    delta_z: float | None = Field(default=None, gt=0.0)  # None → inferred from section spacing
    kappa: float = Field(default=1.0, gt=0.0)
    min_type_count: int = Field(default=20, ge=1)
    split_long_chains: bool = True
    write_matches: bool = False


class RadiusDist(_Block):
    mean: float = Field(gt=0.0)
    sd: float = Field(default=0.0, ge=0.0)
    min: float = Field(default=0.5, gt=0.0)
    weight: float = Field(default=1.0, gt=0.0)


class SphereStackConfig(_Block):
    n_cells: int = Field(default=300, ge=1)
    types: dict[str, RadiusDist]
    volume_dims: tuple[float, float, float] = (200.0, 200.0, 40.0)
    base_dz: float = Field(default=2.0, gt=0.0)
    max_tries: int = Field(default=200, ge=1)

    @field_validator("types")
    @classmethod
    def _nonempty(cls, v: dict[str, RadiusDist]) -> dict[str, RadiusDist]:
        if not v:
            raise ValueError("at least one cell type is required")
        return v


class EvaluationConfig(_Block):
    reference: str | None = None  # cells CSV with true_volume_id; else synthetic
    synthetic: SphereStackConfig | None = None
    base_dz: float | None = Field(default=None, gt=0.0)
    delta_zs: list[float] = [2.0, 4.0, 6.0, 8.0, 10.0]
    offsets: list[float] | None = None  # None → every residue
    hist_bin_width: float = Field(default=1.0, gt=0.0)

    @field_validator("delta_zs")
    @classmethod
    def _positive(cls, v: list[float]) -> list[float]:
        if not v or any(d <= 0 for d in v):
            raise ValueError("delta_zs must be a non-empty list of positive spacings")
        return v

    @model_validator(mode="after")
    def _one_reference(self) -> "EvaluationConfig":
        if (self.reference is None) == (self.synthetic is None):
            raise ValueError("give exactly one of 'reference' or 'synthetic'")
        if self.reference is not None and self.base_dz is None:
            raise ValueError("an external reference needs base_dz")
        return self


# ── Structures ──────────────────────────────────────────────────────


class StructuresConfig(_Block):
    cloud: str | None = None
    cells: str | None = None
    type_filter: list[str] = []
    link_radius: float | None = Field(default=None, gt=0.0)
    source_type: str | None = None
    target_type: str | None = None  # None → distance to the structures themselves
    band_radius: float = Field(default=20.0, gt=0.0)
    bins: int = Field(default=10, ge=2)
    value: ProfileValue = ProfileValue.COMPOSITION


# ── Advisory ────────────────────────────────────────────────────────


class AdviseConfig(_Block):
    recovery: str | None = None
    stability: str | None = None
    composition_ratio: float = Field(default=2.0, gt=0.0)
    interaction_ratio: float = Field(default=1.25, gt=0.0)
    enrichment_iqr: float = Field(default=1.0, gt=0.0)


class OutputConfig(_Block):
    dir: str = "out"
    run_log: str = "runs.jsonl"  # relative to dir


# ── Root config ─────────────────────────────────────────────────────


class ExperimentConfig(_Block):
    experiment: ExperimentInfo
    simulation: SimulationConfig | None = None
    sampling: SamplingConfig = SamplingConfig()
    estimation: MPLEConfig = MPLEConfig()
    stats: StatsConfig = StatsConfig()
    matching: MatchingConfig = MatchingConfig()
    evaluation: EvaluationConfig | None = None
    structures: StructuresConfig = StructuresConfig()
    advise: AdviseConfig = AdviseConfig()
    output: OutputConfig = OutputConfig()
