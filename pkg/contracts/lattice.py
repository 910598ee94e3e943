"""Lattice tissue model contracts: lattice geometry, MRF parameters, label volumes.

Labels are 1-based ({1..K}) in every file format and 0-based in memory.
Conversion happens only in ``runtime.io.volume``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from contracts.errors import InvalidInputError


class Neighborhood(str, Enum):
    N6 = "N6"
    N26 = "N26"


class LatticeSpec(BaseModel):
    """Dimensions and adjacency of a 3D lattice graph."""

    model_config = ConfigDict(frozen=True)

    dims: tuple[int, int, int]
    neighborhood: Neighborhood = Neighborhood.N26

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, v: tuple[int, int, int]) -> tuple[int, int, int]:
        if any(d < 1 for d in v):
            raise ValueError(f"all dims must be >= 1, got {v}")
        return v

    @property
    def n_sites(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def contains(self, site: tuple[int, int, int]) -> bool:
        return all(0 <= s < d for s, d in zip(site, self.dims))


class MRFParams(BaseModel):
    """Unary field ``alpha`` (length K) and symmetric pairwise affinities ``B`` (K×K)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    K: int = Field(ge=2)
    alpha: tuple[float, ...]
    B: tuple[tuple[float, ...], ...]
    lam: float = Field(default=0.0, ge=0.0, alias="lambda")

    @model_validator(mode="after")
    def _check_shapes(self) -> "MRFParams":
        if len(self.alpha) != self.K:
            raise ValueError(f"alpha has length {len(self.alpha)}, expected K={self.K}")
        b = np.asarray(self.B, dtype=float)
        if b.shape != (self.K, self.K):
            raise ValueError(f"B has shape {b.shape}, expected ({self.K}, {self.K})")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(self.alpha))):
            raise ValueError("alpha and B must be finite")
        if not np.array_equal(b, b.T):
            raise ValueError("B must be symmetric")
        return self

    @classmethod
    def from_arrays(
        cls, alpha: np.ndarray, B: np.ndarray, lam: float = 0.0
    ) -> "MRFParams":
        """Build from arrays, symmetrising ``B`` exactly as ``(B + B.T) / 2``."""
        a = np.asarray(alpha, dtype=float)
        b = np.asarray(B, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InvalidInputError(f"B must be square, got shape {b.shape}")
        b = 0.5 * (b + b.T)
        return cls(
            K=a.shape[0],
            alpha=tuple(float(x) for x in a),
            B=tuple(tuple(float(x) for x in row) for row in b),
            lam=lam,
        )

    @property
    def alpha_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @property
    def B_array(self) -> np.ndarray:
        return np.asarray(self.B, dtype=float)

    def gauge_fixed(self) -> "MRFParams":
        """Return the gauge-equivalent parameters with ``alpha[K-1] == 0``."""
        a = self.alpha_array
        return MRFParams.from_arrays(a - a[-1], self.B_array, self.lam)


@dataclass(frozen=True)
class LabelVolume:
    """A sampled tissue configuration on a lattice.

    ``labels`` has shape ``spec.dims`` and holds 0-based type indices.
    The array is marked read-only; samplers work on private copies.
    """

    spec: LatticeSpec
    labels: np.ndarray
    K: int
    seed: int | None = None
    sweeps: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.array(self.labels, dtype=np.int64, order="C", copy=True)
        if arr.shape != tuple(self.spec.dims):
            raise InvalidInputError(
                f"labels shape {arr.shape} does not match dims {self.spec.dims}"
            )
        if arr.size and (arr.min() < 0 or arr.max() >= self.K):
            raise InvalidInputError(f"labels outside 0..{self.K - 1}")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def flat(self) -> np.ndarray:
        """Labels as a flat array of length nx·ny·nz (C order)."""
        return self.labels.reshape(-1)

    def with_labels(self, labels: np.ndarray, **changes: object) -> "LabelVolume":
        return LabelVolume(
            spec=self.spec,
            labels=labels,
            K=self.K,
            seed=changes.get("seed", self.seed),  # type: ignore[arg-type]
            sweeps=changes.get("sweeps", self.sweeps),  # type: ignore[arg-type]
            meta=dict(self.meta),
        )
