"""Pseudo-likelihood estimation contracts: fit configuration, fit results, recovery scores."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from contracts.lattice import MRFParams
from contracts.observation import Geometry


class Gauge(str, Enum):
    ALPHA_LAST_ZERO = "alpha_last_zero"


class OptimizerKind(str, Enum):
    LBFGS = "lbfgs_like"
    GRADIENT_DESCENT = "gradient_descent"


class MPLEConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    lam: float = Field(default=1e-3, ge=0.0, alias="lambda")
    max_iters: int = Field(default=500, ge=1)
    grad_tolerance: float = Field(default=1e-5, gt=0.0)
    gauge: Gauge = Gauge.ALPHA_LAST_ZERO
    optimizer: OptimizerKind = OptimizerKind.LBFGS
    alpha_bound: float = Field(default=30.0, gt=0.0)


class FitResult(BaseModel):
    """Fitted parameters plus optimizer diagnostics."""

    params: MRFParams
    converged: bool
    iterations: int
    objective: float
    grad_norm: float
    optimizer: OptimizerKind
    clamped: bool = False  # some alpha entry sits on the +/- alpha_bound cap
    history: list[float] = []  # penalised objective after each accepted step

    @property
    def warning(self) -> str | None:
        if self.converged:
            return None
        return (
            f"not converged after {self.iterations} iterations "
            f"(|grad|_inf={self.grad_norm:.3g})"
        )


class RecoveryReport(BaseModel):
    """Blockwise MAE/RMSE of gauge-fixed estimates against ground truth."""

    geometry: Geometry | None = None
    seed: int | None = None
    budget: int | None = None
    plane_zs: tuple[int, ...] = ()
    mae_alpha: float = Field(ge=0.0)
    rmse_alpha: float = Field(ge=0.0)
    mae_B: float = Field(ge=0.0)
    rmse_B: float = Field(ge=0.0)
    converged: bool = True

    @model_validator(mode="after")
    def _rmse_dominates(self) -> "RecoveryReport":
        tol = 1e-12
        if self.rmse_alpha + tol < self.mae_alpha or self.rmse_B + tol < self.mae_B:
            raise ValueError("rmse must be >= mae")
        return self


class GeometrySummary(BaseModel):
    """Spread of recovery errors for one geometry across trials."""

    geometry: Geometry
    n_trials: int
    median_mae_alpha: float
    median_mae_B: float
    iqr_mae_B: float
    var_mae_B: float
    var_mae_B_by_position: float  # variance over distinct plane selections within a seed


class SignTest(BaseModel):
    """Paired sign test of ``first`` > ``second`` on a per-seed error metric."""

    first: Geometry
    second: Geometry
    metric: str
    n_pairs: int
    n_first_larger: int
    p_value: float
