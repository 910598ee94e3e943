"""Shared contracts: source of truth for all depthkit data types."""

from contracts.errors import (
    ConfigError,
    ContractViolation,
    DepthkitError,
    InvalidBudgetError,
    InvalidInputError,
    NumericError,
    SchemaError,
)
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams, Neighborhood
from contracts.observation import Geometry, ObservationSet
from contracts.estimation import FitResult, MPLEConfig, RecoveryReport
from contracts.cells import CellChain, CellRecord, MatchResult, SectionTable, SizeStats
from contracts.stats import DetectabilityResult, EnrichmentResult, StabilityProfile
from contracts.evaluation import CoverageReport, ReferenceStack
from contracts.structures import DistanceComparison, ProfileBin, Structure3D
from contracts.advisory import AdvisoryReport, AnalysisGoal, Recommendation
from contracts.audit import RunEntry, RunEvent, RunLogger
from contracts.experiment import ExperimentConfig

__all__ = [
    # errors
    "ConfigError",
    "ContractViolation",
    "DepthkitError",
    "InvalidBudgetError",
    "InvalidInputError",
    "NumericError",
    "SchemaError",
    # lattice
    "LabelVolume",
    "LatticeSpec",
    "MRFParams",
    "Neighborhood",
    # observation
    "Geometry",
    "ObservationSet",
    # estimation
    "FitResult",
    "MPLEConfig",
    "RecoveryReport",
    # cells
    "CellChain",
    "CellRecord",
    "MatchResult",
    "SectionTable",
    "SizeStats",
    # stats
    "DetectabilityResult",
    "EnrichmentResult",
    "StabilityProfile",
    # evaluation
    "CoverageReport",
    "ReferenceStack",
    # structures
    "DistanceComparison",
    "ProfileBin",
    "Structure3D",
    # advisory
    "AdvisoryReport",
    "AnalysisGoal",
    "Recommendation",
    # audit
    "RunEntry",
    "RunEvent",
    "RunLogger",
    # config
    "ExperimentConfig",
]
