"""Acquisition advisory contracts: rule-of-thumb recommendations per analysis goal."""

from __future__ import annotations

from enum import Enum
from typing import Any

from pydantic import BaseModel


class AnalysisGoal(str, Enum):
    GLOBAL_COMPOSITION = "global_composition"
    LOCAL_INTERACTIONS = "local_interactions"
    STRUCTURES = "structures_gradients"


class Recommendation(str, Enum):
    TWO_D_SUFFICIENT = "2D sufficient"
    SERIAL_RECONSTRUCTION = "serial + reconstruction"
    INSUFFICIENT_EVIDENCE = "insufficient evidence"


class GoalAdvice(BaseModel):
    goal: AnalysisGoal
    recommendation: Recommendation
    rationale: str
    evidence: dict[str, Any] = {}


class AdvisoryReport(BaseModel):
    status: str  # "ok" | "insufficient evidence"
    goals: list[GoalAdvice] = []
