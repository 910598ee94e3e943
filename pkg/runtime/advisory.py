"""Acquisition advisory: map measured stability gaps onto a fixed rule table.

Rules (thresholds from the ``advise`` config block):

- global composition: 2D sufficient while median MAE(alpha) of Independent2D
  stays under ``composition_ratio`` x that of Serial3D.
- local interactions: serial + reconstruction when median MAE(B) of
  Independent2D reaches ``interaction_ratio`` x Serial3D, when its variance
  across seeds does, or when the median enrichment-z IQR across sections
  reaches ``enrichment_iqr``; 2D sufficient otherwise.
- structures / gradients: serial + reconstruction whenever any run evidence
  exists, since continuity across depth is unobservable in isolated sections.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from contracts.advisory import AdvisoryReport, AnalysisGoal, GoalAdvice, Recommendation
from contracts.estimation import GeometrySummary
from contracts.experiment import AdviseConfig
from contracts.observation import Geometry

INSUFFICIENT = "insufficient evidence"

_Pair = tuple[GeometrySummary, GeometrySummary] | None


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 1.0 if num == 0 else float("inf")


def _pair(summaries: Sequence[GeometrySummary]) -> _Pair:
    by_geo = {s.geometry: s for s in summaries}
    if Geometry.INDEPENDENT_2D in by_geo and Geometry.SERIAL_3D in by_geo:
        return by_geo[Geometry.INDEPENDENT_2D], by_geo[Geometry.SERIAL_3D]
    return None


def _composition(pair: _Pair, config: AdviseConfig) -> GoalAdvice:
    goal = AnalysisGoal.GLOBAL_COMPOSITION
    if pair is None:
        return GoalAdvice(goal=goal, recommendation=Recommendation.INSUFFICIENT_EVIDENCE, rationale="no paired 2D/serial recovery summary")
    flat, serial = pair
    ratio = _ratio(flat.median_mae_alpha, serial.median_mae_alpha)
    evidence = {"mae_alpha_ratio_2d_serial": ratio, "threshold": config.composition_ratio}
    if ratio < config.composition_ratio:
        return GoalAdvice(
            goal=goal,
            recommendation=Recommendation.TWO_D_SUFFICIENT,
            rationale=f"prevalence error of 2D is {ratio:.2f}x serial, under {config.composition_ratio}x",
            evidence=evidence,
        )
    return GoalAdvice(
        goal=goal,
        recommendation=Recommendation.SERIAL_RECONSTRUCTION,
        rationale=f"prevalence error of 2D is {ratio:.2f}x serial, at or above {config.composition_ratio}x",
        evidence=evidence,
    )


def _interactions(pair: _Pair, enrichment_iqr: float | None, config: AdviseConfig) -> GoalAdvice:
    goal = AnalysisGoal.LOCAL_INTERACTIONS
    if pair is None and enrichment_iqr is None:
        return GoalAdvice(goal=goal, recommendation=Recommendation.INSUFFICIENT_EVIDENCE, rationale="no recovery or stability run")
    reasons: list[str] = []
    evidence: dict[str, float] = {}
    if pair is not None:
        flat, serial = pair
        mae_ratio = _ratio(flat.median_mae_B, serial.median_mae_B)
        var_ratio = _ratio(flat.var_mae_B, serial.var_mae_B)
        evidence.update(mae_B_ratio_2d_serial=mae_ratio, var_mae_B_ratio_2d_serial=var_ratio)
        if mae_ratio >= config.interaction_ratio:
            reasons.append(f"interaction error of 2D is {mae_ratio:.2f}x serial")
        if var_ratio >= config.interaction_ratio:
            reasons.append(f"interaction error of 2D varies {var_ratio:.2f}x more across seeds")
    if enrichment_iqr is not None:
        evidence["median_enrichment_iqr"] = enrichment_iqr
        if enrichment_iqr >= config.enrichment_iqr:
            reasons.append(f"enrichment z spreads by IQR {enrichment_iqr:.2f} across sections")
    if reasons:
        return GoalAdvice(goal=goal, recommendation=Recommendation.SERIAL_RECONSTRUCTION, rationale="; ".join(reasons), evidence=evidence)
    return GoalAdvice(
        goal=goal,
        recommendation=Recommendation.TWO_D_SUFFICIENT,
        rationale="interaction estimates are as stable in 2D as in serial sections",
        evidence=evidence,
    )


def _structures(has_evidence: bool) -> GoalAdvice:
    goal = AnalysisGoal.STRUCTURES
    if not has_evidence:
        return GoalAdvice(goal=goal, recommendation=Recommendation.INSUFFICIENT_EVIDENCE, rationale="no completed run")
    return GoalAdvice(
        goal=goal,
        recommendation=Recommendation.SERIAL_RECONSTRUCTION,
        rationale="structure continuity and along-structure gradients need depth linkage",
    )


def advise(
    summaries: Sequence[GeometrySummary] | None,
    stability_iqrs: Sequence[float] | None,
    config: AdviseConfig | None = None,
) -> AdvisoryReport:
    """Apply the rule table to recovery summaries and per-partner enrichment IQRs."""
    config = config or AdviseConfig()
    pair = _pair(summaries or [])
    iqrs = [v for v in (stability_iqrs or []) if v is not None and np.isfinite(v)]
    enrichment_iqr = float(np.median(iqrs)) if iqrs else None
    has_evidence = pair is not None or enrichment_iqr is not None
    return AdvisoryReport(
        status="ok" if has_evidence else INSUFFICIENT,
        goals=[
            _composition(pair, config),
            _interactions(pair, enrichment_iqr, config),
            _structures(has_evidence),
        ],
    )


def render_text(report: AdvisoryReport) -> str:
    """Plain-text table of the report."""
    rows = [("goal", "recommendation", "rationale")]
    rows += [(g.goal.value, g.recommendation.value, g.rationale) for g in report.goals]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    lines = [f"status: {report.status}"]
    for n, (a, b, c) in enumerate(rows):
        lines.append(f"{a:<{w0}}  {b:<{w1}}  {c}")
        if n == 0:
            lines.append(f"{'-' * w0}  {'-' * w1}  {'-' * 9}")
    return "\n".join(lines) + "\n"
