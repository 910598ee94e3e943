"""Type-conditional cross-section size statistics."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable

import numpy as np

from contracts.cells import CellRecord, SizeStats, TypeSizeStats
from contracts.errors import InvalidInputError

DEFAULT_MIN_COUNT = 20


def _stats_for(type_label: str, areas: np.ndarray) -> TypeSizeStats:
    p10, median, p90 = np.percentile(areas, [10, 50, 90])
    return TypeSizeStats(
        type_label=type_label,
        n=int(areas.size),
        median_area=float(median),
        p10_area=float(p10),
        p90_area=float(p90),
    )


def compute_size_stats(cells: Iterable[CellRecord], min_count: int = DEFAULT_MIN_COUNT) -> SizeStats:
    """Median / p10 / p90 area per type.

    Types with fewer than *min_count* cells are flagged ``low_confidence`` and
    carry the pooled statistics of all cells instead of their own.
    """
    by_type: dict[str, list[float]] = defaultdict(list)
    for c in cells:
        if not c.area > 0:
            raise InvalidInputError(f"cell {c.cell_id} has nonpositive area")
        by_type[c.type_label].append(c.area)
    if not by_type:
        raise InvalidInputError("size statistics need at least one cell")

    pooled = _stats_for("*", np.concatenate([np.asarray(v) for v in by_type.values()]))
    per_type = {}
    for t in sorted(by_type):
        areas = np.asarray(by_type[t], dtype=float)
        if areas.size < min_count:
            per_type[t] = pooled.model_copy(update={"type_label": t, "n": int(areas.size), "low_confidence": True})
        else:
            per_type[t] = _stats_for(t, areas)
    return SizeStats(per_type=per_type, pooled=pooled)
