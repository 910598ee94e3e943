"""Run-log contracts.

Append-only JSONL: one record per pipeline event.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from datetime import datetime, timezone
from enum import Enum
from typing import Any

from pydantic import BaseModel, Field


class RunEvent(str, Enum):
    RUN_START = "run.start"
    STAGE_DONE = "stage.done"
    ARTIFACT_WRITE = "artifact.write"
    FIT_WARNING = "fit.warning"
    RUN_END = "run.end"
    RUN_ERROR = "run.error"


class RunEntry(BaseModel):
    """A single run-log record."""

    ts: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    run_id: str
    event: RunEvent
    command: str = ""
    config_hash: str = ""
    seed: int | None = None
    detail: dict[str, Any] = {}  # stage name, artifact path, row counts, etc.


class RunLogger(ABC):
    """Interface for the append-only run logger."""

    @abstractmethod
    def log(self, entry: RunEntry) -> None:
        """Append an entry to the run log."""
        ...

    @abstractmethod
    def query_by_run(self, run_id: str) -> list[RunEntry]:
        """Return all entries for a given run_id."""
        ...

    @abstractmethod
    def query_by_event(self, event: RunEvent, limit: int = 100) -> list[RunEntry]:
        """Return recent entries of a given event type."""
        ...

    @abstractmethod
    def tail(self, n: int = 20) -> list[RunEntry]:
        """Return the last N entries."""
        ...
