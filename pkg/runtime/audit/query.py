"""Run-log query helpers.

Read-only functions over a JSONL run log, usable without a logger instance
(``depthkit logs``).
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path

from pydantic import ValidationError

from contracts.audit import RunEntry, RunEvent
from contracts.errors import SchemaError


def read_entries(log_path: str | Path) -> list[RunEntry]:
    """All entries in file order; a missing log reads as empty."""
    p = Path(log_path)
    if not p.exists():
        return []
    entries: list[RunEntry] = []
    with p.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                entries.append(RunEntry.model_validate_json(raw))
            except ValidationError as exc:
                raise SchemaError(f"{p}:{lineno}: not a run-log entry ({exc.error_count()} error(s))") from exc
    return entries


def query_by_run(log_path: str | Path, run_id: str) -> list[RunEntry]:
    return [e for e in read_entries(log_path) if e.run_id == run_id]


def query_by_event(log_path: str | Path, event: RunEvent, limit: int = 100) -> list[RunEntry]:
    """The most recent ``limit`` entries of one event type, oldest first."""
    return [e for e in read_entries(log_path) if e.event == event][-limit:]


def tail(log_path: str | Path, n: int = 20) -> list[RunEntry]:
    return read_entries(log_path)[-n:]


def query_filtered(
    log_path: str | Path,
    *,
    event: RunEvent | None = None,
    command: str | None = None,
    since: datetime | None = None,
    run_id: str | None = None,
    limit: int = 100,
) -> list[RunEntry]:
    """Filtered entries, most recent first."""
    entries = [
        e
        for e in read_entries(log_path)
        if (event is None or e.event == event)
        and (command is None or e.command == command)
        and (run_id is None or e.run_id == run_id)
        and (since is None or e.ts >= since)
    ]
    entries.sort(key=lambda e: e.ts, reverse=True)
    return entries[:limit]
