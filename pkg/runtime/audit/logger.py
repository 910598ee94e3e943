"""Append-only JSONL run logger.

Every CLI invocation appends to ``<output.dir>/<output.run_log>``; reads go
through :mod:`runtime.audit.query` so the CLI and the pipeline parse the file
the same way.
"""

from __future__ import annotations

import threading
from pathlib import Path

from contracts.audit import RunEntry, RunEvent, RunLogger
from runtime.audit import query


class JsonlRunLogger(RunLogger):
    """Thread-safe writer; one JSON object per line, never rewritten."""

    def __init__(self, path: str | Path) -> None:
        self._path = Path(path)
        self._lock = threading.Lock()
        self._path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def path(self) -> Path:
        return self._path

    def log(self, entry: RunEntry) -> None:
        record = entry.model_dump_json() + "\n"
        with self._lock, self._path.open("a", encoding="utf-8") as f:
            f.write(record)

    def query_by_run(self, run_id: str) -> list[RunEntry]:
        return query.query_by_run(self._path, run_id)

    def query_by_event(self, event: RunEvent, limit: int = 100) -> list[RunEntry]:
        return query.query_by_event(self._path, event, limit)

    def tail(self, n: int = 20) -> list[RunEntry]:
        return query.tail(self._path, n)
