"""Unit tests for the run logger and query helpers."""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from contracts.audit import RunEntry, RunEvent
from contracts.errors import SchemaError
from runtime.audit import query as run_query
from runtime.audit.logger import JsonlRunLogger


# ── helpers ─────────────────────────────────────────────────────────


def _entry(
    run_id: str = "run-1",
    event: RunEvent = RunEvent.RUN_START,
    command: str = "simulate",
    ts: datetime | None = None,
) -> RunEntry:
    if ts is None:
        return RunEntry(run_id=run_id, event=event, command=command)
    return RunEntry(run_id=run_id, event=event, command=command, ts=ts)


# ── logger tests ────────────────────────────────────────────────────


class TestJsonlRunLogger:
    def test_log_creates_file_and_parent(self, tmp_path: Path) -> None:
        log_file = tmp_path / "out" / "runs.jsonl"
        logger = JsonlRunLogger(log_file)
        logger.log(_entry())
        assert log_file.exists()
        assert logger.path == log_file

    def test_log_appends_lines(self, tmp_path: Path) -> None:
        log_file = tmp_path / "runs.jsonl"
        logger = JsonlRunLogger(log_file)
        logger.log(_entry(run_id="r1"))
        logger.log(_entry(run_id="r2"))
        lines = log_file.read_text().strip().split("\n")
        assert len(lines) == 2

    def test_detail_round_trips(self, tmp_path: Path) -> None:
        logger = JsonlRunLogger(tmp_path / "runs.jsonl")
        entry = RunEntry(
            run_id="r1", event=RunEvent.ARTIFACT_WRITE, seed=42, detail={"path": "out/a.csv", "rows": 3}
        )
        logger.log(entry)
        (back,) = logger.tail(1)
        assert back == entry

    def test_query_by_run(self, tmp_path: Path) -> None:
        logger = JsonlRunLogger(tmp_path / "runs.jsonl")
        logger.log(_entry(run_id="r1", event=RunEvent.RUN_START))
        logger.log(_entry(run_id="r2", event=RunEvent.STAGE_DONE))
        logger.log(_entry(run_id="r1", event=RunEvent.RUN_END))

        results = logger.query_by_run("r1")
        assert [e.event for e in results] == [RunEvent.RUN_START, RunEvent.RUN_END]

    def test_query_by_event_limit(self, tmp_path: Path) -> None:
        logger = JsonlRunLogger(tmp_path / "runs.jsonl")
        for i in range(10):
            logger.log(_entry(run_id=f"r{i}", event=RunEvent.FIT_WARNING))
        logger.log(_entry(event=RunEvent.RUN_END))

        results = logger.query_by_event(RunEvent.FIT_WARNING, limit=3)
        assert len(results) == 3
        assert results[0].run_id == "r7"

    def test_tail_empty_log(self, tmp_path: Path) -> None:
        assert JsonlRunLogger(tmp_path / "runs.jsonl").tail(5) == []

    def test_concurrent_writers_keep_lines_whole(self, tmp_path: Path) -> None:
        logger = JsonlRunLogger(tmp_path / "runs.jsonl")

        def write(prefix: str) -> None:
            for i in range(50):
                logger.log(_entry(run_id=f"{prefix}{i}", event=RunEvent.ARTIFACT_WRITE))

        threads = [threading.Thread(target=write, args=(p,)) for p in "abcd"]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(logger.tail(1000)) == 200


# ── standalone query function tests ─────────────────────────────────


class TestRunQueryFunctions:
    def test_query_by_run(self, tmp_path: Path) -> None:
        log_file = tmp_path / "runs.jsonl"
        logger = JsonlRunLogger(log_file)
        logger.log(_entry(run_id="r1"))
        logger.log(_entry(run_id="r2"))
        assert len(run_query.query_by_run(log_file, "r1")) == 1

    def test_tail(self, tmp_path: Path) -> None:
        log_file = tmp_path / "runs.jsonl"
        logger = JsonlRunLogger(log_file)
        for i in range(5):
            logger.log(_entry(run_id=f"r{i}"))
        results = run_query.tail(log_file, 2)
        assert [e.run_id for e in results] == ["r3", "r4"]

    def test_query_filtered(self, tmp_path: Path) -> None:
        log_file = tmp_path / "runs.jsonl"
        logger = JsonlRunLogger(log_file)
        t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
        logger.log(_entry(run_id="r1", command="simulate", event=RunEvent.RUN_END, ts=t0))
        logger.log(_entry(run_id="r2", command="stats", event=RunEvent.RUN_END, ts=t0 + timedelta(hours=1)))
        logger.log(_entry(run_id="r3", command="simulate", event=RunEvent.RUN_END, ts=t0 + timedelta(hours=2)))
        logger.log(_entry(run_id="r3", command="simulate", event=RunEvent.RUN_START, ts=t0 + timedelta(hours=2)))

        by_command = run_query.query_filtered(log_file, event=RunEvent.RUN_END, command="simulate")
        assert [e.run_id for e in by_command] == ["r3", "r1"]
        recent = run_query.query_filtered(log_file, since=t0 + timedelta(minutes=30), limit=2)
        assert len(recent) == 2
        assert all(e.run_id in {"r2", "r3"} for e in recent)
        assert run_query.query_filtered(log_file, run_id="r2")[0].command == "stats"

    def test_missing_file_returns_empty(self, tmp_path: Path) -> None:
        log_file = tmp_path / "nonexistent.jsonl"
        assert run_query.tail(log_file, 5) == []
        assert run_query.query_by_run(log_file, "x") == []
        assert run_query.query_by_event(log_file, RunEvent.RUN_ERROR) == []
        assert run_query.query_filtered(log_file) == []

    def test_corrupt_line_names_the_line(self, tmp_path: Path) -> None:
        log_file = tmp_path / "runs.jsonl"
        JsonlRunLogger(log_file).log(_entry(run_id="r1"))
        with log_file.open("a", encoding="utf-8") as f:
            f.write('{"run_id": "r2"}\n')
        with pytest.raises(SchemaError, match=":2:"):
            run_query.tail(log_file)

    def test_blank_lines_are_skipped(self, tmp_path: Path) -> None:
        log_file = tmp_path / "runs.jsonl"
        JsonlRunLogger(log_file).log(_entry(run_id="r1"))
        with log_file.open("a", encoding="utf-8") as f:
            f.write("\n\n")
        assert [e.run_id for e in run_query.read_entries(log_file)] == ["r1"]
