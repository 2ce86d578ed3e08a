"""Append-only NDJSON event log with strict sequence continuity.

One JSON object per line; seq starts at 1 and increases without gaps. The log
is the source of truth for all mutable service state: every mutation is
appended (and flushed) before it is acknowledged, and state is reconstructed
by replaying the log from the start.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

EVENT_KINDS = frozenset({
    "REPORT_INGESTED",
    "REPORT_REVIEWED",
    "BELIEF_UPDATED",
    "RUN_STARTED",
    "RUN_PROGRESS",
    "PLAN_COMPUTED",
    "STRATEGY_COMMITTED",
    "SESSION_CREATED",
})

# minimal required payload fields per kind
_PAYLOAD_FIELDS = {
    "REPORT_INGESTED": ("report",),
    "REPORT_REVIEWED": ("report_id", "decision", "reviewer"),
    "BELIEF_UPDATED": ("generation", "incorporated"),
    "RUN_STARTED": ("run_id", "session_id", "trigger"),
    "RUN_PROGRESS": ("run_id", "progress"),
    "PLAN_COMPUTED": ("run_id", "outcome"),
    "STRATEGY_COMMITTED": ("session_id", "strategy_id"),
    "SESSION_CREATED": ("session_id",),
}


class EventLogError(ValueError):
    pass


class SchemaError(EventLogError):
    pass


@dataclass(frozen=True)
class EventRecord:
    seq: int
    timestamp: float
    kind: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps({"seq": self.seq, "ts": self.timestamp,
                           "kind": self.kind, "payload": self.payload},
                          sort_keys=True, separators=(",", ":"))


def validate_payload(kind: str, payload: dict) -> None:
    if kind not in EVENT_KINDS:
        raise SchemaError(f"unknown event kind {kind!r}")
    if not isinstance(payload, dict):
        raise SchemaError("payload must be an object")
    missing = [f for f in _PAYLOAD_FIELDS[kind] if f not in payload]
    if missing:
        raise SchemaError(f"{kind} payload missing fields {missing}")


class EventLog:
    """Single-writer durable log; thread-safe appends."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_seq = 1
        if self.path.exists():
            for rec in read_log(self.path):
                self._next_seq = rec.seq + 1
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()

    def append(self, kind: str, payload: dict, timestamp: float = 0.0) -> EventRecord:
        validate_payload(kind, payload)
        with self._lock:
            rec = EventRecord(seq=self._next_seq, timestamp=timestamp,
                              kind=kind, payload=payload)
            with self.path.open("a") as fh:
                fh.write(rec.to_line() + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._next_seq += 1
            return rec

    @property
    def last_seq(self) -> int:
        return self._next_seq - 1

    def read_all(self) -> list[EventRecord]:
        return list(read_log(self.path))

    def read_since(self, since: int) -> list[EventRecord]:
        return [r for r in read_log(self.path) if r.seq > since]


def read_log(path: str | Path) -> Iterator[EventRecord]:
    """Parse a log file, enforcing gapless monotone seq from 1."""
    expected = 1
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EventLogError(
                    f"{path}:{lineno}: corrupt record (expected seq {expected}): {exc}")
            seq = doc.get("seq")
            if seq != expected:
                raise EventLogError(
                    f"{path}:{lineno}: sequence gap, found seq {seq}, "
                    f"expected {expected}")
            validate_payload(doc["kind"], doc["payload"])
            yield EventRecord(seq=seq, timestamp=doc.get("ts", 0.0),
                              kind=doc["kind"], payload=doc["payload"])
            expected += 1
