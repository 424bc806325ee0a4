"""Append-only per-student event log and the pure reducer that replays it."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable
from urllib.parse import quote

from adaptivity._docs import dumps
from adaptivity.errors import CorruptLog
from adaptivity.profile import FeatureState, StudentProfile

PROFILE_CREATED = "profile_created"
SESSION_PLANNED = "session_planned"
RESULT_SUBMITTED = "result_submitted"
FEATURE_OPENED = "feature_opened"
FEATURE_REOPENED = "feature_reopened"
ROLLBACK_APPLIED = "rollback_applied"
KINDS = (PROFILE_CREATED, SESSION_PLANNED, RESULT_SUBMITTED, FEATURE_OPENED, FEATURE_REOPENED, ROLLBACK_APPLIED)


@dataclass(frozen=True)
class EventRecord:
    sequence_no: int
    timestamp: str
    student_id: str
    kind: str
    payload: dict

    def to_doc(self) -> dict:
        return {"sequence_no": self.sequence_no, "timestamp": self.timestamp, "student_id": self.student_id,
                "kind": self.kind, "payload": self.payload}

    def to_line(self) -> str:
        return dumps(self.to_doc()) + "\n"

    @classmethod
    def from_doc(cls, doc: dict) -> "EventRecord":
        keys = {"sequence_no", "timestamp", "student_id", "kind", "payload"}
        if not isinstance(doc, dict) or set(doc) != keys:
            raise ValueError(f"expected keys {sorted(keys)}")
        if doc["kind"] not in KINDS:
            raise ValueError(f"unknown event kind {doc['kind']!r}")
        if isinstance(doc["sequence_no"], bool) or not isinstance(doc["sequence_no"], int):
            raise ValueError("sequence_no must be an integer")
        if not isinstance(doc["payload"], dict):
            raise ValueError("payload must be an object")
        return cls(doc["sequence_no"], doc["timestamp"], doc["student_id"], doc["kind"], doc["payload"])


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


def logical_clock(start: datetime = datetime(2020, 1, 1, tzinfo=timezone.utc)) -> Callable[[], str]:
    """A clock that ticks one second per call, for reproducible logs."""
    tick = [0]

    def now() -> str:
        ts = start.timestamp() + tick[0]
        tick[0] += 1
        return datetime.fromtimestamp(ts, timezone.utc).isoformat().replace("+00:00", "Z")

    return now


# -- reducer ----------------------------------------------------------------

def apply_event(profile: StudentProfile | None, event: EventRecord) -> StudentProfile | None:
    """Fold one event into a profile. Payloads carry post-event feature states."""
    p = event.payload
    if event.kind == PROFILE_CREATED:
        return StudentProfile.from_doc(p["profile"])
    if profile is None:
        raise ValueError(f"event {event.sequence_no} precedes profile_created")
    if event.kind == RESULT_SUBMITTED:
        profile.session_counter = p["session_counter"]
        profile.states[p["outcome"]["feature_id"]] = FeatureState.from_doc(p["state"])
    elif event.kind == ROLLBACK_APPLIED:
        for fid, doc in p["states"].items():
            profile.states[fid] = FeatureState.from_doc(doc)
    elif event.kind in (FEATURE_OPENED, FEATURE_REOPENED):
        profile.states[p["feature_id"]] = FeatureState.from_doc(p["state"])
    return profile


def replay(events: Iterable[EventRecord]) -> StudentProfile | None:
    profile = None
    for event in events:
        profile = apply_event(profile, event)
    return profile


# -- storage ----------------------------------------------------------------

def read_log(path: str | os.PathLike) -> list[EventRecord]:
    """Read a JSON Lines event log; raises CorruptLog naming the bad line."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if not line.endswith("\n"):
                raise CorruptLog(line_no, "truncated line")
            try:
                events.append(EventRecord.from_doc(json.loads(line)))
            except (json.JSONDecodeError, ValueError, KeyError) as exc:
                raise CorruptLog(line_no, str(exc)) from exc
    return events


class MemoryEventStore:
    def __init__(self):
        self._logs: dict[str, list[EventRecord]] = {}
        self._lock = threading.Lock()

    def students(self) -> list[str]:
        return sorted(self._logs)

    def read(self, student_id: str) -> list[EventRecord]:
        return list(self._logs.get(student_id, ()))

    def last_sequence(self, student_id: str) -> int:
        log = self._logs.get(student_id)
        return log[-1].sequence_no if log else 0

    def append(self, student_id: str, records: list[EventRecord]) -> None:
        with self._lock:
            self._logs.setdefault(student_id, []).extend(records)


class JsonlEventStore(MemoryEventStore):
    """One ``<student>.jsonl`` file per student under ``root``.

    Existing logs are loaded at construction; records are cached in memory
    after a successful write.
    """

    def __init__(self, root: str | os.PathLike, fsync: bool = False):
        super().__init__()
        self.root = Path(root)
        self.fsync = fsync
        self.root.mkdir(parents=True, exist_ok=True)
        for path in sorted(self.root.glob("*.jsonl")):
            records = read_log(path)
            if records:
                self._logs[records[0].student_id] = records

    def path_for(self, student_id: str) -> Path:
        return self.root / f"{quote(student_id, safe='')}.jsonl"

    def append(self, student_id: str, records: list[EventRecord]) -> None:
        data = "".join(r.to_line() for r in records)
        with open(self.path_for(student_id), "a", encoding="utf-8") as fh:
            fh.write(data)
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
        super().append(student_id, records)
