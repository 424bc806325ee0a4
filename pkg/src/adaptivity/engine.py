"""Model registry, live profiles and event logging behind one object.

Both the HTTP service and the in-process simulator drive this class. Each
student has its own lock; a request computes on a copy of the profile,
appends its events, and only then publishes the copy.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path
from typing import Callable
from urllib.parse import quote

from adaptivity._docs import dumps
from adaptivity.config import AdaptationConfig
from adaptivity.errors import DuplicateModel, UnknownGraph, UnknownStudent
from adaptivity.events import (
    FEATURE_OPENED,
    FEATURE_REOPENED,
    PROFILE_CREATED,
    RESULT_SUBMITTED,
    ROLLBACK_APPLIED,
    SESSION_PLANNED,
    EventRecord,
    JsonlEventStore,
    MemoryEventStore,
    replay,
    utc_now,
)
from adaptivity.graph import FeatureGraph, load_graph
from adaptivity.planner import SessionOutcome, SessionPlan, SessionResult, plan_session, submit_result
from adaptivity.profile import StudentProfile, instantiate_profile
from adaptivity.resources import Lexicon, load_lexicon

log = logging.getLogger(__name__)


class Engine:
    def __init__(self, config: AdaptationConfig | None = None, data_dir: str | os.PathLike | None = None,
                 clock: Callable[[], str] = utc_now, fsync: bool = False):
        self.config = config or AdaptationConfig()
        self.clock = clock
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._models: dict[str, tuple[FeatureGraph, Lexicon]] = {}
        self._profiles: dict[str, StudentProfile] = {}
        self._student_locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        if self.data_dir is None:
            self.store = MemoryEventStore()
        else:
            self.store = JsonlEventStore(self.data_dir / "events", fsync=fsync)
            self._load_models()
            for sid in self.store.students():
                self._profiles[sid] = replay(self.store.read(sid))
                self._student_locks[sid] = threading.Lock()

    # -- models -------------------------------------------------------------

    def _load_models(self) -> None:
        model_dir = self.data_dir / "models"
        for path in sorted(model_dir.glob("*.json")) if model_dir.exists() else ():
            doc = json.loads(path.read_text(encoding="utf-8"))
            graph = load_graph(doc["graph"])
            self._models[graph.graph_id] = (graph, load_lexicon(doc["lexicon"], graph))

    def register_model(self, graph_doc, lexicon_doc) -> tuple[str, str]:
        graph = load_graph(graph_doc)
        lexicon = load_lexicon(lexicon_doc, graph)
        with self._registry_lock:
            if graph.graph_id in self._models:
                raise DuplicateModel(graph.graph_id)
            if self.data_dir is not None:
                model_dir = self.data_dir / "models"
                model_dir.mkdir(parents=True, exist_ok=True)
                path = model_dir / f"{quote(graph.graph_id, safe='')}.json"
                path.write_text(dumps({"graph": graph.to_doc(), "lexicon": lexicon.to_doc()}), encoding="utf-8")
            self._models[graph.graph_id] = (graph, lexicon)
        log.info("registered graph %s with lexicon %s", graph.graph_id, lexicon.lexicon_id)
        return graph.graph_id, lexicon.lexicon_id

    def model(self, graph_id: str) -> tuple[FeatureGraph, Lexicon]:
        try:
            return self._models[graph_id]
        except KeyError:
            raise UnknownGraph(graph_id) from None

    # -- students -----------------------------------------------------------

    def _emit(self, student_id: str, entries: list[tuple[str, dict]]) -> list[EventRecord]:
        seq = self.store.last_sequence(student_id)
        records = [EventRecord(seq + i, self.clock(), student_id, kind, payload)
                   for i, (kind, payload) in enumerate(entries, start=1)]
        self.store.append(student_id, records)
        return records

    def create_student(self, graph_id: str, age_level: int, student_id: str | None = None) -> StudentProfile:
        graph, _ = self.model(graph_id)
        with self._registry_lock:
            if student_id is None:
                n = len(self._profiles) + 1
                while f"s{n:06d}" in self._profiles:
                    n += 1
                student_id = f"s{n:06d}"
            elif student_id in self._profiles:
                raise DuplicateModel(f"student {student_id!r} exists")
            profile = instantiate_profile(graph, student_id, age_level, self.config.scale)
            payload = {"profile": profile.to_doc(), "config": self.config.to_doc()}
            self._emit(student_id, [(PROFILE_CREATED, payload)])
            self._profiles[student_id] = profile
            self._student_locks[student_id] = threading.Lock()
        return profile.copy()

    def _lock(self, student_id: str) -> threading.Lock:
        try:
            return self._student_locks[student_id]
        except KeyError:
            raise UnknownStudent(student_id) from None

    def profile(self, student_id: str) -> StudentProfile:
        with self._lock(student_id):
            return self._profiles[student_id].copy()

    def next_session(self, student_id: str) -> SessionPlan:
        with self._lock(student_id):
            profile = self._profiles[student_id]
            graph, lexicon = self.model(profile.graph_id)
            plan = plan_session(profile, graph, lexicon, self.config)
            self._emit(student_id, [(SESSION_PLANNED, {"plan": plan.to_doc()})])
            return plan

    def submit(self, student_id: str, result: SessionResult) -> SessionOutcome:
        with self._lock(student_id):
            live = self._profiles[student_id]
            graph, _ = self.model(live.graph_id)
            work = live.copy()
            outcome = submit_result(work, graph, result, self.config)
            states = work.states
            entries = [(RESULT_SUBMITTED, {
                "result": result.to_doc(),
                "outcome": outcome.to_doc(),
                "session_counter": work.session_counter,
                "state": states[outcome.feature_id].to_doc(),
            })]
            if outcome.rollback_applied:
                entries.append((ROLLBACK_APPLIED, {
                    "feature_id": outcome.feature_id,
                    "delta": self.config.stagnation_delta,
                    "states": {fid: states[fid].to_doc() for fid in outcome.rollback_applied},
                }))
            for fid in outcome.reopened:
                entries.append((FEATURE_REOPENED, {"feature_id": fid, "state": states[fid].to_doc()}))
            for fid in outcome.newly_opened:
                entries.append((FEATURE_OPENED, {"feature_id": fid, "session_ordinal": outcome.session_ordinal,
                                                 "state": states[fid].to_doc()}))
            self._emit(student_id, entries)
            self._profiles[student_id] = work
            return outcome

    def events(self, student_id: str, since: int = 0) -> list[EventRecord]:
        with self._lock(student_id):
            return [e for e in self.store.read(student_id) if e.sequence_no > since]

    def log_path(self, student_id: str) -> Path | None:
        if isinstance(self.store, JsonlEventStore):
            return self.store.path_for(student_id)
        return None
