"""Drive synthetic students through the plan -> play -> submit loop.

The loop runs either in-process against an :class:`Engine` or over HTTP
against a running service. Either way it writes the student's event log,
and the report it builds while running can be recomputed from that log
alone with :func:`analyze_log`.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from adaptivity.config import AdaptationConfig
from adaptivity.engine import Engine
from adaptivity.errors import (
    AdaptivityError,
    CorruptLog,
    FixtureError,
    NoPlayableFeature,
)
from adaptivity.events import (
    PROFILE_CREATED,
    RESULT_SUBMITTED,
    SESSION_PLANNED,
    EventRecord,
    logical_clock,
    read_log,
)
# RESULT_SUBMITTED, SESSION_PLANNED, logical_clock, read_log
from adaptivity.graph import load_graph
from adaptivity.planner import SessionResult
from adaptivity.resources import load_lexicon

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticStudent:
    """Logistic responder whose skill on a feature grows with practice."""

    ability: float = 0.0
    learning_rate: float = 0.0
    difficulty_scale: float = 1.0
    # chance of fetching a plan and never submitting a result
    skip_probability: float = 0.0
    age_level: int | None = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise FixtureError("learning_rate must be >= 0")
        if not 0.0 <= self.skip_probability < 1.0:
            raise FixtureError("skip_probability must be in [0, 1)")

    def p_correct(self, difficulty_rank: int, use_count: int) -> float:
        z = self.ability + self.learning_rate * use_count - self.difficulty_scale * difficulty_rank
        # written to stay inside (0, 1) for large |z|
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)

    def answer(self, feature_id: str, difficulty_rank: int, use_count: int, n_items: int, seed: int) -> list[bool]:
        # draws are keyed by (feature, use) so different students see common random numbers
        rng = random.Random(f"{seed}|{feature_id}|{use_count}")
        p = self.p_correct(difficulty_rank, use_count)
        return [rng.random() < p for _ in range(n_items)]


@dataclass
class SimulationReport:
    student_id: str = ""
    plans_issued: int = 0
    sessions_played: int = 0
    sessions_to_unlock: dict = field(default_factory=dict)
    sessions_to_max: dict = field(default_factory=dict)
    # rows: [ordinal, feature_id, game_type, score, mastery_after]
    trajectory: list = field(default_factory=list)
    max_repetition_streak: int = 0
    streak_feature: str | None = None
    rollback_count: int = 0
    event_log: str | None = None

    def to_doc(self) -> dict:
        return asdict(self)


TRAJECTORY_COLUMNS = ("ordinal", "feature_id", "game_type", "score", "mastery_after")


def longest_streak(features: list[str]) -> tuple[int, str | None]:
    best, best_f, run = 0, None, 0
    for i, f in enumerate(features):
        run = run + 1 if i and features[i - 1] == f else 1
        if run > best:
            best, best_f = run, f
    return best, best_f


class _Tally:
    """Accumulates report fields from a stream of played sessions."""

    def __init__(self, profile_doc: dict, scale_max: float):
        self.report = SimulationReport(student_id=profile_doc["student_id"])
        self.report.sessions_to_unlock = {
            fid: 0 for fid, s in sorted(profile_doc["states"].items()) if s["status"] != "locked"
        }
        self.plays: dict[str, int] = {}
        self.scale_max = scale_max

    def played(self, outcome: dict, rollback: bool) -> None:
        r = self.report
        fid = outcome["feature_id"]
        self.plays[fid] = self.plays.get(fid, 0) + 1
        r.sessions_played += 1
        r.trajectory.append([outcome["session_ordinal"], fid, outcome["game_type"], outcome["score"],
                             outcome["new_mastery"]])
        if outcome["new_mastery"] >= self.scale_max and fid not in r.sessions_to_max:
            r.sessions_to_max[fid] = self.plays[fid]
        r.rollback_count += int(rollback)

    def opened(self, fid: str, ordinal: int) -> None:
        self.report.sessions_to_unlock.setdefault(fid, ordinal)

    def finish(self) -> SimulationReport:
        r = self.report
        r.max_repetition_streak, r.streak_feature = longest_streak([row[1] for row in r.trajectory])
        return r


# -- backends -----------------------------------------------------------------

class LocalBackend:
    def __init__(self, engine: Engine):
        self.engine = engine

    def register(self, graph_doc, lexicon_doc) -> str:
        return self.engine.register_model(graph_doc, lexicon_doc)[0]

    def create_student(self, graph_id: str, age_level: int) -> dict:
        return self.engine.create_student(graph_id, age_level).to_doc()

    def plan(self, sid: str) -> dict:
        return self.engine.next_session(sid).to_doc()

    def submit(self, sid: str, result: SessionResult) -> dict:
        return self.engine.submit(sid, result).to_doc()

    def event_docs(self, sid: str) -> list[dict]:
        return [e.to_doc() for e in self.engine.events(sid)]


class HttpBackend:
    def __init__(self, base_url: str, client=None):
        import httpx

        self.client = client or httpx.Client(base_url=base_url, timeout=30.0)

    def _check(self, resp):
        if resp.status_code >= 400:
            from adaptivity import errors

            body = resp.json()
            exc_type = getattr(errors, body.get("error", ""), None)
            if isinstance(exc_type, type) and issubclass(exc_type, AdaptivityError) and exc_type not in (
                errors.CycleDetected, errors.UnknownFeatureReference, errors.CorruptLog
            ):
                raise exc_type(body.get("detail", ""))
            raise AdaptivityError(f"HTTP {resp.status_code}: {body}")
        return resp.json()

    def register(self, graph_doc, lexicon_doc) -> str:
        resp = self.client.post("/models", json={"graph": graph_doc, "lexicon": lexicon_doc})
        if resp.status_code == 409:
            return graph_doc["graph_id"]
        return self._check(resp)["graph_id"]

    def create_student(self, graph_id: str, age_level: int) -> dict:
        sid = self._check(self.client.post("/students", json={"graph_id": graph_id, "age_level": age_level}))
        return self._check(self.client.get(f"/students/{sid['student_id']}"))

    def plan(self, sid: str) -> dict:
        return self._check(self.client.get(f"/students/{sid}/next-session"))

    def submit(self, sid: str, result: SessionResult) -> dict:
        return self._check(self.client.post(f"/students/{sid}/results", json=result.to_doc()))

    def event_docs(self, sid: str) -> list[dict]:
        return self._check(self.client.get(f"/students/{sid}/events", params={"since": 0}))


# -- driver -------------------------------------------------------------------

def simulate(graph_doc, lexicon_doc, student: SyntheticStudent, n_sessions: int,
             config: AdaptationConfig | None = None, seed: int = 0, out_dir=None,
             http: str | None = None, http_client=None) -> SimulationReport:
    """Run one synthetic student for up to ``n_sessions`` plan requests.

    Stops early when nothing is playable. With ``out_dir`` set, writes the
    event log under ``out_dir/events/`` (overwriting), ``report.json`` and
    ``trajectory.csv``.
    """
    if n_sessions < 1:
        raise FixtureError("n_sessions must be >= 1")
    config = config or AdaptationConfig()
    try:
        graph = load_graph(graph_doc)
        load_lexicon(lexicon_doc, graph)
    except AdaptivityError as exc:
        raise FixtureError(f"invalid fixture: {exc.code}: {exc}") from exc
    out = Path(out_dir) if out_dir is not None else None

    if http is not None or http_client is not None:
        backend = HttpBackend(http, http_client)
    else:
        engine = Engine(config, clock=logical_clock())
        backend = LocalBackend(engine)

    graph_id = backend.register(graph_doc, lexicon_doc)
    if student.age_level is not None:
        age = student.age_level
    else:
        age = min((f.min_age_level for f in graph.features.values()), default=0)
    profile_doc = backend.create_student(graph_id, max(age, 0))
    sid = profile_doc["student_id"]
    tally = _Tally(profile_doc, config.scale.max)
    uses = {fid: s["use_count"] for fid, s in profile_doc["states"].items()}
    skip_rng = random.Random(f"{seed}|skip")

    for _ in range(n_sessions):
        try:
            plan = backend.plan(sid)
        except NoPlayableFeature:
            log.info("student %s: nothing playable after %d sessions", sid, tally.report.sessions_played)
            break
        tally.report.plans_issued += 1
        if student.skip_probability and skip_rng.random() < student.skip_probability:
            continue
        fid = plan["feature_id"]
        items = student.answer(fid, graph.features[fid].difficulty_rank, uses[fid], len(plan["content"]), seed)
        outcome = backend.submit(sid, SessionResult(fid, tuple(items), plan["session_ordinal"]))
        uses[fid] += 1
        tally.played(outcome, bool(outcome["rollback_applied"]))
        for opened in outcome["newly_opened"]:
            tally.opened(opened, outcome["session_ordinal"])

    report = tally.finish()
    if out is not None:
        path = out / "events" / f"{sid}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(EventRecord.from_doc(d).to_line() for d in backend.event_docs(sid)),
                        encoding="utf-8")
        report.event_log = str(path)
        write_report(report, out)
    return report


def simulate_cohort(graph_doc, lexicon_doc, students: list[SyntheticStudent], n_sessions: int,
                    config: AdaptationConfig | None = None, seed: int = 0, out_dir=None,
                    workers: int = 4) -> list[SimulationReport]:
    """One worker per student; each gets its own engine and output folder."""
    def run(i_student):
        i, st = i_student
        sub = Path(out_dir) / f"student_{i:03d}" if out_dir is not None else None
        return simulate(graph_doc, lexicon_doc, st, n_sessions, config, seed + i, sub)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, enumerate(students)))


def write_report(report: SimulationReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_doc(), indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    with open(out / "trajectory.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        writer.writerows(report.trajectory)


def analyze_log(path) -> SimulationReport:
    """Recompute a simulation report from an event log alone."""
    events = read_log(path)
    if not events:
        return SimulationReport(event_log=str(path))
    if events[0].kind != PROFILE_CREATED:
        raise CorruptLog(1, "log does not start with profile_created")
    profile_doc = events[0].payload["profile"]
    scale_max = events[0].payload.get("config", {}).get("scale", {}).get("max", 10.0)
    tally = _Tally(profile_doc, scale_max)
    for e in events:
        if e.kind == SESSION_PLANNED:
            tally.report.plans_issued += 1
        elif e.kind == RESULT_SUBMITTED:
            ordinal = e.payload["outcome"]["session_ordinal"]
            rollback = bool(e.payload["outcome"]["rollback_applied"])
            tally.played(e.payload["outcome"], rollback)
            for opened in e.payload["outcome"]["newly_opened"]:
                tally.opened(opened, ordinal)
    report = tally.finish()
    report.event_log = str(path)
    return report

