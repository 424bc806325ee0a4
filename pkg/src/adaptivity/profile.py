"""Per-student instantiation of the feature graph."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from adaptivity._docs import check_keys, expect_int, expect_number, expect_str, parse_json
from adaptivity.config import MasteryScale
from adaptivity.errors import InvalidAgeLevel, MalformedDocument
from adaptivity.graph import FeatureGraph, teaching_order

LOCKED = "locked"
OPEN = "open"
MASTERED = "mastered"
STATUSES = (LOCKED, OPEN, MASTERED)


@dataclass
class FeatureState:
    mastery: float = 0.0
    status: str = LOCKED
    use_count: int = 0
    last_used_session: Optional[int] = None
    # score of the most recent session on this feature
    last_score: Optional[float] = None
    # stagnation window: [mastery_before, mastery_after] for the last <= 2 uses
    recent_masteries: list = field(default_factory=list)
    # finite-window EMA history: [mastery_before, score] for the last N uses
    score_history: list = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "mastery": self.mastery,
            "status": self.status,
            "use_count": self.use_count,
            "last_used_session": self.last_used_session,
            "last_score": self.last_score,
            "recent_masteries": [list(p) for p in self.recent_masteries],
            "score_history": [list(p) for p in self.score_history],
        }

    @classmethod
    def from_doc(cls, doc: dict, where: str = "state") -> "FeatureState":
        check_keys(doc, set(cls.__dataclass_fields__), where=where)
        if doc["status"] not in STATUSES:
            raise MalformedDocument(f"{where}.status: expected one of {STATUSES}")
        last = doc["last_used_session"]
        score = doc["last_score"]
        return cls(
            mastery=expect_number(doc["mastery"], f"{where}.mastery"),
            status=doc["status"],
            use_count=expect_int(doc["use_count"], f"{where}.use_count", 0),
            last_used_session=None if last is None else expect_int(last, f"{where}.last_used_session", 0),
            last_score=None if score is None else expect_number(score, f"{where}.last_score"),
            recent_masteries=[_pair(p, f"{where}.recent_masteries") for p in doc["recent_masteries"]],
            score_history=[_pair(p, f"{where}.score_history") for p in doc["score_history"]],
        )


def _pair(value, where) -> list:
    if not (isinstance(value, list) and len(value) == 2):
        raise MalformedDocument(f"{where}: expected [number, number]")
    return [expect_number(value[0], where), expect_number(value[1], where)]


@dataclass
class StudentProfile:
    student_id: str
    age_level: int
    graph_id: str
    session_counter: int = 0
    states: dict[str, FeatureState] = field(default_factory=dict)

    def copy(self) -> "StudentProfile":
        return copy.deepcopy(self)

    def open_ids(self) -> list[str]:
        return [fid for fid, s in self.states.items() if s.status == OPEN]

    def to_doc(self) -> dict:
        return {
            "student_id": self.student_id,
            "age_level": self.age_level,
            "graph_id": self.graph_id,
            "session_counter": self.session_counter,
            "states": {fid: s.to_doc() for fid, s in sorted(self.states.items())},
        }

    @classmethod
    def from_doc(cls, source) -> "StudentProfile":
        doc = check_keys(parse_json(source), {"student_id", "age_level", "graph_id", "session_counter", "states"},
                         where="profile")
        if not isinstance(doc["states"], dict):
            raise MalformedDocument("profile.states: expected an object")
        return cls(
            student_id=expect_str(doc["student_id"], "profile.student_id"),
            age_level=expect_int(doc["age_level"], "profile.age_level"),
            graph_id=expect_str(doc["graph_id"], "profile.graph_id"),
            session_counter=expect_int(doc["session_counter"], "profile.session_counter", 0),
            states={fid: FeatureState.from_doc(s, f"profile.states[{fid}]") for fid, s in doc["states"].items()},
        )


def instantiate_profile(graph: FeatureGraph, student_id: str, age_level: int,
                        scale: MasteryScale | None = None) -> StudentProfile:
    """Create a fresh profile for a student of the given school year.

    Features taught before ``age_level`` are assumed mastered at the scale
    maximum. Remaining features open at ``init_open`` when all their
    prerequisites are mastered and stay locked (mastery 0) otherwise.
    """
    scale = scale or MasteryScale()
    if isinstance(age_level, bool) or not isinstance(age_level, int) or age_level < 0:
        raise InvalidAgeLevel(f"age_level must be a non-negative integer, got {age_level!r}")
    profile = StudentProfile(student_id=student_id, age_level=age_level, graph_id=graph.graph_id)
    for fid in teaching_order(graph):
        feature = graph.features[fid]
        if feature.min_age_level < age_level:
            state = FeatureState(mastery=scale.max, status=MASTERED)
        elif all(profile.states[p].status == MASTERED for p in graph.parents(fid)):
            state = FeatureState(mastery=scale.init_open, status=OPEN)
        else:
            state = FeatureState(mastery=scale.min, status=LOCKED)
        profile.states[fid] = state
    profile.states = dict(sorted(profile.states.items()))
    return profile


def apply_unlocks(profile: StudentProfile, graph: FeatureGraph,
                  scale: MasteryScale | None = None) -> list[str]:
    """Open every locked feature whose direct prerequisites all pass the threshold."""
    scale = scale or MasteryScale()
    opened = [
        fid for fid, state in profile.states.items()
        if state.status == LOCKED
        and all(profile.states[p].mastery >= scale.pass_threshold for p in graph.parents(fid))
    ]
    for fid in opened:
        profile.states[fid].status = OPEN
        profile.states[fid].mastery = scale.init_open
    return graph.sort_ids(opened)
