"""Session planning and result submission.

Candidate features go through a fixed rule pipeline:

* ``R3:reopen`` - mastered features untouched for ``reopen_gap_sessions``
  games come first, stalest first;
* ``R1:demote`` - open features that scored below ``fail_score_threshold``
  within the last ``recent_window_sessions`` games go to the back;
* ``R2:ease`` - inside each band, lower difficulty_rank first, then fewer
  uses, then id.

Planning never mutates the profile; ``submit_result`` does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from adaptivity._docs import check_keys, expect_int, expect_str, parse_json
from adaptivity.config import AdaptationConfig
from adaptivity.errors import MalformedDocument, NoContentForFeature, NoPlayableFeature
from adaptivity.graph import FeatureGraph
from adaptivity.mastery import (
    SessionScore,
    apply_stagnation_rollback,
    check_playable,
    detect_stagnation,
    record_use,
    score_session,
    update_mastery,
)
from adaptivity.profile import MASTERED, OPEN, FeatureState, StudentProfile, apply_unlocks
from adaptivity.resources import Lexicon, LexiconEntry, select_content

ACCURACY = "accuracy"
AUTOMATICITY = "automaticity"

RULE_REOPEN = "R3:reopen"
RULE_DEMOTE = "R1:demote"
RULE_EASE = "R2:ease"


@dataclass(frozen=True)
class SessionPlan:
    student_id: str
    session_ordinal: int
    feature_id: str
    game_type: str
    content: tuple[LexiconEntry, ...]
    rule_trace: tuple[str, ...]

    def to_doc(self) -> dict:
        return {
            "student_id": self.student_id,
            "session_ordinal": self.session_ordinal,
            "feature_id": self.feature_id,
            "game_type": self.game_type,
            "content": [{"entry_id": e.entry_id, "text": e.text, "kind": e.kind} for e in self.content],
            "rule_trace": list(self.rule_trace),
        }


@dataclass(frozen=True)
class SessionResult:
    feature_id: str
    items: tuple[bool, ...]
    session_ordinal: int | None = None

    @classmethod
    def from_doc(cls, source) -> "SessionResult":
        doc = check_keys(parse_json(source), {"feature_id", "items"}, {"session_ordinal"}, "result")
        if not isinstance(doc["items"], list):
            raise MalformedDocument("result.items: expected a list")
        items = []
        for i, it in enumerate(doc["items"]):
            check_keys(it, {"correct"}, where=f"result.items[{i}]")
            if not isinstance(it["correct"], bool):
                raise MalformedDocument(f"result.items[{i}].correct: expected a boolean")
            items.append(it["correct"])
        ordinal = doc.get("session_ordinal")
        return cls(
            feature_id=expect_str(doc["feature_id"], "result.feature_id"),
            items=tuple(items),
            session_ordinal=None if ordinal is None else expect_int(ordinal, "result.session_ordinal", 1),
        )

    def to_doc(self) -> dict:
        doc = {"feature_id": self.feature_id, "items": [{"correct": c} for c in self.items]}
        if self.session_ordinal is not None:
            doc["session_ordinal"] = self.session_ordinal
        return doc


@dataclass
class SessionOutcome:
    feature_id: str
    session_ordinal: int
    game_type: str
    score: float
    had_errors: bool
    mastery_before: float
    new_mastery: float
    newly_opened: list[str] = field(default_factory=list)
    rollback_applied: list[str] = field(default_factory=list)
    reopened: list[str] = field(default_factory=list)
    status_after: str = OPEN

    def to_doc(self) -> dict:
        return {
            "feature_id": self.feature_id,
            "session_ordinal": self.session_ordinal,
            "game_type": self.game_type,
            "score": self.score,
            "had_errors": self.had_errors,
            "mastery_before": self.mastery_before,
            "new_mastery": self.new_mastery,
            "newly_opened": list(self.newly_opened),
            "rollback_applied": list(self.rollback_applied),
            "reopened": list(self.reopened),
            "status_after": self.status_after,
        }


def staleness(profile: StudentProfile, state: FeatureState) -> int:
    # never-played features count from profile creation
    return profile.session_counter - (state.last_used_session or 0)


def _recently_failed(profile: StudentProfile, state: FeatureState, cfg: AdaptationConfig) -> bool:
    if state.last_used_session is None or state.last_score is None:
        return False
    recent = profile.session_counter - state.last_used_session < cfg.recent_window_sessions
    return recent and state.last_score < cfg.fail_score_threshold


def candidate_features(profile: StudentProfile, graph: FeatureGraph,
                       cfg: AdaptationConfig | None = None) -> list[tuple[str, tuple[str, ...]]]:
    cfg = cfg or AdaptationConfig()
    reopen, ready, demoted = [], [], []
    for fid, state in profile.states.items():
        if state.status == MASTERED and staleness(profile, state) >= cfg.reopen_gap_sessions:
            reopen.append(fid)
        elif state.status == OPEN:
            (demoted if _recently_failed(profile, state, cfg) else ready).append(fid)
    if not (reopen or ready or demoted):
        raise NoPlayableFeature(profile.student_id)

    def ease(fid):
        f = graph.features[fid]
        return (f.difficulty_rank, profile.states[fid].use_count, fid)

    reopen.sort(key=lambda fid: (-staleness(profile, profile.states[fid]), fid))
    ready.sort(key=ease)
    demoted.sort(key=ease)
    return (
        [(fid, (RULE_REOPEN,)) for fid in reopen]
        + [(fid, (RULE_EASE,)) for fid in ready]
        + [(fid, (RULE_DEMOTE, RULE_EASE)) for fid in demoted]
    )


def select_game_type(state: FeatureState) -> str:
    return ACCURACY if state.use_count == 0 else AUTOMATICITY


def content_seed(cfg: AdaptationConfig, student_id: str, ordinal: int) -> str:
    return f"{cfg.selection_seed}|{student_id}|{ordinal}"


def plan_session(profile: StudentProfile, graph: FeatureGraph, lexicon: Lexicon,
                 cfg: AdaptationConfig | None = None) -> SessionPlan:
    """Pick feature, game type and content for the next game. Read-only."""
    cfg = cfg or AdaptationConfig()
    ordinal = profile.session_counter + 1
    skipped = []
    for fid, trace in candidate_features(profile, graph, cfg):
        try:
            content = select_content(lexicon, fid, cfg.content_batch_size, content_seed(cfg, profile.student_id, ordinal))
        except NoContentForFeature:
            skipped.append(f"content:skip:{fid}")
            continue
        game_type = select_game_type(profile.states[fid])
        return SessionPlan(
            student_id=profile.student_id,
            session_ordinal=ordinal,
            feature_id=fid,
            game_type=game_type,
            content=tuple(content),
            rule_trace=(*skipped, *trace, f"game:{game_type}"),
        )
    raise NoContentForFeature("no candidate feature has lexicon content")


def submit_result(profile: StudentProfile, graph: FeatureGraph, result: SessionResult,
                  cfg: AdaptationConfig | None = None) -> SessionOutcome:
    """Apply a played session to the profile in place.

    Validation happens before any mutation, so a raised error leaves the
    profile untouched.
    """
    cfg = cfg or AdaptationConfig()
    scale = cfg.scale
    state = check_playable(profile, result.feature_id)
    score: SessionScore = score_session(result.items)

    game_type = select_game_type(state)
    profile.session_counter += 1
    ordinal = profile.session_counter
    before = state.mastery
    after = update_mastery(before, score, cfg.ema, scale, state.score_history)
    record_use(state, before, score, after, ordinal, cfg.ema)

    rolled, reopened = [], []
    if detect_stagnation(state, scale):
        was_mastered = {fid for fid in [result.feature_id, *graph.parents(result.feature_id)]
                        if profile.states[fid].status == MASTERED}
        rolled = apply_stagnation_rollback(profile, graph, result.feature_id, cfg.stagnation_delta, scale)
        reopened = sorted(fid for fid in was_mastered if profile.states[fid].status == OPEN)

    opened = apply_unlocks(profile, graph, scale)

    if state.status == OPEN and state.mastery >= scale.max:
        state.status = MASTERED

    return SessionOutcome(
        feature_id=result.feature_id,
        session_ordinal=ordinal,
        game_type=game_type,
        score=score.value,
        had_errors=score.had_errors,
        mastery_before=before,
        new_mastery=state.mastery,
        newly_opened=opened,
        rollback_applied=rolled,
        reopened=reopened,
        status_after=state.status,
    )
