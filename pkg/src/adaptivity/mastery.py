"""Mastery re-evaluation after each game.

Mastery follows an exponential moving average of session scores with two
constraints on top: a single session can lower mastery by at most
``max_drop_per_session``, and a raw value at or above ``snap_threshold``
is promoted to the scale maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from adaptivity.config import EmaConfig, MasteryScale
from adaptivity.errors import EmptySession, FeatureNotOpen, UnknownFeature
from adaptivity.graph import FeatureGraph
from adaptivity.profile import LOCKED, MASTERED, OPEN, FeatureState, StudentProfile


@dataclass(frozen=True)
class SessionScore:
    value: float
    had_errors: bool


def score_session(items: Iterable[Mapping | bool]) -> SessionScore:
    """Score a list of item outcomes on the 0..10 scale.

    Items may be ``{"correct": bool}`` mappings or bare booleans.
    """
    outcomes = [bool(it["correct"]) if isinstance(it, Mapping) else bool(it) for it in items]
    if not outcomes:
        raise EmptySession("a session needs at least one item")
    n_correct = sum(outcomes)
    if n_correct == len(outcomes):
        return SessionScore(10.0, False)
    return SessionScore(10.0 * n_correct / len(outcomes), True)


def ema_raw(prev: float, score: float, cfg: EmaConfig,
            history: Sequence[Sequence[float]] = ()) -> float:
    """Unconstrained EMA value.

    ``history`` holds ``[mastery_before, score]`` pairs of earlier sessions,
    oldest first; it is only consulted in finite-window mode, where the
    average runs over the last ``window`` scores seeded with the mastery
    that preceded the oldest of them.
    """
    a = cfg.alpha
    if cfg.recursive:
        return a * score + (1.0 - a) * prev
    entries = (list(history) + [[prev, score]])[-cfg.window:]
    raw = entries[0][0]
    for _, s in entries:
        raw = a * s + (1.0 - a) * raw
    return raw


def update_mastery(prev: float, score: SessionScore | float, cfg: EmaConfig | None = None,
                   scale: MasteryScale | None = None,
                   history: Sequence[Sequence[float]] = ()) -> float:
    cfg = cfg or EmaConfig()
    scale = scale or MasteryScale()
    value = score.value if isinstance(score, SessionScore) else float(score)
    raw = ema_raw(prev, value, cfg, history)
    if raw < prev:
        result = max(raw, prev - scale.max_drop_per_session)
    elif raw >= scale.snap_threshold:
        result = scale.max
    else:
        result = raw
    return scale.clamp(result)


def detect_stagnation(state: FeatureState, scale: MasteryScale | None = None) -> bool:
    """True when the last two practices brought no net improvement.

    A feature held at the scale maximum cannot improve and is never
    reported as stagnating.
    """
    scale = scale or MasteryScale()
    if state.use_count < 2 or len(state.recent_masteries) < 2:
        return False
    (before1, m1), (_, m2) = state.recent_masteries[-2:]
    if m2 >= scale.max:
        return False
    return m2 <= m1 and m2 <= before1


def apply_stagnation_rollback(profile: StudentProfile, graph: FeatureGraph, feature_id: str,
                              delta: float = 1.0, scale: MasteryScale | None = None) -> list[str]:
    """Lower a stagnating feature and its direct prerequisites so both get revisited."""
    scale = scale or MasteryScale()
    if feature_id not in graph.features or feature_id not in profile.states:
        raise UnknownFeature(feature_id)
    affected = [feature_id, *graph.parents(feature_id)]
    for fid in affected:
        state = profile.states[fid]
        state.mastery = scale.clamp(state.mastery - delta)
        if state.status == MASTERED:
            state.status = OPEN
    profile.states[feature_id].recent_masteries = []
    return sorted(affected)


def record_use(state: FeatureState, mastery_before: float, score: SessionScore,
               mastery_after: float, ordinal: int, cfg: EmaConfig) -> None:
    state.mastery = mastery_after
    state.use_count += 1
    state.last_used_session = ordinal
    state.last_score = score.value
    state.recent_masteries = (state.recent_masteries + [[mastery_before, mastery_after]])[-2:]
    if not cfg.recursive:
        state.score_history = (state.score_history + [[mastery_before, score.value]])[-cfg.window:]


def check_playable(profile: StudentProfile, feature_id: str) -> FeatureState:
    state = profile.states.get(feature_id)
    if state is None:
        raise UnknownFeature(feature_id)
    if state.status == LOCKED:
        raise FeatureNotOpen(feature_id)
    return state
