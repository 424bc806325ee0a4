"""Rule-based adaptivity engine for feature-graph driven reading games."""

from adaptivity.config import AdaptationConfig, EmaConfig, MasteryScale
from adaptivity.errors import AdaptivityError
from adaptivity.graph import Feature, FeatureGraph, load_graph, prerequisites_of, teaching_order
from adaptivity.mastery import SessionScore, score_session, update_mastery
from adaptivity.planner import SessionPlan, SessionResult, plan_session, submit_result
from adaptivity.profile import FeatureState, StudentProfile, apply_unlocks, instantiate_profile
from adaptivity.resources import Lexicon, LexiconEntry, load_lexicon

__all__ = [
    "AdaptationConfig",
    "AdaptivityError",
    "EmaConfig",
    "Feature",
    "FeatureGraph",
    "FeatureState",
    "Lexicon",
    "LexiconEntry",
    "MasteryScale",
    "SessionPlan",
    "SessionResult",
    "SessionScore",
    "StudentProfile",
    "apply_unlocks",
    "instantiate_profile",
    "load_graph",
    "load_lexicon",
    "plan_session",
    "prerequisites_of",
    "score_session",
    "submit_result",
    "teaching_order",
    "update_mastery",
]
