"""Tunable constants for mastery tracking and session planning."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Union

from adaptivity._docs import check_keys, expect_int, expect_number, parse_json
from adaptivity.errors import InvalidConfig, MalformedDocument

RECURSIVE = "recursive"


@dataclass(frozen=True)
class MasteryScale:
    min: float = 0.0
    max: float = 10.0
    init_open: float = 5.0
    pass_threshold: float = 7.5
    snap_threshold: float = 9.5
    max_drop_per_session: float = 1.0

    def __post_init__(self):
        if not (self.min <= self.init_open <= self.pass_threshold <= self.snap_threshold <= self.max):
            raise InvalidConfig("require min <= init_open <= pass_threshold <= snap_threshold <= max")
        if self.min != 0.0:
            raise InvalidConfig("scale minimum must be 0")
        if not self.max_drop_per_session > 0:
            raise InvalidConfig("max_drop_per_session must be positive")

    def clamp(self, value: float) -> float:
        return min(self.max, max(self.min, value))


@dataclass(frozen=True)
class EmaConfig:
    alpha: float = 0.6
    # "recursive" uses only the previous mastery; an int uses the last N scores
    window: Union[int, str] = RECURSIVE

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0) or math.isnan(self.alpha):
            raise InvalidConfig(f"alpha must be in (0, 1], got {self.alpha}")
        if self.window != RECURSIVE:
            if isinstance(self.window, bool) or not isinstance(self.window, int) or self.window < 1:
                raise InvalidConfig(f"window must be a positive integer or {RECURSIVE!r}")

    @property
    def recursive(self) -> bool:
        return self.window == RECURSIVE


@dataclass(frozen=True)
class AdaptationConfig:
    ema: EmaConfig = field(default_factory=EmaConfig)
    scale: MasteryScale = field(default_factory=MasteryScale)
    reopen_gap_sessions: int = 10
    recent_window_sessions: int = 3
    fail_score_threshold: float = 5.0
    stagnation_delta: float = 1.0
    content_batch_size: int = 7
    selection_seed: int = 0

    def __post_init__(self):
        s = self.scale
        if not (s.min <= self.fail_score_threshold <= s.max):
            raise InvalidConfig("fail_score_threshold outside the mastery scale")
        if not (0 < self.stagnation_delta <= s.max):
            raise InvalidConfig("stagnation_delta must be in (0, max]")
        if self.content_batch_size < 1:
            raise InvalidConfig("content_batch_size must be >= 1")
        if self.reopen_gap_sessions < 1:
            raise InvalidConfig("reopen_gap_sessions must be >= 1")
        if self.recent_window_sessions < 1:
            raise InvalidConfig("recent_window_sessions must be >= 1")
        if not (-(2**63) <= self.selection_seed < 2**64):
            raise InvalidConfig("selection_seed must fit in 64 bits")

    def to_doc(self) -> dict:
        return asdict(self)

    @classmethod
    def from_doc(cls, source: bytes | str | dict | None) -> "AdaptationConfig":
        """Build a config from a JSON document; absent fields take defaults."""
        if source is None:
            return cls()
        doc = parse_json(source)
        top = {"ema", "scale", "reopen_gap_sessions", "recent_window_sessions",
               "fail_score_threshold", "stagnation_delta", "content_batch_size", "selection_seed"}
        check_keys(doc, set(), top, "config")
        kwargs: dict[str, Any] = {}
        if "ema" in doc:
            ema = check_keys(doc["ema"], set(), {"alpha", "window"}, "config.ema")
            ema_kw: dict[str, Any] = {}
            if "alpha" in ema:
                ema_kw["alpha"] = expect_number(ema["alpha"], "config.ema.alpha")
            if "window" in ema:
                w = ema["window"]
                ema_kw["window"] = w if w == RECURSIVE else expect_int(w, "config.ema.window", 1)
            kwargs["ema"] = EmaConfig(**ema_kw)
        if "scale" in doc:
            names = {f for f in MasteryScale.__dataclass_fields__}
            sc = check_keys(doc["scale"], set(), names, "config.scale")
            kwargs["scale"] = MasteryScale(**{k: expect_number(v, f"config.scale.{k}") for k, v in sc.items()})
        for key in ("reopen_gap_sessions", "recent_window_sessions", "content_batch_size", "selection_seed"):
            if key in doc:
                kwargs[key] = expect_int(doc[key], f"config.{key}")
        for key in ("fail_score_threshold", "stagnation_delta"):
            if key in doc:
                kwargs[key] = expect_number(doc[key], f"config.{key}")
        try:
            return cls(**kwargs)
        except InvalidConfig:
            raise
        except (TypeError, ValueError) as exc:
            raise MalformedDocument(str(exc)) from exc
