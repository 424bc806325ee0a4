"""Helpers for strict JSON document parsing."""

from __future__ import annotations

import json
from typing import Any

from adaptivity.errors import MalformedDocument


def parse_json(source: bytes | str | dict) -> Any:
    if isinstance(source, dict):
        return source
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"not UTF-8: {exc}") from exc
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc


def check_keys(obj: Any, required: set[str], optional: set[str] = frozenset(), where: str = "document") -> dict:
    if not isinstance(obj, dict):
        raise MalformedDocument(f"{where}: expected an object, got {type(obj).__name__}")
    missing = required - obj.keys()
    if missing:
        raise MalformedDocument(f"{where}: missing keys {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise MalformedDocument(f"{where}: unknown keys {sorted(unknown)}")
    return obj


def expect_str(value: Any, where: str, nonempty: bool = True) -> str:
    if not isinstance(value, str) or (nonempty and not value):
        raise MalformedDocument(f"{where}: expected a non-empty string")
    return value


def expect_int(value: Any, where: str, minimum: int | None = None) -> int:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedDocument(f"{where}: expected an integer")
    if minimum is not None and value < minimum:
        raise MalformedDocument(f"{where}: must be >= {minimum}")
    return value


def expect_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedDocument(f"{where}: expected a number")
    return float(value)


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
