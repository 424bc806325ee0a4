"""Feature-annotated lexicon: words and sentences indexed by the features they exercise."""

from __future__ import annotations

import random
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from adaptivity._docs import check_keys, expect_str, parse_json
from adaptivity.errors import DuplicateEntryId, MalformedDocument, NoContentForFeature, UnknownFeatureReference
from adaptivity.graph import FeatureGraph

KINDS = ("word", "sentence")


@dataclass(frozen=True)
class LexiconEntry:
    entry_id: str
    text: str
    kind: str
    feature_ids: frozenset[str]

    def to_doc(self) -> dict:
        return {"entry_id": self.entry_id, "text": self.text, "kind": self.kind,
                "feature_ids": sorted(self.feature_ids)}


@dataclass(frozen=True)
class Lexicon:
    lexicon_id: str
    entries: Mapping[str, LexiconEntry]
    index: Mapping[str, frozenset[str]]

    @classmethod
    def build(cls, lexicon_id: str, entries) -> "Lexicon":
        by_id: dict[str, LexiconEntry] = {}
        for e in entries:
            if e.entry_id in by_id:
                raise DuplicateEntryId(e.entry_id)
            by_id[e.entry_id] = e
        return cls(lexicon_id, MappingProxyType(by_id), MappingProxyType(build_index(by_id.values())))

    def to_doc(self) -> dict:
        return {"lexicon_id": self.lexicon_id, "entries": [e.to_doc() for e in self.entries.values()]}


def build_index(entries) -> dict[str, frozenset[str]]:
    index: dict[str, set[str]] = {}
    for e in entries:
        for fid in e.feature_ids:
            index.setdefault(fid, set()).add(e.entry_id)
    return {fid: frozenset(ids) for fid, ids in index.items()}


def load_lexicon(source: bytes | str | dict, graph: FeatureGraph) -> Lexicon:
    doc = check_keys(parse_json(source), {"lexicon_id", "entries"}, where="lexicon")
    lexicon_id = expect_str(doc["lexicon_id"], "lexicon.lexicon_id")
    if not isinstance(doc["entries"], list):
        raise MalformedDocument("lexicon.entries: expected a list")
    entries = []
    for i, raw in enumerate(doc["entries"]):
        where = f"lexicon.entries[{i}]"
        check_keys(raw, {"entry_id", "text", "kind", "feature_ids"}, where=where)
        entry_id = expect_str(raw["entry_id"], f"{where}.entry_id")
        if raw["kind"] not in KINDS:
            raise MalformedDocument(f"{where}.kind: expected one of {KINDS}")
        tags = raw["feature_ids"]
        if not isinstance(tags, list) or not tags:
            raise MalformedDocument(f"{where}.feature_ids: expected a non-empty list")
        for fid in tags:
            expect_str(fid, f"{where}.feature_ids")
            if fid not in graph.features:
                raise UnknownFeatureReference(entry_id, fid)
        entries.append(LexiconEntry(entry_id, expect_str(raw["text"], f"{where}.text"), raw["kind"],
                                    frozenset(tags)))
    return Lexicon.build(lexicon_id, entries)


def entries_for_feature(lexicon: Lexicon, feature_id: str) -> frozenset[str]:
    return lexicon.index.get(feature_id, frozenset())


def select_content(lexicon: Lexicon, feature_id: str, n: int, seed) -> list[LexiconEntry]:
    """Seeded shuffle of the entries tagged with ``feature_id``, truncated to ``n``.

    ``seed`` may be any int or str; string seeds are hashed by ``random``
    deterministically across processes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ids = sorted(entries_for_feature(lexicon, feature_id))
    if not ids:
        raise NoContentForFeature(feature_id)
    random.Random(seed).shuffle(ids)
    return [lexicon.entries[i] for i in ids[:n]]
