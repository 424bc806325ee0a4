"""Synthetic graph + lexicon documents for simulation and tests."""

from __future__ import annotations

import random

from adaptivity.errors import InvalidShapeParameters

SHAPES = ("chain", "diamond", "wide", "random")
_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "ch", "th")
_VOWELS = ("a", "e", "i", "o", "u", "ai", "ee", "oo")


def _edges(n: int, shape: str, rng: random.Random) -> list[tuple[int, int]]:
    if shape == "chain":
        return [(i, i + 1) for i in range(n - 1)]
    if shape == "diamond":
        if n < 3:
            raise InvalidShapeParameters("diamond needs at least 3 features")
        middle = range(1, n - 1)
        return [(0, m) for m in middle] + [(m, n - 1) for m in middle]
    if shape == "wide":
        if n < 2:
            raise InvalidShapeParameters("wide needs at least 2 features")
        return [(r, n - 1) for r in range(n - 1)]
    # every forward pair of a fixed order independently with p = 1/2
    return [(i, j) for j in range(n) for i in range(j) if rng.random() < 0.5]


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(rng.randint(1, 3)))


def generate_fixture(n_features: int, shape: str, entries_per_feature: int = 20, seed: int = 0):
    """Return ``(graph_doc, lexicon_doc)`` as plain dicts.

    Feature ``i`` gets difficulty_rank ``i``, so the generation order is the
    teaching sequence. ``wide`` with ``n`` features has ``n - 1`` roots that
    all feed one sink.
    """
    if shape not in SHAPES:
        raise InvalidShapeParameters(f"unknown shape {shape!r}; expected one of {SHAPES}")
    if isinstance(n_features, bool) or not isinstance(n_features, int) or n_features < 1:
        raise InvalidShapeParameters("n_features must be >= 1")
    if entries_per_feature < 1:
        raise InvalidShapeParameters("entries_per_feature must be >= 1")

    rng = random.Random(f"fixture|{shape}|{n_features}|{entries_per_feature}|{seed}")
    width = max(2, len(str(n_features - 1)))
    ids = [f"f{i:0{width}d}" for i in range(n_features)]
    edges = _edges(n_features, shape, rng)
    parents: dict[int, list[int]] = {i: [] for i in range(n_features)}
    for p, d in edges:
        parents[d].append(p)

    graph = {
        "graph_id": f"{shape}-{n_features}-{seed}",
        "features": [
            {
                "id": fid,
                "label": f"feature {i}",
                "category": "phonological" if i % 3 else "syntactic",
                "difficulty_rank": i,
                "min_age_level": 1,
            }
            for i, fid in enumerate(ids)
        ],
        "edges": [[ids[p], ids[d]] for p, d in edges],
    }

    entries = []
    for i, fid in enumerate(ids):
        for _ in range(entries_per_feature):
            tags = [fid]
            if parents[i] and rng.random() < 0.25:
                tags.append(ids[rng.choice(parents[i])])
            kind = "sentence" if rng.random() < 0.1 else "word"
            text = " ".join(_word(rng) for _ in range(4)) if kind == "sentence" else _word(rng)
            entries.append({"entry_id": f"e{len(entries):05d}", "text": text, "kind": kind,
                            "feature_ids": sorted(tags)})
    lexicon = {"lexicon_id": f"lex-{graph['graph_id']}", "entries": entries}
    return graph, lexicon
