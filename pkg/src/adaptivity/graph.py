"""Prerequisite graph of language features.

The graph doubles as the teaching sequence: an edge ``(p, d)`` means feature
``p`` must be learned before ``d``. Any DAG is accepted; several
prerequisites per feature are allowed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from adaptivity._docs import check_keys, expect_int, expect_str, parse_json
from adaptivity.errors import (
    CycleDetected,
    DuplicateFeatureId,
    MalformedDocument,
    UnknownFeature,
    UnknownFeatureInEdge,
)

CATEGORIES = ("phonological", "syntactic")


@dataclass(frozen=True)
class Feature:
    id: str
    label: str
    category: str
    difficulty_rank: int
    min_age_level: int

    def sort_key(self) -> tuple[int, str]:
        return (self.difficulty_rank, self.id)


@dataclass(frozen=True)
class FeatureGraph:
    graph_id: str
    features: Mapping[str, Feature]
    prerequisite_edges: tuple[tuple[str, str], ...]
    _parents: Mapping[str, tuple[str, ...]] = field(repr=False, compare=False, default=None)
    _children: Mapping[str, tuple[str, ...]] = field(repr=False, compare=False, default=None)

    @classmethod
    def build(cls, graph_id: str, features, edges) -> "FeatureGraph":
        """Validate and assemble a graph from Feature objects and (prereq, dependent) pairs."""
        by_id: dict[str, Feature] = {}
        for f in features:
            if f.id in by_id:
                raise DuplicateFeatureId(f.id)
            by_id[f.id] = f
        seen = set()
        parents: dict[str, list[str]] = {fid: [] for fid in by_id}
        children: dict[str, list[str]] = {fid: [] for fid in by_id}
        for p, d in edges:
            for end in (p, d):
                if end not in by_id:
                    raise UnknownFeatureInEdge(f"edge ({p!r}, {d!r}) names undeclared feature {end!r}")
            if p == d:
                raise CycleDetected([p, p])
            if (p, d) in seen:
                raise MalformedDocument(f"duplicate edge ({p!r}, {d!r})")
            seen.add((p, d))
            parents[d].append(p)
            children[p].append(d)
        key = lambda fid: by_id[fid].sort_key()  # noqa: E731
        graph = cls(
            graph_id=graph_id,
            features=MappingProxyType(by_id),
            prerequisite_edges=tuple((p, d) for p, d in edges),
            _parents=MappingProxyType({k: tuple(sorted(v, key=key)) for k, v in parents.items()}),
            _children=MappingProxyType({k: tuple(sorted(v, key=key)) for k, v in children.items()}),
        )
        cycle = _find_cycle(graph)
        if cycle:
            raise CycleDetected(cycle)
        return graph

    def parents(self, fid: str) -> tuple[str, ...]:
        return self._parents[fid]

    def children(self, fid: str) -> tuple[str, ...]:
        return self._children[fid]

    def sort_ids(self, ids) -> list[str]:
        return sorted(ids, key=lambda fid: self.features[fid].sort_key())

    def to_doc(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "features": [
                {
                    "id": f.id,
                    "label": f.label,
                    "category": f.category,
                    "difficulty_rank": f.difficulty_rank,
                    "min_age_level": f.min_age_level,
                }
                for f in self.features.values()
            ],
            "edges": [[p, d] for p, d in self.prerequisite_edges],
        }


def _find_cycle(graph: FeatureGraph) -> list[str] | None:
    """Iterative three-colour DFS; returns one cycle as [v0, ..., v0] or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {fid: WHITE for fid in graph.features}
    for start in graph.features:
        if colour[start] != WHITE:
            continue
        stack = [(start, iter(graph.children(start)))]
        path = [start]
        colour[start] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = BLACK
                stack.pop()
                path.pop()
            elif colour[nxt] == GREY:
                return path[path.index(nxt):] + [nxt]
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                stack.append((nxt, iter(graph.children(nxt))))
                path.append(nxt)
    return None


def load_graph(source: bytes | str | dict) -> FeatureGraph:
    """Parse a graph document and validate it.

    Raises MalformedDocument, DuplicateFeatureId, UnknownFeatureInEdge or
    CycleDetected; never returns a graph that violates an invariant.
    """
    doc = check_keys(parse_json(source), {"graph_id", "features", "edges"}, where="graph")
    graph_id = expect_str(doc["graph_id"], "graph.graph_id")
    if not isinstance(doc["features"], list):
        raise MalformedDocument("graph.features: expected a list")
    if not isinstance(doc["edges"], list):
        raise MalformedDocument("graph.edges: expected a list")

    features = []
    for i, raw in enumerate(doc["features"]):
        where = f"graph.features[{i}]"
        check_keys(raw, {"id", "label", "category", "difficulty_rank", "min_age_level"}, where=where)
        category = raw["category"]
        if category not in CATEGORIES:
            raise MalformedDocument(f"{where}.category: expected one of {CATEGORIES}")
        features.append(
            Feature(
                id=expect_str(raw["id"], f"{where}.id"),
                label=expect_str(raw["label"], f"{where}.label", nonempty=False),
                category=category,
                difficulty_rank=expect_int(raw["difficulty_rank"], f"{where}.difficulty_rank", 0),
                min_age_level=expect_int(raw["min_age_level"], f"{where}.min_age_level"),
            )
        )

    edges = []
    for i, raw in enumerate(doc["edges"]):
        if not (isinstance(raw, list) and len(raw) == 2):
            raise MalformedDocument(f"graph.edges[{i}]: expected [prereq_id, dependent_id]")
        edges.append((expect_str(raw[0], f"graph.edges[{i}][0]"), expect_str(raw[1], f"graph.edges[{i}][1]")))

    return FeatureGraph.build(graph_id, features, edges)


def _require(graph: FeatureGraph, fid: str) -> None:
    if fid not in graph.features:
        raise UnknownFeature(fid)


def prerequisites_of(graph: FeatureGraph, fid: str, transitive: bool = False) -> list[str]:
    _require(graph, fid)
    if not transitive:
        return list(graph.parents(fid))
    seen: set[str] = set()
    stack = list(graph.parents(fid))
    while stack:
        node = stack.pop()
        if node not in seen:
            seen.add(node)
            stack.extend(graph.parents(node))
    return graph.sort_ids(seen)


def teaching_order(graph: FeatureGraph) -> list[str]:
    """Topological order with ties broken by (difficulty_rank, id)."""
    indeg = {fid: len(graph.parents(fid)) for fid in graph.features}
    heap = [graph.features[fid].sort_key() for fid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, fid = heapq.heappop(heap)
        order.append(fid)
        for child in graph.children(fid):
            indeg[child] -= 1
            if indeg[child] == 0:
                heapq.heappush(heap, graph.features[child].sort_key())
    return order
