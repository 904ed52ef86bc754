"""Weighted graphs, edge sets, graph features and edge filtration."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Edge = tuple[int, int]


class Scenario(enum.Enum):
    """How edge weights map to edges.

    ``TWO_SIDED`` keeps an edge when ``|W_e|`` exceeds the level,
    ``ONE_SIDED`` keeps it when ``W_e`` itself does.
    """

    TWO_SIDED = "a"
    ONE_SIDED = "b"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if text in (member.value, member.name.lower(), member.name.lower().replace("_", "")):
                return member
        raise ValueError(f"unknown scenario {value!r}")


def canonical_edge(u: int, v: int) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise ValueError(f"self-loop ({u}, {v}) is not an edge")
    return (u, v) if u < v else (v, u)


def make_edge_set(edges: Iterable, d: int | None = None) -> frozenset:
    """Canonicalize pairs into a frozenset of ``(min, max)`` tuples."""
    out = set()
    for e in edges:
        u, v = e
        ce = canonical_edge(u, v)
        if ce[0] < 0 or (d is not None and ce[1] >= d):
            raise ValueError(f"edge {ce} out of range for d={d}")
        out.add(ce)
    return frozenset(out)


def sorted_edges(edges: Iterable[Edge]) -> list[Edge]:
    return sorted(edges)


def all_pairs(d: int) -> list[Edge]:
    """Every unordered vertex pair, in canonical order."""
    iu, ju = np.triu_indices(d, k=1)
    return list(zip(iu.tolist(), ju.tolist()))


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric edge-weight matrix over ``d`` labeled vertices."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValueError("weights must be a non-empty square matrix")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weights must have a zero diagonal")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_edges(cls, d: int, weighted_edges: Iterable) -> "WeightedGraph":
        w = np.zeros((d, d))
        for u, v, x in weighted_edges:
            u, v = canonical_edge(u, v)
            w[u, v] = w[v, u] = x
        return cls(w)

    def weight(self, e: Edge) -> float:
        return float(self.weights[e[0], e[1]])

    def support(self, scenario: Scenario | str = Scenario.TWO_SIDED) -> frozenset:
        """Edge set at level zero, i.e. the true graph."""
        return filter_edges(self, 0.0, scenario)


@dataclass(frozen=True)
class GraphFeature:
    """A candidate subgraph with its assigned p-value."""

    vertices: tuple
    edges: tuple
    pvalue: float = field(default=1.0, compare=False)

    def __post_init__(self):
        edges = tuple(sorted(make_edge_set(self.edges)))
        verts = set(int(x) for x in self.vertices)
        for u, v in edges:
            if u not in verts or v not in verts:
                raise ValueError(f"edge {(u, v)} has an endpoint outside the feature")
        if not 0.0 <= self.pvalue <= 1.0:
            raise ValueError("feature p-value must lie in [0, 1]")
        object.__setattr__(self, "vertices", tuple(sorted(verts)))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, edges: Iterable, pvalue: float = 1.0) -> "GraphFeature":
        edges = list(edges)
        verts = {x for e in edges for x in e}
        return cls(tuple(verts), tuple(edges), pvalue)

    @property
    def signature(self) -> tuple:
        return (self.vertices, self.edges)

    def with_pvalue(self, pvalue: float) -> "GraphFeature":
        return GraphFeature(self.vertices, self.edges, float(pvalue))

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self.edges],
            "pvalue": self.pvalue,
        }


def filter_edges(W: WeightedGraph, mu: float, scenario: Scenario | str) -> frozenset:
    """Edges whose weight (two-sided: absolute weight) strictly exceeds ``mu``."""
    scenario = Scenario.parse(scenario)
    w = W.weights
    if scenario is Scenario.TWO_SIDED:
        w = np.abs(w)
    iu, ju = np.nonzero(np.triu(w > mu, k=1))
    return frozenset(zip(iu.tolist(), ju.tolist()))


def feature_embedded(F: GraphFeature, E) -> bool:
    """True iff every edge of ``F`` belongs to the edge set ``E``."""
    E = E if isinstance(E, (set, frozenset)) else make_edge_set(E)
    return all(e in E for e in F.edges)
