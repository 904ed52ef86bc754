"""Graph feature selection by maximum edge p-value and BH step-up."""
from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .bhq import bh_step_up
from .errors import BudgetExceeded
from .estimators import EdgeStatistics
from .graph import GraphFeature, canonical_edge, feature_embedded

logger = logging.getLogger(__name__)

MAX_TEMPLATE_SIZE = 8
DEFAULT_CANDIDATE_CAP = 10**7


@dataclass(frozen=True, eq=False)
class FeatureShape:
    """An unlabeled subgraph pattern on vertices ``0..m-1``."""

    edges: tuple
    m: int
    name: str = "custom"

    def __post_init__(self):
        edges = tuple(sorted({canonical_edge(u, v) for u, v in self.edges}))
        if self.m < 1 or any(v >= self.m for e in edges for v in e):
            raise ValueError("template edges must use vertices 0..m-1")
        object.__setattr__(self, "edges", edges)

    @property
    def template(self) -> GraphFeature:
        return GraphFeature(tuple(range(self.m)), self.edges)

    @cached_property
    def connected(self) -> bool:
        return len(_components(self.m, self.edges)) == 1

    @cached_property
    def automorphism_count(self) -> int:
        return automorphism_count(self)

    def __repr__(self):
        return f"FeatureShape({self.name}, m={self.m}, edges={list(self.edges)})"


def triangle() -> FeatureShape:
    return FeatureShape(((0, 1), (1, 2), (0, 2)), 3, "triangle")


def m_cycle(m: int) -> FeatureShape:
    if m < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return FeatureShape(tuple((i, (i + 1) % m) for i in range(m)), m, f"cycle:{m}")


def m_clique(m: int) -> FeatureShape:
    return FeatureShape(tuple(itertools.combinations(range(m), 2)), m, f"clique:{m}")


def star(m: int) -> FeatureShape:
    """Center vertex 0 joined to ``m - 1`` leaves."""
    return FeatureShape(tuple((0, i) for i in range(1, m)), m, f"star:{m}")


def path(m: int) -> FeatureShape:
    return FeatureShape(tuple((i, i + 1) for i in range(m - 1)), m, f"path:{m}")


def spider() -> FeatureShape:
    """The five-vertex tree with one degree-3 vertex and legs of length 1, 1, 2."""
    return FeatureShape(((0, 1), (0, 2), (0, 3), (3, 4)), 5, "spider")


def custom(edges, m: int | None = None, name: str = "custom") -> FeatureShape:
    edges = [tuple(e) for e in edges]
    if m is None:
        m = 1 + max((v for e in edges for v in e), default=-1)
    return FeatureShape(tuple(edges), m, name)


def parse_shape(text: str) -> FeatureShape:
    """Parse ``triangle | cycle:K | clique:K | star:K | path:K | spider | template:FILE``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "triangle":
        return triangle()
    if kind == "spider":
        return spider()
    if kind == "template":
        from .io import read_edge_csv

        edges = [(u, v) for u, v, _ in read_edge_csv(arg)]
        return custom(edges, name=f"template:{arg}")
    builders = {"cycle": m_cycle, "clique": m_clique, "star": star, "path": path}
    if kind not in builders or not arg:
        raise ValueError(f"unknown shape {text!r}")
    return builders[kind](int(arg))


def _components(m, edges):
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    return {find(x) for x in range(m)}


def automorphism_count(template) -> int:
    """Number of vertex permutations mapping the edge set onto itself."""
    if isinstance(template, FeatureShape):
        m, edges = template.m, template.edges
    else:
        verts = list(template.vertices)
        relabel = {v: i for i, v in enumerate(verts)}
        m = len(verts)
        edges = tuple(canonical_edge(relabel[u], relabel[v]) for u, v in template.edges)
    if m > MAX_TEMPLATE_SIZE:
        raise ValueError(f"templates are limited to {MAX_TEMPLATE_SIZE} vertices")
    eset = set(edges)
    count = 0
    for perm in itertools.permutations(range(m)):
        if all(canonical_edge(perm[u], perm[v]) in eset for u, v in edges):
            count += 1
    return count


def count_total_candidates(shape: FeatureShape, d: int):
    """Number of distinct placements of ``shape`` on ``d`` labeled vertices.

    ``C(d, m) * m! / |Aut|``; returned as an int, or as a float once it
    exceeds 2**63.
    """
    if d < shape.m:
        raise ValueError(f"d={d} is smaller than the template size {shape.m}")
    count = math.comb(d, shape.m) * math.factorial(shape.m) // shape.automorphism_count
    return count if count <= 2**63 else float(count)


def _embedding_order(shape: FeatureShape):
    adj = {i: set() for i in range(shape.m)}
    for u, v in shape.edges:
        adj[u].add(v)
        adj[v].add(u)
    order, seen = [], set()
    for root in sorted(range(shape.m), key=lambda x: (-len(adj[x]), x)):
        if root in seen:
            continue
        seen.add(root)
        queue = deque([root])
        while queue:
            x = queue.popleft()
            order.append(x)
            for y in sorted(adj[x]):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
    pos = {x: i for i, x in enumerate(order)}
    anchors, back = [], []
    for i, x in enumerate(order):
        earlier = sorted(pos[y] for y in adj[x] if pos[y] < i)
        anchors.append(earlier[0] if earlier else None)
        back.append(earlier)
    # edges of the template expressed in embedding-order positions
    edges_pos = [(pos[u], pos[v]) for u, v in shape.edges]
    return anchors, back, edges_pos


def enumerate_candidates(shape: FeatureShape, E0, d: int, cap: int = DEFAULT_CANDIDATE_CAP) -> list[GraphFeature]:
    """Every distinct placement of ``shape`` whose edges all lie in ``E0``.

    Backtracking over ``E0``'s adjacency; placements related by a template
    automorphism are collapsed through their (vertices, edges) signature.
    Results are in canonical signature order.
    """
    adj = [set() for _ in range(d)]
    for u, v in E0:
        adj[u].add(v)
        adj[v].add(u)
    anchors, back, edges_pos = _embedding_order(shape)
    m = shape.m
    image = [0] * m
    used = set()
    found = {}

    def extend(i):
        if i == m:
            edges = tuple(sorted(canonical_edge(image[a], image[b]) for a, b in edges_pos))
            verts = tuple(sorted(image))
            if (verts, edges) not in found:
                if len(found) >= cap:
                    raise BudgetExceeded(f"more than {cap} candidate placements")
                found[(verts, edges)] = None
            return
        a = anchors[i]
        pool = adj[image[a]] if a is not None else range(d)
        for x in pool:
            if x in used:
                continue
            if any(image[b] not in adj[x] for b in back[i]):
                continue
            image[i] = x
            used.add(x)
            extend(i + 1)
            used.discard(x)

    extend(0)
    return [GraphFeature(v, e) for v, e in sorted(found)]


@dataclass(frozen=True)
class SelectionResult:
    q: float
    total_J: float
    alpha_hat: float
    candidates: tuple
    selected: tuple

    def to_dict(self) -> dict:
        total = self.total_J
        return {
            "q": self.q,
            "total_J": int(total) if float(total).is_integer() and total < 2**63 else float(total),
            "alpha_hat": self.alpha_hat,
            "n_candidates": len(self.candidates),
            "selected": [f.to_dict() for f in self.selected],
        }


def select_features(
    stats: EdgeStatistics,
    shape: FeatureShape | None = None,
    q: float = 0.05,
    *,
    features: Sequence[GraphFeature] | None = None,
    total=None,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> SelectionResult:
    """Select graph features with FDR control at level ``q``.

    Either ``shape`` (all placements on ``d`` vertices are hypotheses) or an
    explicit ``features`` list together with its hypothesis count ``total``.

    Edges with p >= q are screened out first; a feature using one of them
    keeps the p-value 1 it starts with and is never instantiated. Every
    embeddable feature gets the maximum of its edge p-values, and BH is run
    with the full hypothesis count as denominator.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if (shape is None) == (features is None):
        raise ValueError("pass exactly one of shape or features")
    d = stats.d
    degenerate = stats.degenerate_pairs()
    if degenerate:
        logger.warning("%d pair(s) with zero standard deviation treated as p = 1, e.g. %s", len(degenerate), degenerate[0])
    P = stats.pvalue_matrix(0.0, degenerate="one")
    iu, ju = np.nonzero(np.triu(P < q, k=1))
    E0 = frozenset(zip(iu.tolist(), ju.tolist()))
    if shape is not None:
        if not shape.edges:
            raise ValueError("template has no edges")
        candidates = enumerate_candidates(shape, E0, d, cap=cap)
        J = count_total_candidates(shape, d)
    else:
        if total is None:
            raise ValueError("explicit feature lists need an explicit total")
        uniq = {f.signature: f for f in features}
        candidates = [f for _, f in sorted(uniq.items()) if f.edges and feature_embedded(f, E0)]
        J = total
    scored = [f.with_pvalue(max(P[u, v] for u, v in f.edges)) for f in candidates]
    res = bh_step_up([f.pvalue for f in scored], q, total=J, order_strict=True)
    selected = tuple(f for f in scored if f.pvalue < res.alpha_hat)
    return SelectionResult(q, J, res.alpha_hat, tuple(scored), selected)
