"""Clique complexes, oriented boundary matrices and exact cycle-group ranks.

All ranks are over the rationals. Elimination is fraction-free on Python
integers, so there is no rounding and no overflow. Simplices are vertex
tuples in ascending order; the face obtained by deleting the i-th vertex
enters the boundary with sign ``(-1)**i``.

The cycle group of an edge set ``E`` up to dimension ``K`` is
``Z(E) = Z_1(E) + ... + Z_K(E)`` with ``Z_k = ker d_k``, so
``rank Z(E) = sum_k (n_k - rank d_k)``.

Chains on the clique complex of ``E1`` that are also chains on the clique
complex of ``E2`` are supported on cliques of ``E1 & E2``. Hence
``Z(E1) & Z(E2) = Z(E1 & E2)``, which is how intersection ranks are
computed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded
from .graph import Edge, canonical_edge, make_edge_set

DEFAULT_SIMPLEX_CAP = 5 * 10**6
INCREMENTAL_LIMIT = 64


def _check_dims(d, K):
    if d < 2 or not 1 <= K <= d - 1:
        raise ValueError(f"need 1 <= K <= d - 1, got d={d}, K={K}")


def _adjacency(E, d):
    adj = [set() for _ in range(d)]
    for u, v in E:
        adj[u].add(v)
        adj[v].add(u)
    return adj


@dataclass
class CliqueComplex:
    """Clique complex of an edge set, truncated at dimension ``max_dim``."""

    d: int
    max_dim: int
    simplices: list  # simplices[k] is a sorted list of (k+1)-tuples
    index: list = field(default_factory=list)

    def __post_init__(self):
        if not self.index:
            self.index = [{s: i for i, s in enumerate(level)} for level in self.simplices]

    @property
    def counts(self) -> list[int]:
        return [len(level) for level in self.simplices]

    def to_json(self) -> str:
        return json.dumps({
            "dims": self.counts,
            "simplices": {str(k): [list(s) for s in level] for k, level in enumerate(self.simplices)},
        })


def build_clique_complex(E, d: int, K: int, cap: int = DEFAULT_SIMPLEX_CAP) -> CliqueComplex:
    """All cliques of ``E`` with at most ``K + 1`` vertices.

    Cliques are grown only by neighbours larger than their current maximum
    vertex, so each is produced once.
    """
    _check_dims(d, K)
    E = make_edge_set(E, d)
    adj = _adjacency(E, d)
    up = [sorted(x for x in adj[v] if x > v) for v in range(d)]
    levels = [[(v,) for v in range(d)]] + [[] for _ in range(K)]
    total = d
    frontier = [((v,), set(up[v])) for v in range(d)]
    for k in range(1, K + 1):
        nxt = []
        for simplex, cands in frontier:
            for w in sorted(cands):
                s = simplex + (w,)
                levels[k].append(s)
                if k < K:
                    nxt.append((s, cands.intersection(up[w])))
            total += len(cands)
            if total > cap:
                raise BudgetExceeded(f"clique complex exceeds {cap} simplices")
        frontier = nxt
    for level in levels:
        level.sort()
    return CliqueComplex(d, K, levels)


@dataclass
class BoundaryMatrix:
    """Sparse oriented boundary matrix of one dimension.

    ``columns[j]`` maps row indices (positions of (k-1)-simplices) to +-1.
    """

    k: int
    n_rows: int
    columns: list

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.n_rows, len(self.columns)), dtype=np.int64)
        for j, col in enumerate(self.columns):
            for i, x in col.items():
                M[i, j] = x
        return M


def _face_column(simplex, index):
    return {index[simplex[:i] + simplex[i + 1:]]: (-1) ** i for i in range(len(simplex))}


def boundary_matrix(cx: CliqueComplex, k: int) -> BoundaryMatrix:
    if not 1 <= k <= cx.max_dim:
        raise ValueError(f"k must lie in 1..{cx.max_dim}")
    index = cx.index[k - 1]
    cols = [_face_column(s, index) for s in cx.simplices[k]]
    return BoundaryMatrix(k, len(cx.simplices[k - 1]), cols)


def _content(row):
    g = 0
    for x in row.values():
        g = math.gcd(g, x)
        if g == 1:
            break
    return g


def exact_rank(M) -> int:
    """Rank over the rationals of an integer matrix.

    ``M`` may be a dense array, a :class:`BoundaryMatrix`, or a list of
    sparse columns (dicts). Fraction-free sparse elimination: the pivot is
    taken in the sparsest remaining column, on its sparsest row, and every
    other row is replaced by ``pivot * row - a * pivot_row`` divided by its
    content.
    """
    if isinstance(M, BoundaryMatrix):
        cols = M.columns
    elif isinstance(M, list) and (not M or isinstance(M[0], dict)):
        cols = M
    else:
        A = np.asarray(M)
        if A.size == 0:
            return 0
        cols = [{int(i): int(A[i, j]) for i in np.flatnonzero(A[:, j])} for j in range(A.shape[1])]
    # work on columns-as-rows (rank of the transpose)
    rows = {j: {r: x for r, x in c.items() if x} for j, c in enumerate(cols)}
    rows = {j: r for j, r in rows.items() if r}
    where = {}
    for j, r in rows.items():
        for c in r:
            where.setdefault(c, set()).add(j)
    rank = 0
    while where:
        c = min(where, key=lambda x: (len(where[x]), x))
        holders = where[c]
        p = min(holders, key=lambda j: (len(rows[j]), j))
        prow = rows.pop(p)
        for col in prow:
            where[col].discard(p)
        a = prow[c]
        for j in list(holders):
            row = rows[j]
            b = row[c]
            new = {}
            for col in set(row) | set(prow):
                x = a * row.get(col, 0) - b * prow.get(col, 0)
                if x:
                    new[col] = x
            for col in row:
                if col not in new:
                    where[col].discard(j)
            for col in new:
                if col not in row:
                    where.setdefault(col, set()).add(j)
            if new:
                g = _content(new)
                if g > 1:
                    new = {col: x // g for col, x in new.items()}
                rows[j] = new
            else:
                del rows[j]
        rank += 1
        for col in [x for x, s in where.items() if not s]:
            del where[col]
    return rank


def _graph_rank(E, d):
    """rank of d_1 = d - (number of connected components)."""
    parent = list(range(d))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rank = 0
    for u, v in E:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            rank += 1
    return rank


def cycle_rank(E, d: int, K: int, per_dim: bool = False, cap: int = DEFAULT_SIMPLEX_CAP):
    """``rank Z(E) = sum_{k=1..K} (n_k - rank d_k)``.

    With ``per_dim=True`` returns the list of per-dimension ranks instead.
    """
    cx = build_clique_complex(E, d, K, cap=cap)
    out = []
    for k in range(1, K + 1):
        n_k = len(cx.simplices[k])
        if n_k == 0:
            out.append(0)
            continue
        r = _graph_rank(cx.simplices[1], d) if k == 1 else exact_rank(boundary_matrix(cx, k))
        out.append(n_k - r)
    return out if per_dim else sum(out)


def complete_graph_cycle_rank(d: int, K: int) -> int:
    """Closed form ``sum_{k=1..K} (d-k)(d-k-1)/2``.

    Equal to the cycle rank of the complete graph for ``K = 1`` (and for
    ``d <= 4``); for ``k >= 2`` the true dimension-k rank is
    ``C(d-1, k+1)``, see :func:`complete_complex_cycle_rank`.
    """
    _check_dims(d, K)
    return sum((d - k) * (d - k - 1) // 2 for k in range(1, K + 1))


def complete_complex_cycle_rank(d: int, K: int) -> int:
    """Exact cycle rank of the complete graph's clique complex, ``sum_k C(d-1, k+1)``.

    The full simplex is acyclic, so ``Z_k = B_k`` and
    ``rank Z_k = rank d_{k+1} = C(d-1, k+1)``.
    """
    _check_dims(d, K)
    return sum(math.comb(d - 1, k + 1) for k in range(1, K + 1))


def intersection_cycle_rank(E1, E2, d: int, K: int) -> int:
    """``rank(Z(E1) & Z(E2))``, computed as ``rank Z(E1 & E2)``."""
    A = make_edge_set(E1, d)
    B = make_edge_set(E2, d)
    return cycle_rank(A & B, d, K)


class IncrementalCycleRank:
    """Cycle rank of a growing edge set, updated one edge at a time.

    Dimension 1 is tracked with union-find. For ``k >= 2`` each new
    k-simplex column is reduced against the stored pivot columns (keyed by
    their largest row id); a column that reduces to zero adds one cycle.
    """

    def __init__(self, d: int, K: int):
        _check_dims(d, K)
        self.d, self.K = d, K
        self.adj = [set() for _ in range(d)]
        self.parent = list(range(d))
        self.ids = [dict() for _ in range(K + 1)]
        self.pivots = [dict() for _ in range(K + 1)]
        self.rank = 0
        self.edges = set()

    def copy(self) -> "IncrementalCycleRank":
        other = IncrementalCycleRank.__new__(IncrementalCycleRank)
        other.d, other.K, other.rank = self.d, self.K, self.rank
        other.adj = [set(a) for a in self.adj]
        other.parent = list(self.parent)
        other.ids = [dict(x) for x in self.ids]
        other.pivots = [dict(x) for x in self.pivots]
        other.edges = set(self.edges)
        return other

    def _find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def new_simplices(self, u: int, v: int) -> list[list[tuple]]:
        """Simplices created by adding edge (u, v), grouped by dimension."""
        common = self.adj[u] & self.adj[v]
        out = [[] for _ in range(self.K + 1)]
        out[1].append((u, v))
        frontier = [((), common)]
        for k in range(2, self.K + 1):
            nxt = []
            for base, cands in frontier:
                for w in cands:
                    if base and w <= base[-1]:
                        continue
                    s = base + (w,)
                    out[k].append(tuple(sorted(s + (u, v))))
                    nxt.append((s, cands & self.adj[w]))
            frontier = nxt
        return out

    def _reduce(self, k, col):
        piv = self.pivots[k]
        while col:
            low = max(col)
            other = piv.get(low)
            if other is None:
                g = _content(col)
                piv[low] = {r: x // g for r, x in col.items()} if g > 1 else col
                return True
            a, b = other[low], col[low]
            new = {}
            for r in set(col) | set(other):
                x = a * col.get(r, 0) - b * other.get(r, 0)
                if x:
                    new[r] = x
            col = new
        return False

    def add_edge(self, u: int, v: int) -> int:
        """Insert an edge and return the increase in cycle rank."""
        u, v = canonical_edge(u, v)
        if (u, v) in self.edges:
            raise ValueError(f"edge {(u, v)} already present")
        created = self.new_simplices(u, v)
        ell = 0
        ru, rv = self._find(u), self._find(v)
        if ru == rv:
            ell += 1
        else:
            self.parent[ru] = rv
        ids1 = self.ids[1]
        ids1[(u, v)] = len(ids1)
        for k in range(2, self.K + 1):
            faces = self.ids[k - 1]
            mine = self.ids[k]
            for s in sorted(created[k]):
                mine[s] = len(mine)
                col = {faces[s[:i] + s[i + 1:]]: (-1) ** i for i in range(len(s))}
                if not self._reduce(k, col):
                    ell += 1
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.edges.add((u, v))
        self.rank += ell
        return ell


def rank_increment(E_base, e_new: Edge, d: int, K: int, method: str = "auto") -> int:
    """``rank Z(E_base + e_new) - rank Z(E_base)``.

    ``method="incremental"`` reduces only the new simplices against an
    elimination of the base; ``"direct"`` takes the difference of two full
    rank computations; ``"auto"`` picks incremental when the edge creates at
    most 64 new simplices.
    """
    base = make_edge_set(E_base, d)
    e_new = canonical_edge(*e_new)
    if e_new in base:
        raise ValueError(f"edge {e_new} already in the base set")
    if method == "direct":
        return cycle_rank(base | {e_new}, d, K) - cycle_rank(base, d, K)
    inc = IncrementalCycleRank(d, K)
    for e in sorted(base):
        inc.add_edge(*e)
    if method == "auto" and sum(map(len, inc.new_simplices(*e_new))) > INCREMENTAL_LIMIT:
        return rank_increment(base, e_new, d, K, method="direct")
    return inc.add_edge(*e_new)
