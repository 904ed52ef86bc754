"""Homological feature screening at a fixed level (DGS) and across a filtration (KHAN).

DGS inserts the screened edges in increasing p-value order, gives every new
independent cycle the p-value of the edge that created it, and runs BH on
those generator p-values with the cycle rank of the complete graph as
denominator.

KHAN follows the selected group along the filtration. Between change points
the selected edge set is constant; the next change point is the smallest
lower confidence bound over the currently selected edges, at the level
implied by the current rank, and DGS is rerun there.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bhq import bh_step_up
from .estimators import EdgeStatistics, filtered_pvalue, lower_conf_bound
from .graph import Scenario, WeightedGraph, filter_edges, make_edge_set
from .homology import IncrementalCycleRank, complete_complex_cycle_rank, complete_graph_cycle_rank, intersection_cycle_rank

logger = logging.getLogger(__name__)

STALL_EPS = 1e-12


@dataclass(frozen=True)
class DgsOutput:
    mu: float
    selected_edges: tuple
    rank: int
    alpha_hat: float
    generator_pvalues: tuple
    processed_edges: tuple
    jbar: int


def resolve_jbar(d: int, K: int, jbar=None) -> int:
    """BH denominator from an integer, ``"closed"`` (default) or ``"exact"``.

    ``"closed"`` is ``sum_k (d-k)(d-k-1)/2``. ``"exact"`` is the cycle rank
    of the full clique complex on ``d`` vertices, ``sum_k C(d-1, k+1)``; the
    two agree for ``K = 1`` and the closed form is smaller for ``K >= 2``
    once ``d >= 5``.
    """
    if jbar is None or jbar == "closed":
        return complete_graph_cycle_rank(d, K)
    if jbar == "exact":
        return complete_complex_cycle_rank(d, K)
    if isinstance(jbar, str):
        raise ValueError(f"unknown denominator rule {jbar!r}")
    if int(jbar) < 1:
        raise ValueError("jbar must be positive")
    return int(jbar)


def dgs(stats: EdgeStatistics, mu: float, q: float, K: int, jbar: int | None = None) -> DgsOutput:
    """Select edges, and the cycle group they span, at filtration level ``mu``.

    Parameters
    ----------
    stats : EdgeStatistics
    mu : float
        Filtration level; p-values test ``W_e <= mu`` (``|W_e|`` two-sided).
    q : float
        Target FDR level.
    K : int
        Highest cycle dimension.
    jbar : int or {"exact", "closed"}, optional
        BH denominator, see :func:`resolve_jbar`. Defaults to the closed
        form. It is raised to the number of generators if that is larger.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    d = stats.d
    jbar = resolve_jbar(d, K, jbar)
    degenerate = stats.degenerate_pairs()
    if degenerate:
        logger.warning("%d pair(s) with zero standard deviation treated as p = 1, e.g. %s", len(degenerate), degenerate[0])
    P = stats.pvalue_matrix(mu, degenerate="one")
    iu, ju = np.nonzero(np.triu(P < q, k=1))
    pv = P[iu, ju]
    order = np.lexsort((ju, iu, pv))
    inc = IncrementalCycleRank(d, K)
    generators = []
    cum_rank = [0]
    processed = []
    for i in order:
        e = (int(iu[i]), int(ju[i]))
        p = float(pv[i])
        ell = inc.add_edge(*e)
        generators.extend([p] * ell)
        cum_rank.append(inc.rank)
        processed.append((e, p))
    if len(generators) > jbar:
        # BH needs at least as many hypotheses as p-values
        logger.warning("%d generators exceed jbar=%d; using %d", len(generators), jbar, len(generators))
        jbar = len(generators)
    res = bh_step_up(generators, q, total=jbar, order_strict=False)
    # processed edges are sorted by p, so {p < alpha_hat} is a prefix
    cut = 0
    while cut < len(processed) and processed[cut][1] < res.alpha_hat:
        cut += 1
    selected = tuple(sorted(e for e, _ in processed[:cut]))
    return DgsOutput(
        mu=float(mu),
        selected_edges=selected,
        rank=cum_rank[cut],
        alpha_hat=res.alpha_hat,
        generator_pvalues=tuple(generators),
        processed_edges=tuple(e for e, _ in processed),
        jbar=int(jbar),
    )


@dataclass(frozen=True)
class Step:
    mu: float
    edges: tuple
    rank: int
    alpha_hat: float

    def to_dict(self) -> dict:
        return {"mu": self.mu, "rank": self.rank, "alpha_hat": self.alpha_hat, "edges": [list(e) for e in self.edges]}


@dataclass(frozen=True)
class PersistenceResult:
    """Piecewise-constant selected group on ``[mu0, mu1]``.

    ``steps[t]`` holds on ``[steps[t].mu, steps[t+1].mu)``; the last step
    holds up to ``mu1``.
    """

    mu0: float
    mu1: float
    q: float
    K: int
    jbar: int
    scenario: Scenario
    steps: tuple

    @property
    def change_points(self) -> list[float]:
        return [s.mu for s in self.steps]

    @property
    def ranks(self) -> list[int]:
        return [s.rank for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "mu0": self.mu0,
            "mu1": self.mu1 if math.isfinite(self.mu1) else "inf",
            "q": self.q,
            "K": self.K,
            "jbar": self.jbar,
            "scenario": self.scenario.value,
            "steps": [s.to_dict() for s in self.steps],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, obj) -> "PersistenceResult":
        mu1 = obj["mu1"]
        steps = tuple(
            Step(float(s["mu"]), tuple(tuple(e) for e in s["edges"]), int(s["rank"]), float(s.get("alpha_hat", 0.0)))
            for s in obj["steps"]
        )
        return cls(float(obj["mu0"]), math.inf if mu1 == "inf" else float(mu1), float(obj["q"]), int(obj["K"]),
                   int(obj["jbar"]), Scenario.parse(obj["scenario"]), steps)


def _drop_level(stats, e, start, level):
    """Smallest mu > start (to 1e-10) at which edge e's filtered p-value exceeds ``level``."""
    lo = start
    hi = start + 1e-10
    while filtered_pvalue(stats, e, hi) <= level:
        hi = start + 2 * (hi - start)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if filtered_pvalue(stats, e, mid) > level:
            hi = mid
        else:
            lo = mid
    return hi


def _next_change_point(stats, step, q, jbar):
    r = step.rank
    # two-sided: each tail gets half, so the p-value level stays q r / jbar
    level = q * r / jbar
    alpha = level / 2 if stats.scenario is Scenario.TWO_SIDED else level
    bound, e_min = min((lower_conf_bound(stats, e, alpha), e) for e in step.edges)
    # push the bound until the minimizing edge's p-value strictly exceeds the
    # level, so DGS at the change point already shows the state that holds
    # on the interval after it (at equality the <= scan and < cut disagree)
    h = max(abs(bound), 1.0) * np.finfo(float).eps
    while filtered_pvalue(stats, e_min, bound) <= level:
        bound += h
        h *= 2
    if bound <= step.mu + STALL_EPS:
        logger.debug("change point stalled at %r; bisecting", step.mu)
        bound = _drop_level(stats, e_min, step.mu, level)
    return bound


def khan(stats: EdgeStatistics, mu0: float, mu1: float, q: float, K: int, jbar: int | None = None,
         max_steps: int | None = None) -> PersistenceResult:
    """Selected persistent cycle group over ``[mu0, mu1]`` (``mu1`` may be ``inf``).

    ``result.jbar`` is the denominator actually used: the requested one, or
    the generator count at ``mu0`` if that is larger.
    """
    if not mu0 < mu1:
        raise ValueError("need mu0 < mu1")
    jbar = resolve_jbar(stats.d, K, jbar)
    first = dgs(stats, mu0, q, K, jbar)
    # the screened set only shrinks as mu grows, so the generator count at
    # mu0 bounds every later one and a lifted denominator stays fixed
    jbar = first.jbar
    steps = [Step(first.mu, first.selected_edges, first.rank, first.alpha_hat)]
    limit = max_steps if max_steps is not None else len(first.selected_edges) + 1
    while steps[-1].rank > 0 and len(steps) <= limit:
        mu = _next_change_point(stats, steps[-1], q, jbar)
        if mu > mu1:
            break
        out = dgs(stats, mu, q, K, jbar)
        steps.append(Step(out.mu, out.selected_edges, out.rank, out.alpha_hat))
    return PersistenceResult(float(mu0), float(mu1), q, K, int(jbar), stats.scenario, tuple(steps))


def evaluate_at(result: PersistenceResult, mu: float):
    """``(edges, rank)`` of the selection at level ``mu`` (right-continuous).

    Levels above ``mu1`` were never analyzed and return the empty selection.
    """
    if mu < result.mu0:
        raise ValueError(f"mu={mu} lies below mu0={result.mu0}")
    if mu > result.mu1:
        return frozenset(), 0
    pts = result.change_points
    t = int(np.searchsorted(pts, mu, side="right")) - 1
    step = result.steps[t]
    return frozenset(step.edges), step.rank


@dataclass(frozen=True)
class Bar:
    birth: float
    death: float
    multiplicity: int
    censored: bool = False


def barcode(result: PersistenceResult) -> list[Bar]:
    """Bars born at ``mu0``; each unit of rank lost at a change point ends one bar."""
    bars = []
    ranks = result.ranks
    for t in range(1, len(ranks)):
        drop = ranks[t - 1] - ranks[t]
        if drop > 0:
            bars.append(Bar(result.mu0, result.steps[t].mu, drop))
    if ranks[-1] > 0:
        bars.append(Bar(result.mu0, result.mu1, ranks[-1], censored=True))
    return bars


def barcode_csv(bars) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["birth", "death", "multiplicity", "censored"])
    for b in bars:
        w.writerow([repr(b.birth), repr(b.death), b.multiplicity, int(b.censored)])
    return buf.getvalue()


def _truth_levels(truth: WeightedGraph, scenario: Scenario):
    w = truth.weights[np.triu_indices(truth.d, 1)]
    if scenario is Scenario.TWO_SIDED:
        w = np.abs(w)
    return np.unique(w)


def ufdp_grid(result: PersistenceResult, truth: WeightedGraph, scenario, mu0: float, mu1: float) -> list[float]:
    """Breakpoints of both step functions in ``[mu0, mu1]`` plus the midpoints between them."""
    scenario = Scenario.parse(scenario)
    pts = {float(mu0)}
    pts.update(m for m in result.change_points if mu0 <= m <= mu1)
    pts.update(float(x) for x in _truth_levels(truth, scenario) if mu0 < x <= mu1)
    pts = sorted(pts)
    mids = [(a + b) / 2 for a, b in zip(pts, pts[1:])]
    return sorted(set(pts) | set(mids))


def fdp_at(result: PersistenceResult, truth: WeightedGraph, scenario, K: int, mu: float) -> float:
    edges, rank = evaluate_at(result, mu)
    if rank == 0:
        return 0.0
    true_edges = filter_edges(truth, mu, scenario)
    hit = intersection_cycle_rank(true_edges, edges, truth.d, K)
    return (rank - hit) / max(1, rank)


def ufdp(result: PersistenceResult, truth: WeightedGraph, scenario, K: int, mu0: float | None = None,
         mu1: float | None = None) -> float:
    """Largest false discovery proportion of the selected cycle group over ``[mu0, mu1]``.

    Both the selection and the true edge set are right-continuous step
    functions of ``mu``, so checking every breakpoint of either one gives
    the exact supremum.
    """
    mu0 = result.mu0 if mu0 is None else mu0
    mu1 = result.mu1 if mu1 is None else mu1
    scenario = Scenario.parse(scenario)
    return max(fdp_at(result, truth, scenario, K, m) for m in ufdp_grid(result, truth, scenario, mu0, mu1))


def edges_to_list(edges):
    return [list(e) for e in sorted(make_edge_set(edges))]
