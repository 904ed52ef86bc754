"""Synthetic Gaussian and Ising models, exact samplers and experiment drivers.

Random numbers come from numpy's Philox counter-based generator. Repetition
``i`` of an experiment with seed ``s`` uses
``Philox(SeedSequence(s, spawn_key=(i,)))``, which is the ``i``-th child
of ``SeedSequence(s).spawn``. Every repetition's stream depends only on
``(s, i)``, so results do not depend on how repetitions are scheduled.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
import traceback
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CholeskyFailure, NotAForest
from .estimators import EdgeStatistics, ggm_edge_statistics, ising_edge_statistics
from .features import FeatureShape, enumerate_candidates, parse_shape, select_features
from .graph import GraphFeature, Scenario, WeightedGraph, canonical_edge, feature_embedded, filter_edges
from .homology import cycle_rank, intersection_cycle_rank
from .persistence import evaluate_at, khan, ufdp

TABLE1_BLOCKS = {200: (20, 10, 20), 250: (20, 10, 30), 300: (40, 20, 20), 350: (60, 30, 10)}
ORACLE_SIGMA = 1e-6


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Generator for repetition ``rep`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(rep),))))


# ---------------------------------------------------------------- Gaussian


@dataclass(frozen=True)
class GgmDesign:
    """Block-disjoint precision-matrix design.

    ``flavor="cycles"``: ``m1`` triangles, ``m2`` four-cycles with
    ``extra4`` random chords, ``m3`` five-cycles with ``extra5`` random
    chords. ``flavor="cliques"``: triangles, four-cliques and five-cliques,
    each five-clique edge dropped with probability ``drop_prob``.
    """

    m1: int
    m2: int
    m3: int
    weight_low: float = 0.85
    weight_high: float = 1.0
    diag_pad: float = 0.1
    flavor: str = "cycles"
    extra4: int = 1
    extra5: int = 3
    drop_prob: float = 0.1

    @property
    def d(self) -> int:
        return 3 * self.m1 + 4 * self.m2 + 5 * self.m3


def table1_design(d: int = 200, **kw) -> GgmDesign:
    if d not in TABLE1_BLOCKS:
        raise ValueError(f"table1 preset defines d in {sorted(TABLE1_BLOCKS)}; pass m1, m2, m3 instead")
    return GgmDesign(*TABLE1_BLOCKS[d], **kw)


def homology_design(m1: int = 10, m2: int = 30, m3: int = 10, **kw) -> GgmDesign:
    kw = {"weight_low": 0.0, "weight_high": 10.0, "diag_pad": 0.25, "flavor": "cliques", **kw}
    return GgmDesign(m1, m2, m3, **kw)


@dataclass(frozen=True)
class GgmModel:
    theta: np.ndarray  # full SPD precision matrix
    truth: WeightedGraph  # its off-diagonal part
    blocks: tuple  # planted blocks including extra edges, as GraphFeature
    planted: tuple  # planted base shapes: triangles, cycles or cliques

    def __iter__(self):
        return iter((self.truth, self.planted))


def _block_edges(size, flavor, design, rng):
    if flavor == "cliques":
        edges = list(itertools.combinations(range(size), 2))
        if size == 5 and design.drop_prob > 0:
            keep = rng.random(len(edges)) >= design.drop_prob
            edges = [e for e, k in zip(edges, keep) if k]
        return edges
    edges = [canonical_edge(i, (i + 1) % size) for i in range(size)] if size > 3 else [(0, 1), (1, 2), (0, 2)]
    extra = {4: design.extra4, 5: design.extra5}.get(size, 0)
    if extra:
        missing = [e for e in itertools.combinations(range(size), 2) if e not in set(edges)]
        pick = rng.choice(len(missing), size=min(extra, len(missing)), replace=False)
        edges += [missing[i] for i in sorted(pick)]
    return sorted(edges)


def gen_ggm_model(design: GgmDesign, rng: np.random.Generator) -> GgmModel:
    """Planted block structure with Uniform(low, high) precision entries.

    The diagonal is ``|lambda_min(off-diagonal part)| + diag_pad``, which
    makes the matrix positive definite with smallest eigenvalue
    ``diag_pad``.
    """
    d = design.d
    theta = np.zeros((d, d))
    blocks, planted = [], []
    start = 0
    for size, count in ((3, design.m1), (4, design.m2), (5, design.m3)):
        for _ in range(count):
            local = _block_edges(size, design.flavor, design, rng)
            edges = [(start + u, start + v) for u, v in local]
            w = rng.uniform(design.weight_low, design.weight_high, size=len(edges))
            for (u, v), x in zip(edges, w):
                theta[u, v] = theta[v, u] = x
            verts = tuple(range(start, start + size))
            blocks.append(GraphFeature(verts, tuple(edges)))
            if design.flavor == "cliques":
                planted.append(blocks[-1])
            else:
                ring = [canonical_edge(start + i, start + (i + 1) % size) for i in range(size)]
                planted.append(GraphFeature(verts, tuple(sorted(ring))))
            start += size
    lam_min = np.linalg.eigvalsh(theta)[0] if d else 0.0
    off = theta.copy()
    theta[np.diag_indices(d)] = abs(lam_min) + design.diag_pad
    return GgmModel(theta, WeightedGraph(off), tuple(blocks), tuple(planted))


def sample_gaussian(theta_star, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` rows of ``N(0, inv(theta_star))`` as ``Z @ L.T`` with ``L L^T = inv(theta_star)``."""
    theta_star = np.asarray(theta_star, dtype=float)
    try:
        np.linalg.cholesky(theta_star)
        sigma = np.linalg.inv(theta_star)
        sigma = (sigma + sigma.T) / 2
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure("precision matrix is not numerically positive definite") from exc
    Z = rng.standard_normal((n, theta_star.shape[0]))
    return Z @ L.T


# ---------------------------------------------------------------- Ising


@dataclass(frozen=True)
class IsingDesign:
    """Forest of random trees with sizes drawn uniformly from ``[size_low, size_high]``.

    If ``templates`` is given (a list of edge lists on ``0..m-1``), those
    trees are packed cyclically instead of random ones.
    """

    d: int = 200
    size_low: int = 6
    size_high: int = 10
    weight_low: float = 0.9
    weight_high: float = 1.0
    theta: float = 0.45
    templates: tuple | None = None


@dataclass(frozen=True)
class IsingModel:
    weights: WeightedGraph  # couplings w*
    correlations: np.ndarray  # exact E[X_u X_v]
    truth: WeightedGraph  # E[X_u X_v] - tanh(theta), off the diagonal
    blocks: tuple  # planted trees

    def __iter__(self):
        return iter((self.weights, self.blocks))


def prufer_tree(m: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random labeled tree on ``m`` vertices."""
    if m == 1:
        return []
    if m == 2:
        return [(0, 1)]
    seq = rng.integers(0, m, size=m - 2).tolist()
    degree = [1] * m
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(m) if degree[i] == 1)
        edges.append(canonical_edge(leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(m) if degree[i] == 1]
    edges.append(canonical_edge(u, v))
    return sorted(edges)


def gen_ising_forest(design: IsingDesign, rng: np.random.Generator) -> IsingModel:
    """Pack trees into disjoint vertex blocks until fewer than the next size remain."""
    d = design.d
    w = np.zeros((d, d))
    blocks = []
    start = 0
    t = 0
    while True:
        if design.templates:
            tpl = list(design.templates[t % len(design.templates)])
            m = 1 + max(max(e) for e in tpl)
        else:
            m = int(rng.integers(design.size_low, design.size_high + 1))
            tpl = None
        if start + m > d:
            break
        edges = tpl if tpl is not None else prufer_tree(m, rng)
        edges = [(start + u, start + v) for u, v in edges]
        x = rng.uniform(design.weight_low, design.weight_high, size=len(edges))
        for (u, v), val in zip(edges, x):
            w[u, v] = w[v, u] = val
        blocks.append(GraphFeature(tuple(range(start, start + m)), tuple(edges)))
        start += m
        t += 1
    weights = WeightedGraph(w)
    corr = forest_correlations(weights)
    truth = corr - math.tanh(design.theta)
    np.fill_diagonal(truth, 0.0)
    return IsingModel(weights, corr, WeightedGraph(truth), tuple(blocks))


def _forest_children(weights: WeightedGraph):
    d = weights.d
    adj = [np.flatnonzero(weights.weights[v]).tolist() for v in range(d)]
    parent = [-1] * d
    seen = [False] * d
    order, roots = [], []
    n_edges = sum(len(a) for a in adj) // 2
    for r in range(d):
        if seen[r]:
            continue
        roots.append(r)
        seen[r] = True
        queue = deque([r])
        while queue:
            x = queue.popleft()
            order.append(x)
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    queue.append(y)
    if n_edges != d - len(roots):
        raise NotAForest("coupling graph contains a cycle")
    return order, parent


def forest_correlations(weights: WeightedGraph) -> np.ndarray:
    """Exact ``E[X_u X_v]`` on a forest: product of ``tanh(w)`` along the tree path."""
    order, parent = _forest_children(weights)
    d = weights.d
    t = np.tanh(weights.weights)
    corr = np.eye(d)
    # ancestors' rows are complete before a vertex is reached in BFS order
    done = []
    for x in order:
        p = parent[x]
        if p >= 0:
            for y in done:
                if corr[p, y] != 0:
                    corr[x, y] = corr[y, x] = corr[p, y] * t[x, p]
        done.append(x)
    return corr


def sample_ising_forest(weights: WeightedGraph, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact samples from a tree-structured Ising model.

    Each tree root is a fair sign; a child copies its parent's sign with
    probability ``e^w / (e^w + e^-w)``.
    """
    order, parent = _forest_children(weights)
    d = weights.d
    X = np.empty((n, d))
    for x in order:
        p = parent[x]
        if p < 0:
            X[:, x] = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        else:
            w = weights.weights[x, p]
            keep = 1.0 / (1.0 + math.exp(-2.0 * w))
            X[:, x] = np.where(rng.random(n) < keep, X[:, p], -X[:, p])
    return X


# ---------------------------------------------------------------- scoring


def fdp_power(selected, true_features, truth_edges=None) -> tuple[float, float]:
    """False discovery proportion and power of a feature selection.

    A selected feature is false when it is not among ``true_features`` or,
    if ``truth_edges`` is given, when one of its edges is a true null
    (missing from ``truth_edges``). Power is the fraction of
    ``true_features`` selected (0 when there are none).
    """
    selected = list(getattr(selected, "selected", selected))
    true_sigs = {f.signature for f in true_features}
    if truth_edges is not None:
        false = sum(1 for f in selected if not feature_embedded(f, truth_edges))
    else:
        false = sum(1 for f in selected if f.signature not in true_sigs)
    hits = len({f.signature for f in selected} & true_sigs)
    fdp = false / max(1, len(selected))
    power = hits / len(true_sigs) if true_sigs else 0.0
    return fdp, power


# ---------------------------------------------------------------- experiments


@dataclass
class ExperimentReport:
    config: dict
    reps: int
    seed: int
    metrics: dict  # name -> {"fdp": [...], "power": [...]} (homology: "ufdp")
    errors: list = field(default_factory=list)
    wall_time: float = 0.0

    def summary(self) -> dict:
        out = {}
        for name, m in self.metrics.items():
            row = {}
            for key, vals in m.items():
                vals = [v for v in vals if v is not None]
                row["mean_" + key] = float(np.mean(vals)) if vals else float("nan")
            if "mean_fdp" in row:
                row["fdr"] = row["mean_fdp"]
            if "mean_ufdp" in row:
                row["ufdr"] = row["mean_ufdp"]
            out[name] = row
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "reps": self.reps,
            "seed": self.seed,
            "seeding": "Philox(SeedSequence(seed, spawn_key=(rep,)))",
            "summary": self.summary(),
            "metrics": self.metrics,
            "errors": self.errors,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = [(name, key) for name, m in self.metrics.items() for key in m]
        w.writerow(["rep"] + [f"{name}.{key}" for name, key in cols])
        for i in range(self.reps):
            w.writerow([i] + [self.metrics[name][key][i] for name, key in cols])
        return buf.getvalue()


def _map_reps(fn, args, reps, parallelism):
    if parallelism and parallelism > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(fn, [(args, i) for i in range(reps)]))
    return [fn((args, i)) for i in range(reps)]


def is_isomorphic(shape: FeatureShape, feature: GraphFeature) -> bool:
    if len(feature.vertices) != shape.m or len(feature.edges) != len(shape.edges):
        return False
    relabel = {v: i for i, v in enumerate(feature.vertices)}
    local = [(relabel[u], relabel[v]) for u, v in feature.edges]
    return bool(enumerate_candidates(shape, local, shape.m))


def true_features_for(shape: FeatureShape, model) -> list[GraphFeature]:
    """Planted features matching ``shape``.

    Gaussian designs: the planted base shapes isomorphic to ``shape``.
    Ising designs: every placement of ``shape`` inside the planted forest.
    """
    if isinstance(model, IsingModel):
        forest = filter_edges(model.weights, 0.0, Scenario.ONE_SIDED)
        return enumerate_candidates(shape, forest, model.weights.d)
    return [f for f in model.planted if is_isomorphic(shape, f)]


def _feature_rep(packed):
    cfg, i = packed
    try:
        rng = rep_rng(cfg["seed"], i)
        if cfg["model"] == "ggm":
            model = gen_ggm_model(cfg["design"], rng)
            X = sample_gaussian(model.theta, cfg["n"], rng)
            stats = ggm_edge_statistics(X, cfg["lam"])
            truth_edges = filter_edges(model.truth, 0.0, Scenario.TWO_SIDED)
        else:
            model = gen_ising_forest(cfg["design"], rng)
            X = sample_ising_forest(model.weights, cfg["n"], rng)
            stats = ising_edge_statistics(X, cfg["design"].theta)
            truth_edges = filter_edges(model.truth, 0.0, Scenario.ONE_SIDED)
        out = {}
        for shape in cfg["shapes"]:
            res = select_features(stats, shape, cfg["q"])
            truth = true_features_for(shape, model)
            out[shape.name] = fdp_power(res.selected, truth, truth_edges) + (len(res.selected),)
        return out, None
    except Exception:  # recorded per repetition, batch continues
        return None, f"rep {i}: " + traceback.format_exc(limit=3)


def run_feature_experiment(design, shape, n: int, q: float, reps: int, seed: int, parallelism: int = 1,
                           model: str | None = None, lam: float | None = None) -> ExperimentReport:
    """Repeated generate / sample / estimate / select / score loop.

    ``shape`` may be a single shape (or shape string) or a list; all shapes
    are scored on the same samples. ``model`` defaults to ``"ising"`` for an
    :class:`IsingDesign` and ``"ggm"`` otherwise. ``lam=None`` uses
    :func:`~graphfdr.estimators.default_lambda` scaled by each sample's
    mean variance.
    """
    shapes = shape if isinstance(shape, (list, tuple)) else [shape]
    shapes = [parse_shape(s) if isinstance(s, str) else s for s in shapes]
    if model is None:
        model = "ising" if isinstance(design, IsingDesign) else "ggm"
    d = design.d
    cfg = {"model": model, "design": design, "shapes": shapes, "n": n, "q": q, "seed": seed,
           "lam": lam}
    t0 = time.perf_counter()
    results = _map_reps(_feature_rep, cfg, reps, parallelism)
    metrics = {s.name: {"fdp": [], "power": [], "n_selected": []} for s in shapes}
    errors = []
    for out, err in results:
        for s in shapes:
            vals = out[s.name] if out else (None, None, None)
            for key, v in zip(("fdp", "power", "n_selected"), vals):
                metrics[s.name][key].append(v)
        if err:
            errors.append(err)
    config = {"model": model, "design": asdict(design), "shapes": [s.name for s in shapes], "n": n, "q": q,
              "lambda": "default" if lam is None else lam, "d": d}
    return ExperimentReport(config, reps, seed, metrics, errors, time.perf_counter() - t0)


def homology_power(result, truth: WeightedGraph, K: int, delta: float, grid) -> float:
    """Mean over ``grid`` of the share of the true cycle rank at ``mu + delta`` covered by the selection at ``mu``."""
    vals = []
    for mu in grid:
        edges, _ = evaluate_at(result, mu)
        true_edges = filter_edges(truth, mu + delta, Scenario.TWO_SIDED)
        total = cycle_rank(true_edges, truth.d, K)
        vals.append(intersection_cycle_rank(true_edges, edges, truth.d, K) / max(1, total))
    return float(np.mean(vals))


def _homology_rep(packed):
    cfg, i = packed
    try:
        rng = rep_rng(cfg["seed"], i)
        model = gen_ggm_model(cfg["design"], rng)
        if cfg["estimator"] == "oracle":
            # true weights with a vanishing standard error
            W = model.truth.weights
            stats = EdgeStatistics(W, np.full_like(W, ORACLE_SIGMA), cfg["n"], Scenario.TWO_SIDED)
        else:
            X = sample_gaussian(model.theta, cfg["n"], rng)
            stats = ggm_edge_statistics(X, cfg["lam"])
        res = khan(stats, cfg["mu0"], cfg["mu1"], cfg["q"], cfg["K"])
        u = ufdp(res, model.truth, Scenario.TWO_SIDED, cfg["K"])
        grid = np.linspace(cfg["mu0"], cfg["mu1"], cfg["power_grid"])
        pw = homology_power(res, model.truth, cfg["K"], cfg["delta"], grid)
        return {"ufdp": u, "power": pw, "n_change_points": len(res.steps), "rank0": res.steps[0].rank}, None
    except Exception:
        return None, f"rep {i}: " + traceback.format_exc(limit=3)


def run_homology_experiment(design: GgmDesign, n: int, q: float, K: int, mu0: float, mu1: float, reps: int,
                            seed: int, parallelism: int = 1, lam: float | None = None, power_c: float = 1.0,
                            power_grid: int = 101, estimator: str = "ggm") -> ExperimentReport:
    """Repeated KHAN runs on the clique design, scoring uFDP and a power proxy.

    ``estimator="oracle"`` skips sampling and feeds the true precision
    entries with standard error ``ORACLE_SIGMA``, a noiseless reference.

    The power proxy at level ``mu`` is the fraction of the true cycle rank
    at ``mu + delta``, ``delta = power_c * sqrt(log d / n)``, recovered by
    the selection at ``mu``; it is averaged over ``power_grid`` evenly
    spaced levels in ``[mu0, mu1]``.
    """
    if not math.isfinite(mu1):
        raise ValueError("the homology experiment needs a finite mu1")
    if estimator not in ("ggm", "oracle"):
        raise ValueError(f"unknown estimator {estimator!r}")
    d = design.d
    delta = power_c * math.sqrt(math.log(d) / n)
    cfg = {"design": design, "n": n, "q": q, "K": K, "mu0": mu0, "mu1": mu1, "seed": seed,
           "lam": lam, "delta": delta, "power_grid": power_grid, "estimator": estimator}
    t0 = time.perf_counter()
    results = _map_reps(_homology_rep, cfg, reps, parallelism)
    keys = ("ufdp", "power", "n_change_points", "rank0")
    metrics = {"homology": {k: [] for k in keys}}
    errors = []
    for out, err in results:
        for k in keys:
            metrics["homology"][k].append(out[k] if out else None)
        if err:
            errors.append(err)
    config = {"model": "ggm", "design": asdict(design), "n": n, "q": q, "K": K, "mu0": mu0, "mu1": mu1,
              "lambda": "default" if lam is None else lam, "power_delta": delta, "power_c": power_c, "power_grid": power_grid, "d": d,
              "estimator": estimator}
    return ExperimentReport(config, reps, seed, metrics, errors, time.perf_counter() - t0)
