import itertools
import logging
import math

import numpy as np
import pytest
from conftest import pvalue_matrix, stats_from_pvalues
from hypothesis import given, settings
from hypothesis import strategies as st

from graphfdr.errors import BudgetExceeded
from graphfdr.estimators import EdgeStatistics
from graphfdr.features import (
    automorphism_count,
    count_total_candidates,
    custom,
    enumerate_candidates,
    m_clique,
    m_cycle,
    parse_shape,
    path,
    select_features,
    spider,
    star,
    triangle,
)
from graphfdr.graph import GraphFeature, canonical_edge

K4 = {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}


def brute_placements(shape, E, d):
    """All distinct images of the template under injective vertex maps into E."""
    out = set()
    for verts in itertools.permutations(range(d), shape.m):
        edges = tuple(sorted(canonical_edge(verts[u], verts[v]) for u, v in shape.edges))
        if all(e in E for e in edges):
            out.add((tuple(sorted(verts)), edges))
    return out


def test_automorphism_counts():
    assert automorphism_count(triangle()) == 6
    assert automorphism_count(path(5)) == 2
    assert automorphism_count(m_cycle(4)) == 8
    assert automorphism_count(star(5)) == 24
    assert automorphism_count(spider()) == 2
    assert automorphism_count(GraphFeature.from_edges([(3, 7), (7, 9)])) == 2


def test_automorphism_size_limit():
    with pytest.raises(ValueError):
        automorphism_count(m_cycle(9))


@pytest.mark.parametrize("shape", [triangle(), m_cycle(5), m_clique(4), star(4), path(6), spider()])
def test_automorphism_divides_factorial(shape):
    assert math.factorial(shape.m) % shape.automorphism_count == 0


def test_total_candidates():
    assert count_total_candidates(triangle(), 200) == 1_313_400
    assert count_total_candidates(m_cycle(4), 4) == 3
    assert count_total_candidates(m_cycle(5), 5) == 12
    big = count_total_candidates(path(8), 10**4)
    assert isinstance(big, float) and big > 2**63
    with pytest.raises(ValueError):
        count_total_candidates(m_cycle(5), 4)


def test_enumerate_examples():
    tri = {(0, 1), (1, 2), (0, 2)}
    assert [f.vertices for f in enumerate_candidates(triangle(), tri, 3)] == [(0, 1, 2)]
    assert len(enumerate_candidates(triangle(), K4, 4)) == 4
    assert len(enumerate_candidates(m_cycle(4), K4, 4)) == 3


def test_enumerate_complete_graph_matches_count():
    d = 6
    Kd = set(itertools.combinations(range(d), 2))
    for shape in (triangle(), m_cycle(4), m_cycle(5), path(4), star(4), spider(), m_clique(4)):
        assert len(enumerate_candidates(shape, Kd, d)) == count_total_candidates(shape, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 7), st.floats(0.2, 0.9), st.integers(0, 10**6),
       st.sampled_from(["triangle", "cycle:4", "cycle:5", "path:4", "star:4", "spider", "clique:4"]))
def test_enumerate_matches_brute_force(d, density, seed, shape_name):
    shape = parse_shape(shape_name)
    if shape.m > d:
        return
    rng = np.random.default_rng(seed)
    E = {e for e in itertools.combinations(range(d), 2) if rng.random() < density}
    got = {f.signature for f in enumerate_candidates(shape, E, d)}
    assert got == brute_placements(shape, E, d)


def test_enumerate_disconnected_template():
    two_edges = custom([(0, 1), (2, 3)], name="matching")
    assert not two_edges.connected
    got = {f.signature for f in enumerate_candidates(two_edges, K4, 4)}
    assert got == brute_placements(two_edges, K4, 4)
    assert len(got) == 3


def test_enumerate_budget():
    Kd = set(itertools.combinations(range(8), 2))
    with pytest.raises(BudgetExceeded):
        enumerate_candidates(triangle(), Kd, 8, cap=10)


def test_parse_shape(tmp_path):
    assert parse_shape("triangle").edges == triangle().edges
    assert parse_shape("cycle:5").m == 5
    assert parse_shape("clique:4").edges == m_clique(4).edges
    assert len(parse_shape("star:5").edges) == 4
    assert parse_shape("path:3").edges == ((0, 1), (1, 2))
    f = tmp_path / "t.csv"
    f.write_text("u,v\n0,1\n1,2\n1,3\n", encoding="utf-8")
    sh = parse_shape(f"template:{f}")
    assert sh.m == 4 and sh.automorphism_count == 6
    for bad in ("hexagon", "cycle", "cycle:x"):
        with pytest.raises(ValueError):
            parse_shape(bad)


# ------------------------------------------------------------ select_features


def test_all_pvalues_one():
    res = select_features(stats_from_pvalues(np.ones((5, 5))), triangle(), 0.05)
    assert res.selected == () and res.alpha_hat == 0.0


def test_single_triangle_d3():
    P = pvalue_matrix(3, {(0, 1): 1e-9, (1, 2): 1e-9, (0, 2): 1e-9})
    res = select_features(stats_from_pvalues(P), triangle(), 0.05)
    assert res.total_J == 1
    assert [f.vertices for f in res.selected] == [(0, 1, 2)]
    assert res.alpha_hat == pytest.approx(0.05)


def test_planted_triangle_d5():
    P = pvalue_matrix(5, {(0, 1): 1e-6, (1, 2): 1e-6, (0, 2): 1e-6}, default=0.9)
    res = select_features(stats_from_pvalues(P), triangle(), 0.05)
    assert res.total_J == 10
    assert len(res.selected) == 1
    assert res.selected[0].pvalue == pytest.approx(1e-6, rel=1e-6)
    assert res.alpha_hat == pytest.approx(0.005)


def test_feature_pvalue_is_max_edge_pvalue():
    rng = np.random.default_rng(2)
    A = rng.uniform(0, 0.04, size=(6, 6))
    P = np.minimum(A, A.T)
    st_ = stats_from_pvalues(P)
    Pm = st_.pvalue_matrix()
    res = select_features(st_, m_cycle(4), 0.05)
    assert res.candidates
    for f in res.candidates:
        assert f.pvalue == max(Pm[u, v] for u, v in f.edges)
    for f in res.selected:
        assert f.pvalue < res.alpha_hat


def _brute_select(stats, shape, q):
    """Instantiate every placement on d vertices, no prescreen."""
    d = stats.d
    P = stats.pvalue_matrix()
    Kd = set(itertools.combinations(range(d), 2))
    feats = [GraphFeature(v, e) for v, e in sorted(brute_placements(shape, Kd, d))]
    ps = [max(P[u, v] for u, v in f.edges) for f in feats]
    from graphfdr.bhq import bh_step_up

    r = bh_step_up(ps, q, total=len(feats))
    return {f.signature for f, p in zip(feats, ps) if p < r.alpha_hat}


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 7), st.integers(0, 10**6), st.sampled_from(["triangle", "cycle:4", "path:3", "star:4"]))
def test_prescreen_soundness(d, seed, shape_name):
    shape = parse_shape(shape_name)
    if shape.m > d:
        return
    rng = np.random.default_rng(seed)
    A = np.where(rng.random((d, d)) < 0.5, rng.uniform(0, 0.003, (d, d)), rng.uniform(0, 1, (d, d)))
    P = np.minimum(A, A.T)
    st_ = stats_from_pvalues(P)
    res = select_features(st_, shape, 0.05)
    assert {f.signature for f in res.selected} == _brute_select(st_, shape, 0.05)
    sigs = [f.signature for f in res.selected]
    assert len(sigs) == len(set(sigs))


def test_explicit_feature_list():
    P = pvalue_matrix(5, {(0, 1): 1e-6, (1, 2): 1e-6, (0, 2): 1e-6, (3, 4): 1e-6}, default=0.9)
    st_ = stats_from_pvalues(P)
    feats = [GraphFeature.from_edges([(0, 1), (1, 2), (0, 2)]), GraphFeature.from_edges([(3, 4)]),
             GraphFeature.from_edges([(2, 3)])]
    res = select_features(st_, features=feats, total=3, q=0.05)
    assert {f.vertices for f in res.selected} == {(0, 1, 2), (3, 4)}
    with pytest.raises(ValueError):
        select_features(st_, features=feats, q=0.05)
    with pytest.raises(ValueError):
        select_features(st_, triangle(), 0.05, features=feats, total=3)


def test_selection_deterministic():
    rng = np.random.default_rng(7)
    A = rng.uniform(0, 0.01, size=(7, 7))
    st_ = stats_from_pvalues(np.minimum(A, A.T))
    a = select_features(st_, m_cycle(4), 0.05)
    b = select_features(st_, m_cycle(4), 0.05)
    assert a == b and a.to_dict() == b.to_dict()


def test_degenerate_pairs_warn(caplog):
    W = np.full((3, 3), 5.0)
    S = np.ones((3, 3))
    S[0, 1] = S[1, 0] = 0.0
    st_ = EdgeStatistics(W, S, 100, "b")
    with caplog.at_level(logging.WARNING):
        res = select_features(st_, triangle(), 0.05)
    assert "zero standard deviation" in caplog.text
    assert res.selected == ()


def test_selection_json_shape():
    P = pvalue_matrix(3, {(0, 1): 1e-9, (1, 2): 1e-9, (0, 2): 1e-9})
    out = select_features(stats_from_pvalues(P), triangle(), 0.05).to_dict()
    assert set(out) >= {"q", "total_J", "alpha_hat", "selected"}
    assert out["selected"][0]["vertices"] == [0, 1, 2]
    assert out["selected"][0]["edges"] == [[0, 1], [0, 2], [1, 2]]
