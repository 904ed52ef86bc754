import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphfdr.graph import (
    GraphFeature,
    Scenario,
    WeightedGraph,
    all_pairs,
    feature_embedded,
    filter_edges,
    make_edge_set,
)


def small_graph(w02=0.5):
    return WeightedGraph.from_edges(3, [(0, 1, 0.9), (0, 2, w02), (1, 2, 0.0)])


def test_filter_all_zero_is_empty():
    W = WeightedGraph(np.zeros((4, 4)))
    assert filter_edges(W, 0.0, Scenario.TWO_SIDED) == frozenset()


def test_filter_one_sided():
    assert filter_edges(small_graph(), 0.6, "b") == {(0, 1)}


def test_filter_two_sided_uses_abs():
    assert filter_edges(small_graph(-0.5), 0.4, "a") == {(0, 1), (0, 2)}


def test_filter_strict_at_tie():
    assert filter_edges(small_graph(), 0.5, "b") == {(0, 1)}


def test_feature_embedded():
    tri = GraphFeature.from_edges([(0, 1), (1, 2), (0, 2)])
    assert feature_embedded(tri, {(0, 1), (1, 2), (0, 2)})
    assert not feature_embedded(tri, {(0, 1), (1, 2)})
    assert feature_embedded(GraphFeature((), ()), set())


def test_weighted_graph_validation():
    with pytest.raises(ValueError):
        WeightedGraph(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        WeightedGraph(np.eye(2))


def test_feature_signature_ignores_pvalue_and_order():
    a = GraphFeature((2, 0, 1), ((1, 0), (2, 1)), pvalue=0.3)
    b = GraphFeature((0, 1, 2), ((0, 1), (1, 2)))
    assert a == b and a.signature == b.signature
    assert a.vertices == (0, 1, 2)


def test_feature_rejects_foreign_endpoint():
    with pytest.raises(ValueError):
        GraphFeature((0, 1), ((0, 2),))


def test_edge_set_rejects_loops():
    with pytest.raises(ValueError):
        make_edge_set([(1, 1)])
    assert make_edge_set([(2, 1), (1, 2)]) == {(1, 2)}


sym = st.integers(3, 7).flatmap(
    lambda d: st.lists(st.floats(-2, 2, allow_nan=False), min_size=d * (d - 1) // 2, max_size=d * (d - 1) // 2).map(
        lambda vals: (d, vals)
    )
)


def _graph(d, vals):
    W = np.zeros((d, d))
    iu = np.triu_indices(d, 1)
    W[iu] = vals
    return WeightedGraph(W + W.T)


@settings(max_examples=100, deadline=None)
@given(sym, st.floats(-1, 1), st.floats(0, 1), st.sampled_from(["a", "b"]))
def test_filter_monotone(dv, mu, step, scen):
    W = _graph(*dv)
    assert filter_edges(W, mu + step, scen) <= filter_edges(W, mu, scen)


@settings(max_examples=50, deadline=None)
@given(sym, st.sampled_from(["a", "b"]))
def test_filter_below_min_is_full(dv, scen):
    d, vals = dv
    W = _graph(d, vals)
    w = np.abs(vals) if scen == "a" else np.asarray(vals)
    assert filter_edges(W, float(np.min(w)) - 1e-9, scen) == set(all_pairs(d))
