import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwgraph.graph import (Graph, GraphError, condition_L, edge_matrix, longest_common_prefix,
                           path_metric, paths_of_length, simple_cycles, validate_graph)

DOUBLE = Graph(["0"], [("0", "0", "0"), ("1", "0", "0")])
TWOV = Graph(["u", "v"], [("a", "u", "v"), ("b", "v", "u"), ("d", "v", "v")])
LOOP = Graph(["0"], [("0", "0", "0")])


def test_validate_clean():
    assert validate_graph(DOUBLE).findings == []
    assert validate_graph(TWOV).ok


def test_validate_sink_and_source():
    sink = Graph(["u", "w"], [("e", "u", "u"), ("f", "u", "w")])
    assert validate_graph(sink).messages() == ["sink: w"]
    source = Graph(["u", "w"], [("e", "u", "u"), ("f", "w", "u")])
    rep = validate_graph(source)
    assert rep.messages() == ["source: w"] and not rep.ok


def test_graph_rejects_bad_input():
    with pytest.raises(GraphError):
        Graph(["u"], [("e", "u", "x")])
    with pytest.raises(GraphError):
        Graph(["u"], [("e", "u", "u"), ("e", "u", "u")])


def test_edge_matrix():
    assert edge_matrix(DOUBLE).tolist() == [[1, 1], [1, 1]]
    assert edge_matrix(LOOP).tolist() == [[1]]
    # rows/cols a, b, d
    assert edge_matrix(TWOV).tolist() == [[0, 1, 1], [1, 0, 0], [0, 1, 1]]


def test_paths_of_length():
    assert paths_of_length(DOUBLE, 2) == [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]
    assert paths_of_length(TWOV, 2, "u") == [("a", "b"), ("a", "d")]
    assert paths_of_length(TWOV, 1) == [("a",), ("b",), ("d",)]
    with pytest.raises(GraphError):
        paths_of_length(TWOV, 1, "nowhere")
    with pytest.raises(GraphError):
        paths_of_length(TWOV, 0)


@pytest.mark.parametrize("g", [DOUBLE, TWOV, LOOP])
def test_path_count_matches_matrix_powers(g):
    A = edge_matrix(g)
    for k in range(1, 9):
        assert len(paths_of_length(g, k)) == int(np.linalg.matrix_power(A, k - 1).sum())


def _brute_condition_L(g):
    """Every closed vertex-simple walk must have an exit; enumerate walks directly."""
    n = len(g.vertices)
    for k in range(1, n + 1):
        for p in itertools.product(g.edge_ids, repeat=k):
            if not g.is_path(p) or g.r(p[-1]) != g.s(p[0]):
                continue
            verts = [g.s(e) for e in p]
            if len(set(verts)) != len(verts):
                continue
            if not any(f not in p for v in verts for f in g.out_edges(v)):
                return False
    return True


def test_condition_L():
    assert condition_L(DOUBLE) == (True, None)
    assert condition_L(LOOP) == (False, ("0",))
    assert condition_L(TWOV)[0] is True
    for g in (DOUBLE, TWOV, LOOP):
        assert condition_L(g)[0] == _brute_condition_L(g)


def test_simple_cycles_twov():
    assert sorted(simple_cycles(TWOV)) == [("a", "b"), ("d",)]


def test_longest_common_prefix():
    assert longest_common_prefix(DOUBLE, ("0", "0", "1"), ("0", "1", "1")) == 1
    assert longest_common_prefix(DOUBLE, ("0", "1"), ("0", "1")) == 2
    assert longest_common_prefix(DOUBLE, ("1", "0"), ("0", "1")) == 0
    with pytest.raises(GraphError):
        longest_common_prefix(TWOV, ("a",), ("b",))


def test_path_metric():
    assert path_metric(DOUBLE, ("0", "1"), ("0", "1"), 0.5) == 0.0
    assert path_metric(DOUBLE, ("0", "1"), ("0", "0"), 0.5) == 0.5
    assert path_metric(DOUBLE, ("1",), ("0",), 1 / 3) == 1.0
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            path_metric(DOUBLE, ("0",), ("1",), bad)


words = st.lists(st.sampled_from(["0", "1"]), min_size=6, max_size=6).map(tuple)


@settings(max_examples=200, deadline=None)
@given(words, words, words, st.floats(0.05, 0.95))
def test_ultrametric(a, b, c, ratio):
    d = lambda x, y: path_metric(DOUBLE, x, y, ratio)
    assert d(a, b) == d(b, a)
    assert d(a, c) <= max(d(a, b), d(b, c))
