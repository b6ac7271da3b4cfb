import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import scc_partition, transitive_closure
from trca.errors import ConfigError, InputError
from trca.graph import (
    SummaryGraph,
    WindowGraph,
    ancestors,
    anomalous_subgraph,
    check_assumption5,
    collapse_to_summary,
    descendants,
    from_edge_list,
    from_json,
    max_roots_on_path,
    scc_decompose,
    to_edge_list,
    to_json,
)

NAMES = "ABCDEFGH"


@st.composite
def digraphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    vs = NAMES[:n]
    pairs = list(itertools.product(vs, vs))
    edges = draw(st.sets(st.sampled_from(pairs)))
    return SummaryGraph(tuple(vs), frozenset(edges))


def cycle_window():
    edges = {("Z", 1, "Y"), ("Y", 1, "X"), ("X", 1, "W"), ("W", 1, "X")}
    edges |= {(v, 1, v) for v in "WXYZ"}
    return WindowGraph(tuple("WXYZ"), frozenset(edges))


def chain():
    return SummaryGraph(("X", "Y", "Z"), frozenset({("Z", "Y"), ("Y", "X")}))


def assert_topological(g, sccs):
    where = {v: s.index for s in sccs for v in s.members}
    for s, t in g.edges:
        assert where[s] <= where[t]


# -- construction and collapse -----------------------------------------------

def test_collapse_merges_lags():
    wg = WindowGraph(("X", "Y"), frozenset({("X", 1, "Y"), ("X", 2, "Y")}), gamma_max=2)
    assert collapse_to_summary(wg).edges == {("X", "Y")}


def test_collapse_keeps_self_loop():
    wg = WindowGraph(("X",), frozenset({("X", 1, "X")}))
    assert collapse_to_summary(wg).edges == {("X", "X")}


def test_cycle_example_summary_and_sccs():
    g = collapse_to_summary(cycle_window())
    assert g.edges == {("Z", "Y"), ("Y", "X"), ("X", "W"), ("W", "X"),
                       ("W", "W"), ("X", "X"), ("Y", "Y"), ("Z", "Z")}
    sccs = scc_decompose(g)
    assert [s.members for s in sccs] == [{"Z"}, {"Y"}, {"X", "W"}]
    assert [s.index for s in sccs] == [0, 1, 2]


def test_lag_zero_and_unknown_vertices_rejected():
    with pytest.raises(ConfigError):
        WindowGraph(("X", "Y"), frozenset({("X", 0, "Y")}))
    with pytest.raises(ConfigError):
        WindowGraph(("X", "Y"), frozenset({("X", 2, "Y")}), gamma_max=1)
    with pytest.raises(InputError):
        SummaryGraph(("X",), frozenset({("X", "Q")}))
    with pytest.raises(ConfigError):
        SummaryGraph(("X", "X"), frozenset())


def test_lag_one_round_trip():
    g = collapse_to_summary(cycle_window())
    assert collapse_to_summary(WindowGraph.from_summary(g)) == g


# -- SCCs --------------------------------------------------------------------

def test_edgeless_graph_has_singletons():
    sccs = scc_decompose(SummaryGraph(tuple("ABCDE"), frozenset()))
    assert [set(s.members) for s in sccs] == [{v} for v in "ABCDE"]


@given(digraphs())
def test_scc_matches_reachability_oracle(g):
    sccs = scc_decompose(g)
    assert {s.members for s in sccs} == scc_partition(g.vertices, g.edges)
    assert sorted(v for s in sccs for v in s.members) == list(g.vertices)
    assert_topological(g, sccs)


def test_scc_exhaustive_on_three_vertices_with_self_loops():
    vs = ("A", "B", "C")
    pairs = list(itertools.product(vs, vs))
    for mask in range(1 << len(pairs)):
        edges = frozenset(p for k, p in enumerate(pairs) if mask >> k & 1)
        g = SummaryGraph(vs, edges)
        sccs = scc_decompose(g)
        assert {s.members for s in sccs} == scc_partition(vs, edges)
        assert_topological(g, sccs)


def test_scc_long_chain_does_not_recurse():
    n = 5000
    vs = tuple(f"v{i:05d}" for i in range(n))
    g = SummaryGraph(vs, frozenset(zip(vs, vs[1:])))
    assert len(scc_decompose(g)) == n


# -- reachability ------------------------------------------------------------

def test_chain_ancestors():
    assert ancestors(chain(), "X") == {"Z", "Y"}
    assert descendants(chain(), "Z") == {"Y", "X"}


def test_self_loop_is_own_ancestor():
    g = SummaryGraph(("X",), frozenset({("X", "X")}))
    assert "X" in ancestors(g, "X")
    assert "X" not in ancestors(chain(), "X")


@given(digraphs())
def test_reachability_matches_oracle(g):
    reach = transitive_closure(g.vertices, g.edges)
    for v in g.vertices:
        assert descendants(g, v) == reach[v]
        assert ancestors(g, v) == {u for u in g.vertices if v in reach[u]}


def test_unknown_vertex():
    with pytest.raises(InputError):
        ancestors(chain(), "Q")
    with pytest.raises(InputError):
        chain().parents("Q")


# -- anomalous subgraph ------------------------------------------------------

def test_anomalous_subgraph_extremes():
    g = collapse_to_summary(cycle_window())
    assert anomalous_subgraph(g, g.vertices) == g
    empty = anomalous_subgraph(g, set())
    assert empty.vertices == () and empty.edges == frozenset()
    with pytest.raises(InputError):
        anomalous_subgraph(g, {"Q"})


@given(digraphs(), st.data())
def test_anomalous_subgraph_edges(g, data):
    a = data.draw(st.sets(st.sampled_from(g.vertices)))
    sub = anomalous_subgraph(g, a)
    assert set(sub.vertices) == a
    assert sub.edges == {(u, v) for u, v in g.edges if u in a and v in a}


# -- separate-paths check ---------------------------------------------------

def test_assumption5_chain_violation():
    ok, pairs = check_assumption5(chain(), {"Z", "X"}, {"Z", "Y", "X"})
    assert not ok and pairs == [("Z", "X")]
    assert max_roots_on_path(chain(), {"Z", "X"}, {"Z", "Y", "X"}) == 2


def test_assumption5_broken_path_is_fine():
    # Y is normal, so Z's anomaly cannot reach X.
    ok, pairs = check_assumption5(chain(), {"Z", "X"}, {"Z", "X"})
    assert ok and pairs == []


def test_assumption5_disjoint_paths():
    g = SummaryGraph(tuple("ABCD"), frozenset({("A", "B"), ("C", "D")}))
    assert check_assumption5(g, {"A", "C"}, {"A", "B", "C", "D"}) == (True, [])


def test_assumption5_single_root():
    g = collapse_to_summary(cycle_window())
    assert check_assumption5(g, {"Z"}, set(g.vertices))[0]
    assert max_roots_on_path(g, {"Z"}, set(g.vertices)) == 1
    assert max_roots_on_path(g, set(), set()) == 0


def test_assumption5_roots_must_be_anomalous():
    with pytest.raises(InputError):
        check_assumption5(chain(), {"Z"}, {"Y"})


def test_max_roots_on_long_chain():
    vs = tuple("ABCDE")
    g = SummaryGraph(vs, frozenset(zip(vs, vs[1:])))
    assert max_roots_on_path(g, {"A", "C", "E"}, set(vs)) == 3
    assert max_roots_on_path(g, {"A", "C", "E"}, {"A", "C", "E"}) == 1


# -- serialization -----------------------------------------------------------

@given(digraphs())
def test_summary_round_trips(g):
    assert from_json(to_json(g)) == g
    assert from_edge_list(to_edge_list(g)) == g


def test_window_round_trips():
    wg = WindowGraph(("X", "Y"), frozenset({("X", 1, "Y"), ("Y", 2, "Y")}), gamma_max=2)
    assert from_json(to_json(wg)) == wg
    text = to_edge_list(wg)
    assert "X -> Y [lag=1]" in text
    assert from_edge_list(text) == wg


def test_isolated_vertices_survive_edge_list():
    g = SummaryGraph(("lonely", "a", "b"), frozenset({("a", "b")}))
    assert from_edge_list(to_edge_list(g)).vertices == ("a", "b", "lonely")


def test_condensation_is_acyclic():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        vs = NAMES[:n]
        edges = frozenset((a, b) for a in vs for b in vs if rng.random() < 0.3)
        g = SummaryGraph(tuple(vs), edges)
        sccs = scc_decompose(g)
        where = {v: s.index for s in sccs for v in s.members}
        cond = {(where[a], where[b]) for a, b in edges if where[a] != where[b]}
        assert all(i < j for i, j in cond)
