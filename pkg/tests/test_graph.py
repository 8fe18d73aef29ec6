from __future__ import annotations

import pytest
from hypothesis import given, settings

from wcde.errors import CycleError, DuplicateEdge, InvalidNodeName, UnknownNode
from wcde.graph import build_dag, dag_from_edges

from conftest import dags


def test_smallest_graph():
    g = build_dag(["A", "Y"], [("A", "Y")])
    assert len(g.edges) == 1
    assert g.parents("Y") == {"A"}


def test_figure1_is_a_valid_dag(fig1):
    assert len(fig1) == 5 and len(fig1.edges) == 8


def test_two_cycle_is_named():
    with pytest.raises(CycleError) as err:
        build_dag(["A", "Y"], [("A", "Y"), ("Y", "A")])
    assert set(err.value.cycle) == {"A", "Y"}


def test_longer_cycle_reported_in_edge_order():
    with pytest.raises(CycleError) as err:
        build_dag(["A", "B", "C", "D"], [("D", "A"), ("A", "B"), ("B", "C"), ("C", "A")])
    cyc = err.value.cycle
    assert set(cyc) == {"A", "B", "C"}
    for u, v in zip(cyc, cyc[1:] + cyc[:1]):
        assert (u, v) in {("A", "B"), ("B", "C"), ("C", "A")}


def test_self_loop_is_a_cycle():
    with pytest.raises(CycleError):
        build_dag(["A"], [("A", "A")])


def test_unknown_endpoint():
    with pytest.raises(UnknownNode):
        build_dag(["A"], [("A", "B")])


def test_duplicate_edge():
    with pytest.raises(DuplicateEdge):
        build_dag(["A", "B"], [("A", "B"), ("A", "B")])


@pytest.mark.parametrize("bad", ["", "a b", "A->B", "x,y", "x;y", "x#y", "tab\t"])
def test_invalid_names(bad):
    with pytest.raises(InvalidNodeName):
        build_dag([bad], [])


def test_duplicate_names():
    with pytest.raises(InvalidNodeName):
        build_dag(["A", "A"], [])


def test_figure1_relations(fig1):
    assert fig1.parents("Y") == {"A", "G1", "G2"}
    assert fig1.descendants("A") == {"B1", "G1", "Y"}
    assert fig1.ancestors("G1") == {"A", "B1", "G2"}
    assert fig1.non_descendants("A") == {"G2"}
    assert fig1.children("G2") == {"A", "B1", "G1", "Y"}


def test_chain_source_has_no_ancestors():
    g = dag_from_edges([("A", "B"), ("B", "C")])
    assert g.ancestors("A") == frozenset()
    assert g.descendants("A") == {"B", "C"}


def test_unknown_node_queries(fig1):
    with pytest.raises(UnknownNode):
        fig1.parents("Z")
    with pytest.raises(KeyError):  # also usable as a KeyError
        fig1.descendants("Z")


def test_topological_orders():
    assert build_dag(["A", "Y"], [("A", "Y")]).topological_order() == ["A", "Y"]
    assert build_dag(["X"], []).topological_order() == ["X"]


def test_figure1_topological_order(fig1):
    order = fig1.topological_order()
    assert order[0] == "G2" and order[-1] == "Y"


def test_topological_tie_break_by_index():
    g = build_dag(["C", "B", "A"], [])
    assert g.topological_order() == ["C", "B", "A"]


def test_sort_and_ids(fig1):
    assert fig1.sort({"Y", "A", "G2"}) == ("A", "G2", "Y")
    assert [n.index for n in fig1.node_ids] == list(range(5))
    assert fig1.node("G1").index == fig1.index("G1")


def test_equality_ignores_declaration_order():
    g1 = build_dag(["A", "B"], [("A", "B")])
    g2 = build_dag(["B", "A"], [("A", "B")])
    assert g1 == g2 and hash(g1) == hash(g2)
    assert g1 != build_dag(["A", "B"], [])


def test_set_closures(fig1):
    assert fig1.descendants_of_set(["B1"]) == {"B1", "G1", "Y"}
    assert fig1.descendants_of_set(["B1"], inclusive=False) == {"G1", "Y"}
    assert fig1.ancestors_of_set(["B1", "G2"]) == {"A", "B1", "G2"}


@settings(max_examples=150, deadline=None)
@given(dags(max_nodes=12))
def test_ancestral_properties(g):
    for v in g.nodes:
        assert v not in g.ancestors(v) and v not in g.descendants(v)
        assert g.parents(v) <= g.ancestors(v)
        assert g.children(v) <= g.descendants(v)
        assert g.non_descendants(v) == set(g.nodes) - g.descendants(v) - {v}
        for u in g.nodes:
            assert (u in g.ancestors(v)) == (v in g.descendants(u))


@settings(max_examples=150, deadline=None)
@given(dags(max_nodes=12))
def test_topological_order_is_a_linear_extension(g):
    order = g.topological_order()
    assert sorted(order) == sorted(g.nodes)
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[u] < pos[v] for u, v in g.edges)


@settings(max_examples=100, deadline=None)
@given(dags(max_nodes=10))
def test_adjacency_consistent_with_edges(g):
    from_parents = {(p, v) for v in g.nodes for p in g.parents(v)}
    from_children = {(v, c) for v in g.nodes for c in g.children(v)}
    assert from_parents == from_children == set(g.edges)
