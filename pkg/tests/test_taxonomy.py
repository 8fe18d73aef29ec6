from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcde.adjustment import check_vas
from wcde.errors import ExposureNotAncestor, IsEndpoint, UnknownNode
from wcde.graph import build_dag, dag_from_edges
from wcde.query import QuerySpec
from wcde.taxonomy import Partition, classify, mediator_sets, oset, partition

from conftest import dags, random_dag, random_query


def test_figure1_mediators(fig1, q):
    med = mediator_sets(fig1, q)
    assert med.m == {"B1", "G1"} and med.m_prime == {"G1"}


def test_direct_edge_has_no_mediators(q):
    med = mediator_sets(build_dag(["A", "Y"], [("A", "Y")]), q)
    assert med.m == frozenset() and med.m_prime == frozenset()


def test_figure3_mediators(fig3, q):
    med = mediator_sets(fig3, q)
    assert med.m == {"G1"} and med.m_prime == {"G1"}


def test_figure1_labels(fig1, q):
    assert classify(fig1, q, "G2") is Partition.X1
    assert classify(fig1, q, "B1") is Partition.X3
    assert classify(fig1, q, "G1") is Partition.X3


def test_isolated_vertex_is_x8(q):
    g = build_dag(["A", "Y", "W"], [("A", "Y")])
    assert classify(g, q, "W") is Partition.X8


def test_signature_labels(q):
    g = dag_from_edges([("I", "A"), ("A", "Y"), ("P", "Y"), ("A", "D"), ("Y", "E"),
                        ("C", "A"), ("C", "Y")])
    # conditioning on A opens I -> A <- C -> Y, so I behaves like a confounder proxy
    assert classify(g, q, "I") is Partition.X1
    assert classify(dag_from_edges([("I", "A"), ("A", "Y")]), q, "I") is Partition.X5
    assert classify(g, q, "P") is Partition.X4  # outcome-only cause
    assert classify(g, q, "D") is Partition.X7
    assert classify(g, q, "E") is Partition.X6
    assert classify(g, q, "C") is Partition.X1


def test_blocked_collider_side_vertex_is_isolated(q):
    # U meets A only at the unconditioned collider K
    g = dag_from_edges([("A", "Y"), ("A", "K"), ("U", "K")])
    assert classify(g, q, "U") is Partition.X8


def test_residual_class(q):
    # With A not an ancestor of Y, a cause of Y stays separated from A even given Y.
    g = dag_from_edges([("W", "Y"), ("A", "K")])
    assert classify(g, q, "W") is Partition.X2


def test_classify_errors(fig1, q):
    with pytest.raises(IsEndpoint):
        classify(fig1, q, "A")
    with pytest.raises(UnknownNode):
        classify(fig1, q, "Q")


def test_osets(fig1, fig3, q):
    assert oset(fig1, q) == {"G1", "G2"}
    assert oset(fig3, q) == {"G1", "G2"}
    assert oset(build_dag(["A", "Y"], [("A", "Y")]), q) == frozenset()


def test_oset_degenerate_exposure_warns(q):
    g = dag_from_edges([("Y", "A"), ("C", "Y")])
    with pytest.warns(ExposureNotAncestor):
        assert oset(g, q) == {"C"}


def test_partition_is_a_cover(fig1, q):
    parts = partition(fig1, q)
    union = set().union(*parts.values())
    assert union == {"B1", "G1", "G2"}
    assert sum(len(s) for s in parts.values()) == 3


@settings(max_examples=150, deadline=None)
@given(dags(min_nodes=2, max_nodes=9), st.data())
def test_partition_properties(g, data):
    a = data.draw(st.sampled_from(g.nodes))
    y = data.draw(st.sampled_from([v for v in g.nodes if v != a]))
    q = QuerySpec(a, y)
    parts = partition(g, q)
    rest = set(g.nodes) - {a, y}
    assert set().union(*parts.values()) == rest
    assert sum(len(s) for s in parts.values()) == len(rest)
    med = mediator_sets(g, q)
    assert parts[Partition.X3] == med.m
    assert med.m_prime <= med.m and med.m_prime <= g.parents(y)


def test_oset_on_random_dags():
    rng = np.random.default_rng(5)
    seen = 0
    for _ in range(200):
        g = random_dag(rng, int(rng.integers(3, 10)), 0.35)
        q = random_query(rng, g)
        if q is None:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            o = oset(g, q)
        assert o == g.parents(q.outcome) - {q.exposure}
        assert not (o & g.descendants(q.outcome))
        assert check_vas(g, q, o).valid
        parts = partition(g, q)
        assert o <= parts[Partition.X1] | parts[Partition.X3] | parts[Partition.X4]
        seen += 1
    assert seen > 100
