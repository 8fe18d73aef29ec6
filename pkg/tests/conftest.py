from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from wcde import fixtures
from wcde.graph import Dag, build_dag
from wcde.query import QuerySpec
from wcde.scm import DiscreteScm


def random_dag(rng: np.random.Generator, n: int, p: float = 0.3) -> Dag:
    """Random DAG on V0..V{n-1}; edges only go from lower to higher index."""
    names = [f"V{i}" for i in range(n)]
    edges = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return build_dag(names, edges)


def random_binary_scm(rng: np.random.Generator, g: Dag, lo: float = 0.1, hi: float = 0.9) -> DiscreteScm:
    cpts = {}
    for v in g.nodes:
        p1 = rng.uniform(lo, hi, size=(2,) * len(g.parents(v)))
        cpts[v] = np.stack([1 - p1, p1], axis=-1)
    return DiscreteScm(g, {v: 2 for v in g.nodes}, cpts)


def random_query(rng: np.random.Generator, g: Dag, need_ancestor: bool = True) -> QuerySpec | None:
    """Pick (A, Y) with A an ancestor of Y, or None when the DAG has no such pair."""
    pairs = [(a, y) for a in g.nodes for y in g.nodes if a != y and (not need_ancestor or g.is_ancestor(a, y))]
    if not pairs:
        return None
    a, y = pairs[rng.integers(len(pairs))]
    return QuerySpec(a, y)


@st.composite
def dags(draw, min_nodes: int = 2, max_nodes: int = 8):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    perm = draw(st.permutations(range(n)))  # decouple index order from topological order
    names = [f"N{k}" for k in range(n)]
    edges = [(names[perm[i]], names[perm[j]]) for (i, j), keep in zip(pairs, mask) if keep]
    return build_dag(names, edges)


@pytest.fixture
def fig1():
    return fixtures.figure1_dag()


@pytest.fixture
def fig3():
    return fixtures.figure3_dag()


@pytest.fixture
def fig4():
    return fixtures.figure4_dag()


@pytest.fixture
def q():
    return QuerySpec("A", "Y")


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts, one line per criterion, after the run."""
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[i])
