"""Frozen benchmark models.

The binary CPT values were produced once by ``scripts/search_fixtures.py`` and
are now fixed; tests and the acceptance suite depend on them verbatim.  Each
``*_P1`` table gives ``P(v = 1 | parents)`` indexed by the parents' states in
node-index order.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .graph import Dag, build_dag
from .query import QuerySpec
from .scm import DiscreteScm, LinearScm

QUERY = QuerySpec("A", "Y")

FIGURE1_EDGES = (("A", "B1"), ("B1", "G1"), ("G1", "Y"), ("G2", "B1"),
                 ("G2", "A"), ("G2", "Y"), ("G2", "G1"), ("A", "Y"))
FIGURE3_EDGES = (("A", "G1"), ("G1", "Y"), ("B2", "A"), ("B2", "G1"),
                 ("B2", "G2"), ("G2", "Y"), ("A", "Y"))
FIGURE4_EDGES = tuple(e for e in FIGURE1_EDGES if e != ("G2", "G1"))


def figure1_dag() -> Dag:
    return build_dag(("A", "B1", "G1", "G2", "Y"), FIGURE1_EDGES)


def figure3_dag() -> Dag:
    return build_dag(("A", "B2", "G1", "G2", "Y"), FIGURE3_EDGES)


def figure4_dag() -> Dag:
    return build_dag(("A", "B1", "G1", "G2", "Y"), FIGURE4_EDGES)


def binary_scm(g: Dag, p1: Mapping[str, object]) -> DiscreteScm:
    """Binary model from tables of ``P(v = 1 | parents)``."""
    cpts = {}
    for v in g.nodes:
        p = np.asarray(p1[v], dtype=float)
        cpts[v] = np.stack([1.0 - p, p], axis=-1)
    return DiscreteScm(g, {v: 2 for v in g.nodes}, cpts)

# Produced by scripts/search_fixtures.py (seed 20240611); population gap of
# the {B1, G2} functional from the true WCDE is about 0.068.
FIGURE1_P1 = {
    "A": [0.51, 0.56],
    "B1": [[0.69, 0.44], [0.38, 0.51]],
    "G1": [[0.7, 0.27], [0.61, 0.29]],
    "G2": 0.44,
    "Y": [[[0.6, 0.67], [0.52, 0.44]], [[0.64, 0.39], [0.4, 0.74]]],
}
FIGURE3_P1 = {
    "A": [0.71, 0.4],
    "B2": 0.59,
    "G1": [[0.37, 0.42], [0.47, 0.72]],
    "G2": [0.71, 0.29],
    "Y": [[[0.69, 0.27], [0.65, 0.49]], [[0.75, 0.27], [0.37, 0.35]]],
}
FIGURE4_P1 = {
    "A": [0.3, 0.26],
    "B1": [[0.31, 0.28], [0.62, 0.55]],
    "G1": [0.29, 0.43],
    "G2": 0.43,
    "Y": [[[0.47, 0.66], [0.36, 0.68]], [[0.31, 0.74], [0.61, 0.33]]],
}
# Same as FIGURE1_P1 except that G1 ignores G2: the graph still violates the
# mediator-parent condition for {B1, G2}, but this distribution does not.
FIGURE1_UNFAITHFUL_P1 = {**FIGURE1_P1, "G1": [[0.7, 0.7], [0.61, 0.61]]}


def figure1_scm() -> DiscreteScm:
    return binary_scm(figure1_dag(), FIGURE1_P1)


def figure3_scm() -> DiscreteScm:
    return binary_scm(figure3_dag(), FIGURE3_P1)


def figure4_scm() -> DiscreteScm:
    return binary_scm(figure4_dag(), FIGURE4_P1)


def figure1_unfaithful_scm() -> DiscreteScm:
    return binary_scm(figure1_dag(), FIGURE1_UNFAITHFUL_P1)


# Linear model C -> A, C -> Y, A -> M, M -> Y, A -> Y with a gamma*A*M term in Y.
LINEAR_BETA_A = 1.0
LINEAR_GAMMA = 0.5


def interaction_scm(gamma: float = LINEAR_GAMMA, exposure_intercept: float = 0.0) -> LinearScm:
    """With ``exposure_intercept = 0`` the exposure is balanced, P(A=1) = 1/2.

    An unbalanced exposure matters when the interaction is left out of a
    linear outcome model: the omitted term then biases the plug-in estimate.
    """
    g = build_dag(("C", "A", "M", "Y"),
                  [("C", "A"), ("C", "Y"), ("A", "M"), ("M", "Y"), ("A", "Y")])
    coeffs = {("C", "A"): 0.8, ("C", "Y"): 1.0, ("A", "M"): 1.0,
              ("M", "Y"): 0.5, ("A", "Y"): LINEAR_BETA_A}
    noise = {"C": 1.0, "A": 1.0, "M": 1.0, "Y": 1.0}
    return LinearScm(g, coeffs, noise, intercepts={"M": 0.5, "A": exposure_intercept}, exposure="A", outcome="Y",
                     interactions=(("A", "M", gamma),) if gamma else ())


def discrete_fixtures() -> dict[str, DiscreteScm]:
    return {"figure1": figure1_scm(), "figure1_unfaithful": figure1_unfaithful_scm(),
            "figure3": figure3_scm(), "figure4": figure4_scm()}
