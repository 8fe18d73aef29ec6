"""Seeded search that produced the frozen binary fixtures in ``wcde.fixtures``.

Every CPT entry P(v=1 | parents) is drawn uniformly from [0.25, 0.75] and
rounded to two decimals.  For the Figure-1 graph the draw with the largest
population gap between the {B1, G2} functional and the true WCDE is kept.
For the Figure-3 and Figure-4 graphs the kept draw maximises the smallest
relative gap among the variance orderings the experiments check, so those
comparisons are informative rather than near-ties.  Run:

    python scripts/search_fixtures.py
"""

from __future__ import annotations

import numpy as np

from wcde import fixtures
from wcde.adjustment import split_adjustment
from wcde.estimators import population_if
from wcde.query import QuerySpec
from wcde.scm import population_wcde_z, true_wcde

SEED = 20240611
CANDIDATES = 200


def draw(g, rng) -> dict[str, list]:
    return {v: np.round(rng.uniform(0.25, 0.75, size=(2,) * len(g.parents(v))), 2).tolist()
            for v in g.nodes}


# (larger set, smaller set): the first should have the larger variance
ORDERINGS = {
    "FIGURE3_P1": [(("G1", "B2"), ("G1", "G2", "B2")), (("G1", "G2", "B2"), ("G1", "G2"))],
    "FIGURE4_P1": [(("B1", "G2"), ("G1", "B1", "G2")), (("G1", "B1", "G2"), ("G1", "G2"))],
}


def min_relative_gap(g, scm, q, pairs) -> float:
    def var(z):
        return population_if(scm, q, split_adjustment(g, q, z)).variance

    return min((var(big) - var(small)) / var(small) for big, small in pairs)


def main() -> None:
    q = QuerySpec("A", "Y")
    rng = np.random.default_rng(SEED)
    g1 = fixtures.figure1_dag()
    bad = split_adjustment(g1, q, ["B1", "G2"])
    best, best_gap = None, -1.0
    for _ in range(CANDIDATES):
        p1 = draw(g1, rng)
        scm = fixtures.binary_scm(g1, p1)
        gap = abs(population_wcde_z(scm, q, bad) - true_wcde(scm, q))
        if gap > best_gap:
            best, best_gap = p1, gap
    print(f"FIGURE1_P1 = {best!r}  # gap {best_gap:.4f}")
    for name, dag in (("FIGURE3_P1", fixtures.figure3_dag()), ("FIGURE4_P1", fixtures.figure4_dag())):
        best, best_gap = None, -np.inf
        for _ in range(CANDIDATES):
            p1 = draw(dag, rng)
            gap = min_relative_gap(dag, fixtures.binary_scm(dag, p1), q, ORDERINGS[name])
            if gap > best_gap:
                best, best_gap = p1, gap
        print(f"{name} = {best!r}  # min relative variance gap {best_gap:.3f}")


if __name__ == "__main__":
    main()
