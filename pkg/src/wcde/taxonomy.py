"""Mediator sets, the eight-way causal partition and the O-set."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

from .errors import ExposureNotAncestor, IsEndpoint, WcdeError
from .graph import Dag
from .query import QuerySpec
from .separation import is_d_separated


class Partition(enum.Enum):
    X1 = "confounder"
    X2 = "collider"
    X3 = "mediator"
    X4 = "outcome-side non-descendant"
    X5 = "instrument"
    X6 = "descendant of outcome"
    X7 = "descendant of exposure"
    X8 = "isolated"

    @property
    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class MediatorSets:
    m: frozenset[str]
    m_prime: frozenset[str]


class OSetMismatch(WcdeError):
    """Internal consistency failure between the two O-set constructions."""


def mediator_sets(g: Dag, q: QuerySpec) -> MediatorSets:
    q.validate(g)
    a, y = q.exposure, q.outcome
    m = (g.descendants(a) & g.ancestors(y)) - {a, y}
    return MediatorSets(m=m, m_prime=m & g.parents(y))


def exposure_affects_outcome(g: Dag, q: QuerySpec) -> bool:
    return g.is_ancestor(q.exposure, q.outcome)


def classify(g: Dag, q: QuerySpec, w: str) -> Partition:
    """Assign ``w`` to one of the eight partitions relative to ``(A, Y)``.

    Labels for parents of ``Y`` are exact; for other vertices the signature
    tests below are a best-effort reading of the taxonomy.
    """
    q.validate(g)
    g.index(w)
    a, y = q.exposure, q.outcome
    if w in (a, y):
        raise IsEndpoint(f"{w} is the exposure or the outcome")
    if w in g.descendants(y):
        return Partition.X6
    if w in g.descendants(a):
        return Partition.X3 if w in g.ancestors(y) else Partition.X7
    sep_a = is_d_separated(g, {w}, {a})
    sep_y = is_d_separated(g, {w}, {y})
    if sep_a and sep_y:
        return Partition.X8
    if not sep_a:
        return Partition.X5 if is_d_separated(g, {w}, {y}, {a}) else Partition.X1
    if not is_d_separated(g, {w}, {a}, {y}):
        return Partition.X4
    return Partition.X2


def partition(g: Dag, q: QuerySpec) -> dict[Partition, frozenset[str]]:
    groups: dict[Partition, set[str]] = {p: set() for p in Partition}
    for w in g.nodes:
        if w not in (q.exposure, q.outcome):
            groups[classify(g, q, w)].add(w)
    return {p: frozenset(s) for p, s in groups.items()}


def oset(g: Dag, q: QuerySpec, verify: bool = True) -> frozenset[str]:
    """Optimal valid adjustment set: parents of ``Y`` in X1, X3 or X4.

    Computed twice, from the partition and as ``Pa(Y) \\ {A}``; the two must
    agree and the result must pass :func:`~wcde.adjustment.check_vas`.  When
    ``A`` is not an ancestor of ``Y`` the effect is degenerate: a
    :class:`ExposureNotAncestor` warning is issued and ``Pa(Y) \\ {A}`` is
    returned without the cross-checks.
    """
    q.validate(g)
    a, y = q.exposure, q.outcome
    direct = g.parents(y) - {a}
    if not exposure_affects_outcome(g, q):
        warnings.warn(ExposureNotAncestor(f"{a} is not an ancestor of {y}; WCDE is 0"),
                      stacklevel=2)
        return direct
    wanted = {Partition.X1, Partition.X3, Partition.X4}
    via_partition = frozenset(w for w in direct if classify(g, q, w) in wanted)
    if via_partition != direct:
        raise OSetMismatch(f"partition O-set {sorted(via_partition)} != Pa(Y)\\A {sorted(direct)}")
    if verify:
        from .adjustment import check_vas

        report = check_vas(g, q, direct)
        if not report.valid:
            raise OSetMismatch(f"O-set {sorted(direct)} fails the VAS check: {report.to_json()}")
    return direct
