"""Valid adjustment sets for the weighted controlled direct effect.

A set ``Z`` (disjoint from ``A`` and ``Y``) is valid when

1. it blocks every backdoor path between ``A`` and ``Y``, and ``Z2 = Z - M`` is a
   generalized adjustment set for the joint treatment ``{A} | Z1`` on ``Y``: no
   member of ``Z2`` is a forbidden vertex and ``Z2`` d-separates ``{A} | Z1``
   from ``Y`` in the proper backdoor graph (``gac_clause=False`` drops this
   second part);
2. for every mediator ``m``, ``(Z | {A}) - {m}`` blocks every backdoor path
   between ``m`` and ``Y`` (``literal_criterion2=True`` drops ``A``);
3. every mediator path ``A -> ... -> Y`` has an intermediate vertex in ``Z``;
4. ``M' - Z1`` is d-separated from ``Pa(Y) - M'`` given ``Z1 = Z & M``.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable
from dataclasses import dataclass
from functools import cached_property

from .errors import ContainsEndpoint, TooManyVertices
from .graph import Dag, build_dag
from .query import QuerySpec
from .separation import (Path, backdoor_paths, blocks_mediator_path, find_active_path,
                         is_path_blocked, mediator_paths, reachable)
from .taxonomy import MediatorSets, mediator_sets

MAX_ENUMERATION_VERTICES = 20


@dataclass(frozen=True)
class AdjustmentSet:
    z: frozenset[str]
    z1: frozenset[str]  # mediator component Z & M
    z2: frozenset[str]  # Z - M

    def names(self, g: Dag) -> tuple[str, ...]:
        return g.sort(self.z)

    def label(self, g: Dag) -> str:
        return ",".join(g.sort(self.z))


@dataclass(frozen=True)
class CriterionResult:
    id: int
    passed: bool
    witness: dict | str | None = None

    def to_json(self) -> dict:
        return {"id": self.id, "pass": self.passed, "witness": self.witness}


@dataclass(frozen=True)
class VasReport:
    valid: bool
    criteria: tuple[CriterionResult, ...]
    adjustment: tuple[str, ...] = ()

    def criterion(self, i: int) -> CriterionResult:
        return self.criteria[i - 1]

    def to_json(self) -> dict:
        return {"valid": self.valid, "adjustment": list(self.adjustment),
                "criteria": [c.to_json() for c in self.criteria]}


def _as_set(g: Dag, q: QuerySpec, z: Iterable[str]) -> frozenset[str]:
    z = frozenset(z)
    for v in z:
        g.index(v)
    if z & {q.exposure, q.outcome}:
        raise ContainsEndpoint("adjustment set may not contain the exposure or the outcome")
    return z


def split_adjustment(g: Dag, q: QuerySpec, z: Iterable[str]) -> AdjustmentSet:
    q.validate(g)
    z = _as_set(g, q, z)
    m = mediator_sets(g, q).m
    return AdjustmentSet(z=z, z1=z & m, z2=z - m)


def proper_causal_nodes(g: Dag, xs: Iterable[str], y: str) -> frozenset[str]:
    """Vertices outside ``xs`` lying on a directed path from ``xs`` to ``y`` that
    meets ``xs`` only at its first vertex."""
    xs = frozenset(xs)
    fwd: set[str] = set()
    stack = [c for x in xs for c in g.children(x) if c not in xs]
    while stack:
        v = stack.pop()
        if v not in fwd:
            fwd.add(v)
            stack.extend(c for c in g.children(v) if c not in xs)
    bwd: set[str] = set()
    stack = [y]
    while stack:
        v = stack.pop()
        if v not in bwd and v not in xs:
            bwd.add(v)
            stack.extend(g.parents(v))
    return frozenset(fwd & bwd)


def forbidden_vertices(g: Dag, xs: Iterable[str], y: str) -> frozenset[str]:
    xs = frozenset(xs)
    return g.descendants_of_set(proper_causal_nodes(g, xs, y)) - xs


def proper_backdoor_graph(g: Dag, xs: Iterable[str], y: str) -> Dag:
    """``g`` without the first edge of every proper causal path from ``xs`` to ``y``."""
    xs = frozenset(xs)
    cn = proper_causal_nodes(g, xs, y)
    return build_dag(g.nodes, [e for e in g.sorted_edges() if not (e[0] in xs and e[1] in cn)])


def _path_witness(p: Path, **extra) -> dict:
    return {"type": "path", **extra, "path": p.to_json()}


class _Checker:
    """Caches graph-level quantities so many candidate sets can be checked cheaply."""

    def __init__(self, g: Dag, q: QuerySpec, literal_criterion2: bool = False,
                 gac_clause: bool = True):
        q.validate(g)
        self.g = g
        self.q = q
        self.literal = literal_criterion2
        self.gac = gac_clause
        self._treatment_cache: dict[frozenset[str], tuple[frozenset[str], Dag]] = {}
        self.med: MediatorSets = mediator_sets(g, q)
        self.pa_y = g.parents(q.outcome)

    @cached_property
    def a_backdoor(self) -> list[Path]:
        return backdoor_paths(self.g, self.q.exposure, self.q.outcome)

    @cached_property
    def m_backdoor(self) -> list[tuple[str, list[Path]]]:
        return [(m, backdoor_paths(self.g, m, self.q.outcome)) for m in self.g.sort(self.med.m)]

    @cached_property
    def a_mediator(self) -> list[Path]:
        return mediator_paths(self.g, self.q.exposure, self.q.outcome)

    def _joint_treatment(self, z1: frozenset[str]) -> tuple[frozenset[str], Dag]:
        if z1 not in self._treatment_cache:
            xs = z1 | {self.q.exposure}
            self._treatment_cache[z1] = (forbidden_vertices(self.g, xs, self.q.outcome),
                                         proper_backdoor_graph(self.g, xs, self.q.outcome))
        return self._treatment_cache[z1]

    def criterion1(self, z: frozenset[str]) -> CriterionResult:
        g = self.g
        for p in self.a_backdoor:
            if not is_path_blocked(g, p, z):
                return CriterionResult(1, False, _path_witness(p, given=list(g.sort(z))))
        if not self.gac:
            return CriterionResult(1, True)
        z1 = z & self.med.m
        z2 = z - z1
        xs = g.sort(z1 | {self.q.exposure})
        forb, pbd = self._joint_treatment(z1)
        if z2 & forb:
            return CriterionResult(1, False, {
                "type": "forbidden", "treatments": list(xs),
                "vertices": list(g.sort(z2 & forb))})
        if reachable(pbd, xs, z2) & {self.q.outcome}:
            witness = {"type": "proper-backdoor-graph", "treatments": list(xs),
                       "given": list(g.sort(z2))}
            p = find_active_path(pbd, xs, {self.q.outcome}, z2)
            if p is not None:
                witness["path"] = p.to_json()
            return CriterionResult(1, False, witness)
        return CriterionResult(1, True)

    def criterion2(self, z: frozenset[str]) -> CriterionResult:
        for m, paths in self.m_backdoor:
            given = z - {m} if self.literal else (z | {self.q.exposure}) - {m}
            for p in paths:
                if not is_path_blocked(self.g, p, given):
                    return CriterionResult(2, False, _path_witness(
                        p, mediator=m, given=list(self.g.sort(given))))
        return CriterionResult(2, True)

    def criterion3(self, z: frozenset[str]) -> CriterionResult:
        for p in self.a_mediator:
            if not blocks_mediator_path(p, z):
                return CriterionResult(3, False, _path_witness(p))
        return CriterionResult(3, True)

    def criterion4(self, z: frozenset[str]) -> CriterionResult:
        g = self.g
        z1 = z & self.med.m
        w = self.med.m_prime - z1
        c = self.pa_y - self.med.m_prime
        if not w or not c:
            return CriterionResult(4, True, "vacuous")
        if not (reachable(g, w, z1) & c):
            return CriterionResult(4, True)
        x_s, y_s, z_s = g.sort(w), g.sort(c), g.sort(z1)
        witness = {
            "type": "d-connection",
            "x": list(x_s), "y": list(y_s), "given": list(z_s),
            "text": f"{{{', '.join(x_s)}}} not d-separated from {{{', '.join(y_s)}}}"
                    f" given {{{', '.join(z_s)}}}",
        }
        p = find_active_path(g, w, c, z1)
        if p is not None:
            witness["path"] = p.to_json()
        return CriterionResult(4, False, witness)

    def check(self, z: frozenset[str]) -> VasReport:
        crits = (self.criterion1(z), self.criterion2(z), self.criterion3(z), self.criterion4(z))
        return VasReport(all(c.passed for c in crits), crits, self.g.sort(z))

    def is_valid(self, z: frozenset[str]) -> bool:
        # Cheapest criteria first; avoids building witnesses.
        return (self.criterion3(z).passed and self.criterion4(z).passed
                and self.criterion1(z).passed and self.criterion2(z).passed)


def check_vas(g: Dag, q: QuerySpec, z: Iterable[str], literal_criterion2: bool = False,
              gac_clause: bool = True) -> VasReport:
    """Evaluate the four validity criteria for ``z`` and return a structured report."""
    z = _as_set(g, q, z)
    return _Checker(g, q, literal_criterion2, gac_clause).check(z)


def enumerate_vas(g: Dag, q: QuerySpec, max_size: int | None = None,
                  literal_criterion2: bool = False, gac_clause: bool = True) -> list[AdjustmentSet]:
    """All valid adjustment sets, ordered by size then lexicographically by node index."""
    q.validate(g)
    candidates = [v for v in g.nodes if v not in (q.exposure, q.outcome)]
    if len(candidates) > MAX_ENUMERATION_VERTICES:
        raise TooManyVertices(
            f"{len(candidates)} candidate vertices; power-set scan limited to {MAX_ENUMERATION_VERTICES}")
    checker = _Checker(g, q, literal_criterion2, gac_clause)
    m = checker.med.m
    top = len(candidates) if max_size is None else min(max_size, len(candidates))
    out = []
    for k in range(top + 1):
        for combo in itertools.combinations(candidates, k):
            z = frozenset(combo)
            if checker.is_valid(z):
                out.append(AdjustmentSet(z=z, z1=z & m, z2=z - m))
    return out
