"""Immutable DAG with ancestral-relation queries.

Nodes are addressed by name at the API surface and by a dense integer index
internally.  Every set-valued query returns a ``frozenset`` of names; use
:meth:`Dag.sort` when a deterministic order is needed (ascending index).
"""

from __future__ import annotations

import re
from collections.abc import Iterable
from typing import NamedTuple

from .errors import CycleError, DuplicateEdge, InvalidNodeName, UnknownNode

VertexSet = frozenset  # frozenset[str]; alias kept for readable signatures

_BAD_NAME = re.compile(r"\s|->|[,;#]")


class NodeId(NamedTuple):
    index: int
    name: str


def check_name(name: str) -> str:
    if not isinstance(name, str) or not name or _BAD_NAME.search(name):
        raise InvalidNodeName(f"invalid node name {name!r}")
    return name


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Dag:
    """Directed acyclic graph over uniquely named vertices.

    Construct with :func:`build_dag`; instances are never mutated afterwards.
    """

    __slots__ = ("_names", "_index", "_edges", "_pa", "_ch", "_anc", "_desc", "_topo")

    def __init__(self, names: Iterable[str], edges: Iterable[tuple[str, str]]):
        names = tuple(names)
        index: dict[str, int] = {}
        for name in names:
            check_name(name)
            if name in index:
                raise InvalidNodeName(f"duplicate node name {name!r}")
            index[name] = len(index)

        pa: list[list[int]] = [[] for _ in names]
        ch: list[list[int]] = [[] for _ in names]
        seen: set[tuple[str, str]] = set()
        for u, v in edges:
            for end in (u, v):
                if end not in index:
                    raise UnknownNode(end)
            if u == v:
                raise CycleError([u])
            if (u, v) in seen:
                raise DuplicateEdge(f"duplicate edge {u} -> {v}")
            seen.add((u, v))
            pa[index[v]].append(index[u])
            ch[index[u]].append(index[v])

        self._names = names
        self._index = index
        self._edges = frozenset(seen)
        self._pa = tuple(tuple(sorted(p)) for p in pa)
        self._ch = tuple(tuple(sorted(c)) for c in ch)
        self._topo = self._toposort()

        desc = [0] * len(names)
        for i in reversed(self._topo):
            for c in self._ch[i]:
                desc[i] |= (1 << c) | desc[c]
        anc = [0] * len(names)
        for i in self._topo:
            for p in self._pa[i]:
                anc[i] |= (1 << p) | anc[p]
        self._desc = tuple(desc)
        self._anc = tuple(anc)

    def _toposort(self) -> tuple[int, ...]:
        # Kahn with a sorted frontier: ties broken by node index.
        import heapq

        indeg = [len(p) for p in self._pa]
        heap = [i for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(heap)
        order: list[int] = []
        while heap:
            i = heapq.heappop(heap)
            order.append(i)
            for c in self._ch[i]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(order) < len(self._names):
            raise CycleError(self._find_cycle({i for i, d in enumerate(indeg) if d > 0}))
        return tuple(order)

    def _find_cycle(self, remaining: set[int]) -> list[str]:
        # Every remaining node keeps a remaining parent, so walking parents must repeat.
        start = min(remaining)
        walk = [start]
        pos = {start: 0}
        while True:
            nxt = next(p for p in self._pa[walk[-1]] if p in remaining)
            if nxt in pos:
                cycle = walk[pos[nxt]:]
                return [self._names[i] for i in reversed(cycle)]
            pos[nxt] = len(walk)
            walk.append(nxt)

    # -- basic accessors -------------------------------------------------

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._names

    @property
    def node_ids(self) -> tuple[NodeId, ...]:
        return tuple(NodeId(i, n) for i, n in enumerate(self._names))

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(self._edges, key=lambda e: (self._index[e[0]], self._index[e[1]]))

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __iter__(self):
        return iter(self._names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return set(self._names) == set(other._names) and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._names), self._edges))

    def __repr__(self) -> str:
        return f"Dag(nodes={len(self)}, edges={len(self._edges)})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNode(name) from None

    def node(self, name: str) -> NodeId:
        return NodeId(self.index(name), name)

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._edges

    def sort(self, names: Iterable[str]) -> tuple[str, ...]:
        """Order ``names`` by node index."""
        return tuple(sorted(names, key=self.index))

    def _names_of(self, mask: int) -> frozenset[str]:
        return frozenset(self._names[i] for i in _bits(mask))

    # -- ancestral relations ----------------------------------------------

    def parents(self, v: str) -> frozenset[str]:
        return frozenset(self._names[i] for i in self._pa[self.index(v)])

    def children(self, v: str) -> frozenset[str]:
        return frozenset(self._names[i] for i in self._ch[self.index(v)])

    def ancestors(self, v: str) -> frozenset[str]:
        """Strict ancestors: ``v`` itself is excluded."""
        return self._names_of(self._anc[self.index(v)])

    def descendants(self, v: str) -> frozenset[str]:
        """Strict descendants: ``v`` itself is excluded."""
        return self._names_of(self._desc[self.index(v)])

    def non_descendants(self, v: str) -> frozenset[str]:
        i = self.index(v)
        full = (1 << len(self._names)) - 1
        return self._names_of(full & ~(self._desc[i] | (1 << i)))

    def is_ancestor(self, u: str, v: str) -> bool:
        """True when there is a directed path ``u -> ... -> v`` (u != v)."""
        return bool(self._anc[self.index(v)] >> self.index(u) & 1)

    def descendants_of_set(self, vs: Iterable[str], inclusive: bool = True) -> frozenset[str]:
        mask = 0
        for v in vs:
            i = self.index(v)
            mask |= self._desc[i] | ((1 << i) if inclusive else 0)
        return self._names_of(mask)

    def ancestors_of_set(self, vs: Iterable[str], inclusive: bool = True) -> frozenset[str]:
        mask = 0
        for v in vs:
            i = self.index(v)
            mask |= self._anc[i] | ((1 << i) if inclusive else 0)
        return self._names_of(mask)

    def topological_order(self) -> list[str]:
        """Deterministic topological order (ties broken by node index)."""
        return [self._names[i] for i in self._topo]

    def neighbors(self, v: str) -> list[tuple[str, bool]]:
        """Skeleton neighbours of ``v`` as ``(name, points_away_from_v)`` in index order."""
        i = self.index(v)
        out = [(c, True) for c in self._ch[i]] + [(p, False) for p in self._pa[i]]
        out.sort()
        return [(self._names[j], away) for j, away in out]


def build_dag(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> Dag:
    """Validate and build a :class:`Dag`.

    Raises :class:`CycleError` naming the offending cycle, :class:`UnknownNode`
    for undeclared edge endpoints and :class:`DuplicateEdge`.
    """
    return Dag(nodes, edges)


def dag_from_edges(edges: Iterable[tuple[str, str]], isolated: Iterable[str] = ()) -> Dag:
    """Build a DAG declaring nodes in first-appearance order."""
    edges = list(edges)
    names: dict[str, None] = {}
    for u, v in edges:
        names.setdefault(u)
        names.setdefault(v)
    for v in isolated:
        names.setdefault(v)
    return Dag(names, edges)
