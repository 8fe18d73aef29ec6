"""d-separation, path enumeration and path classification.

Two independent d-separation routes are provided: a linear-time reachability
search (``method="reachability"``) and brute-force enumeration of simple paths
(``method="paths"``).  They must always agree; the test-suite checks that.
"""

from __future__ import annotations

import enum
from collections import deque
from collections.abc import Collection, Iterable, Iterator
from dataclasses import dataclass

from .errors import EndpointInConditioningSet, PathBudgetExceeded, SetsOverlap
from .graph import Dag

DEFAULT_PATH_CAP = 100_000


class Direction(enum.Enum):
    FORWARD = "->"  # edge points toward the next vertex on the path
    BACKWARD = "<-"


class PathKind(enum.Enum):
    BACKDOOR = "backdoor"
    MEDIATOR = "mediator"
    OTHER = "other"


@dataclass(frozen=True)
class Path:
    vertices: tuple[str, ...]
    directions: tuple[Direction, ...]

    def __post_init__(self):
        if len(self.directions) != len(self.vertices) - 1:
            raise ValueError("need exactly one direction per edge")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("paths must be simple")

    @property
    def source(self) -> str:
        return self.vertices[0]

    @property
    def target(self) -> str:
        return self.vertices[-1]

    @property
    def interior(self) -> tuple[str, ...]:
        return self.vertices[1:-1]

    def is_collider(self, i: int) -> bool:
        """Whether the interior vertex at position ``i`` is a collider on this path."""
        if not 0 < i < len(self.vertices) - 1:
            raise IndexError(i)
        return (self.directions[i - 1] is Direction.FORWARD
                and self.directions[i] is Direction.BACKWARD)

    @property
    def kind(self) -> PathKind:
        if self.directions and self.directions[0] is Direction.BACKWARD:
            return PathKind.BACKDOOR
        if len(self.vertices) > 2 and all(d is Direction.FORWARD for d in self.directions):
            return PathKind.MEDIATOR
        return PathKind.OTHER

    def is_valid_in(self, g: Dag) -> bool:
        for (u, v), d in zip(zip(self.vertices, self.vertices[1:]), self.directions):
            edge = (u, v) if d is Direction.FORWARD else (v, u)
            if not g.has_edge(*edge):
                return False
        return True

    def __str__(self) -> str:
        out = [self.vertices[0]]
        for v, d in zip(self.vertices[1:], self.directions):
            out.append(f" {d.value} {v}")
        return "".join(out)

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "text": str(self)}


def _iter_paths(g: Dag, x: str, y: str, *, first: Direction | None = None,
                directed: bool = False, max_len: int | None = None,
                cap: int = DEFAULT_PATH_CAP) -> Iterator[Path]:
    g.index(x)
    g.index(y)
    if x == y:
        raise ValueError("path endpoints must differ")
    count = 0
    verts = [x]
    dirs: list[Direction] = []
    on_path = {x}

    def step(v: str):
        for w, away in g.neighbors(v):
            if directed and not away:
                continue
            d = Direction.FORWARD if away else Direction.BACKWARD
            if v == x and first is not None and d is not first:
                continue
            yield w, d

    stack = [step(x)]
    while stack:
        try:
            w, d = next(stack[-1])
        except StopIteration:
            stack.pop()
            on_path.discard(verts.pop())
            if dirs:
                dirs.pop()
            continue
        if w in on_path:
            continue
        if w == y:
            count += 1
            if count > cap:
                raise PathBudgetExceeded(f"more than {cap} paths between {x} and {y}")
            yield Path(tuple(verts) + (y,), tuple(dirs) + (d,))
            continue
        if max_len is not None and len(dirs) + 1 >= max_len:
            continue
        verts.append(w)
        dirs.append(d)
        on_path.add(w)
        stack.append(step(w))


def enumerate_paths(g: Dag, x: str, y: str, max_len: int | None = None,
                    cap: int = DEFAULT_PATH_CAP) -> list[Path]:
    """All simple skeleton paths between ``x`` and ``y`` with edge orientations.

    ``max_len`` bounds the number of edges.  Raises :class:`PathBudgetExceeded`
    rather than truncating when more than ``cap`` paths exist.
    """
    return list(_iter_paths(g, x, y, max_len=max_len, cap=cap))


def backdoor_paths(g: Dag, x: str, y: str, cap: int = DEFAULT_PATH_CAP) -> list[Path]:
    return list(_iter_paths(g, x, y, first=Direction.BACKWARD, cap=cap))


def mediator_paths(g: Dag, a: str, y: str, cap: int = DEFAULT_PATH_CAP) -> list[Path]:
    """Directed paths ``a -> ... -> y`` with at least one intermediate vertex."""
    return [p for p in _iter_paths(g, a, y, directed=True, cap=cap) if len(p.vertices) > 2]


def is_path_blocked(g: Dag, p: Path, z: Collection[str]) -> bool:
    z = frozenset(z)
    if p.source in z or p.target in z:
        raise EndpointInConditioningSet(f"path endpoint conditioned on: {p}")
    for i in range(1, len(p.vertices) - 1):
        v = p.vertices[i]
        if p.is_collider(i):
            if v not in z and not (g.descendants(v) & z):
                return True
        elif v in z:
            return True
    return False


def blocks_mediator_path(p: Path, z: Collection[str]) -> bool:
    # Directed paths have no colliders: blocked iff an intermediate is conditioned on.
    return any(v in z for v in p.interior)


def _check_sets(g: Dag, xs, ys, z) -> tuple[frozenset, frozenset, frozenset]:
    xs, ys, z = frozenset(xs), frozenset(ys), frozenset(z)
    for v in xs | ys | z:
        g.index(v)
    if not xs or not ys:
        raise ValueError("xs and ys must be nonempty")
    if xs & ys or xs & z or ys & z:
        raise SetsOverlap("xs, ys and z must be pairwise disjoint")
    return xs, ys, z


def reachable(g: Dag, xs: Iterable[str], z: Collection[str]) -> frozenset[str]:
    """Vertices d-connected to some member of ``xs`` given ``z`` (reachability search)."""
    z = frozenset(z)
    an_z = g.ancestors_of_set(z, inclusive=True)
    up, down = 0, 1
    queue = deque((x, up) for x in xs)
    seen: set[tuple[str, int]] = set()
    out: set[str] = set()
    while queue:
        v, d = queue.popleft()
        if (v, d) in seen:
            continue
        seen.add((v, d))
        if v not in z:
            out.add(v)
        if d == up:
            if v not in z:
                queue.extend((p, up) for p in g.parents(v))
                queue.extend((c, down) for c in g.children(v))
        else:
            if v not in z:
                queue.extend((c, down) for c in g.children(v))
            if v in an_z:
                queue.extend((p, up) for p in g.parents(v))
    return frozenset(out - set(xs))


def find_active_path(g: Dag, xs: Iterable[str], ys: Iterable[str], z: Collection[str],
                     cap: int = DEFAULT_PATH_CAP) -> Path | None:
    """First unblocked path between the sets in deterministic order, or None."""
    z = frozenset(z)
    for x in g.sort(xs):
        for y in g.sort(ys):
            for p in _iter_paths(g, x, y, cap=cap):
                if not is_path_blocked(g, p, z):
                    return p
    return None


def is_d_separated(g: Dag, xs: Iterable[str], ys: Iterable[str], z: Iterable[str] = (),
                   method: str = "reachability") -> bool:
    xs, ys, z = _check_sets(g, xs, ys, z)
    if method == "reachability":
        return not (reachable(g, xs, z) & ys)
    if method == "paths":
        return find_active_path(g, xs, ys, z) is None
    raise ValueError(f"unknown method {method!r}")
