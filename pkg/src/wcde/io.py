"""Text and JSON formats: DAG files, SCM specifications and dataset CSV.

DAG files hold one edge per line as ``PARENT -> CHILD``.  A line with a single
name declares an isolated node, ``#`` starts a comment and blank lines are
ignored.  Nodes are indexed in order of first appearance.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .errors import InvalidNodeName, ParseError
from .graph import Dag, build_dag, check_name
from .query import QuerySpec
from .scm import Dataset, DiscreteScm, LinearScm, Scm


# ---------------------------------------------------------------------------
# DAG text format
# ---------------------------------------------------------------------------


def parse_dag(text: str) -> Dag:
    names: dict[str, None] = {}
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        parts = [p.strip() for p in line.split("->")]
        try:
            if len(parts) == 1:
                names.setdefault(check_name(parts[0]))
            elif len(parts) == 2:
                u, v = check_name(parts[0]), check_name(parts[1])
                names.setdefault(u)
                names.setdefault(v)
                edges.append((u, v))
            else:
                raise ParseError("expected 'PARENT -> CHILD' or a single node name", lineno, col)
        except InvalidNodeName as exc:
            raise ParseError(str(exc), lineno, col) from None
    return build_dag(names, edges)


def parse_dag_file(path: str | Path) -> Dag:
    return parse_dag(Path(path).read_text())


def serialize_dag(g: Dag) -> str:
    """Text form that :func:`parse_dag` maps back to an equal DAG with the same node order."""
    # Declaring every node up front pins the index order on re-parsing.
    lines = list(g.nodes) + [f"{u} -> {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SCM specification (JSON)
# ---------------------------------------------------------------------------


def _query_from(doc: Mapping) -> QuerySpec | None:
    if "exposure" in doc and "outcome" in doc:
        return QuerySpec(doc["exposure"], doc["outcome"], doc.get("a", 1), doc.get("a_star", 0))
    return None


def scm_from_json(doc: Mapping) -> tuple[Scm, QuerySpec | None]:
    """Build an SCM (and the query, when the document names one)."""
    kind = doc.get("type")
    nodes = doc.get("nodes")
    if kind not in ("discrete", "linear") or not isinstance(nodes, list):
        raise ParseError("SCM document needs type 'discrete' or 'linear' and a node list")
    names = [nd["name"] for nd in nodes]
    edges = [(p, nd["name"]) for nd in nodes for p in nd.get("parents", [])]
    g = build_dag(names, edges)
    q = _query_from(doc)
    if kind == "discrete":
        cards = {nd["name"]: int(nd.get("cardinality", 2)) for nd in nodes}
        cpts = {}
        for nd in nodes:
            v, listed = nd["name"], list(nd.get("parents", []))
            cpt = np.asarray(nd["cpt"], dtype=float)
            # stored with parents in listed order; the model wants node-index order
            perm = [listed.index(p) for p in g.sort(listed)] + [len(listed)]
            cpts[v] = np.transpose(cpt, perm)
        return DiscreteScm(g, cards, cpts), q
    coeffs, noise, intercepts = {}, {}, {}
    for nd in nodes:
        v, parents = nd["name"], nd.get("parents", [])
        weights = nd.get("coeffs", [])
        if len(weights) != len(parents):
            raise ParseError(f"node {v}: one coefficient per parent expected")
        coeffs.update({(p, v): float(w) for p, w in zip(parents, weights)})
        noise[v] = float(nd.get("noise_sd", 1.0))
        intercepts[v] = float(nd.get("intercept", 0.0))
    inter = tuple((a, m, float(gm)) for a, m, gm in doc.get("interactions", []))
    return LinearScm(g, coeffs, noise, intercepts,
                     exposure=q.exposure if q else None, outcome=q.outcome if q else None,
                     interactions=inter), q


def scm_to_json(scm: Scm, q: QuerySpec | None = None) -> dict:
    g = scm.dag
    nodes = []
    for v in g.nodes:
        parents = list(g.sort(g.parents(v)))
        nd: dict = {"name": v, "parents": parents}
        if isinstance(scm, DiscreteScm):
            nd["cardinality"] = int(scm.cardinalities[v])
            nd["cpt"] = scm.cpts[v].tolist()
        else:
            nd["coeffs"] = [scm.coeffs[(p, v)] for p in parents]
            nd["noise_sd"] = scm.noise_sd[v]
            nd["intercept"] = scm.intercept(v)
        nodes.append(nd)
    doc: dict = {"type": "discrete" if isinstance(scm, DiscreteScm) else "linear"}
    if q is None and isinstance(scm, LinearScm) and scm.exposure and scm.outcome:
        q = QuerySpec(scm.exposure, scm.outcome)
    if q is not None:
        doc.update(q.to_json())
    doc["nodes"] = nodes
    if isinstance(scm, LinearScm) and scm.interactions:
        doc["interactions"] = [list(t) for t in scm.interactions]
    return doc


def load_scm(path: str | Path) -> tuple[Scm, QuerySpec | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return scm_from_json(doc)


def dump_scm(scm: Scm, path: str | Path, q: QuerySpec | None = None) -> None:
    Path(path).write_text(json.dumps(scm_to_json(scm, q), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Dataset CSV
# ---------------------------------------------------------------------------


def read_dataset(path: str | Path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty dataset file", 1)
    header = tuple(h.strip() for h in rows[0])
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", lineno)
        try:
            values.append([float(x) for x in row])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    arr = np.asarray(values, dtype=float).reshape(len(values), len(header))
    if np.isnan(arr).any():
        raise ParseError("missing values are not allowed")
    return Dataset(header, arr)


def write_dataset(data: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.columns)
        for row in data.values:
            w.writerow([repr(float(x)) if not float(x).is_integer() else int(x) for x in row])
