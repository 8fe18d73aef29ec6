"""Structural causal models: sampling, exact joints and interventional means.

Two families are supported:

* :class:`DiscreteScm` -- categorical nodes with conditional probability
  tables.  State ``k`` of a node has numeric value ``k``.
* :class:`LinearScm` -- linear-Gaussian equations with a binary exposure
  (``A = 1{latent > 0}``) and optional exposure x mediator interactions in the
  outcome equation.  All interventional means are available in closed form.
"""

from __future__ import annotations

import itertools
import math
import string
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .adjustment import AdjustmentSet
from .errors import (InvalidSampleSize, PositivityViolation, StateSpaceTooLarge,
                     TargetIntervened, WcdeError)
from .graph import Dag
from .query import QuerySpec
from .taxonomy import exposure_affects_outcome, mediator_sets

MAX_STATES = 2 ** 20
CPT_ATOL = 1e-12


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """Counter-based generator; ``(seed, stream)`` pairs give disjoint streams."""
    key = [int(seed)] if stream is None else [int(seed), int(stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True, eq=False)
class Dataset:
    columns: tuple[str, ...]
    values: np.ndarray  # shape (n, len(columns))
    seed: int | None = None

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError("values must be a 2-d array with one column per name")
        if np.isnan(self.values).any():
            raise ValueError("missing values are not allowed")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r}") from None

    def select(self, names: Iterable[str]) -> np.ndarray:
        idx = [self.columns.index(v) for v in names]
        return self.values[:, idx]


# ---------------------------------------------------------------------------
# Discrete models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointTable:
    """Exact joint probability table; axis ``i`` is node ``names[i]``."""

    names: tuple[str, ...]
    probs: np.ndarray

    def axis(self, v: str) -> int:
        return self.names.index(v)

    def marginal(self, vs: Iterable[str]) -> np.ndarray:
        vs = list(vs)
        keep = [self.axis(v) for v in vs]
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        out = self.probs.sum(axis=drop) if drop else self.probs
        # remaining axes are in ascending original order; permute to the request order
        order = sorted(keep)
        return np.transpose(out, [order.index(k) for k in keep]) if keep else out

    def mean(self, target: str) -> float:
        p = self.marginal([target])
        return float(np.arange(p.shape[0]) @ p)

    def cond_mean(self, target: str, given: Iterable[str]) -> tuple[np.ndarray, np.ndarray]:
        """``(E[target | given], p(given))`` as arrays over the configurations of ``given``.

        Entries with ``p(given) == 0`` are NaN.
        """
        given = list(given)
        if target in given:
            raise ValueError("target may not be conditioned on")
        joint = self.marginal(given + [target])
        values = np.arange(joint.shape[-1])
        pg = joint.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            mu = (joint @ values) / pg
        return np.where(pg > 0, mu, np.nan), pg

    def as_dict(self) -> dict[tuple[int, ...] | int, float]:
        out = {}
        for idx in itertools.product(*(range(k) for k in self.probs.shape)):
            key = idx[0] if len(idx) == 1 else idx
            out[key] = float(self.probs[idx])
        return out


@dataclass(frozen=True, eq=False)
class DiscreteScm:
    """Categorical SCM.

    ``cpts[v]`` has shape ``(*[card[p] for p in parent_order(v)], card[v])``
    where parents are ordered by node index.
    """

    dag: Dag
    cardinalities: Mapping[str, int]
    cpts: Mapping[str, np.ndarray]
    kind: str = field(default="discrete", init=False)

    def __post_init__(self):
        for v in self.dag.nodes:
            k = self.cardinalities.get(v)
            if k is None or int(k) < 2:
                raise ValueError(f"node {v} needs a cardinality >= 2")
            cpt = np.asarray(self.cpts[v], dtype=float)
            shape = tuple(self.cardinalities[p] for p in self.parent_order(v)) + (k,)
            if cpt.shape != shape:
                raise ValueError(f"CPT of {v} has shape {cpt.shape}, expected {shape}")
            if (cpt < 0).any() or not np.allclose(cpt.sum(axis=-1), 1.0, rtol=0, atol=CPT_ATOL):
                raise ValueError(f"CPT rows of {v} must be nonnegative and sum to 1")
            object.__setattr__(self, "cpts", {**self.cpts, v: cpt})
        extra = set(self.cpts) - set(self.dag.nodes)
        if extra:
            raise ValueError(f"CPTs for unknown nodes {sorted(extra)}")

    def parent_order(self, v: str) -> tuple[str, ...]:
        return self.dag.sort(self.dag.parents(v))

    @property
    def state_space(self) -> int:
        return math.prod(self.cardinalities[v] for v in self.dag.nodes)


def _joint(scm: DiscreteScm, replace: Mapping[str, np.ndarray] | None = None) -> JointTable:
    """Product of CPT factors; ``replace`` swaps a node's factor for a vector over its states."""
    if scm.state_space > MAX_STATES:
        raise StateSpaceTooLarge(f"{scm.state_space} configurations exceed {MAX_STATES}")
    names = scm.dag.nodes
    letters = {v: string.ascii_letters[i] for i, v in enumerate(names)}
    operands, subs = [], []
    for v in names:
        if replace and v in replace:
            operands.append(np.asarray(replace[v], dtype=float))
            subs.append(letters[v])
        else:
            operands.append(scm.cpts[v])
            subs.append("".join(letters[p] for p in scm.parent_order(v)) + letters[v])
    spec = ",".join(subs) + "->" + "".join(letters[v] for v in names)
    return JointTable(names, np.einsum(spec, *operands, optimize=True))


def joint_distribution(scm: DiscreteScm) -> JointTable:
    """Exact joint table from the Markov factorisation (axes in node-index order)."""
    return _joint(scm)


def _point_mass(k: int, value) -> np.ndarray:
    idx = int(value)
    if idx != value or not 0 <= idx < k:
        raise ValueError(f"value {value!r} is not a state in 0..{k - 1}")
    out = np.zeros(k)
    out[idx] = 1.0
    return out


def mutilated_joint(scm: DiscreteScm, nodes: Iterable[str]) -> JointTable:
    """Joint of the graph with ``nodes`` cut from their parents and made uniform.

    Conditioning this table on ``nodes = x`` equals intervening ``do(nodes = x)``.
    """
    return _joint(scm, {v: np.full(scm.cardinalities[v], 1.0 / scm.cardinalities[v])
                        for v in nodes})


# ---------------------------------------------------------------------------
# Linear-Gaussian models
# ---------------------------------------------------------------------------


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class LinearScm:
    """Linear-Gaussian SCM with a thresholded binary exposure.

    Every node ``v`` follows ``v = intercept + sum(coef * parent) + noise`` with
    ``noise ~ N(0, noise_sd[v]^2)``; the exposure node is ``1{that sum > 0}``.
    ``interactions`` adds ``gamma * exposure * mediator`` terms to the outcome
    equation only.
    """

    dag: Dag
    coeffs: Mapping[tuple[str, str], float]
    noise_sd: Mapping[str, float]
    intercepts: Mapping[str, float] = field(default_factory=dict)
    exposure: str | None = None
    outcome: str | None = None
    interactions: tuple[tuple[str, str, float], ...] = ()
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        g = self.dag
        if set(self.coeffs) != set(g.edges):
            raise ValueError("coeffs must give exactly one weight per edge")
        for v in g.nodes:
            sd = self.noise_sd.get(v)
            if sd is None or not sd > 0:
                raise ValueError(f"noise_sd of {v} must be positive")
        if self.exposure is not None:
            g.index(self.exposure)
        object.__setattr__(self, "interactions", tuple(
            (str(a), str(m), float(gm)) for a, m, gm in self.interactions))
        if self.interactions:
            if self.exposure is None or self.outcome is None:
                raise ValueError("interactions need both exposure and outcome declared")
            med = mediator_sets(g, QuerySpec(self.exposure, self.outcome))
            for a, m, _ in self.interactions:
                if a != self.exposure or m not in med.m_prime:
                    raise ValueError(f"interaction ({a}, {m}) must pair the exposure with a "
                                     f"mediating parent of {self.outcome}")
                if not g.has_edge(a, self.outcome):
                    raise ValueError("an interaction needs the edge exposure -> outcome")

    def intercept(self, v: str) -> float:
        return float(self.intercepts.get(v, 0.0))


class _Affine:
    """``c + ca*A + w.z + A*(v.z)`` with ``z`` independent standard normals."""

    __slots__ = ("c", "ca", "w", "v")

    def __init__(self, c: float, ca: float, w: np.ndarray, v: np.ndarray):
        self.c, self.ca, self.w, self.v = c, ca, w, v

    def __add__(self, o: "_Affine") -> "_Affine":
        return _Affine(self.c + o.c, self.ca + o.ca, self.w + o.w, self.v + o.v)

    def scale(self, k: float) -> "_Affine":
        return _Affine(k * self.c, k * self.ca, k * self.w, k * self.v)

    def times_exposure(self) -> "_Affine":
        # A*A = A for binary A
        zero = np.zeros_like(self.w)
        return _Affine(0.0, self.c + self.ca, zero, self.w + self.v)


def _linear_moments(scm: LinearScm, do: Mapping[str, float]) -> tuple[dict[str, _Affine], tuple[float, float, np.ndarray] | None]:
    g = scm.dag
    d = len(g)
    zeros = np.zeros(d)
    rep: dict[str, _Affine] = {}
    latent = None
    exposure_do = do.get(scm.exposure) if scm.exposure is not None else None
    for v in g.topological_order():
        if v in do:
            rep[v] = _Affine(float(do[v]), 0.0, zeros, zeros)
            continue
        noise = zeros.copy()
        noise[g.index(v)] = scm.noise_sd[v]
        acc = _Affine(scm.intercept(v), 0.0, noise, zeros)
        for p in g.parents(v):
            acc = acc + rep[p].scale(scm.coeffs[(p, v)])
        if v == scm.outcome:
            for _, m, gamma in scm.interactions:
                if exposure_do is not None:
                    acc = acc + rep[m].scale(gamma * exposure_do)
                else:
                    acc = acc + rep[m].times_exposure().scale(gamma)
        if v == scm.exposure:
            if acc.ca or acc.v.any():
                raise WcdeError("exposure may not depend on itself")
            latent = (acc.c, float(np.linalg.norm(acc.w)), acc.w)
            rep[v] = _Affine(0.0, 1.0, zeros, zeros)
        else:
            rep[v] = acc
    return rep, latent


def _affine_mean(x: _Affine, latent) -> float:
    if latent is None:
        return x.c
    mu, sd, w_l = latent
    p_a = _norm_cdf(mu / sd)
    cross = float(x.v @ w_l) / sd * _norm_pdf(mu / sd)
    return x.c + x.ca * p_a + cross


def linear_mean(scm: LinearScm, target: str, do: Mapping[str, float] | None = None) -> float:
    """Exact mean of ``target`` under ``do`` (observational when empty)."""
    rep, latent = _linear_moments(scm, do or {})
    return _affine_mean(rep[target], latent)


# ---------------------------------------------------------------------------
# Operations shared by both families
# ---------------------------------------------------------------------------

Scm = DiscreteScm | LinearScm


def sample(scm: Scm, n: int, seed: int, do: Mapping[str, float] | None = None,
           stream: int | None = None) -> Dataset:
    """Ancestral sampling in topological order; columns follow that order.

    ``do`` values may be scalars or length-``n`` arrays (one intervention
    value per row).  Bit-reproducible for a fixed ``(seed, stream)``.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidSampleSize(f"sample size must be a positive integer, got {n!r}")
    rng = make_rng(seed, stream)
    do = dict(do or {})
    g = scm.dag
    order = g.topological_order()
    cols: dict[str, np.ndarray] = {}
    for v in order:
        if v in do:
            cols[v] = np.broadcast_to(np.asarray(do[v], dtype=float), (n,)).copy()
            continue
        if isinstance(scm, DiscreteScm):
            cpt = scm.cpts[v]
            idx = tuple(cols[p].astype(np.intp) for p in scm.parent_order(v))
            probs = cpt[idx] if idx else np.broadcast_to(cpt, (n, cpt.shape[-1]))
            u = rng.random(n)
            cum = np.cumsum(probs, axis=-1)
            state = (u[:, None] >= cum[:, :-1]).sum(axis=1)
            cols[v] = state.astype(float)
        else:
            x = scm.intercept(v) + scm.noise_sd[v] * rng.standard_normal(n)
            for p in g.sort(g.parents(v)):
                x = x + scm.coeffs[(p, v)] * cols[p]
            if v == scm.outcome:
                for a, m, gamma in scm.interactions:
                    x = x + gamma * cols[a] * cols[m]
            if v == scm.exposure:
                x = (x > 0).astype(float)
            cols[v] = x
    return Dataset(tuple(order), np.column_stack([cols[v] for v in order]), seed)


def do_expectation(scm: Scm, do_assign: Mapping[str, float], target: str) -> float:
    """``E[target | do(do_assign)]`` by truncated factorisation (exact)."""
    g = scm.dag
    g.index(target)
    for v in do_assign:
        g.index(v)
    if target in do_assign:
        raise TargetIntervened(f"{target} is intervened on")
    if isinstance(scm, LinearScm):
        return linear_mean(scm, target, do_assign)
    table = _joint(scm, {v: _point_mass(scm.cardinalities[v], x) for v, x in do_assign.items()})
    return table.mean(target)


def _level_index(scm: DiscreteScm, v: str, level) -> int:
    return int(np.argmax(_point_mass(scm.cardinalities[v], level)))


def true_wcde(scm: Scm, q: QuerySpec) -> float:
    """Population WCDE: CDE(m') averaged over the observational law of M'."""
    g = scm.dag
    q.validate(g)
    if not exposure_affects_outcome(g, q):
        return 0.0
    mp = g.sort(mediator_sets(g, q).m_prime)
    a, y = q.exposure, q.outcome
    if isinstance(scm, LinearScm):
        # E[Y | do(a, m')] is affine in m' for fixed a, so average at E[M'].
        means = {m: linear_mean(scm, m) for m in mp}
        return (linear_mean(scm, y, {a: q.a, **means})
                - linear_mean(scm, y, {a: q.a_star, **means}))
    obs = joint_distribution(scm)
    p_m = obs.marginal(mp) if mp else np.array(1.0)
    cut = mutilated_joint(scm, (a,) + mp)
    mu, _ = cut.cond_mean(y, (a,) + mp)
    ia, ias = _level_index(scm, a, q.a), _level_index(scm, a, q.a_star)
    return float(np.sum((mu[ia] - mu[ias]) * p_m))


@dataclass(frozen=True, eq=False)
class PopulationCells:
    """Exact nuisance arrays for one adjustment set on a discrete model."""

    mu: dict[float, np.ndarray]  # level -> E[Y | A=level, z1, z2], shape (K1, K2)
    p_z1: np.ndarray  # (K1,)
    p_z2: np.ndarray  # (K2,)
    p_az: dict[float, np.ndarray]  # level -> p(A=level, z1, z2), shape (K1, K2)
    z1: tuple[str, ...]
    z2: tuple[str, ...]


def population_cells(scm: DiscreteScm, q: QuerySpec, adj: AdjustmentSet,
                     table: JointTable | None = None) -> PopulationCells:
    g = scm.dag
    table = table or joint_distribution(scm)
    z1, z2 = g.sort(adj.z1), g.sort(adj.z2)
    k1 = math.prod(scm.cardinalities[v] for v in z1)
    k2 = math.prod(scm.cardinalities[v] for v in z2)
    a = q.exposure
    mu_all, p_all = table.cond_mean(q.outcome, (a,) + z1 + z2)
    mu_all = mu_all.reshape(scm.cardinalities[a], k1, k2)
    p_all = p_all.reshape(scm.cardinalities[a], k1, k2)
    p_z = p_all.sum(axis=0)
    p_z1, p_z2 = p_z.sum(axis=1), p_z.sum(axis=0)
    mu, p_az = {}, {}
    for level in (q.a, q.a_star):
        i = _level_index(scm, a, level)
        bad = (p_all[i] <= 0) & (np.outer(p_z1, p_z2) > 0)
        if bad.any():
            j1, j2 = (int(t) for t in np.argwhere(bad)[0])
            cell = dict(zip(z1, np.unravel_index(j1, [scm.cardinalities[v] for v in z1])))
            cell.update(zip(z2, np.unravel_index(j2, [scm.cardinalities[v] for v in z2])))
            raise PositivityViolation(
                f"p({a}={level}, {', '.join(f'{k}={int(v)}' for k, v in cell.items())}) = 0")
        mu[level] = np.nan_to_num(mu_all[i])
        p_az[level] = p_all[i]
    return PopulationCells(mu, p_z1, p_z2, p_az, z1, z2)


def population_t(cells: PopulationCells, level) -> float:
    return float(cells.p_z1 @ cells.mu[level] @ cells.p_z2)


def population_wcde_z(scm: DiscreteScm, q: QuerySpec, adj: AdjustmentSet,
                      table: JointTable | None = None) -> float:
    """Exact adjustment functional with the product of marginals ``p(z1) p(z2)``."""
    cells = population_cells(scm, q, adj, table)
    return population_t(cells, q.a) - population_t(cells, q.a_star)
