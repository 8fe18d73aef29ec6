"""Nuisance fitting, plug-in and one-step estimators of the WCDE.

For an adjustment set ``Z = Z1 | Z2`` (``Z1`` mediators, ``Z2`` the rest) the
target at treatment level ``a`` is

    T_a = sum_{z1, z2} mu_a(z1, z2) p(z1) p(z2),   mu_a = E[Y | A=a, Z1, Z2],

with the *product* of the two marginals.  Its influence function is

    psi_a = w_a (Y - mu_a(Z1, Z2)) + eta1_a(Z1) + eta2_a(Z2) - 2 T_a,
    w_a   = 1{A=a} p(Z1) p(Z2) / p(a, Z1, Z2),
    eta1_a(z1) = E_{Z2}[mu_a(z1, Z2)],  eta2_a(z2) = E_{Z1}[mu_a(Z1, z2)].

Two nuisance families are available.  ``DISCRETE_CELLS`` uses cell means and
empirical frequencies (saturated, so the one-step and plug-in estimates
coincide).  ``LINEAR_BASIS`` regresses ``Y`` on ``[1, A, Z, A*Z1]`` by least
squares; its weight term still needs discrete (or caller-binned) covariates.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .adjustment import AdjustmentSet
from .errors import (EmptyCell, InvalidSampleSize, PropensityUnderflow, SingularDesign,
                     UnsupportedContinuousWeights)
from .query import QuerySpec
from .scm import Dataset, DiscreteScm, joint_distribution, population_cells

PROPENSITY_FLOOR = 1e-8
MAX_DISCRETE_LEVELS = 16  # columns with more distinct values need explicit bins


class Family(enum.Enum):
    DISCRETE_CELLS = "discrete"
    LINEAR_BASIS = "linear"


class Method(enum.Enum):
    PLUGIN = "plugin"
    ONESTEP = "onestep"


# ---------------------------------------------------------------------------
# Cell coding
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Coder:
    """Maps rows of covariate values to a mixed-radix cell index.

    ``edges[k]`` (if not None) first bins column ``k`` by those interior cut
    points; ``levels[k]`` are the admissible (binned) values of column ``k``.
    """

    names: tuple[str, ...]
    levels: tuple[np.ndarray, ...]
    edges: tuple[np.ndarray | None, ...]

    @property
    def size(self) -> int:
        return math.prod(len(lv) for lv in self.levels)

    def _binned(self, x: np.ndarray, k: int) -> np.ndarray:
        e = self.edges[k]
        return x if e is None else np.searchsorted(e, x, side="right").astype(float)

    def encode(self, x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        if not self.names:
            return np.zeros(n, dtype=np.intp)
        idx = []
        for k, lv in enumerate(self.levels):
            col = self._binned(x[:, k], k)
            pos = np.clip(np.searchsorted(lv, col), 0, len(lv) - 1)
            bad = lv[pos] != col
            if bad.any():
                raise EmptyCell(f"{self.names[k]}={col[bad][0]:g} was not seen when fitting")
            idx.append(pos)
        return np.ravel_multi_index(idx, [len(lv) for lv in self.levels])

    def describe(self, code: int) -> str:
        if not self.names:
            return ""
        parts = np.unravel_index(code, [len(lv) for lv in self.levels])
        return ", ".join(f"{v}={self.levels[k][i]:g}" + (" (bin)" if self.edges[k] is not None else "")
                         for k, (v, i) in enumerate(zip(self.names, parts)))

    @classmethod
    def fit(cls, names: Sequence[str], x: np.ndarray,
            bins: Mapping[str, int] | None = None, require_discrete: bool = False) -> "_Coder":
        levels, edges = [], []
        for k, v in enumerate(names):
            col = x[:, k]
            e = None
            if bins and v in bins:
                q = np.linspace(0, 1, int(bins[v]) + 1)[1:-1]
                e = np.unique(np.quantile(col, q))
                col = np.searchsorted(e, col, side="right").astype(float)
            lv = np.unique(col)
            if require_discrete and e is None and len(lv) > MAX_DISCRETE_LEVELS:
                raise UnsupportedContinuousWeights(
                    f"{v} has {len(lv)} distinct values; supply bins for the weight term")
            levels.append(lv)
            edges.append(e)
        return cls(tuple(names), tuple(levels), tuple(edges))

    @classmethod
    def states(cls, names: Sequence[str], cards: Sequence[int]) -> "_Coder":
        return cls(tuple(names), tuple(np.arange(k, dtype=float) for k in cards),
                   (None,) * len(names))


@dataclass(frozen=True, eq=False)
class _Frequencies:
    """Marginals ``p(z1)``, ``p(z2)`` and ``p(a, z1, z2)`` over coded cells."""

    c1: _Coder
    c2: _Coder
    p_z1: np.ndarray
    p_z2: np.ndarray
    p_az: dict[float, np.ndarray]  # level -> (K1, K2)

    def codes(self, z1v: np.ndarray, z2v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.c1.encode(z1v), self.c2.encode(z2v)

    def describe(self, j1: int, j2: int) -> str:
        return ", ".join(s for s in (self.c1.describe(j1), self.c2.describe(j2)) if s)


def _empirical(c1: _Coder, c2: _Coder, z1v, z2v, a_col, levels) -> tuple[_Frequencies, tuple, dict]:
    j1, j2 = c1.encode(z1v), c2.encode(z2v)
    k1, k2 = c1.size, c2.size
    n = len(a_col)
    p_z1 = np.bincount(j1, minlength=k1) / n
    p_z2 = np.bincount(j2, minlength=k2) / n
    counts = {}
    for level in levels:
        ind = a_col == level
        counts[level] = np.bincount(j1[ind] * k2 + j2[ind], minlength=k1 * k2).reshape(k1, k2)
    freq = _Frequencies(c1, c2, p_z1, p_z2, {lv: c / n for lv, c in counts.items()})
    return freq, (j1, j2), counts


# ---------------------------------------------------------------------------
# Nuisance models
# ---------------------------------------------------------------------------


class NuisanceModels:
    """Fitted ``mu_a``, the two marginals, ``p(a, z1, z2)`` and the profiles.

    All evaluation methods take the raw ``Z1`` and ``Z2`` columns as 2-d arrays.
    """

    family: Family
    q: QuerySpec
    z1: tuple[str, ...]
    z2: tuple[str, ...]
    freq: _Frequencies

    def outcome_mean(self, level, z1v, z2v) -> np.ndarray:
        raise NotImplementedError

    def profile_z1(self, level, z1v, z2bar=None) -> np.ndarray:
        raise NotImplementedError

    def profile_z2(self, level, z2v) -> np.ndarray:
        raise NotImplementedError

    def t(self, level) -> float:
        raise NotImplementedError

    def marg_z1(self, z1v) -> np.ndarray:
        return self.freq.p_z1[self.freq.c1.encode(z1v)]

    def marg_z2(self, z2v) -> np.ndarray:
        return self.freq.p_z2[self.freq.c2.encode(z2v)]

    def joint_az(self, level, z1v, z2v) -> np.ndarray:
        j1, j2 = self.freq.codes(z1v, z2v)
        return self.freq.p_az[level][j1, j2]


class CellNuisances(NuisanceModels):
    """Saturated nuisances: one mean per ``(a, z1, z2)`` cell."""

    family = Family.DISCRETE_CELLS

    def __init__(self, q: QuerySpec, z1, z2, freq: _Frequencies, mu: dict[float, np.ndarray]):
        self.q, self.z1, self.z2, self.freq, self.mu = q, tuple(z1), tuple(z2), freq, mu
        self._eta1 = {lv: m @ freq.p_z2 for lv, m in mu.items()}
        self._eta2 = {lv: freq.p_z1 @ m for lv, m in mu.items()}
        self._t = {lv: float(freq.p_z1 @ m @ freq.p_z2) for lv, m in mu.items()}

    def outcome_mean(self, level, z1v, z2v):
        j1, j2 = self.freq.codes(z1v, z2v)
        return self.mu[level][j1, j2]

    def profile_z1(self, level, z1v, z2bar=None):
        return self._eta1[level][self.freq.c1.encode(z1v)]

    def profile_z2(self, level, z2v):
        return self._eta2[level][self.freq.c2.encode(z2v)]

    def t(self, level):
        return self._t[level]


class LinearNuisances(NuisanceModels):
    """Outcome regression on ``[1, A, Z1, Z2, A*Z1]`` (interaction optional).

    Because the fitted mean is additive in ``Z1`` and ``Z2``, averaging over
    the product of empirical marginals reduces to evaluating at the sample means.
    """

    family = Family.LINEAR_BASIS

    def __init__(self, q, z1, z2, freq, beta, z1bar, z2bar, interaction: bool):
        self.q, self.z1, self.z2, self.freq = q, tuple(z1), tuple(z2), freq
        self.beta, self.z1bar, self.z2bar, self.interaction = beta, z1bar, z2bar, interaction

    @staticmethod
    def design(a, z1v, z2v, interaction: bool) -> np.ndarray:
        a = np.broadcast_to(np.asarray(a, dtype=float), (z1v.shape[0],))
        cols = [np.ones_like(a), a, z1v, z2v]
        if interaction:
            cols.append(a[:, None] * z1v)
        return np.column_stack(cols)

    def outcome_mean(self, level, z1v, z2v):
        return self.design(level, z1v, z2v, self.interaction) @ self.beta

    def profile_z1(self, level, z1v, z2bar=None):
        z2 = np.broadcast_to(self.z2bar, (z1v.shape[0], len(self.z2)))
        return self.outcome_mean(level, z1v, z2)

    def profile_z2(self, level, z2v):
        z1 = np.broadcast_to(self.z1bar, (z2v.shape[0], len(self.z1)))
        return self.outcome_mean(level, z1, z2v)

    def t(self, level):
        return float(self.outcome_mean(level, self.z1bar[None, :], self.z2bar[None, :])[0])


def _columns(data: Dataset, q: QuerySpec, adj: AdjustmentSet):
    z1 = tuple(v for v in data.columns if v in adj.z1)
    z2 = tuple(v for v in data.columns if v in adj.z2)
    missing = ({q.exposure, q.outcome} | adj.z) - set(data.columns)
    if missing:
        raise KeyError(f"dataset lacks columns {sorted(missing)}")
    return (z1, z2, data.column(q.exposure), data.column(q.outcome),
            data.select(z1), data.select(z2))


def fit_nuisances(data: Dataset, q: QuerySpec, adj: AdjustmentSet,
                  family: Family = Family.DISCRETE_CELLS, *,
                  bins: Mapping[str, int] | None = None,
                  interaction: bool = True) -> NuisanceModels:
    """Fit the nuisance components for ``adj`` on ``data``.

    ``bins`` maps a covariate to a number of quantile bins used only for the
    density ratio in the weight term (``LINEAR_BASIS``).  ``interaction``
    toggles the ``A*Z1`` columns of the linear basis.
    """
    family = Family(family)
    z1, z2, a_col, y, z1v, z2v = _columns(data, q, adj)
    levels = (q.a, q.a_star)
    for level in levels:
        if not (a_col == level).any():
            raise EmptyCell(f"no observations with {q.exposure}={level:g}")

    if family is Family.DISCRETE_CELLS:
        c1 = _Coder.fit(z1, z1v, bins)
        c2 = _Coder.fit(z2, z2v, bins)
        freq, (j1, j2), counts = _empirical(c1, c2, z1v, z2v, a_col, levels)
        support = np.outer(freq.p_z1, freq.p_z2) > 0
        k2 = c2.size
        mu = {}
        for level in levels:
            ind = a_col == level
            sums = np.bincount(j1[ind] * k2 + j2[ind], weights=y[ind],
                               minlength=c1.size * k2).reshape(c1.size, k2)
            empty = support & (counts[level] == 0)
            if empty.any():
                r1, r2 = (int(t) for t in np.argwhere(empty)[0])
                raise EmptyCell(f"no observations with {q.exposure}={level:g}"
                                + (f", {freq.describe(r1, r2)}" if z1 or z2 else ""))
            with np.errstate(invalid="ignore", divide="ignore"):
                mu[level] = np.where(counts[level] > 0, sums / np.maximum(counts[level], 1), 0.0)
        return CellNuisances(q, z1, z2, freq, mu)

    c1 = _Coder.fit(z1, z1v, bins, require_discrete=True)
    c2 = _Coder.fit(z2, z2v, bins, require_discrete=True)
    freq, _, _ = _empirical(c1, c2, z1v, z2v, a_col, levels)
    x = LinearNuisances.design(a_col, z1v, z2v, interaction)
    xtx = x.T @ x
    if np.linalg.matrix_rank(xtx) < xtx.shape[0]:
        raise SingularDesign(f"outcome design with {xtx.shape[0]} columns is rank deficient")
    beta = np.linalg.solve(xtx, x.T @ y)
    return LinearNuisances(q, z1, z2, freq, beta, z1v.mean(axis=0), z2v.mean(axis=0), interaction)


def population_nuisances(scm: DiscreteScm, q: QuerySpec, adj: AdjustmentSet) -> CellNuisances:
    """Exact nuisances of a discrete model (cells with zero mass get mean 0)."""
    cells = population_cells(scm, q, adj)
    card = scm.cardinalities
    c1 = _Coder.states(cells.z1, [card[v] for v in cells.z1])
    c2 = _Coder.states(cells.z2, [card[v] for v in cells.z2])
    freq = _Frequencies(c1, c2, cells.p_z1, cells.p_z2, dict(cells.p_az))
    return CellNuisances(q, cells.z1, cells.z2, freq, dict(cells.mu))


# ---------------------------------------------------------------------------
# Influence function and estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IfSample:
    psi_a: np.ndarray
    psi_a_star: np.ndarray

    @property
    def psi_diff(self) -> np.ndarray:
        return self.psi_a - self.psi_a_star


@dataclass(frozen=True)
class _IfParts:
    weighted_residual: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    t: float


def _if_parts(nuis: NuisanceModels, level, a_col, y, z1v, z2v, eps: float) -> _IfParts:
    ind = a_col == level
    p_az = nuis.joint_az(level, z1v, z2v)
    if ind.any():
        low = float(p_az[ind].min())
        if low <= eps:
            raise PropensityUnderflow(f"p({nuis.q.exposure}={level:g}, z) = {low:.3g} <= {eps:g}")
    ratio = nuis.marg_z1(z1v) * nuis.marg_z2(z2v)
    w = np.zeros_like(ratio)
    np.divide(ratio, p_az, out=w, where=ind)
    resid = y - nuis.outcome_mean(level, z1v, z2v)
    return _IfParts(w * resid, nuis.profile_z1(level, z1v), nuis.profile_z2(level, z2v), nuis.t(level))


def _parts_for(data: Dataset, q: QuerySpec, adj: AdjustmentSet, nuis: NuisanceModels,
               eps: float) -> tuple[_IfParts, _IfParts]:
    _, _, a_col, y, z1v, z2v = _columns(data, q, adj)
    return (_if_parts(nuis, q.a, a_col, y, z1v, z2v, eps),
            _if_parts(nuis, q.a_star, a_col, y, z1v, z2v, eps))


def _psi(p: _IfParts) -> np.ndarray:
    return p.weighted_residual + p.eta1 + p.eta2 - 2.0 * p.t


def if_values(data: Dataset, q: QuerySpec, adj: AdjustmentSet, nuis: NuisanceModels,
              eps: float = PROPENSITY_FLOOR) -> IfSample:
    pa, pas = _parts_for(data, q, adj, nuis, eps)
    return IfSample(_psi(pa), _psi(pas))


def asymptotic_variance(ifs: IfSample) -> float:
    d = ifs.psi_diff
    if d.shape[0] < 2:
        raise InvalidSampleSize("need at least two observations for a variance")
    return float(np.var(d, ddof=1))


@dataclass(frozen=True)
class EstimateReport:
    method: Method
    t_a: float
    t_a_star: float
    wcde: float
    var_hat: float
    se: float
    n: int
    adjustment: AdjustmentSet
    seed: int | None = None

    def to_json(self) -> dict:
        return {
            "method": self.method.value,
            "adjustment": {"z": sorted(self.adjustment.z), "z1": sorted(self.adjustment.z1),
                           "z2": sorted(self.adjustment.z2)},
            "t_a": self.t_a, "t_a_star": self.t_a_star, "wcde": self.wcde,
            "var_hat": self.var_hat, "se": self.se, "n": self.n, "seed": self.seed,
        }


def _report(method, t_a, t_as, ifs, data, adj) -> EstimateReport:
    var = asymptotic_variance(ifs) if data.n >= 2 else float("nan")
    return EstimateReport(method, t_a, t_as, t_a - t_as, var, math.sqrt(max(var, 0.0) / data.n),
                          data.n, adj, data.seed)


def plugin_estimate(data: Dataset, q: QuerySpec, adj: AdjustmentSet, nuis: NuisanceModels,
                    eps: float = PROPENSITY_FLOOR) -> EstimateReport:
    ifs = if_values(data, q, adj, nuis, eps)
    return _report(Method.PLUGIN, nuis.t(q.a), nuis.t(q.a_star), ifs, data, adj)


def one_step_estimate(data: Dataset, q: QuerySpec, adj: AdjustmentSet, nuis: NuisanceModels,
                      eps: float = PROPENSITY_FLOOR) -> EstimateReport:
    """Plug-in plus the empirical mean of the estimated influence function.

    Written out, ``T_os = mean(w (Y - mu) + eta1 + eta2) - T_plug``, which is the
    plug-in value plus ``mean(psi)`` once the ``-2 T`` centring is accounted for.
    """
    pa, pas = _parts_for(data, q, adj, nuis, eps)

    def corrected(p: _IfParts) -> float:
        return float(np.mean(p.weighted_residual + p.eta1 + p.eta2)) - p.t

    return _report(Method.ONESTEP, corrected(pa), corrected(pas),
                   IfSample(_psi(pa), _psi(pas)), data, adj)


def estimate(data: Dataset, q: QuerySpec, adj: AdjustmentSet, method: Method = Method.ONESTEP,
             family: Family = Family.DISCRETE_CELLS, **fit_kwargs) -> EstimateReport:
    """Fit nuisances and run the requested estimator in one call."""
    nuis = fit_nuisances(data, q, adj, family, **fit_kwargs)
    fn = one_step_estimate if Method(method) is Method.ONESTEP else plugin_estimate
    return fn(data, q, adj, nuis)


# ---------------------------------------------------------------------------
# Exact population summaries (discrete models)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PopulationIf:
    mean_a: float
    mean_a_star: float
    variance: float  # Var[psi_a - psi_a_star], the asymptotic variance of the estimator


def population_if(scm: DiscreteScm, q: QuerySpec, adj: AdjustmentSet) -> PopulationIf:
    """Exact moments of the influence function, summing over every configuration."""
    table = joint_distribution(scm)
    probs = table.probs.reshape(-1)
    grid = np.indices(table.probs.shape).reshape(len(table.names), -1).T.astype(float)
    keep = probs > 0
    data = Dataset(table.names, grid[keep])
    w = probs[keep]
    ifs = if_values(data, q, adj, population_nuisances(scm, q, adj))
    d = ifs.psi_diff
    mean_d = float(w @ d)
    return PopulationIf(float(w @ ifs.psi_a), float(w @ ifs.psi_a_star),
                        float(w @ (d - mean_d) ** 2))
