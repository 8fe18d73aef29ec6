"""Monte Carlo harness for variance comparisons between adjustment sets.

Replication ``r`` draws its sample from the stream ``(seed, r)``, and every
adjustment set is estimated on that same sample.  Comparisons between two
sets are therefore paired, and their Monte Carlo standard error comes from a
jackknife over replications of the variance difference.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .adjustment import AdjustmentSet, check_vas, split_adjustment
from .errors import FixtureNotAdversarial, InvalidConfig, MissingRow, ReplicationError, WcdeError
from .estimators import Family, Method, estimate
from .query import QuerySpec
from .scm import DiscreteScm, Scm, population_wcde_z, sample, true_wcde

CSV_COLUMNS = ("set", "mean_estimate", "emp_variance", "mean_asym_var", "mcse", "n", "reps", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    scm: Scm
    q: QuerySpec
    adjust_sets: tuple[frozenset[str], ...]
    n: int
    reps: int
    seed: int
    method: Method = Method.ONESTEP
    family: Family = Family.DISCRETE_CELLS
    fit_options: dict = field(default_factory=dict)
    allow_invalid: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "adjust_sets", tuple(frozenset(z) for z in self.adjust_sets))
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "family", Family(self.family))
        if self.reps < 2:
            raise InvalidConfig("need at least two replications")
        if self.n < 2:
            raise InvalidConfig("need at least two observations per replication")
        if not self.adjust_sets:
            raise InvalidConfig("no adjustment sets given")
        if len(set(self.adjust_sets)) != len(self.adjust_sets):
            raise InvalidConfig("adjustment sets must be distinct")
        if not self.allow_invalid:
            for z in self.adjust_sets:
                if not check_vas(self.scm.dag, self.q, z).valid:
                    raise InvalidConfig(f"{{{self.label(z)}}} is not a valid adjustment set "
                                        "(pass allow_invalid to run it anyway)")

    def label(self, z: Iterable[str]) -> str:
        return ",".join(self.scm.dag.sort(z))

    def splits(self) -> list[AdjustmentSet]:
        return [split_adjustment(self.scm.dag, self.q, z) for z in self.adjust_sets]


def _run_chunk(cfg: ExperimentConfig, reps: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    splits = cfg.splits()
    est = np.empty((len(reps), len(splits)))
    var = np.empty_like(est)
    for i, r in enumerate(reps):
        data = sample(cfg.scm, cfg.n, cfg.seed, stream=r)
        for j, adj in enumerate(splits):
            try:
                rep = estimate(data, cfg.q, adj, cfg.method, cfg.family, **cfg.fit_options)
            except WcdeError as exc:
                raise ReplicationError(r, cfg.scm.dag.sort(adj.z), exc) from exc
            est[i, j] = rep.wcde
            var[i, j] = rep.var_hat
    return est, var


def jackknife_variance_se(x: np.ndarray) -> np.ndarray:
    """Jackknife standard error of the sample variance, column-wise (NaN below 3 rows)."""
    x = np.atleast_2d(np.asarray(x, dtype=float).T).T
    return _jackknife_se(_loo_variances(x))


def _loo_variances(x: np.ndarray) -> np.ndarray:
    # Leave-one-out sample variances in closed form, one column per series.
    r = x.shape[0]
    if r < 3:  # a leave-one-out variance needs two remaining values
        return np.full(x.shape, np.nan)
    s, ss = x.sum(axis=0), (x * x).sum(axis=0)
    s_i, ss_i = s - x, ss - x * x
    return (ss_i - s_i * s_i / (r - 1)) / (r - 2)


def _jackknife_se(loo: np.ndarray) -> np.ndarray:
    r = loo.shape[0]
    return np.sqrt((r - 1) / r * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))


@dataclass(frozen=True)
class VarianceRow:
    set: tuple[str, ...]
    mean_estimate: float
    emp_variance: float  # variance of the estimates across replications
    mean_asym_var: float  # mean of the per-replication estimate of Var[psi_diff]
    mcse: float  # jackknife standard error of emp_variance
    n: int
    reps: int
    seed: int

    @property
    def label(self) -> str:
        return ",".join(self.set)

    def to_json(self) -> dict:
        return {"set": list(self.set), "mean_estimate": self.mean_estimate,
                "emp_variance": self.emp_variance, "mean_asym_var": self.mean_asym_var,
                "mcse": self.mcse, "n": self.n, "reps": self.reps, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class VarianceTable:
    rows: tuple[VarianceRow, ...]
    estimates: np.ndarray | None = None  # (reps, sets), same column order as rows
    asym_vars: np.ndarray | None = None

    def index(self, z: Iterable[str]) -> int:
        key = frozenset(z)
        for i, row in enumerate(self.rows):
            if frozenset(row.set) == key:
                return i
        raise MissingRow(f"no row for {{{','.join(sorted(key))}}}")

    def row(self, z: Iterable[str]) -> VarianceRow:
        return self.rows[self.index(z)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.label, repr(r.mean_estimate), repr(r.emp_variance), repr(r.mean_asym_var),
                        repr(r.mcse), r.n, r.reps, r.seed])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def to_json(self) -> dict:
        return {"rows": [r.to_json() for r in self.rows]}


def run_replications(cfg: ExperimentConfig) -> VarianceTable:
    """Sample, estimate every set on each sample, aggregate.

    The table is identical for any ``workers`` value: chunks are joined in
    replication order before any moment is computed.
    """
    reps = list(range(cfg.reps))
    if cfg.workers > 1:
        chunks = [reps[i::cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), chunks))
        est = np.empty((cfg.reps, len(cfg.adjust_sets)))
        var = np.empty_like(est)
        for chunk, (e, v) in zip(chunks, parts):
            est[chunk], var[chunk] = e, v
    else:
        est, var = _run_chunk(cfg, reps)

    mcse = jackknife_variance_se(est)
    rows = tuple(
        VarianceRow(cfg.scm.dag.sort(z), float(est[:, j].mean()), float(est[:, j].var(ddof=1)),
                    float(var[:, j].mean()), float(mcse[j]), cfg.n, cfg.reps, cfg.seed)
        for j, z in enumerate(cfg.adjust_sets))
    return VarianceTable(rows, est, var)


@dataclass(frozen=True)
class Comparison:
    """Whether ``Var(smaller) <= Var(larger) + 2 * mcse`` holds."""

    smaller: tuple[str, ...]
    larger: tuple[str, ...]
    difference: float  # Var(larger) - Var(smaller)
    mcse: float  # standard error of the difference
    tolerance_mcse: float = 2.0

    @property
    def holds(self) -> bool:
        return self.difference >= -self.tolerance_mcse * self.mcse

    def to_json(self) -> dict:
        return {"smaller": list(self.smaller), "larger": list(self.larger),
                "difference": self.difference, "mcse": self.mcse, "holds": self.holds}


def compare(table: VarianceTable, smaller: Iterable[str], larger: Iterable[str],
            tolerance_mcse: float = 2.0) -> Comparison:
    """Check the predicted ordering ``Var(smaller) <= Var(larger)`` within MC error.

    With raw estimates the standard error is a paired jackknife of the
    difference; otherwise the two row standard errors are combined in quadrature.
    """
    i, j = table.index(smaller), table.index(larger)
    a, b = table.rows[i], table.rows[j]
    diff = b.emp_variance - a.emp_variance
    if table.estimates is not None and table.estimates.shape[0] > 2:
        loo = _loo_variances(table.estimates[:, [j]]) - _loo_variances(table.estimates[:, [i]])
        se = float(_jackknife_se(loo)[0])
    else:
        se = math.hypot(a.mcse, b.mcse)
    return Comparison(a.set, b.set, diff, se, tolerance_mcse)


@dataclass(frozen=True)
class OrderingReport:
    passed: bool
    oset: tuple[str, ...]
    comparisons: tuple[Comparison, ...]

    @property
    def violations(self) -> tuple[Comparison, ...]:
        return tuple(c for c in self.comparisons if not c.holds)

    def to_json(self) -> dict:
        return {"passed": self.passed, "oset": list(self.oset),
                "comparisons": [c.to_json() for c in self.comparisons]}


def ordering_check(table: VarianceTable, oset: Iterable[str], tolerance_mcse: float = 2.0) -> OrderingReport:
    """Flag every set whose variance falls below the O-set's beyond MC tolerance."""
    o = table.row(oset)
    comps = tuple(compare(table, o.set, r.set, tolerance_mcse)
                  for r in table.rows if frozenset(r.set) != frozenset(o.set))
    return OrderingReport(all(c.holds for c in comps), o.set, comps)


@dataclass(frozen=True)
class BiasReport:
    invalid_set: tuple[str, ...]
    valid_set: tuple[str, ...]
    true_wcde: float
    population_invalid: float
    population_valid: float
    estimate_invalid: float
    estimate_valid: float
    se_invalid: float
    se_valid: float
    n: int
    seed: int

    @property
    def population_gap(self) -> float:
        return abs(self.population_invalid - self.true_wcde)

    @property
    def estimator_gap(self) -> float:
        return abs(self.estimate_invalid - self.estimate_valid)

    def to_json(self) -> dict:
        return {"invalid_set": list(self.invalid_set), "valid_set": list(self.valid_set),
                "true_wcde": self.true_wcde, "population_invalid": self.population_invalid,
                "population_valid": self.population_valid, "population_gap": self.population_gap,
                "estimate_invalid": self.estimate_invalid, "estimate_valid": self.estimate_valid,
                "se_invalid": self.se_invalid, "se_valid": self.se_valid,
                "estimator_gap": self.estimator_gap, "n": self.n, "seed": self.seed}


def bias_experiment(scm: DiscreteScm, q: QuerySpec, invalid_set: Iterable[str],
                    valid_set: Iterable[str], n: int = 50_000, seed: int = 0,
                    min_gap: float | None = 0.01) -> BiasReport:
    """Population and finite-sample bias of a set failing only the mediator-parent criterion.

    ``min_gap=None`` reports without asserting a gap (useful for distributions
    that are unfaithful to the graph, where the bias can vanish).
    """
    g = scm.dag
    bad = check_vas(g, q, invalid_set)
    if bad.valid or not all(bad.criterion(i).passed for i in (1, 2, 3)):
        raise InvalidConfig("invalid_set must pass criteria 1-3 and fail criterion 4")
    if not check_vas(g, q, valid_set).valid:
        raise InvalidConfig("valid_set must be a valid adjustment set")
    adj_bad, adj_ok = split_adjustment(g, q, invalid_set), split_adjustment(g, q, valid_set)
    data = sample(scm, n, seed)
    est_bad = estimate(data, q, adj_bad)
    est_ok = estimate(data, q, adj_ok)
    report = BiasReport(
        g.sort(adj_bad.z), g.sort(adj_ok.z), true_wcde(scm, q),
        population_wcde_z(scm, q, adj_bad), population_wcde_z(scm, q, adj_ok),
        est_bad.wcde, est_ok.wcde, est_bad.se, est_ok.se, n, seed)
    if min_gap is not None and not report.population_gap > min_gap:
        raise FixtureNotAdversarial(
            f"population gap {report.population_gap:.3g} does not exceed {min_gap}; "
            "regenerate the fixture", report)
    return report


def summary_json(cfg: ExperimentConfig, table: VarianceTable, oset: Iterable[str] | None = None) -> str:
    out = {"n": cfg.n, "reps": cfg.reps, "seed": cfg.seed, "method": cfg.method.value,
           "query": cfg.q.to_json(), "table": table.to_json()["rows"]}
    if oset is not None:
        out["ordering"] = ordering_check(table, oset).to_json()
    return json.dumps(out, indent=2)


def with_row(table: VarianceTable, z: Iterable[str], **changes) -> VarianceTable:
    """Copy of ``table`` with one row's fields changed and the raw matrices dropped."""
    i = table.index(z)
    rows = list(table.rows)
    rows[i] = replace(rows[i], **changes)
    return VarianceTable(tuple(rows))
