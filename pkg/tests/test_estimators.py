from __future__ import annotations

import json

import numpy as np
import pytest

from wcde import fixtures
from wcde.adjustment import AdjustmentSet, enumerate_vas, split_adjustment
from wcde.errors import (EmptyCell, InvalidSampleSize, PropensityUnderflow, SingularDesign,
                         UnsupportedContinuousWeights)
from wcde.estimators import (Family, IfSample, Method, asymptotic_variance, estimate,
                             fit_nuisances, if_values, one_step_estimate, plugin_estimate,
                             population_if, population_nuisances)
from wcde.graph import dag_from_edges
from wcde.query import QuerySpec
from wcde.scm import Dataset, joint_distribution, sample, true_wcde

EMPTY = AdjustmentSet(frozenset(), frozenset(), frozenset())


def toy_data(y=None, seed=0, n=400):
    rng = np.random.default_rng(seed)
    c = rng.integers(0, 2, n).astype(float)
    a = (rng.random(n) < 0.3 + 0.4 * c).astype(float)
    yy = a + c + rng.standard_normal(n) if y is None else np.full(n, float(y))
    return Dataset(("C", "A", "Y"), np.column_stack([c, a, yy]))


# -- nuisances --------------------------------------------------------------


def test_empty_set_reduces_to_arm_means(q):
    d = toy_data()
    nuis = fit_nuisances(d, q, EMPTY)
    a, y = d.column("A"), d.column("Y")
    z = np.zeros((d.n, 0))
    assert nuis.outcome_mean(1.0, z, z)[0] == pytest.approx(y[a == 1].mean())
    assert nuis.outcome_mean(0.0, z, z)[0] == pytest.approx(y[a == 0].mean())
    rep = plugin_estimate(d, q, EMPTY, nuis)
    assert rep.wcde == pytest.approx(y[a == 1].mean() - y[a == 0].mean(), abs=1e-12)


def test_empty_set_if_collapse(q):
    d = toy_data()
    nuis = fit_nuisances(d, q, EMPTY)
    ifs = if_values(d, q, EMPTY, nuis)
    a, y = d.column("A"), d.column("Y")
    mu1, p1 = y[a == 1].mean(), (a == 1).mean()
    assert np.allclose(ifs.psi_a, (a == 1) / p1 * (y - mu1), atol=1e-12)


def test_constant_outcome(q):
    d = toy_data(y=2.5)
    adj = AdjustmentSet(frozenset({"C"}), frozenset(), frozenset({"C"}))
    nuis = fit_nuisances(d, q, adj)
    zc = d.select(["C"])
    none = np.zeros((d.n, 0))
    assert np.all(nuis.outcome_mean(1.0, none, zc) == 2.5)
    assert np.all(nuis.profile_z2(1.0, zc) == 2.5)
    assert np.all(nuis.profile_z1(0.0, none) == 2.5)
    ifs = if_values(d, q, adj, nuis)
    assert np.all(ifs.psi_a == 0) and np.all(ifs.psi_a_star == 0)
    for fn in (plugin_estimate, one_step_estimate):
        rep = fn(d, q, adj, nuis)
        assert rep.wcde == 0 and rep.var_hat == 0 and rep.se == 0


def test_marginals_sum_to_one(fig1, q):
    d = sample(fixtures.figure1_scm(), 3000, seed=2)
    nuis = fit_nuisances(d, q, split_adjustment(fig1, q, {"B1", "G1", "G2"}))
    assert nuis.freq.p_z1.sum() == pytest.approx(1, abs=1e-9)
    assert nuis.freq.p_z2.sum() == pytest.approx(1, abs=1e-9)
    assert (nuis.freq.p_z1 >= 0).all()
    # profiles are averages of the outcome mean over the other marginal
    assert np.allclose(nuis._eta1[1.0], nuis.mu[1.0] @ nuis.freq.p_z2)


def test_cell_means_close_to_exact(fig1, q):
    s = fixtures.figure1_scm()
    d = sample(s, 50_000, seed=1)
    adj = split_adjustment(fig1, q, {"G1", "G2"})
    nuis = fit_nuisances(d, q, adj)
    exact, _ = joint_distribution(s).cond_mean("Y", ["A", "G1", "G2"])
    for a in (0, 1):
        for g1 in (0, 1):
            for g2 in (0, 1):
                got = nuis.outcome_mean(float(a), np.array([[g1]], float), np.array([[g2]], float))[0]
                assert abs(got - exact[a, g1, g2]) < 0.02


def test_plugin_is_double_sum_over_marginals(fig1, q):
    d = sample(fixtures.figure1_scm(), 300, seed=5)
    adj = split_adjustment(fig1, q, {"G1", "G2"})
    nuis = fit_nuisances(d, q, adj)
    z1, z2 = d.select(["G1"]), d.select(["G2"])
    for level in (1.0, 0.0):
        grid = nuis.outcome_mean(level, np.repeat(z1, d.n, axis=0), np.tile(z2, (d.n, 1)))
        assert nuis.t(level) == pytest.approx(grid.mean(), abs=1e-12)


def test_linear_plugin_is_double_sum(q):
    s = fixtures.interaction_scm()
    d = sample(s, 300, seed=5)
    adj = split_adjustment(s.dag, q, {"C", "M"})
    nuis = fit_nuisances(d, q, adj, Family.LINEAR_BASIS, bins={"C": 4, "M": 4})
    z1, z2 = d.select(["M"]), d.select(["C"])
    for level in (1.0, 0.0):
        grid = nuis.outcome_mean(level, np.repeat(z1, d.n, axis=0), np.tile(z2, (d.n, 1)))
        assert nuis.t(level) == pytest.approx(grid.mean(), abs=1e-10)


# -- influence function ------------------------------------------------------


@pytest.mark.parametrize("name", sorted(fixtures.discrete_fixtures()))
def test_population_if_is_mean_zero(name, q):
    s = fixtures.discrete_fixtures()[name]
    for adj in enumerate_vas(s.dag, q):
        pi = population_if(s, q, adj)
        assert abs(pi.mean_a) <= 1e-9 and abs(pi.mean_a_star) <= 1e-9


def _functional(probs: np.ndarray, names, q, z1, z2, level) -> float:
    """T_a computed directly from a joint array; independent of the library."""
    ax = {v: i for i, v in enumerate(names)}
    keep = [q.exposure] + list(z1) + list(z2) + [q.outcome]
    drop = tuple(i for v, i in ax.items() if v not in keep)
    p = probs.sum(axis=drop)
    order = sorted(keep, key=ax.get)
    p = np.transpose(p, [order.index(v) for v in keep])
    p_a = p[int(level)]
    p_z = p.sum(axis=(0, -1))
    mu = p_a[..., 1] / p_a.sum(axis=-1)
    k1 = len(z1)
    p1 = p_z.sum(axis=tuple(range(k1, p_z.ndim)))
    p2 = p_z.sum(axis=tuple(range(k1)))
    return float(np.einsum(mu, list(range(p_z.ndim)), p1, list(range(k1)),
                           p2, list(range(k1, p_z.ndim))))


def test_if_equals_numerical_gateaux_derivative(fig1, q):
    s = fixtures.figure1_scm()
    table = joint_distribution(s)
    adj = split_adjustment(fig1, q, {"B1", "G1", "G2"})
    z1, z2 = fig1.sort(adj.z1), fig1.sort(adj.z2)
    nuis = population_nuisances(s, q, adj)
    rng = np.random.default_rng(0)
    eps = 1e-6
    for _ in range(6):
        cell = tuple(int(x) for x in rng.integers(0, 2, size=len(table.names)))
        point = np.zeros_like(table.probs)
        point[cell] = 1.0
        data = Dataset(table.names, np.array([cell], dtype=float))
        psi = if_values(data, q, adj, nuis)
        for level, got in ((q.a, psi.psi_a[0]), (q.a_star, psi.psi_a_star[0])):
            hi = _functional((1 - eps) * table.probs + eps * point, table.names, q, z1, z2, level)
            lo = _functional((1 + eps) * table.probs - eps * point, table.names, q, z1, z2, level)
            assert got == pytest.approx((hi - lo) / (2 * eps), abs=1e-6)


def test_propensity_floor(fig1, q):
    d = sample(fixtures.figure1_scm(), 200, seed=3)
    adj = split_adjustment(fig1, q, {"G1", "G2"})
    nuis = fit_nuisances(d, q, adj)
    with pytest.raises(PropensityUnderflow, match="<="):
        if_values(d, q, adj, nuis, eps=0.5)


# -- estimators ---------------------------------------------------------------


def test_one_step_equals_plugin_when_saturated(fig1, q):
    s = fixtures.figure1_scm()
    for seed in range(5):
        d = sample(s, 2000, seed=seed)
        for adj in enumerate_vas(fig1, q):
            nuis = fit_nuisances(d, q, adj)
            p, o = plugin_estimate(d, q, adj, nuis), one_step_estimate(d, q, adj, nuis)
            assert abs(p.wcde - o.wcde) <= 1e-12
            assert p.var_hat == o.var_hat


def test_swapping_levels_negates(fig3, q):
    d = sample(fixtures.figure3_scm(), 2000, seed=9)
    adj = split_adjustment(fig3, q, {"G1", "G2"})
    fwd = estimate(d, q, adj)
    back = estimate(d, q.swapped(), adj)
    assert back.wcde == -fwd.wcde
    assert back.var_hat == pytest.approx(fwd.var_hat, rel=1e-12)


def test_report_fields(fig1, q):
    d = sample(fixtures.figure1_scm(), 500, seed=11)
    rep = estimate(d, q, split_adjustment(fig1, q, {"G1", "G2"}), Method.PLUGIN)
    doc = json.loads(json.dumps(rep.to_json()))
    assert set(doc) == {"method", "adjustment", "t_a", "t_a_star", "wcde", "var_hat", "se", "n", "seed"}
    assert doc["method"] == "plugin" and doc["seed"] == 11 and doc["n"] == 500
    assert rep.wcde == rep.t_a - rep.t_a_star
    assert rep.se == pytest.approx(np.sqrt(rep.var_hat / rep.n))


def test_linear_plugin_within_three_se(q):
    s = fixtures.interaction_scm()
    d = sample(s, 20_000, seed=2)
    adj = split_adjustment(s.dag, q, {"C", "M"})
    rep = estimate(d, q, adj, Method.PLUGIN, Family.LINEAR_BASIS, bins={"C": 8, "M": 8})
    assert abs(rep.wcde - true_wcde(s, q)) <= 3 * rep.se


def test_discrete_consistency(fig3, q):
    s = fixtures.figure3_scm()
    truth = true_wcde(s, q)
    adj = split_adjustment(fig3, q, {"G1", "G2"})
    reports = [estimate(sample(s, 20_000, seed=r), q, adj) for r in range(20)]
    assert sum(abs(r.wcde - truth) <= 3 * r.se for r in reports) >= 18


@pytest.mark.slow
def test_one_step_reduces_misspecification_bias(q):
    s = fixtures.interaction_scm(gamma=2.0, exposure_intercept=1.0)
    truth = true_wcde(s, q)
    adj = split_adjustment(s.dag, q, {"C", "M"})
    plug, onestep = [], []
    for r in range(200):
        d = sample(s, 50_000, seed=500, stream=r)
        nuis = fit_nuisances(d, q, adj, Family.LINEAR_BASIS, bins={"C": 8, "M": 8},
                             interaction=False)
        plug.append(plugin_estimate(d, q, adj, nuis).wcde)
        onestep.append(one_step_estimate(d, q, adj, nuis).wcde)
    assert abs(np.mean(onestep) - truth) < abs(np.mean(plug) - truth)


def test_asymptotic_variance_basics():
    assert asymptotic_variance(IfSample(np.ones(5), np.zeros(5))) == 0
    n = 1000
    two_point = np.tile([-1.0, 1.0], n // 2)
    v = asymptotic_variance(IfSample(two_point, np.zeros(n)))
    assert v == pytest.approx(n / (n - 1))
    with pytest.raises(InvalidSampleSize):
        asymptotic_variance(IfSample(np.ones(1), np.zeros(1)))


# -- errors -------------------------------------------------------------------


def test_empty_cell_is_named(q):
    c = np.array([0, 0, 1, 1, 1, 0], float)
    a = np.array([0, 1, 1, 1, 1, 0], float)  # no (A=0, C=1) rows
    d = Dataset(("C", "A", "Y"), np.column_stack([c, a, np.arange(6.0)]))
    adj = AdjustmentSet(frozenset({"C"}), frozenset(), frozenset({"C"}))
    with pytest.raises(EmptyCell, match="A=0, C=1"):
        fit_nuisances(d, q, adj)


def test_missing_treatment_arm(q):
    d = Dataset(("A", "Y"), np.array([[1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(EmptyCell):
        fit_nuisances(d, q, EMPTY)


def test_singular_design(q):
    rng = np.random.default_rng(0)
    n = 50
    c = rng.standard_normal(n)
    a = (rng.random(n) < 0.5).astype(float)
    d = Dataset(("C", "D", "A", "Y"), np.column_stack([c, 2 * c, a, rng.standard_normal(n)]))
    adj = AdjustmentSet(frozenset({"C", "D"}), frozenset(), frozenset({"C", "D"}))
    with pytest.raises(SingularDesign):
        fit_nuisances(d, q, adj, Family.LINEAR_BASIS, bins={"C": 2, "D": 2})


def test_continuous_weights_need_bins(q):
    s = fixtures.interaction_scm()
    d = sample(s, 500, seed=0)
    adj = split_adjustment(s.dag, q, {"C", "M"})
    with pytest.raises(UnsupportedContinuousWeights):
        fit_nuisances(d, q, adj, Family.LINEAR_BASIS)


def test_unseen_level_rejected(fig1, q):
    d = sample(fixtures.figure1_scm(), 300, seed=1)
    adj = split_adjustment(fig1, q, {"G1", "G2"})
    nuis = fit_nuisances(d, q, adj)
    bad = Dataset(d.columns, np.where(np.arange(len(d.columns)) == d.columns.index("G2"),
                                      5.0, d.values[:3]))
    with pytest.raises(EmptyCell):
        if_values(bad, q, adj, nuis)


def test_missing_column(q):
    d = Dataset(("A", "Y"), np.array([[1.0, 0.0], [0.0, 1.0]]))
    adj = AdjustmentSet(frozenset({"C"}), frozenset(), frozenset({"C"}))
    with pytest.raises(KeyError):
        fit_nuisances(d, q, adj)
