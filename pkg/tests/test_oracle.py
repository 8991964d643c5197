from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggqmom.dynamics import gg_rhs, integrate
from ggqmom.model import SDEModel, dawson_shiino, ornstein_uhlenbeck
from ggqmom.oracle import (
    BlowUpError,
    moment_majorant,
    bound_report,
    euler_maruyama,
    gaussian_moments,
    init_positions,
    keyed_normals,
    mee_closed_rhs,
    mee_rhs,
    ou_moments,
    self_consistency,
    self_consistency_roots,
    stationary_moment,
    summability_check,
)
from ggqmom.polynomial import Polynomial
from ggqmom.quadrature import gauss_hermite_init, moments_of
from ggqmom.stationary import hermite_seed, solve_stationary, symmetric_stationary


def test_mee_examples():
    a, s = 1.3, 0.7
    eqs = mee_rhs(ornstein_uhlenbeck(a, s), 6)
    for n in range(2, 7):
        expect = np.zeros(n + 1)
        expect[n] = -a * n
        expect[n - 2] = 0.5 * s**2 * n * (n - 1)
        np.testing.assert_allclose(np.pad(eqs[n].coeffs, (0, n + 1 - len(eqs[n].coeffs))), expect)
    cubic = mee_rhs(SDEModel(Polynomial([0, 0, 0, -1])), 1)
    assert cubic[1].coeffs == (0.0, 0.0, 0.0, -1.0) and cubic[1].highest_index == 3
    assert cubic[0].coeffs == (0.0,) and cubic[0]([1.0, 2.0]) == 0.0


def test_ou_moment_examples():
    init = [1.0, 2.0, 5.0, 3.0]
    m = ou_moments(0.8, 1.1, init, 1.7)
    assert m[0] == 1.0
    assert m[1] == pytest.approx(2.0 * math.exp(-0.8 * 1.7))
    late = ou_moments(0.8, 1.1, init, 60.0)
    assert late[2] == pytest.approx(1.1**2 / (2 * 0.8), rel=1e-12)
    with pytest.raises(ValueError):
        ou_moments(0.8, 1.1, init, -1.0)


def test_ou_moments_match_gaussian_solution():
    # Gaussian initial law stays Gaussian with known mean and variance
    a, s, mean0, var0 = 1.0, 1.0, 1.0, 0.5
    t = np.linspace(0, 4, 9)
    got = ou_moments(a, s, gaussian_moments(mean0, var0, 8), t)
    for row, ti in zip(got, t):
        mean = mean0 * math.exp(-a * ti)
        var = var0 * math.exp(-2 * a * ti) + s**2 / (2 * a) * (1 - math.exp(-2 * a * ti))
        np.testing.assert_allclose(row, gaussian_moments(mean, var, 8), rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.1, 2.0), st.floats(0.01, 5.0), st.floats(-1, 1), st.floats(0.1, 2))
def test_ou_moments_satisfy_their_ode(a, s, t, mean, var):
    init = gaussian_moments(mean, var, 6)
    h = 1e-5
    fd = (ou_moments(a, s, init, t + h) - ou_moments(a, s, init, t - h)) / (2 * h)
    m = ou_moments(a, s, init, t)
    rhs = np.array([e(m) for e in mee_rhs(ornstein_uhlenbeck(a, s), 6)])
    np.testing.assert_allclose(fd, rhs, atol=1e-6 * max(1.0, np.max(np.abs(rhs))))


def test_gg_moment_rates_match_closed_moment_equations():
    # along a GG trajectory the moment rates up to 2N-1 are the MEE closed by the GG measure
    model = SDEModel(Polynomial([0.2, 1.0, 0.0, -1.0]), sigma=0.8)
    n = 4
    traj = integrate(model, gauss_hermite_init(n, 0.3, 0.4), 2.0, sample_times=np.linspace(0.2, 2.0, 10))
    k = 2 * n - 1
    for s in traj.samples:
        x, b = s.measure.nodes, s.measure.weights
        xd, bd = gg_rhs(model, s.measure)
        mdot_gg = np.array([np.sum(bd * x**j + j * b * xd * x ** max(j - 1, 0)) for j in range(k + 1)])
        mdot_closed = mee_closed_rhs(model, x, b, k)
        np.testing.assert_allclose(mdot_gg, mdot_closed, atol=1e-9 * max(1.0, np.max(np.abs(mdot_closed))))


def test_keyed_normals_are_chunk_independent():
    full = keyed_normals(11, 5, 0, 1001)
    parts = np.concatenate([keyed_normals(11, 5, a, b - a) for a, b in [(0, 3), (3, 500), (500, 1001)]])
    np.testing.assert_array_equal(full, parts)
    assert not np.array_equal(full, keyed_normals(11, 6, 0, 1001))
    big = keyed_normals(3, 0, 0, 200_000)
    assert abs(big.mean()) < 0.01 and abs(big.std() - 1) < 0.01


def test_euler_maruyama_reproducible_across_chunks():
    ds = dawson_shiino(0.5)
    a = euler_maruyama(ds, 999, 1e-2, 1.0, seed=42, init=("normal", 0.0, 0.2))
    b = euler_maruyama(ds, 999, 1e-2, 1.0, seed=42, init=("normal", 0.0, 0.2), chunks=4)
    c = euler_maruyama(ds, 999, 1e-2, 1.0, seed=42, init=("normal", 0.0, 0.2))
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.positions, c.positions)
    assert a.summary()["M"] == 999 and a.summary()["seed"] == 42


def test_euler_maruyama_theta_zero_is_sde_step():
    mv = dawson_shiino(0.5, theta=0.0)
    sde = SDEModel(Polynomial([0, 0, 0, -1]), sigma=0.5)
    a = euler_maruyama(mv, 500, 1e-2, 2.0, seed=9, init=("normal", 0.5, 0.1))
    b = euler_maruyama(sde, 500, 1e-2, 2.0, seed=9, init=("normal", 0.5, 0.1))
    np.testing.assert_array_equal(a.positions, b.positions)


def test_euler_maruyama_ou_stationary_variance():
    ens = euler_maruyama(ornstein_uhlenbeck(), 100_000, 1e-3, 10.0, seed=1)
    assert ens.moment(2) == pytest.approx(0.5, abs=0.01)


def test_euler_maruyama_dawson_shiino_upper_state():
    ens = euler_maruyama(dawson_shiino(0.5), 10_000, 1e-3, 50.0, seed=3, init=1.0)
    assert ens.moment(1) > 0.8


def test_euler_maruyama_guards():
    with pytest.raises(BlowUpError, match="blow-up"):
        euler_maruyama(SDEModel(Polynomial([0, 0, 0, 0, 0, -1])), 10, 0.5, 5.0, init=3.0)
    with pytest.raises(ValueError):
        euler_maruyama(ornstein_uhlenbeck(), 10, 0.1, 0.05)
    np.testing.assert_array_equal(init_positions(("point", 2.0), 3, 0), [2.0, 2.0, 2.0])
    with pytest.raises(ValueError):
        init_positions(np.zeros(2), 3, 0)


def test_self_consistency_examples():
    assert self_consistency(dawson_shiino(0.7), 0.0) == pytest.approx(0.0, abs=1e-14)
    roots = self_consistency_roots(dawson_shiino(1.2))
    assert len(roots) == 1 and abs(roots[0]) < 1e-8
    roots = self_consistency_roots(dawson_shiino(0.5))
    assert len(roots) == 3 and 0.9 < roots[2] < 1.0 and roots[0] == pytest.approx(-roots[2], rel=1e-8)
    m2 = stationary_moment(dawson_shiino(1.0), 2)
    assert m2 == pytest.approx(0.478, abs=1e-3)


def test_moment_majorant_examples():
    assert moment_majorant(1.0, 1.0, 1) == pytest.approx(1 / math.sqrt(2))
    assert moment_majorant(1.0, 1.0, 2) == pytest.approx(0.5)
    assert moment_majorant(1.0, 1.0, 2, ito_factor=True) == pytest.approx(1.5)
    assert moment_majorant(0.5, 1.0, 1) == moment_majorant(0.5, 1.0, 1, ito_factor=True)
    s = np.linspace(0.1, 3, 30)
    for k in (1, 2, 3):
        assert np.all(np.diff([moment_majorant(1.0, v, k) for v in s]) > 0)
    with pytest.raises(ValueError):
        moment_majorant(1.0, 1.0, 0)


@pytest.mark.parametrize("sigma", [0.5, 1.0])
def test_bound_report_on_stationary_solutions(sigma):
    ds = dawson_shiino(sigma)
    sol = symmetric_stationary(ds, 8)
    rep = bound_report(moments_of(sol.measure, 16), moments_of(gauss_hermite_init(8, 0.0, 0.01), 16), 1.0, sigma)
    assert rep.satisfied
    assert rep.per_order[0].observed <= moment_majorant(1.0, sigma, 1)
    assert "heuristic" in rep.to_json()["note"]


def test_summability_examples():
    gauss = gaussian_moments(0.0, 1.0, 20)
    rep = summability_check(gauss)
    assert not rep.ratio_flag and rep.domination_holds
    assert rep.summability_partial_sums[-1] - rep.summability_partial_sums[-3] < 1e-6
    c = 1.7
    rep = summability_check(c ** np.arange(15))
    assert max(rep.summability_partial_sums) <= math.exp(c)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        summability_check(np.ones(6))
    assert any("odd" in str(w.message) for w in caught)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=1, max_size=6, unique=True),
       st.lists(st.floats(0.05, 1), min_size=6, max_size=6))
def test_norm_domination_on_discrete_measures(x, w):
    x = np.sort(np.array(x))
    w = np.array(w[: x.size]) / np.sum(w[: x.size])
    m = (x[None, :] ** np.arange(17)[:, None]) @ w
    rep = summability_check(m)
    assert rep.domination_holds and 2 * rep.domination_even - rep.domination_odd >= 0


def test_gg_upper_branch_matches_self_consistency():
    ds = dawson_shiino(0.5)
    root = max(self_consistency_roots(ds))
    sol = solve_stationary(ds, hermite_seed(ds, points_per_cluster=8, sites=[1.0]))
    assert abs(sol.m1 - root) < 1e-5
