import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from oracles import vertex_enumeration_cost
from telab.costs import cost_from_id
from telab.measures import DiscreteMeasure, Grid1D, GridMeasure, gaussian
from telab.transport import (
    Coupling,
    InfeasibleMarginalsError,
    SupportTooLargeError,
    UnnormalizedMeasureError,
    cost_matrix,
    transport_1d_monotone,
    transport_cost,
    transport_lp,
    transportation_simplex,
)

QUAD = cost_from_id("quadratic")


def _random_measure(rng, n, dim=1):
    pts = rng.normal(size=(n, dim)) if dim > 1 else rng.normal(size=n)
    w = rng.dirichlet(np.ones(n))
    return DiscreteMeasure(pts, w)


def test_identity_transport_is_free(std_gauss):
    assert transport_cost(std_gauss, std_gauss, QUAD).cost == 0.0


@pytest.mark.parametrize("m", [0.1, 0.5, 1.0])
def test_gaussian_translate(grid, std_gauss, m):
    nu = gaussian(grid, m, 1.0)
    assert transport_cost(nu, std_gauss, QUAD).cost == pytest.approx(m * m / 2, rel=1e-4)


def test_monotone_plan_has_right_marginals():
    rng = np.random.default_rng(0)
    nu, mu = _random_measure(rng, 7), _random_measure(rng, 5)
    res = transport_1d_monotone(nu, mu, QUAD)
    plan = res.plan.dense(7, 5)
    Coupling(nu, mu, plan).check(1e-12)
    assert np.sum(plan * cost_matrix(nu, mu, QUAD)) == pytest.approx(res.cost, rel=1e-12)


def test_lp_matches_highs():
    rng = np.random.default_rng(1)
    for n, m in [(6, 9), (12, 12), (30, 20)]:
        a, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
        C = rng.uniform(0, 1, (n, m))
        X = transportation_simplex(a, b, C)
        assert np.all(X >= 0)
        np.testing.assert_allclose(X.sum(1), a, atol=1e-12)
        np.testing.assert_allclose(X.sum(0), b, atol=1e-12)
        A_eq = np.vstack([np.kron(np.eye(n), np.ones(m)), np.kron(np.ones(n), np.eye(m))])
        ref = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]), method="highs")
        assert np.sum(X * C) == pytest.approx(ref.fun, abs=1e-12)


def test_lp_degenerate_assignment():
    # uniform marginals: every basis is degenerate
    rng = np.random.default_rng(2)
    n = 15
    C = rng.uniform(size=(n, n))
    X = transportation_simplex(np.full(n, 1 / n), np.full(n, 1 / n), C)
    from scipy.optimize import linear_sum_assignment
    r, c = linear_sum_assignment(C)
    assert np.sum(X * C) == pytest.approx(C[r, c].sum() / n, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_three_way_agreement(n, m, seed):
    rng = np.random.default_rng(seed)
    nu, mu = _random_measure(rng, n), _random_measure(rng, m)
    mono = transport_1d_monotone(nu, mu, QUAD).cost
    lp = transport_lp(nu, mu, cost_matrix(nu, mu, QUAD)).cost
    ve, _ = vertex_enumeration_cost(nu.weights, mu.weights, cost_matrix(nu, mu, QUAD))
    assert abs(mono - lp) < 1e-10 and abs(lp - ve) < 1e-10


def test_two_dimensional_lp_path():
    rng = np.random.default_rng(3)
    c2 = cost_from_id("quadratic", dim=2)
    nu, mu = _random_measure(rng, 8, 2), _random_measure(rng, 6, 2)
    res = transport_cost(nu, mu, c2)
    assert res.method == "lp"
    ve, _ = vertex_enumeration_cost(nu.weights[:5] / nu.weights[:5].sum(),
                                    mu.weights[:5] / mu.weights[:5].sum(),
                                    cost_matrix(nu, mu, c2)[:5, :5])
    assert ve >= 0
    big = DiscreteMeasure(rng.normal(size=(65, 2)), np.full(65, 1 / 65))
    with pytest.raises(SupportTooLargeError):
        transport_cost(big, mu, c2)


def test_errors():
    g = Grid1D(0.0, 1.0, 3)
    nu = GridMeasure(g, np.array([0.2, 0.3, 0.5]))
    half = DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.25, 0.25]))
    with pytest.raises(UnnormalizedMeasureError):
        transport_1d_monotone(half, nu, QUAD)
    with pytest.raises(InfeasibleMarginalsError):
        transport_lp(half, nu, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        transport_lp(nu, nu, np.zeros((2, 2)))


def test_power_cost_not_above_quadratic_double(grid, std_gauss):
    # alpha <= t^2 for power_smooth, so T_alpha <= 2 T_quadratic
    p = cost_from_id("power:1.5")
    nu = gaussian(grid, 1.5, 1.0)
    assert transport_cost(nu, std_gauss, p).cost <= 2 * transport_cost(nu, std_gauss, QUAD).cost + 1e-12
