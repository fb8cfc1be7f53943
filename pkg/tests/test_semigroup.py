import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_inf_convolution
from telab.costs import cost_from_id, omega_alpha
from telab.families import TestFamily
from telab.measures import Grid1D, GridFunction
from telab.semigroup import (
    check_lem_semiconv,
    hopf_lax_residual,
    inf_convolution,
    kink_mask,
    lipschitz_constant,
    midpoint_defect,
    semiconvexity_defect,
    sup_convolution,
    sup_convolution_lambda,
)

QUAD = cost_from_id("quadratic")
G = Grid1D(-4.0, 4.0, 161)


def test_inf_convolution_matches_brute_force():
    f = GridFunction.from_callable(Grid1D(-2.0, 2.0, 41), lambda x: np.sin(3 * x) + 0.2 * x)
    ref = brute_inf_convolution(f.values, f.points, lambda z: 0.7 * z * z / 2)
    np.testing.assert_allclose(inf_convolution(f, 0.7, QUAD).values, ref, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 3.0),
       st.sampled_from(["quadratic", "power:1.5", "alpha21"]))
def test_monotone_path_agrees_with_direct(seed, t, cost_id):
    cost = cost_from_id(cost_id)
    f = TestFamily(seed=seed).functions(G, 1)[0]
    np.testing.assert_allclose(sup_convolution(f, t, cost, "monotone").values,
                               sup_convolution(f, t, cost, "direct").values, atol=1e-12)
    np.testing.assert_allclose(inf_convolution(f, t, cost, "monotone").values,
                               inf_convolution(f, t, cost, "direct").values, atol=1e-12)


def test_order_relations():
    f = TestFamily().functions(G, 1)[0]
    assert np.all(inf_convolution(f, 1.0, QUAD).values <= f.values)
    assert np.all(sup_convolution(f, 0.5, QUAD).values >= f.values)
    assert np.all(sup_convolution_lambda(f, 2.0, QUAD).values >= f.values)


def test_unknown_method():
    with pytest.raises(ValueError):
        inf_convolution(GridFunction(G, np.zeros(G.n)), 1.0, QUAD, method="fft")


def test_hopf_lax_of_abs_is_shifted_abs():
    # P_t |x| = |x| + t/2 (the maximizer sits at distance t outward)
    f = GridFunction.from_callable(G, np.abs)
    t = 0.5
    x = G.points
    inner = np.abs(x) <= G.hi - t
    p = sup_convolution(f, t, QUAD).values
    np.testing.assert_allclose(p[inner], np.abs(x[inner]) + t / 2, atol=1e-12)
    # and Q^{1/t} |x| is the Huber function
    q = inf_convolution(f, 1.0 / t, QUAD).values
    huber = np.where(np.abs(x) >= t, np.abs(x) - t / 2, x * x / (2 * t))
    np.testing.assert_allclose(q, huber, atol=1e-12)


def test_semiconvexity_of_convex_and_concave():
    convex = GridFunction.from_callable(G, lambda x: x * x)
    assert semiconvexity_defect(convex, QUAD).K_min == pytest.approx(0.0, abs=1e-9)
    concave = GridFunction.from_callable(G, lambda x: -x * x / 2)
    assert semiconvexity_defect(concave, QUAD).K_min == pytest.approx(1.0, abs=1e-9)


def test_sin_defect_near_one():
    f = GridFunction.from_callable(Grid1D(-8.0, 8.0, 801), np.sin)
    cert = semiconvexity_defect(f, QUAD)
    assert 0.95 < cert.K_min < 1.05
    assert set(cert.as_dict()) == {"K_min", "witness", "mode", "boundary_witness"}


def test_midpoint_form_not_above_gradient_form():
    f = GridFunction.from_callable(G, lambda x: np.sin(2 * x))
    mid = midpoint_defect(f, QUAD, max_span=40)
    grad = semiconvexity_defect(f, QUAD)
    assert mid.mode == "midpoint-form"
    assert mid.K_min <= grad.K_min * 1.1 + 1e-9


def test_lem_semiconv_bound_power():
    cost = cost_from_id("power:1.5")
    f = TestFamily().functions(G, 1)[0]
    r = check_lem_semiconv(f, 0.5, cost)
    assert r.passed
    assert r.rhs == pytest.approx(2.0 * omega_alpha(cost.alpha, 1.0), rel=1e-12)


def test_lipschitz_and_kinks():
    f = GridFunction.from_callable(G, np.abs)
    assert lipschitz_constant(f) == pytest.approx(1.0)
    mask = kink_mask(f)
    assert mask[G.n // 2] and mask.sum() <= 3


def test_hopf_lax_residual_small():
    f = GridFunction.from_callable(Grid1D(-4.0, 4.0, 801), np.sin)
    assert hopf_lax_residual(f, 0.1, 0.01, QUAD) < 0.02
    with pytest.raises(ValueError):
        hopf_lax_residual(f, 0.1, 0.2, QUAD)
