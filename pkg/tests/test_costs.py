import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_conjugate
from telab.costs import (
    AdmissibilityError,
    AlphaCost,
    SeparableCost,
    UnknownCostError,
    alpha21,
    cost_from_id,
    lemma51_gap,
    make_builtin,
    numeric_conjugate,
    omega_alpha,
    omega_conjugate,
    power_smooth,
    quadratic,
    scaled,
)

IDS = ["quadratic", "power:1.5", "power:1.2", "alpha21", "scaled:quadratic:2.0",
       "scaled:power:1.5:3.0"]


@pytest.mark.parametrize("cost_id", IDS)
def test_builtins_are_admissible_and_vanish_at_zero(cost_id):
    a = make_builtin(cost_id)
    assert a.eval(np.array(0.0)) == 0.0
    assert a.deriv(np.array(0.0)) == 0.0
    t = np.linspace(-5, 5, 101)
    np.testing.assert_allclose(a.eval(t), a.eval(-t))


def test_unknown_cost_lists_valid_ids():
    with pytest.raises(UnknownCostError, match="quadratic.*alpha21"):
        make_builtin("cubic")


def test_bad_power_rejected():
    with pytest.raises((ValueError, AdmissibilityError)):
        make_builtin("power:3")


def test_quartic_fails_concave_derivative_check():
    with pytest.raises(AdmissibilityError) as exc:
        AlphaCost("quartic", lambda t: t ** 4, lambda t: 4 * t ** 3)
    assert "concave" in exc.value.invariant or "alpha'" in exc.value.invariant


def test_abs_fails_derivative_at_zero():
    with pytest.raises(AdmissibilityError):
        AlphaCost("abs", lambda t: np.abs(t), lambda t: np.sign(t))


def test_quadratic_self_dual():
    h = np.linspace(-10, 10, 41)
    np.testing.assert_allclose(quadratic().conjugate(h), h * h / 2, atol=1e-15)


def test_alpha21_conjugate_finite_only_on_unit_interval():
    a = alpha21()
    assert a.conjugate(np.array(0.5)) == pytest.approx(0.125)
    assert a.conjugate(np.array(1.0)) == pytest.approx(0.5)
    assert math.isinf(a.conjugate(np.array(1.5)))
    assert numeric_conjugate(a, 0.5) == pytest.approx(0.125, abs=1e-10)
    assert math.isinf(numeric_conjugate(a, 1.5))


def test_alpha21_linear_growth():
    a = alpha21()
    assert a.eval(np.array(3.0)) == pytest.approx(2.5)
    assert a.eval(np.array(0.5)) == pytest.approx(0.125)


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_power_conjugate_closed_form_matches_dense_oracle(p):
    a = power_smooth(p)
    h = np.array([-6.0, -2.5, -0.3, 0.0, 0.7, 2.0, 4.5])
    radius = 2.0 * 3.0 ** (1.0 / (p - 1.0)) + 10.0
    np.testing.assert_allclose(a.conjugate(h), dense_conjugate(a.eval, h, radius=radius, n=4_000_001),
                               rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("h", [-3.0, 0.1, 1.0, 2.5, 7.0])
def test_numeric_conjugate_matches_closed_form(h):
    a = power_smooth(1.5)
    assert numeric_conjugate(a, h) == pytest.approx(float(a.conjugate(np.array(h))), rel=1e-9)


def test_scaled_cost_and_conjugate():
    base = quadratic()
    s = scaled(base, 2.0)
    assert s.eval(np.array(2.0)) == pytest.approx(2.0 * base.eval(np.array(1.0)))
    assert s.conjugate(np.array(1.5)) == pytest.approx(2.0 * 1.5 ** 2 / 2)
    assert make_builtin("scaled:quadratic:2.0").eval(np.array(3.0)) == pytest.approx(2.25)


def test_omega_values():
    assert omega_alpha(quadratic(), 3.0) == 9.0
    assert omega_alpha(power_smooth(1.5), 2.0) == pytest.approx(4.0, rel=1e-6)
    # omega_alpha21(x) = x^2 for x <= 1 and grows at most like x^2
    assert omega_alpha(alpha21(), 0.5) == pytest.approx(0.5, rel=1e-5)
    assert omega_alpha(alpha21(), 2.0) == pytest.approx(4.0, rel=1e-5)
    assert omega_conjugate(quadratic(), 2.0) == pytest.approx(4.0)


def test_separable_cost_sums_coordinates():
    c = cost_from_id("quadratic", dim=2)
    assert c(np.array([1.0, 2.0])) == pytest.approx(2.5)
    assert c.conj(np.array([[1.0, 1.0]]))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        SeparableCost(quadratic(), 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20),
       st.sampled_from(["quadratic", "power:1.5", "alpha21"]))
def test_young_inequality(t, h, cost_id):
    a = make_builtin(cost_id)
    assert a.eval(np.array(t)) + a.conjugate(np.array(h)) >= t * h - 1e-9 * (1 + abs(t * h))


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50),
       st.sampled_from(["power:1.2", "power:1.5", "alpha21", "scaled:power:1.5:3.0"]))
def test_lemma51_gap_nonnegative(u, v, cost_id):
    assert lemma51_gap(make_builtin(cost_id), u, v) >= -1e-10 * (1 + u * u + v * v)
