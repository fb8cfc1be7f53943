import math

import numpy as np
import pytest

from telab.measures import (
    DiscreteMeasure,
    Grid1D,
    GridFunction,
    GridMeasure,
    GridMismatchError,
    ProductMeasure,
    discretize,
    entropy_functional,
    entropy_of_exp,
    gaussian,
    integral,
    laplace,
    measure_from_spec,
    osc,
    read_function_csv,
    relative_entropy,
    tilt,
    total_variation,
    variance,
    write_function_csv,
)


def test_grid_points_and_spacing():
    g = Grid1D(-1.0, 1.0, 5)
    np.testing.assert_allclose(g.points, [-1, -0.5, 0, 0.5, 1])
    assert g.h == 0.5
    with pytest.raises(ValueError):
        Grid1D(1.0, -1.0, 5)


def test_grid_measure_requires_normalization():
    g = Grid1D(0.0, 1.0, 3)
    with pytest.raises(ValueError):
        GridMeasure(g, np.array([0.2, 0.2, 0.2]))
    with pytest.raises(ValueError):
        GridMeasure(g, np.array([-0.1, 0.6, 0.5]))
    mu = GridMeasure.from_unnormalized(g, [1, 2, 1])
    np.testing.assert_allclose(mu.weights, [0.25, 0.5, 0.25])


def test_discrete_gaussian_moments(std_gauss):
    assert std_gauss.mean() == pytest.approx(0.0, abs=1e-14)
    x = std_gauss.points
    assert integral(std_gauss, x * x) == pytest.approx(1.0, abs=1e-10)
    assert std_gauss.boundary_mass() < 1e-13


def test_density_kinds(grid):
    m = discretize({"kind": "mixture", "params": {"means": [-1, 1], "stds": [0.5, 0.5],
                                                   "probs": [0.5, 0.5]}}, grid)
    assert m.mean() == pytest.approx(0.0, abs=1e-12)
    e = discretize({"kind": "exp_power", "params": {"p": 1.0}}, grid)
    # truncation to [-8, 8] removes about 9 e^-8 of the first absolute moment
    assert integral(e, np.abs(e.points)) == pytest.approx(1.0 - 8 * np.exp(-8.0), rel=1e-4)
    with pytest.raises(ValueError, match="unknown density kind"):
        discretize({"kind": "cauchy"}, grid)
    spec = {"grid": {"lo": -8, "hi": 8, "n": 1601},
            "density": {"kind": "gaussian", "params": {"mean": 0.0, "std": 1.0}}}
    np.testing.assert_array_equal(measure_from_spec(spec).weights, gaussian(grid).weights)


def test_relative_entropy_of_translate_is_half_square(grid, std_gauss):
    nu = gaussian(grid, 0.7, 1.0)
    assert relative_entropy(nu, std_gauss) == pytest.approx(0.245, rel=1e-9)
    assert relative_entropy(std_gauss, std_gauss) == 0.0


def test_relative_entropy_infinite_off_support():
    g = Grid1D(0.0, 1.0, 3)
    mu = GridMeasure(g, np.array([0.5, 0.5, 0.0]))
    nu = GridMeasure(g, np.array([0.0, 0.5, 0.5]))
    assert math.isinf(relative_entropy(nu, mu))


def test_grid_mismatch_raises(std_gauss):
    other = gaussian(Grid1D(-8.0, 8.0, 801))
    with pytest.raises(GridMismatchError):
        relative_entropy(other, std_gauss)


def test_tilt_invariant_under_constants(std_gauss, grid):
    f = GridFunction.from_callable(grid, np.sin)
    a = tilt(std_gauss, f)
    b = tilt(std_gauss, f + GridFunction(grid, np.full(grid.n, 3.0)))
    np.testing.assert_allclose(a.weights, b.weights, rtol=1e-13, atol=1e-300)


def test_entropy_identities(std_gauss, grid):
    f = GridFunction.from_callable(grid, lambda x: 0.4 * np.cos(x) + 0.1 * x)
    g = np.exp(f.values)
    # Ent(e^f) = Z H(nu_f | mu)
    Z = integral(std_gauss, g)
    assert entropy_of_exp(std_gauss, f) == pytest.approx(Z * relative_entropy(tilt(std_gauss, f), std_gauss), rel=1e-10)
    assert entropy_functional(std_gauss, 3.0 * g) == pytest.approx(3.0 * entropy_functional(std_gauss, g), rel=1e-12)
    assert entropy_functional(std_gauss, np.ones(grid.n)) == 0.0
    with pytest.raises(ValueError):
        entropy_functional(std_gauss, -g)


def test_entropy_of_exp_large_values_finite(std_gauss, grid):
    f = GridFunction.from_callable(grid, lambda x: 600.0 + np.sin(x))
    assert math.isfinite(entropy_of_exp(std_gauss, f))


def test_laplace_linear_function(std_gauss, grid):
    f = GridFunction.from_callable(grid, lambda x: x)
    assert laplace(std_gauss, f, 1.0) == pytest.approx(math.exp(0.5), rel=1e-9)


def test_variance_and_osc(std_gauss, grid):
    f = GridFunction.from_callable(grid, lambda x: 2.0 * x)
    assert variance(std_gauss, f) == pytest.approx(4.0, rel=1e-10)
    assert osc(f) == pytest.approx(32.0)


def test_total_variation(grid, std_gauss):
    assert total_variation(std_gauss, std_gauss) == 0.0
    assert 0 < total_variation(gaussian(grid, 1.0), std_gauss) < 1


def test_product_measure(small_gauss):
    p = ProductMeasure((small_gauss, small_gauss))
    assert p.weights.shape == (241, 241)
    assert p.weights.sum() == pytest.approx(1.0)
    d = p.to_discrete()
    assert d.points.shape == (241 * 241, 2)
    assert isinstance(d, DiscreteMeasure)


def test_function_csv_round_trip(tmp_path, grid):
    f = GridFunction.from_callable(grid, np.sin)
    path = tmp_path / "f.csv"
    write_function_csv(f, path)
    g = read_function_csv(path)
    assert g.grid == grid
    np.testing.assert_array_equal(g.values, f.values)


def test_read_function_csv_rejects_nonuniform(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("point,value\n0,1\n0.5,1\n2,1\n")
    with pytest.raises(ValueError, match="uniform"):
        read_function_csv(path)
