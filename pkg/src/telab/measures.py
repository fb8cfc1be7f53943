"""Probability measures and functions discretized on uniform grids.

Measures carry their own quadrature: every integral below is a weighted sum
over grid points, so inequalities are exact statements about the discrete
measure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 points, got n={self.n}")
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def spec(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n": self.n}


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative weights on arbitrary support points (rows of ``points``)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.points):
            raise ValueError("weights must be a vector matching the support")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]


@dataclass(frozen=True, eq=False)
class GridMeasure:
    grid: Grid1D
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum():.15g}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unnormalized(cls, grid: Grid1D, weights) -> "GridMeasure":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise ValueError("cannot normalize an all-zero density")
        return cls(grid, w / total)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def dim(self) -> int:
        return 1

    def mean(self) -> float:
        return float(self.weights @ self.points)

    def boundary_mass(self, cells: int = 1) -> float:
        """Mass on the outermost ``cells`` points at either end (truncation diagnostic)."""
        return float(self.weights[:cells].sum() + self.weights[-cells:].sum())


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid1D, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid, np.broadcast_to(fn(grid.points), (grid.n,)).astype(float))

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def __add__(self, other):
        other = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values + other)

    def __sub__(self, other):
        other = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values - other)

    def __mul__(self, scalar: float):
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Product of (at most two) one-dimensional grid measures."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not 1 <= len(factors) <= 2:
            raise ValueError("only products of one or two factors are supported")
        if not all(isinstance(f, GridMeasure) for f in factors):
            raise TypeError("factors must be GridMeasure instances")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> tuple:
        return tuple(f.grid.n for f in self.factors)

    @property
    def weights(self) -> np.ndarray:
        """Weights as an array of shape ``self.shape``."""
        if self.dim == 1:
            return self.factors[0].weights
        return np.outer(self.factors[0].weights, self.factors[1].weights)

    def mesh(self) -> tuple:
        return np.meshgrid(*(f.points for f in self.factors), indexing="ij")

    def to_discrete(self) -> DiscreteMeasure:
        if self.dim == 1:
            return DiscreteMeasure(self.factors[0].points, self.factors[0].weights)
        xs, ys = self.mesh()
        pts = np.column_stack([xs.ravel(), ys.ravel()])
        return DiscreteMeasure(pts, self.weights.ravel())


# ---------------------------------------------------------------------------
# densities

DensitySpec = Union[Callable, Mapping, Sequence]


def _gaussian_logpdf(mean=0.0, std=1.0):
    def logpdf(x):
        return -0.5 * ((x - mean) / std) ** 2
    return logpdf


def _exp_power_logpdf(p=2.0):
    def logpdf(x):
        return -np.abs(x) ** p
    return logpdf


def _mixture_logpdf(means, stds, probs):
    means, stds, probs = map(np.asarray, (means, stds, probs))

    def logpdf(x):
        x = np.asarray(x)[..., None]
        comp = np.log(probs) - np.log(stds) - 0.5 * ((x - means) / stds) ** 2
        m = comp.max(axis=-1, keepdims=True)
        return (m + np.log(np.exp(comp - m).sum(axis=-1, keepdims=True)))[..., 0]
    return logpdf


LOG_DENSITIES = {
    "gaussian": _gaussian_logpdf,
    "exp_power": _exp_power_logpdf,
    "mixture": _mixture_logpdf,
}


def discretize(density: DensitySpec, grid: Grid1D) -> GridMeasure:
    """Normalized weights proportional to a density sampled at the grid points.

    ``density`` is a ``{"kind": ..., "params": {...}}`` mapping (kinds
    ``gaussian``, ``exp_power``, ``mixture``, ``custom`` with a ``values`` list),
    a callable density, or a sequence of nonnegative values at the points.
    """
    x = grid.points
    if isinstance(density, Mapping):
        kind = density.get("kind")
        params = dict(density.get("params", {}))
        if kind == "custom":
            return _from_values(grid, params["values"])
        if kind not in LOG_DENSITIES:
            raise ValueError(f"unknown density kind {kind!r}; valid: "
                             f"{', '.join(sorted(LOG_DENSITIES) + ['custom'])}")
        logw = LOG_DENSITIES[kind](**params)(x)
        logw = logw - logw.max()
        return GridMeasure.from_unnormalized(grid, np.exp(logw))
    if callable(density):
        return _from_values(grid, np.broadcast_to(density(x), x.shape))
    return _from_values(grid, density)


def _from_values(grid, values):
    w = np.asarray(values, dtype=float)
    if w.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} density values, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("density must be finite and nonnegative on the grid")
    if not w.sum() > 0:
        raise ValueError("density vanishes on the whole grid")
    return GridMeasure.from_unnormalized(grid, w)


def gaussian(grid: Grid1D, mean: float = 0.0, std: float = 1.0) -> GridMeasure:
    return discretize({"kind": "gaussian", "params": {"mean": mean, "std": std}}, grid)


def measure_from_spec(spec: Mapping) -> GridMeasure:
    """Build a measure from ``{"grid": {lo, hi, n}, "density": {kind, params}}``."""
    g = spec["grid"]
    return discretize(spec["density"], Grid1D(float(g["lo"]), float(g["hi"]), int(g["n"])))


# ---------------------------------------------------------------------------
# functionals


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def tilt(mu: GridMeasure, f: GridFunction) -> GridMeasure:
    """``d nu = e^f d mu / int e^f d mu``, max-shifted against overflow."""
    _same_grid(mu, f)
    support = mu.weights > 0
    shift = f.values[support].max() if support.any() else 0.0
    w = mu.weights * np.exp(np.where(support, f.values - shift, -np.inf))
    return GridMeasure.from_unnormalized(mu.grid, w)


def relative_entropy(nu: GridMeasure, mu: GridMeasure) -> float:
    """``H(nu|mu)`` with ``0 log 0 = 0``; ``+inf`` when nu charges a mu-null point."""
    _same_grid(nu, mu)
    pos = nu.weights > 0
    if np.any(mu.weights[pos] == 0):
        return math.inf
    p, q = nu.weights[pos], mu.weights[pos]
    return float(max(np.sum(p * np.log(p / q)), 0.0))


def integral(mu, f) -> float:
    values = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    return float(np.sum(mu.weights * values))


def entropy_functional(mu, g) -> float:
    """``Ent_mu(g) = int g log g - int g log int g`` for ``g >= 0``."""
    g = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    w = mu.weights
    if np.any(g < 0):
        raise ValueError("entropy functional needs a nonnegative function")
    mass = float(np.sum(w * g))
    if mass == 0.0:
        return 0.0
    # Ent(g) = mass * sum (w g / mass) log(g / mass), which avoids cancellation
    pos = (g > 0) & (w > 0)
    r = g[pos] / mass
    return float(max(mass * np.sum(w[pos] * r * np.log(r)), 0.0))


def entropy_of_exp(mu, f) -> float:
    """``Ent_mu(e^f)`` evaluated through the tilt to stay finite for large ``f``."""
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    w = mu.weights
    shift = v[w > 0].max()
    g = np.exp(v - shift)
    return math.exp(shift) * entropy_functional(mu, g)


def gradient(f: GridFunction) -> GridFunction:
    """Central differences inside, one-sided first order at the two ends."""
    return GridFunction(f.grid, np.gradient(f.values, f.grid.h, edge_order=1))


def variance(mu, f) -> float:
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    m = float(np.sum(mu.weights * v))
    return float(max(np.sum(mu.weights * (v - m) ** 2), 0.0))


def laplace(mu, f, lam: float) -> float:
    """``int exp(lam (f - int f dmu)) dmu``."""
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    w = mu.weights
    z = lam * (v - float(np.sum(w * v)))
    shift = z[w > 0].max()
    return float(math.exp(shift) * np.sum(w * np.exp(z - shift)))


def log_laplace(mu, f, lam: float) -> float:
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    w = mu.weights
    z = lam * (v - float(np.sum(w * v)))
    shift = z[w > 0].max()
    return float(shift + math.log(np.sum(w * np.exp(z - shift))))


def osc(f) -> float:
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)
    return float(v.max() - v.min())


def total_variation(a: GridMeasure, b: GridMeasure) -> float:
    _same_grid(a, b)
    return 0.5 * float(np.abs(a.weights - b.weights).sum())


# ---------------------------------------------------------------------------
# CSV export


def write_measure_csv(mu: GridMeasure, path) -> None:
    _write_pairs(path, ("point", "weight"), mu.points, mu.weights)


def write_function_csv(f: GridFunction, path) -> None:
    _write_pairs(path, ("point", "value"), f.points, f.values)


def _write_pairs(path, header, xs, ys):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, y in zip(xs, ys):
            w.writerow([repr(float(x)), repr(float(y))])


def read_function_csv(path) -> GridFunction:
    """Read ``point,value`` rows; the points must form a uniform grid."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["point", "value"]:
            raise ValueError(f"{path}: expected header 'point,value', got {header}")
        for row in reader:
            if row:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
    xs = np.asarray(xs)
    grid = Grid1D(float(xs[0]), float(xs[-1]), len(xs))
    if not np.allclose(xs, grid.points, rtol=0, atol=1e-9 * max(1.0, grid.hi - grid.lo)):
        raise ValueError(f"{path}: points do not form a uniform grid")
    return GridFunction(grid, np.asarray(ys))
