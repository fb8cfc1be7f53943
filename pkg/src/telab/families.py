"""Seeded test families of functions and measures.

All randomness comes from a counter-based Philox generator keyed by
``(seed, stream)``, so every family member is reproducible on its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from telab.measures import GridFunction, GridMeasure, Grid1D, osc, tilt
from telab.semigroup import lipschitz_constant

STREAM_FUNCTIONS = 1
STREAM_MEASURES = 2
STREAM_LIPSCHITZ = 3
STREAM_PRODUCT = 4
STREAM_MISC = 5

MOLLIFIER_WIDTH = 0.5


def rng_for(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    key = (int(seed) & (2**64 - 1)) | ((int(stream) * 2**32 + int(index)) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def mollified_abs(z, width=MOLLIFIER_WIDTH):
    return np.sqrt(z * z + width * width) - width


@dataclass(frozen=True)
class FunctionSpec:
    """Coefficients on the basis {1, x, x^2, sin(w x + p), mollified |x - a|}."""

    const: float
    linear: float
    quad: float
    sin_amp: float
    freq: float
    phase: float
    abs_amp: float
    shift: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.const + self.linear * x + self.quad * x * x
                + self.sin_amp * np.sin(self.freq * x + self.phase)
                + self.abs_amp * mollified_abs(x - self.shift))

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def draw_function_spec(rng: np.random.Generator) -> FunctionSpec:
    return FunctionSpec(
        const=rng.uniform(-1.0, 1.0),
        linear=rng.uniform(-1.0, 1.0),
        quad=rng.uniform(-0.1, 0.1),
        sin_amp=rng.uniform(-1.0, 1.0),
        freq=rng.uniform(0.5, 3.0),
        phase=rng.uniform(0.0, 2 * np.pi),
        abs_amp=rng.uniform(-1.0, 1.0),
        shift=rng.uniform(-2.0, 2.0),
    )


@dataclass(frozen=True)
class TestFamily:
    """Deterministic generator of test functions and test measures."""

    __test__ = False  # not a pytest class

    seed: int = 0
    n_functions: int = 50
    n_measures: int = 100
    max_osc: float = 2.0

    def function_specs(self, count: int | None = None, stream: int = STREAM_FUNCTIONS):
        count = self.n_functions if count is None else count
        return [draw_function_spec(rng_for(self.seed, stream, i)) for i in range(count)]

    def functions(self, grid: Grid1D, count: int | None = None):
        return [GridFunction.from_callable(grid, s) for s in self.function_specs(count)]

    def tilt_functions(self, grid: Grid1D, count: int | None = None):
        """Family functions rescaled so their oscillation on ``grid`` is at most ``max_osc``."""
        count = self.n_measures if count is None else count
        out = []
        for spec in self.function_specs(count, STREAM_MEASURES):
            f = GridFunction.from_callable(grid, spec)
            o = osc(f)
            scale = 1.0 if o <= self.max_osc else self.max_osc / o
            out.append((f * scale, {"index": len(out), "scale": scale, **spec.as_dict()}))
        return out

    def measures(self, mu: GridMeasure, count: int | None = None):
        """``(nu, descriptor)`` pairs: tilts of ``mu`` by oscillation-bounded functions."""
        return [(tilt(mu, f), d) for f, d in self.tilt_functions(mu.grid, count)]

    def lipschitz_functions(self, grid: Grid1D, count: int = 20):
        """Functions rescaled to grid-Lipschitz constant at most 1."""
        out = []
        for spec in self.function_specs(count, STREAM_LIPSCHITZ):
            f = GridFunction.from_callable(grid, spec)
            lip = lipschitz_constant(f)
            out.append(f * (1.0 / max(lip, 1.0)))
        return out

    def product_functions(self, grid: Grid1D, count: int = 10):
        """Functions on the two-fold product grid, shape ``(n, n)``."""
        x = grid.points
        X, Y = np.meshgrid(x, x, indexing="ij")
        out = []
        for i in range(count):
            rng = rng_for(self.seed, STREAM_PRODUCT, i)
            s1 = draw_function_spec(rng)
            s2 = draw_function_spec(rng)
            coupling = rng.uniform(-0.5, 0.5)
            freq = rng.uniform(0.5, 2.0)
            out.append(s1(X) + s2(Y) + coupling * np.sin(freq * X * Y))
        return out
