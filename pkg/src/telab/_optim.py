"""Scalar search helpers shared by the cost kernel and the constants lab."""

from __future__ import annotations

import math
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-12, max_iter: int = 500) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` by golden-section search.

    Returns ``(argmax, max)``. The endpoints are compared against the
    interior estimate so that monotone objectives return the boundary.
    """
    a, b = float(lo), float(hi)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for x in (lo, hi):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def golden_min(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-12, max_iter: int = 500) -> tuple[float, float]:
    x, v = golden_max(lambda t: -f(t), lo, hi, tol=tol, max_iter=max_iter)
    return x, -v
