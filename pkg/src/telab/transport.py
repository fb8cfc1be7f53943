"""Optimal transport cost between discrete measures.

One-dimensional problems with a convex cost of the difference are solved by
the monotone (quantile) coupling. Small problems in any dimension go through
an exact transportation simplex, which also serves as a cross-check of the
monotone path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from telab.costs import SeparableCost

LP_MAX_SUPPORT = 64
MASS_TOL = 1e-10


class UnnormalizedMeasureError(ValueError):
    pass


class InfeasibleMarginalsError(ValueError):
    pass


class SupportTooLargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Coupling:
    row_measure: object
    col_measure: object
    plan: np.ndarray

    def check(self, tol: float = 1e-10) -> None:
        if np.any(self.plan < 0):
            raise ValueError("coupling has negative entries")
        if not np.allclose(self.plan.sum(axis=1), self.row_measure.weights, rtol=0, atol=tol):
            raise ValueError("row sums do not match the row marginal")
        if not np.allclose(self.plan.sum(axis=0), self.col_measure.weights, rtol=0, atol=tol):
            raise ValueError("column sums do not match the column marginal")


@dataclass(frozen=True, eq=False)
class MonotonePlan:
    """Sparse quantile coupling: ``mass[k]`` moves from row ``rows[k]`` to column ``cols[k]``."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray

    def dense(self, n: int, m: int) -> np.ndarray:
        plan = np.zeros((n, m))
        np.add.at(plan, (self.rows, self.cols), self.mass)
        return plan


@dataclass(frozen=True, eq=False)
class TransportResult:
    cost: float
    plan: Union[Coupling, MonotonePlan]
    method: str

    def as_dict(self) -> dict:
        return {"cost": self.cost, "method": self.method}


def _require_normalized(measure, label):
    total = float(np.sum(measure.weights))
    if abs(total - 1.0) > MASS_TOL:
        raise UnnormalizedMeasureError(f"{label} has total mass {total:.15g}, expected 1")


def transport_1d_monotone(nu, mu, cost: SeparableCost) -> TransportResult:
    """Cost of the quantile coupling between two 1D measures.

    Both weight sequences are swept in increasing point order and mass is
    matched greedily; this is optimal for a convex cost of the difference.
    """
    if nu.dim != 1 or mu.dim != 1 or cost.dim != 1:
        raise ValueError("monotone coupling is one-dimensional")
    _require_normalized(nu, "nu")
    _require_normalized(mu, "mu")
    ox = np.argsort(nu.points, kind="stable")
    oy = np.argsort(mu.points, kind="stable")
    a = np.cumsum(nu.weights[ox])
    b = np.cumsum(mu.weights[oy])
    a[-1] = b[-1] = max(a[-1], b[-1])
    cuts = np.union1d(a, b)
    cuts = cuts[cuts > 0]
    lower = np.concatenate(([0.0], cuts[:-1]))
    mass = cuts - lower
    keep = mass > 0
    mass, mid = mass[keep], 0.5 * (cuts[keep] + lower[keep])
    i = np.minimum(np.searchsorted(a, mid, side="left"), len(a) - 1)
    j = np.minimum(np.searchsorted(b, mid, side="left"), len(b) - 1)
    rows, cols = ox[i], oy[j]
    total = float(np.sum(mass * cost(nu.points[rows] - mu.points[cols])))
    return TransportResult(total, MonotonePlan(rows, cols, mass), "monotone")


def transport_lp(nu, mu, cost_matrix: np.ndarray) -> TransportResult:
    """Exact optimum of the transportation LP by the transportation simplex."""
    a = np.asarray(nu.weights, dtype=float)
    b = np.asarray(mu.weights, dtype=float)
    C = np.asarray(cost_matrix, dtype=float)
    if C.shape != (len(a), len(b)):
        raise ValueError(f"cost matrix shape {C.shape} does not match marginals {(len(a), len(b))}")
    if abs(a.sum() - b.sum()) > MASS_TOL:
        raise InfeasibleMarginalsError(
            f"marginals carry different mass: {a.sum():.15g} vs {b.sum():.15g}")
    ra, rb = np.flatnonzero(a > 0), np.flatnonzero(b > 0)
    if len(ra) > LP_MAX_SUPPORT or len(rb) > LP_MAX_SUPPORT:
        raise SupportTooLargeError(
            f"LP path supports at most {LP_MAX_SUPPORT} points per measure "
            f"(got {len(ra)} and {len(rb)}); coarsen the grids")
    plan = np.zeros(C.shape)
    if len(ra) and len(rb):
        sub = transportation_simplex(a[ra], b[rb], C[np.ix_(ra, rb)])
        plan[np.ix_(ra, rb)] = sub
    cost = float(np.sum(plan * C))
    return TransportResult(cost, Coupling(nu, mu, plan), "lp")


def transportation_simplex(a: np.ndarray, b: np.ndarray, C: np.ndarray,
                           max_iter: int = 100_000) -> np.ndarray:
    """Optimal plan of ``min <C, X>`` s.t. ``X 1 = a``, ``X^T 1 = b``, ``X >= 0``.

    Starts from the north-west corner basis and pivots with the u-v
    (MODI) method. Entering cells use the most negative reduced cost and
    switch to Bland's rule after a run of degenerate pivots, so the method
    cannot cycle.
    """
    n, m = C.shape
    x = np.zeros((n, m))
    basis = []
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    i = j = 0
    while True:
        if i == n - 1 and j == m - 1:
            x[i, j] = max(ra[i], 0.0)
            basis.append((i, j))
            break
        if j == m - 1 or (i < n - 1 and ra[i] <= rb[j]):
            q = max(ra[i], 0.0)
            x[i, j] = q
            basis.append((i, j))
            rb[j] -= q
            i += 1
        else:
            q = max(rb[j], 0.0)
            x[i, j] = q
            basis.append((i, j))
            ra[i] -= q
            j += 1
    scale = max(1.0, float(np.abs(C).max()))
    eps = 1e-12 * scale
    basic = np.zeros((n, m), dtype=bool)
    for cell in basis:
        basic[cell] = True
    degenerate_run = 0
    for _ in range(max_iter):
        u, v = _potentials(basis, n, m, C)
        reduced = C - u[:, None] - v[None, :]
        reduced[basic] = 0.0
        candidates = np.argwhere(reduced < -eps)
        if len(candidates) == 0:
            x[x < 0] = 0.0
            return x
        if degenerate_run > 2 * (n + m):
            ei, ej = map(int, candidates[0])
        else:
            ei, ej = map(int, np.unravel_index(np.argmin(reduced), reduced.shape))
        cycle = _cycle(basis, n, ei, ej)
        minus = cycle[1::2]
        theta = min(x[c] for c in minus)
        degenerate_run = degenerate_run + 1 if theta == 0.0 else 0
        leave = next(c for c in minus if x[c] == theta)
        for k, c in enumerate(cycle):
            x[c] += theta if k % 2 == 0 else -theta
        x[leave] = 0.0
        basis.remove(leave)
        basic[leave] = False
        basis.append((ei, ej))
        basic[ei, ej] = True
    raise RuntimeError("transportation simplex did not converge")


def _adjacency(basis, n):
    adj = {}
    for (i, j) in basis:
        adj.setdefault(i, []).append(n + j)
        adj.setdefault(n + j, []).append(i)
    return adj


def _potentials(basis, n, m, C):
    adj = _adjacency(basis, n)
    pot = np.full(n + m, np.nan)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nb in adj.get(node, ()):
            if np.isnan(pot[nb]):
                if node < n:
                    pot[nb] = C[node, nb - n] - pot[node]
                else:
                    pot[nb] = C[nb, node - n] - pot[node]
                queue.append(nb)
    return pot[:n], pot[n:]


def _cycle(basis, n, ei, ej):
    """Cells of the pivot cycle, entering cell first, signs alternating +/-."""
    adj = _adjacency(basis, n)
    parent = {ei: None}
    queue = deque([ei])
    target = n + ej
    while queue and target not in parent:
        node = queue.popleft()
        for nb in adj.get(node, ()):
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [target]
    while path[-1] != ei:
        path.append(parent[path[-1]])
    cells = [(ei, ej)]
    for p, q in zip(path[:-1], path[1:]):
        cells.append((q, p - n) if q < n else (p, q - n))
    return cells


def cost_matrix(nu, mu, cost: SeparableCost) -> np.ndarray:
    xs = np.asarray(nu.points, dtype=float)
    ys = np.asarray(mu.points, dtype=float)
    if cost.dim == 1:
        return cost(xs[:, None] - ys[None, :])
    return cost(xs[:, None, :] - ys[None, :, :])


def transport_cost(nu, mu, cost: SeparableCost) -> TransportResult:
    """Dispatch: monotone coupling in 1D, exact LP on the (small) 2D support."""
    if cost.dim == 1:
        return transport_1d_monotone(nu, mu, cost)
    if cost.dim == 2:
        _require_normalized(nu, "nu")
        _require_normalized(mu, "mu")
        sn, sm = np.flatnonzero(nu.weights > 0), np.flatnonzero(mu.weights > 0)
        if len(sn) > LP_MAX_SUPPORT or len(sm) > LP_MAX_SUPPORT:
            raise SupportTooLargeError(
                f"2D transport runs the exact LP and supports at most {LP_MAX_SUPPORT} "
                f"points per measure (got {len(sn)} and {len(sm)}); coarsen the grids")
        return transport_lp(nu, mu, cost_matrix(nu, mu, cost))
    raise ValueError(f"transport supports k <= 2, got k={cost.dim}")
