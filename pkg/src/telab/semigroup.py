"""Inf- and sup-convolutions on grids and semi-convexity certificates.

All convolutions are exact optimizations over grid points. The O(n^2)
sweep is the reference path; ``method="monotone"`` uses the monotonicity of
minimizers for convex costs (divide and conquer) and must agree with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from telab.costs import SeparableCost, omega_alpha
from telab.measures import GridFunction, gradient
from telab.reports import InequalityReport

CHUNK = 256


# ---------------------------------------------------------------------------
# convolutions


def _min_plus(values, xs, ys, kernel):
    """``out[i] = min_j values[j] + kernel(xs[i] - ys[j])`` plus the argmin."""
    out = np.empty(len(xs))
    arg = np.empty(len(xs), dtype=int)
    for s in range(0, len(xs), CHUNK):
        block = values[None, :] + kernel(xs[s:s + CHUNK, None] - ys[None, :])
        k = np.argmin(block, axis=1)
        arg[s:s + CHUNK] = k
        out[s:s + CHUNK] = block[np.arange(len(k)), k]
    return out, arg


def _min_plus_monotone(values, xs, ys, kernel):
    """Same as :func:`_min_plus` when the leftmost argmin is nondecreasing in x."""
    n = len(xs)
    out = np.empty(n)
    arg = np.empty(n, dtype=int)
    stack = [(0, n - 1, 0, len(ys) - 1)]
    while stack:
        lo, hi, jlo, jhi = stack.pop()
        if lo > hi:
            continue
        mid = (lo + hi) // 2
        cand = values[jlo:jhi + 1] + kernel(xs[mid] - ys[jlo:jhi + 1])
        k = int(np.argmin(cand))
        out[mid] = cand[k]
        arg[mid] = jlo + k
        stack.append((lo, mid - 1, jlo, jlo + k))
        stack.append((mid + 1, hi, jlo + k, jhi))
    return out, arg


def _convolve(values, grid, kernel, method):
    xs = grid.points
    if method == "direct":
        return _min_plus(values, xs, xs, kernel)
    if method == "monotone":
        return _min_plus_monotone(values, xs, xs, kernel)
    raise ValueError(f"unknown convolution method {method!r}")


def inf_convolution(f: GridFunction, lam: float, cost: SeparableCost,
                    method: str = "direct") -> GridFunction:
    """``Q^lam f(x) = min_y {f(y) + lam c(x - y)}`` over grid points."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    out, _ = _convolve(f.values, f.grid, lambda z: lam * cost(z), method)
    return GridFunction(f.grid, out)


def sup_convolution(f: GridFunction, t: float, cost: SeparableCost,
                    method: str = "direct") -> GridFunction:
    """Hopf-Lax ``P_t f(x) = max_y {f(y) - t c((x - y)/t)}`` over grid points."""
    out, _ = sup_convolution_with_argmax(f, t, cost, method)
    return out


def sup_convolution_with_argmax(f: GridFunction, t: float, cost: SeparableCost,
                                method: str = "direct"):
    if not t > 0:
        raise ValueError("t must be positive")
    neg, arg = _convolve(-f.values, f.grid, lambda z: t * cost(z / t), method)
    return GridFunction(f.grid, -neg), arg


def sup_convolution_lambda(f: GridFunction, lam: float, cost: SeparableCost,
                           method: str = "direct") -> GridFunction:
    """``P^lam f(x) = max_y {f(y) - lam c(x - y)}`` (the Bobkov-Gotze form)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    neg, _ = _convolve(-f.values, f.grid, lambda z: lam * cost(z), method)
    return GridFunction(f.grid, -neg)


def lipschitz_constant(f: GridFunction) -> float:
    return float(np.max(np.abs(np.diff(f.values))) / f.grid.h)


def semigroup_tol(f: GridFunction) -> float:
    """First-order grid error budget ``2 (Lip(f) + 1) h``."""
    return 2.0 * (lipschitz_constant(f) + 1.0) * f.grid.h


# ---------------------------------------------------------------------------
# semi-convexity


@dataclass(frozen=True)
class SemiConvexityCertificate:
    K_min: float
    witness: tuple
    mode: str = "gradient-form"
    boundary_witness: bool = False
    raw_max: float = field(default=0.0, repr=False)

    def as_dict(self) -> dict:
        return {
            "K_min": self.K_min,
            "witness": list(self.witness),
            "mode": self.mode,
            "boundary_witness": self.boundary_witness,
        }


def semiconvexity_defect(f: GridFunction, cost: SeparableCost,
                         grad: GridFunction | None = None) -> SemiConvexityCertificate:
    """Smallest K with ``f(y) >= f(x) + f'(x)(y-x) - K c(y-x)`` on all grid pairs.

    The ratio is maximized over ordered pairs ``x != y`` and clamped below at 0;
    ties resolve to the lowest (x, y) index pair.
    """
    x = f.grid.points
    v = f.values
    d = (grad if grad is not None else gradient(f)).values
    n = len(x)
    best, wi, wj = -math.inf, 0, 1
    for s in range(0, n, CHUNK):
        xi = x[s:s + CHUNK, None]
        dy = x[None, :] - xi
        c = cost(dy)
        num = v[s:s + CHUNK, None] + d[s:s + CHUNK, None] * dy - v[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(c > 0, num / c, -np.inf)
        k = int(np.argmax(ratio))
        r, col = divmod(k, n)
        if ratio[r, col] > best:
            best, wi, wj = float(ratio[r, col]), s + r, col
    K = max(best, 0.0)
    boundary = wi in (0, n - 1) or wj in (0, n - 1)
    return SemiConvexityCertificate(K, (float(x[wi]), float(x[wj])), "gradient-form",
                                    boundary, best)


def midpoint_defect(f: GridFunction, cost: SeparableCost,
                    max_span: int | None = None) -> SemiConvexityCertificate:
    """Smallest K satisfying the two-point midpoint form on grid triples.

    For ``x = x_i < z = x_k < y = x_j`` with ``z = l x + (1-l) y``:
    ``f(z) <= l f(x) + (1-l) f(y) + l K c((1-l)(y-x)) + (1-l) K c(l (y-x))``.
    Only grid-aligned ``l = (j-k)/(j-i)`` are examined.
    """
    x = f.grid.points
    v = f.values
    n = len(x)
    span_cap = n - 1 if max_span is None else min(max_span, n - 1)
    best, witness = -math.inf, (float(x[0]), float(x[-1]))
    for span in range(2, span_cap + 1):
        i = np.arange(0, n - span)
        j = i + span
        dist = x[j] - x[i]
        for off in range(1, span):
            k = i + off
            lam = (span - off) / span
            gap = v[k] - lam * v[i] - (1.0 - lam) * v[j]
            denom = lam * cost((1.0 - lam) * dist) + (1.0 - lam) * cost(lam * dist)
            ratio = gap / denom
            a = int(np.argmax(ratio))
            if ratio[a] > best:
                best, witness = float(ratio[a]), (float(x[i[a]]), float(x[j[a]]))
    K = max(best, 0.0)
    return SemiConvexityCertificate(K, witness, "midpoint-form", False, best)


# ---------------------------------------------------------------------------
# checks built on the semigroups


def check_lem_semiconv(f: GridFunction, u: float, cost: SeparableCost):
    """Certified defect of ``P_u f`` against ``4 u omega_alpha(1/(2u))``."""
    g = sup_convolution(f, u, cost)
    cert = semiconvexity_defect(g, cost)
    bound = 4.0 * u * omega_alpha(cost.alpha, 1.0 / (2.0 * u))
    tol = semigroup_tol(f)
    return InequalityReport.build(
        "lem_semiconv", constant=bound, lhs=cert.K_min, rhs=bound, tol=tol,
        witness={"u": u, "pair": list(cert.witness)},
        diagnostics={"boundary_witness": cert.boundary_witness, "grid": f.grid.spec(),
                     "cost": cost.name})


def kink_mask(f: GridFunction, factor: float = 10.0) -> np.ndarray:
    """Points where central and one-sided slopes disagree by more than ``factor*h``."""
    v, h = f.values, f.grid.h
    mask = np.zeros(len(v), dtype=bool)
    fwd = (v[2:] - v[1:-1]) / h
    bwd = (v[1:-1] - v[:-2]) / h
    cen = (v[2:] - v[:-2]) / (2 * h)
    bad = (np.abs(cen - fwd) > factor * h) | (np.abs(cen - bwd) > factor * h)
    mask[1:-1] = bad
    return mask


def hopf_lax_residual(f: GridFunction, t: float, dt: float, cost: SeparableCost,
                      exclude_kinks: bool = True) -> float:
    """Max interior residual of ``d/dt P_t f = c*(-grad P_t f)``.

    Uses a forward difference in time and central differences in space.
    Points whose maximizer sits on the grid edge (truncation) and detected
    kinks are excluded.
    """
    if not t > dt > 0:
        raise ValueError("need t > dt > 0")
    p0, arg0 = sup_convolution_with_argmax(f, t, cost)
    p1, arg1 = sup_convolution_with_argmax(f, t + dt, cost)
    n = f.grid.n
    dtime = (p1.values - p0.values) / dt
    dspace = gradient(p0).values
    rhs = cost.conj(-dspace)
    keep = np.ones(n, dtype=bool)
    keep[[0, -1]] = False
    for arg in (arg0, arg1):
        keep &= (arg > 0) & (arg < n - 1)
    # the stencil at i uses its two neighbours; drop points touching a dropped one
    edge = ~keep
    keep &= ~(np.roll(edge, 1) | np.roll(edge, -1))
    if exclude_kinks:
        keep &= ~kink_mask(p0)
    keep &= np.isfinite(rhs)
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(dtime[keep] - rhs[keep])))
