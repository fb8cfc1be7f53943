"""Admissible one-dimensional cost profiles and separable costs built from them.

An admissible profile ``alpha`` is convex, symmetric, C^1, vanishes with its
derivative at 0 and has a derivative that is concave on the half-line. The
checks below are sampling-based surrogates of those hypotheses.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from telab._optim import golden_max

ArrayFn = Callable[[np.ndarray], np.ndarray]

CHECK_GRID = np.linspace(-20.0, 20.0, 4001)
OMEGA_GRID = np.logspace(-6.0, 6.0, 2001)

CONJ_START_RADIUS = 8.0
CONJ_RADIUS_CAP = 2.0 ** 24
CONJ_POINTS = 4001

BUILTIN_IDS = ("quadratic", "power:<p>", "alpha21", "scaled:<base-id>:<u>")


class AdmissibilityError(ValueError):
    """A cost profile failed one of the sampled admissibility checks."""

    def __init__(self, invariant: str, point: float, detail: str = ""):
        self.invariant = invariant
        self.point = float(point)
        msg = f"cost profile violates '{invariant}' at t={self.point:.6g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnknownCostError(ValueError):
    pass


@dataclass(frozen=True)
class AlphaCost:
    """A one-dimensional cost profile with derivative and Legendre conjugate.

    ``conj`` may be ``None``, in which case the conjugate is computed
    numerically. ``conj_domain_radius`` is the slope beyond which the
    conjugate is ``+inf`` (``inf`` when the conjugate is finite everywhere).
    """

    name: str
    eval: ArrayFn
    deriv: ArrayFn
    conj: Optional[ArrayFn] = None
    conj_domain_radius: float = math.inf
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.check:
            check_admissible(self)

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))

    def conjugate(self, h):
        """Vectorized ``alpha*``; falls back to the numerical transform."""
        h = np.asarray(h, dtype=float)
        if self.conj is not None:
            return self.conj(h)
        flat = [numeric_conjugate(self, float(v)) for v in h.ravel()]
        return np.asarray(flat, dtype=float).reshape(h.shape)


def check_admissible(alpha: AlphaCost, grid: np.ndarray = CHECK_GRID) -> None:
    t = grid
    a = alpha.eval(t)
    da = alpha.deriv(t)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(da))):
        bad = t[~(np.isfinite(a) & np.isfinite(da))][0]
        raise AdmissibilityError("finite values", bad)
    a0 = float(alpha.eval(np.array([0.0]))[0])
    d0 = float(alpha.deriv(np.array([0.0]))[0])
    if abs(a0) > 1e-12:
        raise AdmissibilityError("alpha(0)=0", 0.0, f"alpha(0)={a0:.3g}")
    if abs(d0) > 1e-12:
        raise AdmissibilityError("alpha'(0)=0", 0.0, f"alpha'(0)={d0:.3g}")
    # C^1 with the supplied derivative: one-sided difference quotients must agree
    step = 1e-6
    for sign in (1.0, -1.0):
        quotient = (alpha.eval(t + sign * step) - a) / (sign * step)
        err = np.abs(quotient - da) - 1e-4 * (1.0 + np.abs(da))
        if np.any(err > 0):
            raise AdmissibilityError("C1 (derivative matches difference quotients)",
                                     t[np.argmax(err)])
    if np.any(a < -1e-12):
        raise AdmissibilityError("alpha >= 0", t[np.argmin(a)])
    asym = np.abs(a - alpha.eval(-t))
    tol = 1e-12 * (1.0 + np.abs(a))
    if np.any(asym > tol):
        raise AdmissibilityError("symmetry", t[np.argmax(asym - tol)])
    second = a[2:] - 2.0 * a[1:-1] + a[:-2]
    if np.any(second < -1e-10):
        raise AdmissibilityError("convexity", t[1:-1][np.argmin(second)])
    pos = t >= 0.0
    dpos = da[pos]
    dsecond = dpos[2:] - 2.0 * dpos[1:-1] + dpos[:-2]
    if np.any(dsecond > 1e-10):
        raise AdmissibilityError("alpha' concave on R+", t[pos][1:-1][np.argmax(dsecond)])
    bi = _biconjugate_on_grid(alpha, t, a, da)
    gap = np.abs(bi - a)
    gtol = 1e-8 * (1.0 + np.abs(a))
    if np.any(gap > gtol):
        raise AdmissibilityError("alpha** = alpha", t[np.argmax(gap - gtol)],
                                 f"gap={gap.max():.3g}")


def _biconjugate_on_grid(alpha, t, a, da, chunk=512):
    # slopes alpha'(t_j) are the subgradients; alpha** is their affine envelope
    if alpha.conj is not None:
        conj = alpha.conj(da)
    else:
        conj = t * da - a
    out = np.full_like(t, -np.inf)
    finite = np.isfinite(conj)
    s, cs = da[finite], conj[finite]
    for start in range(0, t.size, chunk):
        block = t[start:start + chunk]
        out[start:start + chunk] = np.max(block[:, None] * s[None, :] - cs[None, :], axis=1)
    return out


def numeric_conjugate(alpha: AlphaCost, h: float, radius: float = CONJ_START_RADIUS,
                      cap: float = CONJ_RADIUS_CAP, n: int = CONJ_POINTS) -> float:
    """``sup_t {h t - alpha(t)}`` on a grid whose radius doubles until the
    maximizer is interior; refined by golden section inside the winning cell.
    """
    h = float(h)
    if h == 0.0:
        return 0.0
    sign = 1.0 if h > 0 else -1.0
    if abs(h) > alpha.conj_domain_radius:
        return math.inf

    def objective(t):
        return h * t - float(alpha.eval(np.array([t]))[0])

    r = radius
    while True:
        ts = sign * np.linspace(0.0, r, n)
        vals = h * ts - alpha.eval(ts)
        k = int(np.argmax(vals))
        if k < n - 1:
            lo, hi = ts[max(k - 1, 0)], ts[k + 1]
            if lo > hi:
                lo, hi = hi, lo
            _, best = golden_max(objective, lo, hi, tol=1e-14)
            return max(best, float(vals[k]))
        if r >= cap:
            break
        r *= 2.0
    # objective still increasing at the cap
    if math.isfinite(alpha.conj_domain_radius) and abs(h) <= alpha.conj_domain_radius:
        return float(vals[-1])
    return math.inf


def legendre_conjugate(alpha: AlphaCost, h: float) -> float:
    """Extended-real ``alpha*(h)``: closed form when registered, else numerical."""
    if alpha.conj is not None:
        return float(alpha.conj(np.array([float(h)]))[0])
    return numeric_conjugate(alpha, h)


def omega(fn: ArrayFn, x: float, u_grid: np.ndarray = OMEGA_GRID) -> float:
    """``sup_{u>0} fn(u x) / fn(u)`` over a log-spaced grid (a lower bound)."""
    base = fn(u_grid)
    num = fn(u_grid * abs(float(x)))
    ok = np.isfinite(base) & (base > 0.0) & np.isfinite(num)
    if not np.any(ok):
        return math.nan
    return float(np.max(num[ok] / base[ok]))


def omega_alpha(alpha: AlphaCost, x: float, u_grid: np.ndarray = OMEGA_GRID) -> float:
    if alpha.name == "quadratic":
        return float(x) ** 2
    return omega(alpha.eval, x, u_grid)


def omega_conjugate(alpha: AlphaCost, x: float, u_grid: np.ndarray = OMEGA_GRID) -> float:
    """``omega`` of the conjugate profile, restricted to slopes where it is finite."""
    if alpha.name == "quadratic":
        return float(x) ** 2
    return omega(alpha.conjugate, x, u_grid)


def lemma51_gap(alpha: AlphaCost, u, v):
    """``alpha(u)+v alpha'(u)+4 alpha(v/2)-alpha(u+v)``; nonnegative for admissible alpha."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return alpha.eval(u) + v * alpha.deriv(u) + 4.0 * alpha.eval(v / 2.0) - alpha.eval(u + v)


# ---------------------------------------------------------------------------
# builtin profiles


def quadratic() -> AlphaCost:
    return AlphaCost(
        name="quadratic",
        eval=lambda t: 0.5 * np.square(t),
        deriv=lambda t: np.asarray(t, dtype=float) * 1.0,
        conj=lambda h: 0.5 * np.square(h),
    )


def _huber(t):
    a = np.abs(t)
    return np.where(a <= 1.0, 0.5 * a * a, a - 0.5)


def _huber_conj(h):
    h = np.asarray(h, dtype=float)
    return np.where(np.abs(h) <= 1.0, 0.5 * h * h, np.inf)


def alpha21() -> AlphaCost:
    """Quadratic near the origin, linear beyond 1 (a Huber profile)."""
    return AlphaCost(
        name="alpha21",
        eval=_huber,
        deriv=lambda t: np.clip(t, -1.0, 1.0),
        conj=_huber_conj,
        conj_domain_radius=1.0,
    )


def power_smooth(p: float) -> AlphaCost:
    """C^1 glue of ``t^2`` on ``[0,1]`` and ``(2/p)(t^p-1)+1`` beyond, symmetrized."""
    p = float(p)
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"power_smooth needs p in [1,2], got {p}")

    def ev(t):
        a = np.abs(np.asarray(t, dtype=float))
        tail = (2.0 / p) * (np.power(np.maximum(a, 1.0), p) - 1.0) + 1.0
        return np.where(a <= 1.0, a * a, tail)

    def de(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        tail = 2.0 * np.power(np.maximum(a, 1.0), p - 1.0)
        return np.sign(t) * np.where(a <= 1.0, 2.0 * a, tail)

    def cj(h):
        h = np.abs(np.asarray(h, dtype=float))
        out = 0.25 * h * h
        big = h > 2.0
        if p == 1.0:
            return np.where(big, np.inf, out)
        hb = np.where(big, h, 2.0)
        t = np.power(hb / 2.0, 1.0 / (p - 1.0))
        tail = hb * t - (2.0 / p) * (np.power(t, p) - 1.0) - 1.0
        return np.where(big, tail, out)

    return AlphaCost(
        name=f"power:{p:g}",
        eval=ev,
        deriv=de,
        conj=cj,
        conj_domain_radius=2.0 if p == 1.0 else math.inf,
    )


def scaled(base: AlphaCost, u: float) -> AlphaCost:
    """``t -> u * base(t/u)``; its conjugate is ``u * base*``."""
    u = float(u)
    if u < 1.0:
        raise ValueError(f"scaled cost needs u >= 1, got {u}")
    conj = None
    if base.conj is not None:
        bconj = base.conj
        conj = lambda h: u * bconj(h)  # noqa: E731
    return AlphaCost(
        name=f"scaled:{base.name}:{u:g}",
        eval=lambda t: u * base.eval(np.asarray(t, dtype=float) / u),
        deriv=lambda t: base.deriv(np.asarray(t, dtype=float) / u),
        conj=conj,
        conj_domain_radius=base.conj_domain_radius,
    )


def make_builtin(name: str, **params) -> AlphaCost:
    """Build a profile from a string id (``"power:1.5"``) or a name plus params."""
    if not params:
        return _builtin_from_id(name)
    return _build(name, **params)


@functools.lru_cache(maxsize=64)
def _builtin_from_id(name: str) -> AlphaCost:
    return _build(name)


def _build(name: str, **params) -> AlphaCost:
    if name == "quadratic":
        return quadratic()
    if name == "alpha21":
        return alpha21()
    if name in ("power_smooth", "power"):
        return power_smooth(params["p"])
    if name == "scaled":
        base = params["base"]
        if isinstance(base, str):
            base = make_builtin(base)
        return scaled(base, params["u"])
    if name.startswith("power:"):
        return power_smooth(_number(name, name.split(":", 1)[1]))
    if name.startswith("scaled:"):
        body = name.split(":", 1)[1]
        base_id, _, u = body.rpartition(":")
        if not base_id:
            raise UnknownCostError(_unknown(name))
        return scaled(make_builtin(base_id), _number(name, u))
    raise UnknownCostError(_unknown(name))


def _number(cost_id, text):
    try:
        return float(text)
    except ValueError:
        raise UnknownCostError(_unknown(cost_id)) from None


def _unknown(name):
    return f"unknown cost id {name!r}; valid ids: {', '.join(BUILTIN_IDS)}"


@dataclass(frozen=True)
class SeparableCost:
    """``c(x) = sum_i alpha(x_i)`` on R^k, with ``c*(x) = sum_i alpha*(x_i)``."""

    alpha: AlphaCost
    dim: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")

    @property
    def name(self) -> str:
        return self.alpha.name

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return self.alpha.eval(x)
        return np.sum(self.alpha.eval(x), axis=-1)

    def conj(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return self.alpha.conjugate(x)
        return np.sum(self.alpha.conjugate(x), axis=-1)

    def scaled(self, u: float) -> "SeparableCost":
        return SeparableCost(scaled(self.alpha, u), self.dim)


def cost_from_id(cost_id: str, dim: int = 1) -> SeparableCost:
    return SeparableCost(make_builtin(cost_id), dim)
