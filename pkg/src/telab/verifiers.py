"""Instance verifiers: each call checks one inequality on concrete inputs.

Every verifier returns :class:`InequalityReport` objects whose ``tol`` states
the discretization budget used for the pass/fail decision. Right-hand sides
equal to ``+inf`` pass automatically and are flagged in ``diagnostics``.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from telab.costs import SeparableCost, alpha21, quadratic
from telab.families import TestFamily
from telab.measures import (
    GridFunction,
    GridMeasure,
    ProductMeasure,
    entropy_of_exp,
    gradient,
    integral,
    log_laplace,
    osc,
    relative_entropy,
    tilt,
    variance,
)
from telab.reports import InequalityReport, PreconditionError
from telab.semigroup import (
    inf_convolution,
    lipschitz_constant,
    semiconvexity_defect,
    semigroup_tol,
    sup_convolution_lambda,
)
from telab.transport import transport_cost

QUADRATIC = SeparableCost(quadratic())
TC_RELATIVE_TOL = 1e-6
CERT_SLACK = 1e-9


def function_tol(f: GridFunction) -> float:
    """``max(1e-9, 10 (1 + Lip f)^2 h)``."""
    return max(1e-9, 10.0 * (1.0 + lipschitz_constant(f)) ** 2 * f.grid.h)


def _diag(mu: GridMeasure, f: GridFunction | None = None, **extra) -> dict:
    d = {"grid": mu.grid.spec(), "boundary_mass": mu.boundary_mass()}
    if f is not None:
        d["tilt_boundary_mass"] = tilt(mu, f).boundary_mass()
    d.update(extra)
    return d


def _as_function(mu: GridMeasure, f) -> GridFunction:
    if isinstance(f, GridFunction):
        if f.grid != mu.grid:
            raise ValueError("function and measure live on different grids")
        return f
    if callable(f):
        return GridFunction.from_callable(mu.grid, f)
    return GridFunction(mu.grid, np.asarray(f, dtype=float))


def _require_certificate(f: GridFunction, cost: SeparableCost, K: float, label="f"):
    cert = semiconvexity_defect(f, cost)
    if cert.K_min > K + CERT_SLACK * (1.0 + K):
        raise PreconditionError(
            f"{label} is not {K:g}-semi-convex for cost {cost.name}: certified "
            f"defect {cert.K_min:.6g} (witness pair {cert.witness})")
    return cert


def _weighted_with_exp(mu: GridMeasure, values: np.ndarray, f: GridFunction) -> float:
    """``int values e^f dmu`` without overflow; ``+inf`` if values are infinite on the support."""
    w = mu.weights
    support = w > 0
    if np.any(~np.isfinite(values[support])):
        return math.inf
    shift = f.values[support].max()
    return float(math.exp(shift) * np.sum(w[support] * values[support]
                                          * np.exp(f.values[support] - shift)))


# ---------------------------------------------------------------------------
# transport-entropy


def _iter_measures(mu, test_measures):
    if isinstance(test_measures, TestFamily):
        yield from test_measures.measures(mu)
        return
    for i, item in enumerate(test_measures):
        if isinstance(item, tuple):
            yield item
        else:
            yield item, {"index": i}


def verify_Tc(mu: GridMeasure, C: float, test_measures, cost: SeparableCost = QUADRATIC,
              rel_tol: float = TC_RELATIVE_TOL, name: str = "tc"):
    """``T_c(nu, mu) <= C H(nu|mu)`` for every test measure."""
    if not C > 0:
        raise PreconditionError("C must be positive")
    out = []
    for nu, desc in _iter_measures(mu, test_measures):
        H = relative_entropy(nu, mu)
        T = transport_cost(nu, mu, cost).cost
        rhs = C * H
        diag = _diag(mu, nu_boundary_mass=nu.boundary_mass(), cost=cost.name)
        if math.isinf(H):
            diag["not_absolutely_continuous"] = True
        out.append(InequalityReport.build(
            name, constant=C, lhs=T, rhs=rhs, tol=rel_tol * (1.0 + T),
            witness=dict(desc), diagnostics=diag))
    return out


def verify_ICLSI(mu: GridMeasure, C: float, lam: float, f, cost: SeparableCost = QUADRATIC):
    """``Ent(e^f) <= 1/(1 - lam C) int (f - Q^lam f) e^f dmu``."""
    if not 0 < lam < 1.0 / C:
        raise PreconditionError(f"lambda={lam} outside (0, 1/C) with C={C}")
    f = _as_function(mu, f)
    gap = f.values - inf_convolution(f, lam, cost).values
    lhs = entropy_of_exp(mu, f)
    rhs = _weighted_with_exp(mu, gap, f) / (1.0 - lam * C)
    return InequalityReport.build(
        "iclsi", constant=C, lhs=lhs, rhs=rhs, tol=function_tol(f),
        witness={"lambda": lam}, diagnostics=_diag(mu, f, cost=cost.name,
                                                   min_gap=float(gap.min())))


def rmlsi_prefactor(C: float, K: float, eta: float) -> float:
    return eta / (1.0 - C * (eta + K))


def verify_rMLSI(mu: GridMeasure, C: float, cost: SeparableCost, K: float, eta: float, f):
    """``Ent(e^f) <= eta/(1 - C(eta + K)) int c*(f'/eta) e^f dmu`` for K-semi-convex f."""
    if K < 0 or not eta > 0 or not eta + K < 1.0 / C:
        raise PreconditionError(f"need K >= 0, eta > 0, eta + K < 1/C (K={K}, eta={eta}, C={C})")
    f = _as_function(mu, f)
    cert = _require_certificate(f, cost, K)
    integrand = cost.conj(gradient(f).values / eta)
    lhs = entropy_of_exp(mu, f)
    rhs = rmlsi_prefactor(C, K, eta) * _weighted_with_exp(mu, integrand, f)
    return InequalityReport.build(
        "rmlsi", constant=C, lhs=lhs, rhs=rhs, tol=function_tol(f),
        witness={"K": K, "eta": eta, "certified_K": cert.K_min},
        diagnostics=_diag(mu, f, cost=cost.name, boundary_witness=cert.boundary_witness))


def verify_rLSI(mu: GridMeasure, C: float, K: float, f):
    """``Ent(e^f) <= 2C/(1 - KC)^2 int |f'|^2 e^f dmu`` for K-semi-convex f (quadratic cost)."""
    if not 0 <= K < 1.0 / C:
        raise PreconditionError(f"need 0 <= K < 1/C (K={K}, C={C})")
    f = _as_function(mu, f)
    cert = _require_certificate(f, QUADRATIC, K)
    g2 = gradient(f).values ** 2
    lhs = entropy_of_exp(mu, f)
    rhs = 2.0 * C / (1.0 - K * C) ** 2 * _weighted_with_exp(mu, g2, f)
    return InequalityReport.build(
        "rlsi", constant=C, lhs=lhs, rhs=rhs, tol=function_tol(f),
        witness={"K": K, "certified_K": cert.K_min}, diagnostics=_diag(mu, f))


def verify_bobkov_gotze(mu: GridMeasure, lam: float, f, cost: SeparableCost = QUADRATIC):
    """``int e^f dmu <= exp(int P^lam f dmu)`` with ``P^lam f = sup_y {f(y) - lam c(x-y)}``."""
    if not lam > 0:
        raise PreconditionError("lambda must be positive")
    f = _as_function(mu, f)
    sup = sup_convolution_lambda(f, lam, cost)
    log_lhs = math.log(integral(mu, np.exp(f.values - f.values.max()))) + f.values.max()
    log_rhs = integral(mu, sup)
    return InequalityReport.build(
        "bg", constant=1.0 / lam, lhs=math.exp(log_lhs), rhs=math.exp(log_rhs),
        tol=function_tol(f) * max(1.0, math.exp(log_rhs)),
        witness={"lambda": lam},
        diagnostics=_diag(mu, f, cost=cost.name, log_lhs=log_lhs, log_rhs=log_rhs))


def verify_LS1(mu: GridMeasure, C: float, lam: float, f, cost: SeparableCost = QUADRATIC):
    """``Ent(e^f) <= 1/(1 - lam C) int (P^lam f - f) dmu int e^f dmu``."""
    if not 0 < lam < 1.0 / C:
        raise PreconditionError(f"lambda={lam} outside (0, 1/C) with C={C}")
    f = _as_function(mu, f)
    sup = sup_convolution_lambda(f, lam, cost)
    mass = _weighted_with_exp(mu, np.ones(f.grid.n), f)
    lhs = entropy_of_exp(mu, f)
    rhs = integral(mu, sup.values - f.values) * mass / (1.0 - lam * C)
    return InequalityReport.build(
        "ls1", constant=C, lhs=lhs, rhs=rhs, tol=function_tol(f),
        witness={"lambda": lam}, diagnostics=_diag(mu, f, cost=cost.name))


def verify_LS2(mu: GridMeasure, C: float, K: float, eta: float, f,
               cost: SeparableCost = QUADRATIC):
    """``Ent(e^f) <= eta/(1 - C(eta+K)) int c*(f'/eta) dmu int e^f dmu`` for K-semi-concave f."""
    if K < 0 or not eta > 0 or not eta + K < 1.0 / C:
        raise PreconditionError(f"need K >= 0, eta > 0, eta + K < 1/C (K={K}, eta={eta}, C={C})")
    f = _as_function(mu, f)
    cert = _require_certificate(-f, cost, K, label="-f")
    integrand = cost.conj(gradient(f).values / eta)
    mass = _weighted_with_exp(mu, np.ones(f.grid.n), f)
    lhs = entropy_of_exp(mu, f)
    if np.any(~np.isfinite(integrand[mu.weights > 0])):
        rhs = math.inf
    else:
        rhs = rmlsi_prefactor(C, K, eta) * integral(mu, integrand) * mass
    return InequalityReport.build(
        "ls2", constant=C, lhs=lhs, rhs=rhs, tol=function_tol(f),
        witness={"K": K, "eta": eta, "certified_K": cert.K_min},
        diagnostics=_diag(mu, f, cost=cost.name))


def verify_poincare(mu: GridMeasure, C: float, f):
    """``Var(f) <= C int |f'|^2 dmu``."""
    f = _as_function(mu, f)
    lhs = variance(mu, f)
    rhs = C * integral(mu, gradient(f).values ** 2)
    return InequalityReport.build("poincare", constant=C, lhs=lhs, rhs=rhs,
                                  tol=function_tol(f), diagnostics=_diag(mu, f))


def verify_BLI(mu: GridMeasure, C: float, kappa: float, f):
    """``Ent(e^f) <= C kappa^2 K(kappa, C) int alpha21*(f'/kappa) e^f dmu``."""
    from telab.constants import bli_constant

    if not 0 < kappa < 2.0 / math.sqrt(C):
        raise PreconditionError(f"need 0 < kappa < 2/sqrt(C) (kappa={kappa}, C={C})")
    f = _as_function(mu, f)
    factor = C * kappa ** 2 * bli_constant(kappa, C)
    integrand = alpha21().conjugate(gradient(f).values / kappa)
    lhs = entropy_of_exp(mu, f)
    rhs = factor * _weighted_with_exp(mu, integrand, f)
    return InequalityReport.build(
        "bli", constant=factor, lhs=lhs, rhs=rhs, tol=function_tol(f),
        witness={"kappa": kappa}, diagnostics=_diag(mu, f))


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def herbst_bound(C: float, K: float, lam: float) -> float:
    return 2.0 * lam ** 2 * C / (1.0 - lam * K * C)


def herbst_check(mu: GridMeasure, C: float, K: float, f, lam: float):
    """``int e^{lam (f - int f)} dmu <= exp(2 lam^2 C / (1 - lam K C))``
    for 1-Lipschitz, K-semi-convex f (quadratic cost)."""
    f = _as_function(mu, f)
    if not lam > 0 or (K > 0 and not lam < 1.0 / (C * K)):
        raise PreconditionError(f"lambda={lam} outside (0, 1/(CK)) with C={C}, K={K}")
    lip = lipschitz_constant(f)
    if lip > 1.0 + semigroup_tol(f):
        raise PreconditionError(f"f is not 1-Lipschitz on the grid (Lip={lip:.6g})")
    cert = _require_certificate(f, QUADRATIC, K)
    log_lhs = log_laplace(mu, f, lam)
    log_rhs = herbst_bound(C, K, lam)
    return InequalityReport.build(
        "herbst", constant=C, lhs=_safe_exp(log_lhs), rhs=_safe_exp(log_rhs),
        tol=1e-9 * _safe_exp(log_rhs),
        witness={"lambda": lam, "K": K, "certified_K": cert.K_min, "lipschitz": lip},
        diagnostics=_diag(mu, log_lhs=log_lhs, log_rhs=log_rhs))


# ---------------------------------------------------------------------------
# products and concentration


def _product(mu) -> ProductMeasure:
    if isinstance(mu, ProductMeasure):
        if mu.dim != 2:
            raise ValueError("tensorization needs a two-fold product")
        return mu
    return ProductMeasure((mu, mu))


def tensorization_check(mu, f2, max_points: int = 101):
    """``Ent_{mu x mu}(e^f) <= int sum_i Ent_mu(e^{f_i}) d(mu x mu)``."""
    prod = _product(mu)
    if max(prod.shape) > max_points:
        raise PreconditionError(f"product grid {prod.shape} exceeds {max_points} points per axis")
    if callable(f2):
        X, Y = prod.mesh()
        f2 = f2(X, Y)
    F = np.asarray(f2, dtype=float)
    if F.shape != prod.shape:
        raise ValueError(f"function shape {F.shape} does not match product grid {prod.shape}")
    m1, m2 = prod.factors
    W = prod.weights
    lhs = entropy_of_exp(_Flat(W.ravel()), F.ravel())
    along_x = np.array([entropy_of_exp(m1, F[:, j]) for j in range(F.shape[1])])
    along_y = np.array([entropy_of_exp(m2, F[i, :]) for i in range(F.shape[0])])
    rhs = float(m2.weights @ along_x + m1.weights @ along_y)
    return InequalityReport.build(
        "tensor", constant=1.0, lhs=lhs, rhs=rhs, tol=1e-9 * (1.0 + abs(rhs)),
        diagnostics={"grid": [m.grid.spec() for m in prod.factors]})


class _Flat:
    def __init__(self, weights):
        self.weights = weights


def distance_to_set(prod: ProductMeasure, A: np.ndarray) -> np.ndarray:
    """Euclidean distance from every grid point to the nearest grid point of ``A``."""
    from scipy.ndimage import distance_transform_edt

    A = np.asarray(A, dtype=bool)
    if A.shape != prod.shape:
        raise ValueError(f"set mask shape {A.shape} does not match grid {prod.shape}")
    if not A.any():
        raise ValueError("the set A is empty")
    sampling = [f.grid.h for f in prod.factors]
    return distance_transform_edt(~A, sampling=sampling)


def concentration_r0(C: float, eps: float = 1e-9) -> float:
    """Smallest admissible ``r0`` with ``exp(-r0^2/(18 C)) < 1/2`` (plus ``eps``)."""
    return math.sqrt(18.0 * C * math.log(2.0)) + eps


def concentration_profile(mu_n, A, r_values: Iterable[float], C: float = 1.0):
    """``mu^n(A + r B_2) >= 1 - exp(-(r - r0)^2/(18 C))`` for each ``r >= r0``.

    Rows with ``r < r0`` are reported with a vacuous bound of 0.
    """
    prod = mu_n if isinstance(mu_n, ProductMeasure) else ProductMeasure((mu_n,))
    W = prod.weights
    A = np.asarray(A, dtype=bool)
    mass_A = float(W[A].sum())
    if mass_A < 0.5 - 1e-12:
        raise PreconditionError(f"mu^n(A) = {mass_A:.6g} < 1/2")
    dist = distance_to_set(prod, A)
    r0 = concentration_r0(C)
    rows = []
    for r in r_values:
        r = float(r)
        enlarged = float(W[dist <= r + 1e-12].sum())
        bound = 1.0 - math.exp(-((r - r0) ** 2) / (18.0 * C)) if r >= r0 else 0.0
        rows.append(InequalityReport.build(
            "conc", constant=C, lhs=bound, rhs=enlarged, tol=1e-12,
            witness={"r": r, "r0": r0, "mass_A": mass_A, "n": prod.dim},
            diagnostics={"vacuous": r < r0}))
    return rows


# ---------------------------------------------------------------------------
# perturbation and the pointwise Young bound


def perturbation_check(mu: GridMeasure, C: float, phi, cost: SeparableCost = QUADRATIC,
                       test_measures: TestFamily | None = None):
    """Transport-entropy for ``e^phi mu / Z`` at constant ``8 C e^{Osc(phi)}``."""
    family = test_measures if test_measures is not None else TestFamily()
    base = verify_Tc(mu, C, family, cost)
    bad = [r for r in base if not r.passed]
    if bad:
        raise PreconditionError(
            f"base measure fails T_c({C:g}) on {len(bad)} family members; "
            f"first witness {bad[0].witness}")
    phi = _as_function(mu, phi)
    tilted = tilt(mu, phi)
    constant = 8.0 * C * math.exp(osc(phi))
    reports = verify_Tc(tilted, constant, family, cost, name="perturb")
    for r in reports:
        r.diagnostics["osc_phi"] = osc(phi)
        r.diagnostics["base_C"] = C
    return reports


def lemma_easy_check(f: GridFunction, K: float, eta: float, cost: SeparableCost = QUADRATIC):
    """Pointwise ``f - Q^{K+eta} f <= eta c*(-f'/eta)`` on the interior grid."""
    if not eta > 0:
        raise PreconditionError("eta must be positive")
    cert = _require_certificate(f, cost, K)
    lhs = f.values - inf_convolution(f, K + eta, cost).values
    rhs = eta * cost.conj(-gradient(f).values / eta)
    inner = slice(1, f.grid.n - 1)
    lhs_i, rhs_i = lhs[inner], rhs[inner]
    finite = np.isfinite(rhs_i)
    if not finite.any():
        return InequalityReport.build("lemma_easy", constant=K + eta, lhs=float(lhs_i.max()),
                                      rhs=math.inf, tol=0.0, witness={"K": K, "eta": eta})
    gap = np.where(finite, rhs_i - lhs_i, np.inf)
    k = int(np.argmin(gap))
    x = float(f.grid.points[inner][k])
    return InequalityReport.build(
        "lemma_easy", constant=K + eta, lhs=float(lhs_i[k]), rhs=float(rhs_i[k]),
        tol=1e-12 * (1.0 + abs(float(lhs_i[k]))),
        witness={"K": K, "eta": eta, "x": x, "certified_K": cert.K_min},
        diagnostics={"grid": f.grid.spec(), "cost": cost.name})
