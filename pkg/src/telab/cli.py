"""Command-line front end: ``telab <subcommand> [options]``."""

from __future__ import annotations

import csv
import io
import json
import math
import sys

import click
import numpy as np

from telab import verifiers as V
from telab.config import (
    ConfigError,
    RunConfig,
    load_config_file,
    load_function,
    load_measure,
    ordered_map,
    parse_config,
    validate_reports,
)
from telab.constants import (
    ROUNDED_SUPV_BOUND,
    T_of_v,
    bli_constant,
    ell,
    ell_at_T,
    phi_min,
    phi_min_numeric,
    rmlsi_cases,
    run_chain,
    smoothed_functions,
    sup_v_functional,
)
from telab.costs import cost_from_id
from telab.families import TestFamily
from telab.measures import GridFunction, ProductMeasure
from telab.reports import (
    InequalityReport,
    PreconditionError,
    _clean,
    emit_report,
    reports_to_csv,
)
from telab.semigroup import (
    inf_convolution,
    midpoint_defect,
    semiconvexity_defect,
    sup_convolution,
    sup_convolution_lambda,
)
from telab.transport import transport_cost

INEQUALITIES = ("tc", "iclsi", "rmlsi", "rlsi", "bg", "ls1", "ls2", "poincare", "bli",
                "herbst", "tensor", "perturb", "conc")


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _write_text(text: str, path) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _resolve(ctx_obj, command: str, **options) -> RunConfig:
    data = {}
    if ctx_obj and ctx_obj.get("config"):
        data.update(load_config_file(ctx_obj["config"]))
    data.update({k: v for k, v in options.items() if v is not None})
    data["command"] = command
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None


def _grid_override(grid):
    if grid is None:
        return None
    lo, hi, n = grid
    return {"lo": lo, "hi": hi, "n": n}


# ---------------------------------------------------------------------------
# verify: one builder per inequality


def _functions(cfg: RunConfig, mu, family: TestFamily):
    if cfg.f is not None:
        return [(load_function(cfg.f, mu.grid), {"source": cfg.f})]
    return [(f, {"index": i}) for i, f in enumerate(family.functions(mu.grid))]


def _smoothed(cfg: RunConfig, mu, family: TestFamily, cost):
    if cfg.f is not None:
        return [(load_function(cfg.f, mu.grid), {"source": cfg.f})]
    return smoothed_functions(family, mu.grid, cost)


def _tag(report, desc):
    report.witness.update(desc)
    return report


def _lambda_grid(cfg: RunConfig):
    return [cfg.lam] if cfg.lam is not None else [k / (10.0 * cfg.C) for k in range(1, 10)]


def _k_eta_cases(cfg: RunConfig, f, cost):
    if cfg.K is not None:
        eta = cfg.eta if cfg.eta is not None else (1.0 / cfg.C - cfg.K) / 2.0
        return [(cfg.K, eta)]
    cases, _ = rmlsi_cases(f, cost, cfg.C, [k / cfg.C for k in (0.0, 0.2, 0.4)])
    return cases


def build_reports(cfg: RunConfig):
    """All reports requested by a ``verify`` configuration, in deterministic order."""
    mu = load_measure(cfg.mu, cfg.grid)
    cost = cost_from_id(cfg.cost)
    family = TestFamily(seed=cfg.seed)
    C = cfg.C
    ineq = cfg.ineq

    if ineq == "tc":
        rel = cfg.tol.get("tc_relative", V.TC_RELATIVE_TOL)
        pairs = family.measures(mu)
        return [r for chunk in ordered_map(lambda p: V.verify_Tc(mu, C, [p], cost, rel), pairs)
                for r in chunk]
    if ineq == "perturb":
        phi = (load_function(cfg.phi, mu.grid) if cfg.phi
               else GridFunction.from_callable(mu.grid, lambda x: 0.5 * np.sin(x)))
        return V.perturbation_check(mu, C, phi, cost, family)
    if ineq == "conc":
        prod = ProductMeasure((mu,) * cfg.n_product)
        median = mu.points[int(np.searchsorted(np.cumsum(mu.weights), 0.5))]
        A = prod.mesh()[0] <= median if cfg.n_product == 2 else mu.points <= median
        span = mu.grid.hi - mu.grid.lo
        return V.concentration_profile(prod, A, np.linspace(0.0, span / 2.0, 17), C)
    if ineq == "tensor":
        return [_tag(V.tensorization_check(mu, F), {"index": i})
                for i, F in enumerate(family.product_functions(mu.grid, 10))]

    cases = []
    if ineq in ("iclsi", "ls1"):
        fn = V.verify_ICLSI if ineq == "iclsi" else V.verify_LS1
        for f, d in _functions(cfg, mu, family):
            cases += [(lambda f=f, d=d, lam=lam: _tag(fn(mu, C, lam, f, cost), d))
                      for lam in _lambda_grid(cfg)]
    elif ineq == "bg":
        lam = cfg.lam if cfg.lam is not None else 1.0 / C
        cases = [(lambda f=f, d=d: _tag(V.verify_bobkov_gotze(mu, lam, f, cost), d))
                 for f, d in _functions(cfg, mu, family)]
    elif ineq == "poincare":
        cases = [(lambda f=f, d=d: _tag(V.verify_poincare(mu, C, f), d))
                 for f, d in _functions(cfg, mu, family)]
    elif ineq == "bli":
        kappa = cfg.kappa if cfg.kappa is not None else 1.0 / math.sqrt(C)
        cases = [(lambda f=f, d=d: _tag(V.verify_BLI(mu, C, kappa, f), d))
                 for f, d in _functions(cfg, mu, family)]
    elif ineq == "rmlsi":
        for f, d in _smoothed(cfg, mu, family, cost):
            cases += [(lambda f=f, d=d, K=K, eta=eta: _tag(V.verify_rMLSI(mu, C, cost, K, eta, f), d))
                      for K, eta in _k_eta_cases(cfg, f, cost)]
    elif ineq == "rlsi":
        quad = cost_from_id("quadratic")
        for f, d in _smoothed(cfg, mu, family, quad):
            Ks = [cfg.K] if cfg.K is not None else [K for K, _ in _k_eta_cases(cfg, f, quad)]
            cases += [(lambda f=f, d=d, K=K: _tag(V.verify_rLSI(mu, C, K, f), d)) for K in Ks]
    elif ineq == "ls2":
        for g, d in _smoothed(cfg, mu, family, cost):
            f = -g
            cases += [(lambda f=f, d=d, K=K, eta=eta: _tag(V.verify_LS2(mu, C, K, eta, f, cost), d))
                      for K, eta in _k_eta_cases(cfg, g, cost)]
    elif ineq == "herbst":
        quad = cost_from_id("quadratic")
        funcs = ([(load_function(cfg.f, mu.grid), {"source": cfg.f})] if cfg.f else
                 [(f, {"index": i}) for i, f in enumerate(family.lipschitz_functions(mu.grid))])
        for f, d in funcs:
            K = cfg.K if cfg.K is not None else semiconvexity_defect(f, quad).K_min
            lam = cfg.lam if cfg.lam is not None else (1.0 if K == 0 else min(1.0, 0.5 / (C * K)))
            cases.append(lambda f=f, d=d, K=K, lam=lam: _tag(V.herbst_check(mu, C, K, f, lam), d))
    else:  # pragma: no cover - schema restricts the choices
        raise ConfigError(f"unknown inequality {ineq!r}")
    return ordered_map(lambda case: case(), cases)


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON run config; command-line options override its keys.")
@click.pass_context
def main(ctx, config_path):
    """Transport-entropy inequality lab."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = config_path


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


@main.command()
@click.option("--cost", help="Cost id, e.g. quadratic, power:1.5, alpha21, scaled:quadratic:2.0.")
@click.option("--nu", type=click.Path(exists=True, dir_okay=False))
@click.option("--mu", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False))
@click.pass_obj
def transport(obj, cost, nu, mu, output):
    """Optimal transport cost between two grid measures."""
    cfg = _resolve(obj, "transport", cost=cost, nu=nu, mu=mu, output=output)
    try:
        res = transport_cost(load_measure(cfg.nu), load_measure(cfg.mu), cost_from_id(cfg.cost))
    except (ValueError, ConfigError) as exc:
        _fail(exc)
    _write_text(_dump(res.as_dict()), cfg.output)


@main.command()
@click.option("--op", type=click.Choice(["inf", "sup", "hopf-lax"]))
@click.option("--lambda", "lam", type=float, help="Convolution weight (inf, sup).")
@click.option("--t", type=float, help="Time for the Hopf-Lax semigroup.")
@click.option("--cost")
@click.option("--f", type=click.Path(exists=True, dir_okay=False), help="CSV with point,value.")
@click.option("--output", type=click.Path(dir_okay=False))
@click.pass_obj
def semigroup(obj, op, lam, t, cost, f, output):
    """Inf/sup-convolution of a grid function; writes point,value CSV."""
    cfg = _resolve(obj, "semigroup", op=op, lam=lam, t=t, cost=cost, f=f, output=output)
    c = cost_from_id(cfg.cost)
    fn = load_function(cfg.f)
    if cfg.op == "hopf-lax":
        if cfg.t is None:
            raise click.UsageError("--op hopf-lax needs --t")
        g = sup_convolution(fn, cfg.t, c)
    else:
        if cfg.lam is None:
            raise click.UsageError(f"--op {cfg.op} needs --lambda")
        g = (inf_convolution if cfg.op == "inf" else sup_convolution_lambda)(fn, cfg.lam, c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("point", "value"))
    for x, y in zip(g.points, g.values):
        w.writerow((repr(float(x)), repr(float(y))))
    _write_text(buf.getvalue(), cfg.output)


@main.command()
@click.option("--f", type=click.Path(exists=True, dir_okay=False))
@click.option("--cost")
@click.option("--mode", type=click.Choice(["gradient", "midpoint"]))
@click.option("--output", type=click.Path(dir_okay=False))
@click.pass_obj
def certify(obj, f, cost, mode, output):
    """Semi-convexity certificate (minimal K and witness pair)."""
    cfg = _resolve(obj, "certify", f=f, cost=cost, mode=mode, output=output)
    fn = load_function(cfg.f)
    c = cost_from_id(cfg.cost)
    cert = semiconvexity_defect(fn, c) if cfg.mode == "gradient" else midpoint_defect(fn, c)
    _write_text(_dump({"cost": cfg.cost, **cert.as_dict()}), cfg.output)


@main.command()
@click.option("--ineq", type=click.Choice(INEQUALITIES))
@click.option("--mu", type=click.Path(exists=True, dir_okay=False))
@click.option("--cost")
@click.option("--C", "C", type=float)
@click.option("--seed", type=int)
@click.option("--f", type=click.Path(exists=True, dir_okay=False),
              help="Single test function (CSV); default is the seeded family.")
@click.option("--phi", type=click.Path(exists=True, dir_okay=False), help="Perturbation (CSV).")
@click.option("--lambda", "lam", type=float)
@click.option("--K", "K", type=float)
@click.option("--eta", type=float)
@click.option("--kappa", type=float)
@click.option("--n", "n_product", type=click.IntRange(1, 2), help="Product order for conc.")
@click.option("--grid", type=(float, float, int), help="Grid override: LO HI N.")
@click.option("--output", type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
@click.pass_obj
def verify(obj, ineq, mu, cost, C, seed, f, phi, lam, K, eta, kappa, n_product, grid,
           output, csv_path):
    """Run an inequality verifier; exit code 0 iff every report passes."""
    cfg = _resolve(obj, "verify", ineq=ineq, mu=mu, cost=cost, C=C, seed=seed, f=f, phi=phi,
                   lam=lam, K=K, eta=eta, kappa=kappa, n_product=n_product,
                   grid=_grid_override(grid), output=output, csv=csv_path)
    try:
        reports = build_reports(cfg)
    except (PreconditionError, ConfigError, ValueError) as exc:
        _fail(exc)
    sys.exit(emit_report(reports, cfg.output, cfg.csv))


@main.command()
@click.option("--which", type=click.Choice(["supv", "phimin", "bli", "ell"]))
@click.option("--lambda", "lam", type=float)
@click.option("--C", "C", type=float)
@click.option("--kappa", type=float)
@click.option("--eta", type=float)
@click.option("--v", type=float)
@click.option("--t", type=float)
@click.option("--output", type=click.Path(dir_okay=False))
@click.pass_obj
def constants(obj, which, lam, C, kappa, eta, v, t, output):
    """Scalar constants."""
    cfg = _resolve(obj, "constants", which=which, lam=lam, C=C, kappa=kappa, eta=eta, v=v,
                   t=t, output=output)
    try:
        if cfg.which == "supv":
            v_star, g_star = sup_v_functional()
            out = {"v_star": v_star, "g_star": g_star, "inverse": 1.0 / g_star,
                   "rounded_bound": ROUNDED_SUPV_BOUND}
        elif cfg.which == "phimin":
            lam_ = cfg.lam if cfg.lam is not None else 1.0
            t_min, value = phi_min(lam_, cfg.C)
            t_num, v_num = phi_min_numeric(lam_, cfg.C)
            out = {"lambda": lam_, "C": cfg.C, "t_min": t_min, "phi_min": value,
                   "t_numeric": t_num, "phi_numeric": v_num}
        elif cfg.which == "bli":
            kappa_ = cfg.kappa if cfg.kappa is not None else 1.0
            out = {"kappa": kappa_, "C": cfg.C, "K": bli_constant(kappa_, cfg.C)}
        else:
            v_ = cfg.v if cfg.v is not None else 0.5
            eta_ = cfg.eta if cfg.eta is not None else 1.0
            T = T_of_v(v_)
            out = {"v": v_, "eta": eta_, "T": T, "ell_at_T": ell_at_T(eta_, v_)}
            if cfg.t is not None:
                out["t"] = cfg.t
                out["ell"] = ell(cfg.t, eta_, v_)
    except ValueError as exc:
        _fail(exc)
    _write_text(_dump(out), cfg.output)


@main.command()
@click.option("--mu", type=click.Path(exists=True, dir_okay=False))
@click.option("--cost")
@click.option("--C", "C", type=float)
@click.option("--seed", type=int)
@click.option("--grid", type=(float, float, int), help="Grid override: LO HI N.")
@click.option("--output", type=click.Path(dir_okay=False))
@click.pass_obj
def chain(obj, mu, cost, C, seed, grid, output):
    """Transport-entropy, ICLSI and restricted MLSI sweeps at one constant."""
    cfg = _resolve(obj, "chain", mu=mu, cost=cost, C=C, seed=seed,
                   grid=_grid_override(grid), output=output)
    measure = load_measure(cfg.mu, cfg.grid)
    try:
        rep = run_chain(measure, cost_from_id(cfg.cost), cfg.C, cfg.seed,
                        mu_spec={"path": cfg.mu, "grid": measure.grid.spec()})
    except PreconditionError as exc:
        _fail(exc)
    _write_text(_dump(rep.as_dict()), cfg.output)
    sys.exit(0 if rep.passed else 1)


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
@click.pass_obj
def report(obj, input_path, csv_path):
    """Validate a JSON report array and write its CSV summary."""
    cfg = _resolve(obj, "report", input=input_path, csv=csv_path)
    with open(cfg.input) as fh:
        data = json.load(fh)
    try:
        validate_reports(data)
    except ConfigError as exc:
        _fail(exc)
    # float() parses the "inf"/"nan" strings used for non-finite values
    num = float
    reports = [InequalityReport(d["name"], num(d["constant"]), num(d["lhs"]), num(d["rhs"]),
                                num(d["slack"]), bool(d["pass"]), num(d["tol"]),
                                d["witness"], d["diagnostics"]) for d in data]
    _write_text(reports_to_csv(reports), cfg.csv)
    sys.exit(0 if all(r.passed for r in reports) else 1)


if __name__ == "__main__":  # pragma: no cover
    main()
