"""Run configuration: schema validation, defaults and input loading."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping, Optional

from jsonschema import Draft202012Validator

from telab.costs import UnknownCostError, make_builtin
from telab.measures import Grid1D, GridFunction, GridMeasure, discretize, read_function_csv

SCHEMA_VERSION = "v1"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    path = resources.files("telab") / "schemas" / SCHEMA_VERSION / f"{name}.schema.json"
    return json.loads(path.read_text())


def _validate(instance, schema_name: str, label: str) -> None:
    validator = Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = ".".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{label}.{where}: {err.message}" if where != "<root>"
                         else f"{label}: {err.message}")
        raise ConfigError("; ".join(lines))


@dataclass(frozen=True)
class RunConfig:
    command: str
    mu: Optional[str] = None
    nu: Optional[str] = None
    f: Optional[str] = None
    phi: Optional[str] = None
    input: Optional[str] = None
    cost: str = "quadratic"
    C: float = 1.0
    seed: int = 0
    grid: Optional[dict] = None
    output: Optional[str] = None
    csv: Optional[str] = None
    tol: dict = field(default_factory=dict)
    ineq: Optional[str] = None
    op: Optional[str] = None
    mode: str = "gradient"
    which: Optional[str] = None
    lam: Optional[float] = None
    t: Optional[float] = None
    K: Optional[float] = None
    eta: Optional[float] = None
    kappa: Optional[float] = None
    v: Optional[float] = None
    n_product: int = 1

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


REQUIRED = {
    "transport": ("mu", "nu"),
    "semigroup": ("f", "op"),
    "certify": ("f",),
    "verify": ("ineq", "mu"),
    "constants": ("which",),
    "chain": ("mu",),
    "report": ("input",),
}


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a raw mapping against the run-config schema and fill defaults."""
    raw = {k: v for k, v in dict(data).items() if v is not None}
    _validate(raw, "run_config", "config")
    missing = [k for k in REQUIRED[raw["command"]] if k not in raw]
    if missing:
        raise ConfigError(f"config: command {raw['command']!r} requires "
                          + ", ".join(f"'{k}'" for k in missing))
    cfg = RunConfig(**raw)
    try:
        make_builtin(cfg.cost)
    except UnknownCostError as exc:
        raise ConfigError(f"config.cost: {exc}") from None
    return cfg


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config file must hold a JSON object")
    return data


def load_measure(path: str, grid_override: Optional[dict] = None) -> GridMeasure:
    with open(path) as fh:
        spec = json.load(fh)
    _validate(spec, "measure", path)
    g = grid_override or spec["grid"]
    return discretize(spec["density"], Grid1D(float(g["lo"]), float(g["hi"]), int(g["n"])))


def load_function(path: str, grid: Optional[Grid1D] = None) -> GridFunction:
    f = read_function_csv(path)
    if grid is not None and f.grid != grid:
        raise ConfigError(f"{path}: function grid {f.grid.spec()} does not match "
                          f"measure grid {grid.spec()}")
    return f


def validate_reports(data) -> None:
    _validate(data, "report", "report")


def worker_count() -> int:
    """Worker bound from ``TEL_THREADS`` (default 1)."""
    value = os.environ.get("TEL_THREADS", "1")
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"TEL_THREADS must be a positive integer, got {value!r}") from None
    if n < 1:
        raise ConfigError(f"TEL_THREADS must be a positive integer, got {value!r}")
    return n


def ordered_map(fn, items):
    """``list(map(fn, items))``, fanned out over ``TEL_THREADS`` workers; order is kept."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
