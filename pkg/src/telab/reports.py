"""Inequality reports and their machine-readable forms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = "1"

CSV_FIELDS = ("name", "constant", "lhs", "rhs", "slack", "pass")


class PreconditionError(ValueError):
    """A verifier was called outside the hypotheses of its inequality."""


def _clean(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    return value


@dataclass
class InequalityReport:
    """One instance of an inequality ``lhs <= rhs`` checked at tolerance ``tol``."""

    name: str
    constant: float
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tol: float
    witness: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name, *, constant, lhs, rhs, tol, witness=None, diagnostics=None):
        lhs, rhs = float(lhs), float(rhs)
        diagnostics = dict(diagnostics or {})
        if math.isinf(rhs) and rhs > 0:
            diagnostics["rhs_infinite"] = True
            slack, passed = math.inf, True
        else:
            slack = rhs - lhs
            passed = bool(slack >= -tol)
        return cls(name, float(constant), lhs, rhs, slack, passed, float(tol),
                   dict(witness or {}), diagnostics)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "constant": _clean(self.constant),
            "lhs": _clean(self.lhs),
            "rhs": _clean(self.rhs),
            "slack": _clean(self.slack),
            "pass": self.passed,
            "tol": _clean(self.tol),
            "witness": _clean(self.witness),
            "diagnostics": _clean(self.diagnostics),
        }


def reports_to_json(reports) -> str:
    return json.dumps([r.as_dict() for r in reports], indent=2, sort_keys=False) + "\n"


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        d = r.as_dict()
        w.writerow([d[k] if k != "pass" else str(d[k]).lower() for k in CSV_FIELDS])
    return buf.getvalue()


def all_passed(reports) -> bool:
    return all(r.passed for r in reports)


def emit_report(reports, json_path=None, csv_path=None) -> int:
    """Write JSON (and optionally CSV) summaries; returns the exit code."""
    reports = list(reports)
    text = reports_to_json(reports)
    if json_path is None:
        print(text, end="")
    else:
        with open(json_path, "w") as fh:
            fh.write(text)
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write(reports_to_csv(reports))
    return 0 if all_passed(reports) else 1
