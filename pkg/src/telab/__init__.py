"""Numerical lab for transport-entropy and restricted log-Sobolev inequalities."""

from telab.costs import AlphaCost, SeparableCost, cost_from_id, make_builtin
from telab.families import TestFamily
from telab.measures import Grid1D, GridFunction, GridMeasure, ProductMeasure, gaussian
from telab.reports import InequalityReport, PreconditionError
from telab.transport import transport_cost

__version__ = "0.1.0"

__all__ = [
    "AlphaCost",
    "Grid1D",
    "GridFunction",
    "GridMeasure",
    "InequalityReport",
    "PreconditionError",
    "ProductMeasure",
    "SeparableCost",
    "TestFamily",
    "cost_from_id",
    "gaussian",
    "make_builtin",
    "transport_cost",
]
