"""Symbolic regression over transformation-interaction-rational expressions."""

from .estimator import TIRRegressor
from .evolution import SearchConfig, compute_budget, evolve_run
from .expressions import (
    ItExpr,
    Term,
    TirExpr,
    deserialize,
    eval_it,
    eval_term,
    eval_tir,
    serialize,
    size_of,
    to_text,
)
from .intervals import DomainBox, Interval

__version__ = "0.1.0"

__all__ = [
    "TIRRegressor",
    "SearchConfig",
    "compute_budget",
    "evolve_run",
    "Term",
    "ItExpr",
    "TirExpr",
    "eval_term",
    "eval_it",
    "eval_tir",
    "size_of",
    "to_text",
    "serialize",
    "deserialize",
    "Interval",
    "DomainBox",
    "__version__",
]
