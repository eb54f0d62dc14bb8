"""Coefficient fitting and fitness scoring.

Rewriting ``y = g(p / (1 + q))`` as ``g_inv(y) = p - g_inv(y) * q`` makes the
coefficients of both expressions linear, so one ordinary least squares solve
fits the whole model. Fitness is the coefficient of determination of the
refitted model on a validation slice, optionally penalized by model size when
selection runs on small datasets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expressions import TirExpr, apply_inverse, eval_term, eval_tir, size_of

__all__ = [
    "DesignMatrix",
    "FitResult",
    "assemble",
    "solve_ls",
    "fit_individual",
    "penalize",
    "penalty_active",
    "TermColumnCache",
    "INVALID_FITNESS",
]

# Rank-deficient solves use a minimum-norm solution with this relative
# singular-value cutoff.
RCOND = 1e-10

# Models whose design rows degrade beyond this fraction are rejected outright.
MAX_DROPPED_FRACTION = 0.10

INVALID_FITNESS = -math.inf


class TermColumnCache:
    """Memoizes term evaluations over one fixed sample matrix.

    The evolutionary search re-encounters the same terms constantly; caching
    their columns makes fitting cost scale with distinct terms, not children.
    """

    def __init__(self, X, max_entries: int = 50_000):
        self.X = np.asarray(X, dtype=float)
        self.max_entries = max_entries
        self._cols: dict[tuple, np.ndarray] = {}

    def col(self, term) -> np.ndarray:
        key = term.key
        col = self._cols.get(key)
        if col is None:
            col = eval_term(term, self.X)
            if len(self._cols) >= self.max_entries:
                self._cols.clear()
            self._cols[key] = col
        return col


@dataclass
class DesignMatrix:
    """Finite design rows for the linearized system.

    Columns are ``[1] ++ [f_j(r_j(x)) for p terms] ++ [-g_inv(y) * f_j(r_j(x))
    for q terms]``; the target is ``g_inv(y)``.
    """

    matrix: np.ndarray
    target: np.ndarray
    n_rows_total: int
    n_rows_dropped: int

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]


def assemble(m: TirExpr, X, y, p_columns=None, q_columns=None) -> DesignMatrix | None:
    """Build the least-squares system for ``m`` on ``(X, y)``.

    Rows with any non-finite entry (an inapplicable inverse target or a term
    evaluated outside its domain) are dropped. Returns None when more than
    10% of rows drop or fewer valid rows than columns remain.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    z = apply_inverse(m.g, y)

    cols = [np.ones(n)]
    for j, t in enumerate(m.p.terms):
        cols.append(p_columns[j] if p_columns is not None else eval_term(t, X))
    with np.errstate(all="ignore"):
        for j, t in enumerate(m.q.terms):
            col = q_columns[j] if q_columns is not None else eval_term(t, X)
            cols.append(-z * col)
    A = np.column_stack(cols)

    keep = np.isfinite(z) & np.all(np.isfinite(A), axis=1)
    n_dropped = int(n - keep.sum())
    if n_dropped > MAX_DROPPED_FRACTION * n:
        return None
    A, z = A[keep], z[keep]
    if A.shape[0] < A.shape[1]:
        return None
    return DesignMatrix(A, z, n, n_dropped)


def solve_ls(design: DesignMatrix) -> np.ndarray | None:
    """Least-squares weights for the design; None if the solver fails."""
    try:
        w, *_ = np.linalg.lstsq(design.matrix, design.target, rcond=RCOND)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(w)):
        return None
    return w


@dataclass
class FitResult:
    """Outcome of fitting one model.

    ``fitness`` is validation R squared; invalid models (failed solve,
    non-finite predictions, degenerate validation target) carry ``-inf`` so
    any valid model orders above them.
    """

    p_weights: tuple[float, ...] = ()
    q_weights: tuple[float, ...] = ()
    fitness: float = INVALID_FITNESS
    penalized_fitness: float = INVALID_FITNESS
    valid: bool = False


def penalize(fit: float, size: int, c: float) -> float:
    """Fitness reduced proportionally to expression size."""
    return fit - c * size


def penalty_active(n_samples: int, dim: int, rule: str) -> bool:
    """Whether size penalization applies under the given small-dataset rule."""
    if rule == "none":
        return False
    if rule == "samples":
        return n_samples < 100
    if rule == "dim":
        return dim < 6
    if rule == "points":
        return n_samples * dim < 1000
    raise ValueError(f"unknown penalty rule {rule!r}")


def _invalid(m: TirExpr) -> tuple[TirExpr, FitResult]:
    return m, FitResult()


def fit_individual(
    m: TirExpr,
    X_fit,
    y_fit,
    X_val,
    y_val,
    penalty_c: float = 0.0,
    fit_columns=None,
    val_columns=None,
) -> tuple[TirExpr, FitResult]:
    """Fit coefficients on the fit slice and score on the validation slice.

    Returns the reweighted model together with its result. ``fit_columns`` and
    ``val_columns`` optionally carry precomputed ``(p_cols, q_cols)`` pairs.
    """
    pc_fit, qc_fit = fit_columns if fit_columns is not None else (None, None)
    design = assemble(m, X_fit, y_fit, pc_fit, qc_fit)
    if design is None:
        return _invalid(m)
    w = solve_ls(design)
    if w is None:
        return _invalid(m)

    n_p = len(m.p) + 1
    fitted = m.with_weights(w[:n_p], w[n_p:])
    pc_val, qc_val = val_columns if val_columns is not None else (None, None)
    pred = eval_tir(fitted, np.asarray(X_val, dtype=float), pc_val, qc_val)
    y_val = np.asarray(y_val, dtype=float)
    if not np.all(np.isfinite(pred)):
        return _invalid(fitted)

    with np.errstate(all="ignore"):
        ss_tot = float(np.sum((y_val - y_val.mean()) ** 2))
        if ss_tot == 0.0:
            return _invalid(fitted)
        ss_res = float(np.sum((y_val - pred) ** 2))
        r2 = 1.0 - ss_res / ss_tot
    if not math.isfinite(r2):
        return _invalid(fitted)

    result = FitResult(
        p_weights=tuple(float(v) for v in w[:n_p]),
        q_weights=tuple(float(v) for v in w[n_p:]),
        fitness=r2,
        penalized_fitness=penalize(r2, size_of(fitted), penalty_c),
        valid=True,
    )
    return fitted, result
