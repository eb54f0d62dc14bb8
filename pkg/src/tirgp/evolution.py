"""Evolutionary search over transformation-interaction-rational models.

Generational replacement: every generation breeds a full population of
children from size-2 tournaments, applying one-point crossover with
probability ``pc`` and a single uniformly chosen mutation with probability
``pm``. Children are interval-filtered and refitted; the best penalized
fitness seen anywhere in the run is the answer.

Every operator preserves the structural invariants: the numerator keeps at
least one term, total term count stays within the budget, no expression holds
duplicate terms, and exponents stay inside the configured range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .expressions import (
    INVERTIBLE_FUNCS,
    TRANSFORM_FUNCS,
    ItExpr,
    Term,
    TirExpr,
)
from .fitting import FitResult, TermColumnCache, fit_individual, penalty_active
from .intervals import DomainBox, Interval, admissible_g, filter_terms, image_of_term

__all__ = [
    "SearchConfig",
    "Individual",
    "EXP_RANGES",
    "compute_budget",
    "random_term",
    "random_it",
    "init_population",
    "tournament2",
    "crossover",
    "mutate",
    "evolve_run",
]

# Exponent ranges the grid search chooses among.
EXP_RANGES = ((-5, 5), (0, 5), (-2, 2), (0, 2), (-1, 1), (0, 1))

# Overlapping fraction shared by the fit and validation slices.
OVERLAP_FRACTION = 0.9

_RETRIES = 30


@dataclass(frozen=True)
class SearchConfig:
    """Hyperparameters for one evolutionary run."""

    pop_size: int = 1000
    generations: int = 500
    pc: float = 0.30
    pm: float = 0.70
    transform_set: tuple[str, ...] = TRANSFORM_FUNCS
    invertible_set: tuple[str, ...] = INVERTIBLE_FUNCS
    budget: int | None = None
    exp_range: tuple[int, int] = (-5, 5)
    penalty_rule: str = "none"
    penalty_c: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.pc <= 1.0 and 0.0 <= self.pm <= 1.0):
            raise ValueError("pc and pm must lie in [0, 1]")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be at least 1")
        lo, hi = self.exp_range
        if lo > hi or (lo == 0 and hi == 0):
            raise ValueError("exponent range must contain a nonzero exponent")
        if self.penalty_rule not in ("none", "samples", "dim", "points"):
            raise ValueError(f"unknown penalty rule {self.penalty_rule!r}")
        unknown = set(self.transform_set) - set(TRANSFORM_FUNCS)
        if unknown:
            raise ValueError(f"unknown transformation functions: {sorted(unknown)}")
        unknown = set(self.invertible_set) - set(INVERTIBLE_FUNCS)
        if unknown:
            raise ValueError(f"unknown invertible functions: {sorted(unknown)}")


@dataclass
class Individual:
    expr: TirExpr
    fit: FitResult = field(default_factory=FitResult)


def compute_budget(n_samples: int) -> int:
    """Term budget from the 10-samples-per-term rule of thumb, clipped to [5, 15]."""
    return max(5, min(15, n_samples // 10))


def random_term(d: int, exp_range, transform_set, rng) -> Term | None:
    """Draw variables without replacement until a dummy stop symbol comes up.

    With ``r`` variables still unpicked the stop probability is ``1/(r+1)``,
    so an immediate stop (probability ``1/(d+1)``) yields a null term. Picked
    variables get a uniform exponent from the range; a drawn zero leaves the
    variable out, preserving single occurrence per term.
    """
    lo, hi = exp_range
    remaining = list(range(d))
    exponents = [0] * d
    picked_any = False
    while remaining:
        j = int(rng.integers(0, len(remaining) + 1))
        if j == len(remaining):
            break
        var = remaining.pop(j)
        exponents[var] = int(rng.integers(lo, hi + 1))
        picked_any = True
    if not picked_any:
        return None
    func = transform_set[int(rng.integers(0, len(transform_set)))]
    return Term(tuple(exponents), func)


def _constant_term(d: int) -> Term:
    return Term((0,) * d, "id")


def random_it(
    d: int,
    exp_range,
    transform_set,
    max_terms: int,
    nonempty: bool,
    rng,
    intercept: float | None = None,
) -> ItExpr:
    """Accumulate distinct random terms until a null draw or the budget is hit."""
    terms: list[Term] = []
    seen: set[tuple] = set()
    attempts = 0
    while len(terms) < max_terms and attempts < _RETRIES * max(1, max_terms):
        attempts += 1
        t = random_term(d, exp_range, transform_set, rng)
        if t is None:
            if terms or not nonempty:
                break
            continue
        if t.key in seen:
            continue
        terms.append(t)
        seen.add(t.key)
    if nonempty and not terms:
        terms.append(_constant_term(d))
    return ItExpr(tuple(terms), (1.0,) * len(terms), intercept)


def _filtered(m: TirExpr, box: DomainBox, budget: int, ctx, rng) -> TirExpr:
    """Interval-filter both expressions, regenerating the numerator if it empties."""
    p = filter_terms(m.p, box)
    q = filter_terms(m.q, box)
    attempts = 0
    while not p.terms:
        attempts += 1
        if attempts > _RETRIES:
            p = ItExpr((_constant_term(len(box)),), (1.0,), m.p.intercept)
            break
        cand = random_it(
            len(box),
            ctx.exp_range,
            ctx.transform_set,
            max(1, budget - len(q)),
            True,
            rng,
            intercept=m.p.intercept if m.p.intercept is not None else 0.0,
        )
        p = filter_terms(cand, box)
    return TirExpr(m.g, p, q)


def init_population(cfg: SearchConfig, d: int, y_range: Interval, box: DomainBox, rng):
    """Random individuals: uniform admissible outer function, nonempty filtered p."""
    admissible = admissible_g(cfg.invertible_set, y_range)
    if not admissible:
        raise RuntimeError("no invertible function is admissible for the target range")
    budget = cfg.budget
    pop = []
    for _ in range(cfg.pop_size):
        g = admissible[int(rng.integers(0, len(admissible)))]
        p = random_it(d, cfg.exp_range, cfg.transform_set, budget, True, rng, 0.0)
        q = random_it(
            d, cfg.exp_range, cfg.transform_set, budget - len(p), False, rng, None
        )
        expr = _filtered(TirExpr(g, p, q), box, budget, cfg, rng)
        pop.append(Individual(expr))
    return pop


def tournament2(pop, rng) -> Individual:
    """Best of two uniform draws with replacement; ties keep the first draw."""
    a = pop[int(rng.integers(0, len(pop)))]
    b = pop[int(rng.integers(0, len(pop)))]
    return b if b.fit.penalized_fitness > a.fit.penalized_fitness else a


def _dedup(terms, weights):
    seen, out_t, out_w = set(), [], []
    for t, w in zip(terms, weights):
        if t.key in seen:
            continue
        seen.add(t.key)
        out_t.append(t)
        out_w.append(w)
    return out_t, out_w


def _recombine(e1: ItExpr, e2: ItExpr, rng) -> tuple[list[Term], list[float]]:
    """One-point list crossover with a shared cut, so identical parents breed true."""
    cut = int(rng.integers(0, min(len(e1), len(e2)) + 1))
    terms = list(e1.terms[:cut]) + list(e2.terms[cut:])
    weights = list(e1.weights[:cut]) + list(e2.weights[cut:])
    return _dedup(terms, weights)


def crossover(a: TirExpr, b: TirExpr, budget: int, rng) -> TirExpr:
    """Recombine at a uniform point of the first parent.

    The point falls on the outer function or on one of the parent's terms:
    at the outer function the child takes g and p from the first parent and q
    from the second; inside p (or q) that expression is recombined with the
    counterpart of the second parent while everything else stays.
    """
    n_points = 1 + a.n_terms
    point = int(rng.integers(0, n_points))
    if point == 0:
        keep = max(0, budget - len(a.p))
        q_terms, q_weights = _dedup(b.q.terms[:keep], b.q.weights[:keep])
        return TirExpr(a.g, a.p, ItExpr(tuple(q_terms), tuple(q_weights), None))
    if point <= len(a.p):
        terms, weights = _recombine(a.p, b.p, rng)
        keep = max(1, budget - len(a.q))
        terms, weights = terms[:keep], weights[:keep]
        if not terms:
            return a
        p = ItExpr(tuple(terms), tuple(weights), a.p.intercept)
        return TirExpr(a.g, p, a.q)
    terms, weights = _recombine(a.q, b.q, rng)
    keep = max(0, budget - len(a.p))
    terms, weights = terms[:keep], weights[:keep]
    return TirExpr(a.g, a.p, ItExpr(tuple(terms), tuple(weights), None))


# --- mutation ----------------------------------------------------------------


def _exprs(m: TirExpr):
    return (("p", m.p), ("q", m.q))


def _rebuild(m: TirExpr, which: str, e: ItExpr) -> TirExpr:
    return TirExpr(m.g, e if which == "p" else m.p, e if which == "q" else m.q)


def _replace_term(e: ItExpr, idx: int, t: Term) -> ItExpr | None:
    keys = {u.key for j, u in enumerate(e.terms) if j != idx}
    if t.key in keys:
        return None
    terms = list(e.terms)
    terms[idx] = t
    return ItExpr(tuple(terms), e.weights, e.intercept)


def _occurrences(m: TirExpr):
    """All (expr name, term index, variable) slots with a nonzero exponent."""
    occ = []
    for which, e in _exprs(m):
        for j, t in enumerate(e.terms):
            for i in t.active:
                occ.append((which, j, i))
    return occ


def _nonzero_choices(exp_range) -> list[int]:
    lo, hi = exp_range
    return [k for k in range(lo, hi + 1) if k != 0]


def _mut_insert(m: TirExpr, ctx, rng) -> TirExpr | None:
    modes = [0, 1] if rng.random() < 0.5 else [1, 0]
    d = len(m.p.terms[0].exponents) if m.p.terms else len(m.q.terms[0].exponents)
    for mode in modes:
        if mode == 0:
            # grow one term by a currently inactive variable
            slots = [
                (which, j)
                for which, e in _exprs(m)
                for j, t in enumerate(e.terms)
                if len(t.active) < d
            ]
            if not slots:
                continue
            for _ in range(_RETRIES):
                which, j = slots[int(rng.integers(0, len(slots)))]
                e = m.p if which == "p" else m.q
                t = e.terms[j]
                inactive = [i for i in range(d) if t.exponents[i] == 0]
                var = inactive[int(rng.integers(0, len(inactive)))]
                choices = _nonzero_choices(ctx.exp_range)
                k = choices[int(rng.integers(0, len(choices)))]
                exps = list(t.exponents)
                exps[var] = k
                new_e = _replace_term(e, j, Term(tuple(exps), t.func))
                if new_e is not None:
                    return _rebuild(m, which, new_e)
            continue
        # append a whole new random term to p or q
        for _ in range(_RETRIES):
            which = "p" if rng.random() < 0.5 else "q"
            e = m.p if which == "p" else m.q
            t = random_term(d, ctx.exp_range, ctx.transform_set, rng)
            if t is None or t.key in {u.key for u in e.terms}:
                continue
            new_e = ItExpr(e.terms + (t,), e.weights + (1.0,), e.intercept)
            return _rebuild(m, which, new_e)
    return None


def _mut_remove(m: TirExpr, rng) -> TirExpr | None:
    modes = [0, 1] if rng.random() < 0.5 else [1, 0]
    for mode in modes:
        if mode == 0:
            occ = _occurrences(m)
            if not occ:
                continue
            for _ in range(_RETRIES):
                which, j, i = occ[int(rng.integers(0, len(occ)))]
                e = m.p if which == "p" else m.q
                t = e.terms[j]
                exps = list(t.exponents)
                exps[i] = 0
                new_e = _replace_term(e, j, Term(tuple(exps), t.func))
                if new_e is not None:
                    return _rebuild(m, which, new_e)
            continue
        # drop a whole term, never emptying the numerator
        candidates = [("q", j) for j in range(len(m.q))]
        if len(m.p) >= 2:
            candidates += [("p", j) for j in range(len(m.p))]
        if not candidates:
            continue
        which, j = candidates[int(rng.integers(0, len(candidates)))]
        e = m.p if which == "p" else m.q
        terms = e.terms[:j] + e.terms[j + 1 :]
        weights = e.weights[:j] + e.weights[j + 1 :]
        return _rebuild(m, which, ItExpr(terms, weights, e.intercept))
    return None


def _mut_change_var(m: TirExpr, rng) -> TirExpr | None:
    occ = _occurrences(m)
    if not occ:
        return None
    for _ in range(_RETRIES):
        which, j, i = occ[int(rng.integers(0, len(occ)))]
        e = m.p if which == "p" else m.q
        t = e.terms[j]
        inactive = [v for v in range(len(t.exponents)) if t.exponents[v] == 0]
        if not inactive:
            continue
        var = inactive[int(rng.integers(0, len(inactive)))]
        exps = list(t.exponents)
        exps[var], exps[i] = exps[i], 0
        new_e = _replace_term(e, j, Term(tuple(exps), t.func))
        if new_e is not None:
            return _rebuild(m, which, new_e)
    return None


def _mut_change_exponent(m: TirExpr, ctx, rng) -> TirExpr | None:
    occ = _occurrences(m)
    if not occ:
        return None
    lo, hi = ctx.exp_range
    for _ in range(_RETRIES):
        which, j, i = occ[int(rng.integers(0, len(occ)))]
        e = m.p if which == "p" else m.q
        t = e.terms[j]
        exps = list(t.exponents)
        exps[i] = int(rng.integers(lo, hi + 1))
        new_e = _replace_term(e, j, Term(tuple(exps), t.func))
        if new_e is not None:
            return _rebuild(m, which, new_e)
    return None


def _mut_change_function(m: TirExpr, ctx, rng) -> TirExpr | None:
    n_slots = m.n_terms + 1
    for _ in range(_RETRIES):
        slot = int(rng.integers(0, n_slots))
        if slot == m.n_terms:
            g = ctx.invertible_set[int(rng.integers(0, len(ctx.invertible_set)))]
            return TirExpr(g, m.p, m.q)
        which = "p" if slot < len(m.p) else "q"
        e = m.p if which == "p" else m.q
        j = slot if which == "p" else slot - len(m.p)
        func = ctx.transform_set[int(rng.integers(0, len(ctx.transform_set)))]
        new_e = _replace_term(e, j, Term(e.terms[j].exponents, func))
        if new_e is not None:
            return _rebuild(m, which, new_e)
    return None


def mutate(m: TirExpr, ctx: SearchConfig, rng) -> TirExpr:
    """Apply one uniformly chosen mutation operator.

    Insertion leaves the choice set once the term budget is reached.
    Infeasible choices fall back to redrawing among the remaining operators,
    with exponent replacement as the last resort; a fully degenerate
    expression comes back unchanged.
    """
    ops = ["insert", "remove", "change_var", "change_exponent", "change_function"]
    if m.n_terms >= ctx.budget:
        ops.remove("insert")
    while ops:
        name = ops.pop(int(rng.integers(0, len(ops))))
        if name == "insert":
            out = _mut_insert(m, ctx, rng)
        elif name == "remove":
            out = _mut_remove(m, rng)
        elif name == "change_var":
            out = _mut_change_var(m, rng)
        elif name == "change_exponent":
            out = _mut_change_exponent(m, ctx, rng)
        else:
            out = _mut_change_function(m, ctx, rng)
        if out is not None:
            return out
    out = _mut_change_exponent(m, ctx, rng)
    return out if out is not None else m


# --- main loop ----------------------------------------------------------------


def overlap_bounds(n: int, frac: float = OVERLAP_FRACTION) -> tuple[int, int]:
    """(m, start) such that the fit slice is rows [0, m) and the validation
    slice rows [start, n), each holding ceil(frac * n) rows."""
    m = math.ceil(frac * n)
    return m, n - m


def _child_rng(seed: int, gen: int, idx: int):
    # Deterministic per-child stream: results do not depend on scheduling.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(gen, idx)))


class _Fitter:
    """Fits individuals against fixed fit/validation slices with column reuse."""

    def __init__(self, X, y, penalty_c: float):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        n = self.X.shape[0]
        m, start = overlap_bounds(n)
        self.fit_rows = slice(0, m)
        self.val_rows = slice(start, n)
        self.cache = TermColumnCache(self.X)
        self.penalty_c = penalty_c

    def __call__(self, expr: TirExpr) -> Individual:
        p_cols = [self.cache.col(t) for t in expr.p.terms]
        q_cols = [self.cache.col(t) for t in expr.q.terms]
        fit_cols = (
            [c[self.fit_rows] for c in p_cols],
            [c[self.fit_rows] for c in q_cols],
        )
        val_cols = (
            [c[self.val_rows] for c in p_cols],
            [c[self.val_rows] for c in q_cols],
        )
        fitted, result = fit_individual(
            expr,
            self.X[self.fit_rows],
            self.y[self.fit_rows],
            self.X[self.val_rows],
            self.y[self.val_rows],
            penalty_c=self.penalty_c,
            fit_columns=fit_cols,
            val_columns=val_cols,
        )
        return Individual(fitted, result)


def _better(cand: Individual, best: Individual | None) -> bool:
    return best is None or cand.fit.penalized_fitness > best.fit.penalized_fitness


def evolve_run(
    cfg: SearchConfig, X, y, box: DomainBox | None = None
) -> Individual:
    """Run the full evolutionary search and return the best individual seen.

    The given rows are used as-is: the first 90% fit the coefficients and the
    last 90% score the fitness, so callers should pass shuffled data.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two samples")

    budget = cfg.budget if cfg.budget is not None else compute_budget(n)
    if box is None:
        box = DomainBox.from_data(X)
    y_range = Interval(float(y.min()), float(y.max()))
    admissible = tuple(admissible_g(cfg.invertible_set, y_range))
    ctx = replace(cfg, budget=budget, invertible_set=admissible)

    penalty_c = (
        cfg.penalty_c if penalty_active(n, d, cfg.penalty_rule) else 0.0
    )
    fitter = _Fitter(X, y, penalty_c)

    rng_init = _child_rng(cfg.seed, 0, 0)
    pop = [
        fitter(ind.expr)
        for ind in init_population(ctx, d, y_range, box, rng_init)
    ]
    if not any(ind.fit.valid for ind in pop):
        raise RuntimeError(
            "initial population could not be fitted: every candidate was invalid "
            "on this dataset (check target range and variable domains)"
        )

    best: Individual | None = None
    for ind in pop:
        if _better(ind, best):
            best = ind

    for gen in range(1, cfg.generations + 1):
        children = []
        for i in range(cfg.pop_size):
            rng = _child_rng(cfg.seed, gen, i)
            parent = tournament2(pop, rng)
            child = parent.expr
            if rng.random() < cfg.pc:
                mate = tournament2(pop, rng)
                child = crossover(child, mate.expr, budget, rng)
            if rng.random() < cfg.pm:
                child = mutate(child, ctx, rng)
            child = _filtered(child, box, budget, ctx, rng)
            ind = fitter(child)
            children.append(ind)
            if _better(ind, best):
                best = ind
        pop = children

    return best
