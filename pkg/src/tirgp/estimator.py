"""Scikit-learn style regressor over the evolutionary engine."""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .datasets import SUBSAMPLE_CAP, Dataset, grid_search
from .evolution import SearchConfig, evolve_run
from .expressions import eval_tir, serialize, size_of, to_text
from .intervals import DomainBox, Interval

__all__ = ["TIRRegressor"]


class TIRRegressor(RegressorMixin, BaseEstimator):
    """Symbolic regression with transformation-interaction-rational models.

    Evolves models of the form ``g(p(x) / (1 + q(x)))`` where ``g`` is an
    invertible function and ``p``, ``q`` are weighted sums of transformed
    variable interactions; coefficients are fitted by least squares on the
    inverted target at every fitness evaluation.

    Parameters
    ----------
    pop_size : int, default=1000
        Individuals per generation.
    generations : int, default=500
        Number of generations of the main search.
    crossover_prob : float, default=0.30
        Probability a child is bred by one-point crossover.
    mutation_prob : float, default=0.70
        Probability a child is mutated.
    transform_funcs : sequence of str, optional
        Transformations allowed inside terms; default is all seven
        (id, tanh, sin, cos, log, exp, sqrt).
    invertible_funcs : sequence of str, optional
        Candidate outer functions; inadmissible ones (inverse undefined on
        the target range) are pruned before the search. Default is all seven
        (id, atan, tan, tanh, log, exp, sqrt).
    budget : int, optional
        Maximum total number of terms in one model. Default derives from the
        sample count as max(5, min(15, n // 10)).
    exp_range : pair of int, default=(-5, 5)
        Inclusive range the integer exponents are drawn from.
    grid_search : bool, default=False
        Choose ``exp_range`` by k-fold cross-validation over the six standard
        ranges before the main run.
    folds : int, default=5
        Folds for the grid search.
    cv_pop_size, cv_generations : int
        Reduced search size used inside the grid search.
    penalty_rule : {"none", "samples", "dim", "points"}, default="none"
        When to subtract a size penalty from the selection fitness:
        never, n < 100, d < 6, or n * d < 1000.
    penalty_c : float, default=0.01
        Size penalty constant.
    max_samples : int, default=10000
        Training rows are uniformly subsampled down to this cap.
    domains : sequence of (lo, hi), optional
        Per-variable domains for validity filtering; default is the
        column-wise min/max of the training data.
    random_state : int, optional
        Seed for the whole fit; identical seeds reproduce identical models.

    Attributes
    ----------
    model_ : TirExpr
        Best model found.
    expression_ : str
        Infix rendering of ``model_``.
    model_document_ : dict
        JSON-compatible serialization of ``model_``.
    fitness_ : float
        Validation R squared of the best model during the search.
    size_ : int
        Node count of the best model.
    evolve_seconds_ : float
        Wall-clock time of the main evolutionary run (grid search excluded).

    Examples
    --------
    >>> reg = TIRRegressor(pop_size=100, generations=20, random_state=0)
    >>> reg.fit(X_train, y_train).predict(X_test)  # doctest: +SKIP
    """

    def __init__(
        self,
        pop_size=1000,
        generations=500,
        crossover_prob=0.30,
        mutation_prob=0.70,
        transform_funcs=None,
        invertible_funcs=None,
        budget=None,
        exp_range=(-5, 5),
        grid_search=False,
        folds=5,
        cv_pop_size=100,
        cv_generations=20,
        penalty_rule="none",
        penalty_c=0.01,
        max_samples=SUBSAMPLE_CAP,
        domains=None,
        random_state=None,
    ):
        self.pop_size = pop_size
        self.generations = generations
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.transform_funcs = transform_funcs
        self.invertible_funcs = invertible_funcs
        self.budget = budget
        self.exp_range = exp_range
        self.grid_search = grid_search
        self.folds = folds
        self.cv_pop_size = cv_pop_size
        self.cv_generations = cv_generations
        self.penalty_rule = penalty_rule
        self.penalty_c = penalty_c
        self.max_samples = max_samples
        self.domains = domains
        self.random_state = random_state

    def _config(self, seed: int) -> SearchConfig:
        kwargs = dict(
            pop_size=self.pop_size,
            generations=self.generations,
            pc=self.crossover_prob,
            pm=self.mutation_prob,
            budget=self.budget,
            exp_range=tuple(self.exp_range),
            penalty_rule=self.penalty_rule,
            penalty_c=self.penalty_c,
            seed=seed,
        )
        if self.transform_funcs is not None:
            kwargs["transform_set"] = tuple(self.transform_funcs)
        if self.invertible_funcs is not None:
            kwargs["invertible_set"] = tuple(self.invertible_funcs)
        return SearchConfig(**kwargs)

    def fit(self, X, y):
        """Run the evolutionary search on the given training data."""
        X, y = check_X_y(X, y, y_numeric=True)
        y = np.asarray(y, dtype=float)

        entropy = (
            self.random_state
            if self.random_state is not None
            else np.random.SeedSequence().entropy
        )
        ss = np.random.SeedSequence(entropy)
        s_shuffle, s_grid, s_evolve = (
            int(child.generate_state(1)[0]) for child in ss.spawn(3)
        )

        # Shuffle once: the overlapping fit/validation slices are positional,
        # and the subsample cap takes the head of the shuffled order.
        perm = np.random.default_rng(s_shuffle).permutation(X.shape[0])
        keep = perm[: min(len(perm), self.max_samples)]
        Xs, ys = X[keep], y[keep]

        cfg = self._config(s_evolve)
        if self.grid_search:
            cfg = grid_search(
                cfg,
                Dataset(Xs, ys, [f"x{i}" for i in range(X.shape[1])]),
                folds=self.folds,
                seed=s_grid,
                cv_pop_size=self.cv_pop_size,
                cv_generations=self.cv_generations,
            )

        box = None
        if self.domains is not None:
            if len(self.domains) != X.shape[1]:
                raise ValueError("domains must give one (lo, hi) pair per feature")
            box = DomainBox(tuple(Interval(lo, hi) for lo, hi in self.domains))

        start = time.perf_counter()
        best = evolve_run(cfg, Xs, ys, box=box)
        self.evolve_seconds_ = time.perf_counter() - start

        self.n_features_in_ = X.shape[1]
        self.model_ = best.expr
        self.fitness_ = best.fit.fitness
        self.expression_ = to_text(best.expr, "infix")
        self.model_document_ = serialize(best.expr)
        self.size_ = size_of(best.expr)
        self.exp_range_ = cfg.exp_range
        return self

    def predict(self, X):
        """Evaluate the fitted model; out-of-domain rows come back non-finite."""
        check_is_fitted(self, "model_")
        X = check_array(X, ensure_min_samples=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return np.asarray(eval_tir(self.model_, X), dtype=float).reshape(X.shape[0])
