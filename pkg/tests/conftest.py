import numpy as np
import pytest

from tirgp.expressions import (
    INVERTIBLE_FUNCS,
    TRANSFORM_FUNCS,
    ItExpr,
    Term,
    TirExpr,
)


def random_tir(rng, d=None, max_terms=4, transforms=TRANSFORM_FUNCS):
    """Random structurally valid model for property tests."""
    d = d if d is not None else int(rng.integers(1, 5))

    def rand_terms(n):
        terms, seen = [], set()
        while len(terms) < n:
            exps = tuple(int(k) for k in rng.integers(-3, 4, size=d))
            func = transforms[int(rng.integers(0, len(transforms)))]
            if (exps, func) in seen:
                continue
            seen.add((exps, func))
            terms.append(Term(exps, func))
        return tuple(terms)

    n_p = int(rng.integers(1, max_terms + 1))
    n_q = int(rng.integers(0, max_terms + 1))
    p = ItExpr(rand_terms(n_p), tuple(rng.normal(size=n_p)), float(rng.normal()))
    q = ItExpr(rand_terms(n_q), tuple(rng.normal(size=n_q)), None)
    g = INVERTIBLE_FUNCS[int(rng.integers(0, len(INVERTIBLE_FUNCS)))]
    return TirExpr(g, p, q)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
