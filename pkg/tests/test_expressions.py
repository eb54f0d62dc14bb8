import json
import math

import numpy as np
import pytest

from tirgp.expressions import (
    INVERTIBLE_FUNCS,
    ItExpr,
    ModelFormatError,
    Term,
    TirExpr,
    apply_inverse,
    apply_invertible,
    deserialize,
    eval_it,
    eval_sexpr,
    eval_term,
    eval_tir,
    parse_sexpr,
    serialize,
    serialize_text,
    size_of,
    to_text,
)

from conftest import random_tir


def tree_eval_term(t, x):
    """Independent slow evaluator: pure math module, explicit loops."""
    r = 1.0
    for i, k in enumerate(t.exponents):
        if k == 0:
            continue
        if x[i] == 0.0 and k < 0:
            return math.inf
        r *= x[i] ** k
    try:
        return {
            "id": lambda v: v,
            "tanh": math.tanh,
            "sin": math.sin,
            "cos": math.cos,
            "log": math.log,
            "exp": math.exp,
            "sqrt": math.sqrt,
        }[t.func](r)
    except (ValueError, OverflowError):
        return math.nan


def tree_eval_tir(m, x):
    num = (m.p.intercept or 0.0) + sum(
        w * tree_eval_term(t, x) for w, t in zip(m.p.weights, m.p.terms)
    )
    den = 1.0 + sum(w * tree_eval_term(t, x) for w, t in zip(m.q.weights, m.q.terms))
    if den == 0.0:
        return math.nan
    v = num / den
    try:
        return {
            "id": lambda u: u,
            "atan": math.atan,
            "tan": math.tan,
            "tanh": math.tanh,
            "log": math.log,
            "exp": math.exp,
            "sqrt": math.sqrt,
        }[m.g](v)
    except (ValueError, OverflowError):
        return math.nan


class TestEvalTerm:
    def test_sin_interaction(self):
        t = Term((2, -1), "sin")
        assert eval_term(t, np.array([2.0, 1.0])) == pytest.approx(
            math.sin(4.0), rel=1e-12
        )

    def test_all_zero_exponents_is_one(self):
        t = Term((0, 0), "id")
        assert eval_term(t, np.array([5.0, 7.0])) == 1.0

    def test_log_domain_violation_is_non_finite(self):
        t = Term((1,), "log")
        assert not math.isfinite(eval_term(t, np.array([-1.0])))

    def test_zero_base_negative_exponent_non_finite(self):
        t = Term((-1,), "id")
        assert not math.isfinite(eval_term(t, np.array([0.0])))

    def test_batch_matches_single(self, rng):
        t = Term((2, -1, 1), "tanh")
        X = rng.uniform(0.5, 2.0, size=(16, 3))
        batch = eval_term(t, X)
        singles = [eval_term(t, X[i]) for i in range(16)]
        assert np.array_equal(batch, np.array(singles))


class TestEvalIt:
    def test_intercept_plus_weighted_terms(self):
        e = ItExpr((Term((2, 1), "id"),), (3.0,), 2.0)
        assert eval_it(e, np.array([1.0, 1.0])) == 5.0

    def test_empty_sum_is_zero(self):
        e = ItExpr((), (), 0.0)
        assert eval_it(e, np.array([9.0, 9.0])) == 0.0

    def test_two_term_example(self):
        e = ItExpr(
            (Term((2, -1), "sin"), Term((-1, 1), "exp")), (1.0, 0.5), 0.5
        )
        expected = 0.5 + math.sin(1.0) + 0.5 * math.e
        assert eval_it(e, np.array([1.0, 1.0])) == pytest.approx(expected, rel=1e-12)


class TestEvalTir:
    def test_simple_ratio(self):
        m = TirExpr(
            "id",
            ItExpr((Term((1, 0), "id"),), (1.0,), 0.0),
            ItExpr((Term((0, 1), "id"),), (1.0,), None),
        )
        assert eval_tir(m, np.array([2.0, 1.0])) == 1.0

    def test_sqrt_rational(self):
        m = TirExpr(
            "sqrt",
            ItExpr((Term((2, 0, 0), "id"),), (1.0,), 0.0),
            ItExpr((Term((0, 2, -2), "id"),), (-1.0,), None),
        )
        got = eval_tir(m, np.array([3.0, 1.0, 2.0]))
        assert got == pytest.approx(3.0 / math.sqrt(0.75), rel=1e-12)

    def test_rational_identity_point(self):
        p = ItExpr(
            (Term((4, 0), "id"), Term((0, 4), "id"), Term((4, 4), "id")),
            (1.0, 1.0, 2.0),
            0.0,
        )
        q = ItExpr(
            (Term((4, 4), "id"), Term((4, 0), "id"), Term((0, 4), "id")),
            (1.0, 1.0, 1.0),
            None,
        )
        m = TirExpr("id", p, q)
        assert eval_tir(m, np.array([1.0, 1.0])) == 1.0

    def test_zero_denominator_non_finite(self):
        m = TirExpr(
            "id",
            ItExpr((Term((1,), "id"),), (1.0,), 0.0),
            ItExpr((Term((1,), "id"),), (1.0,), None),
        )
        assert not math.isfinite(eval_tir(m, np.array([-1.0])))

    def test_matches_tree_walking_evaluator(self, rng):
        for _ in range(200):
            m = random_tir(rng)
            d = len(m.p.terms[0].exponents)
            x = rng.uniform(0.3, 2.0, size=d)
            ours = eval_tir(m, x)
            ref = tree_eval_tir(m, list(x))
            if math.isfinite(ref) and math.isfinite(ours):
                assert ours == pytest.approx(ref, rel=1e-9, abs=1e-12)
            else:
                assert not (math.isfinite(ref) and math.isfinite(ours))


class TestInvertibleFns:
    # target grids inside each admissible range
    GRIDS = {
        "id": np.linspace(-20, 20, 101),
        "atan": np.linspace(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6, 101),
        "tan": np.linspace(-20, 20, 101),
        "tanh": np.linspace(-1 + 1e-9, 1 - 1e-9, 101),
        "log": np.linspace(-20, 20, 101),
        "exp": np.geomspace(1e-6, 1e6, 101),
        "sqrt": np.linspace(0, 1000, 101),
    }

    @pytest.mark.parametrize("g", INVERTIBLE_FUNCS)
    def test_g_ginv_roundtrip(self, g):
        y = self.GRIDS[g]
        back = apply_invertible(g, apply_inverse(g, y))
        assert np.allclose(back, y, rtol=1e-12, atol=1e-12)


class TestSizeOf:
    def test_constant_model(self):
        m = TirExpr("id", ItExpr((), (), 2.0), ItExpr())
        assert size_of(m) == 1

    def test_single_weighted_variable(self):
        # canonical rule counts the zero intercept and unit weight constants:
        # x0 (1) + weight (1) + mul (1) + intercept (1) + add (1)
        m = TirExpr("id", ItExpr((Term((1,), "id"),), (1.0,), 0.0), ItExpr())
        assert size_of(m) == 5

    def test_adding_variable_strictly_increases(self, rng):
        for _ in range(50):
            m = random_tir(rng, d=3)
            base = size_of(m)
            t = m.p.terms[0]
            zeros = [i for i, k in enumerate(t.exponents) if k == 0]
            if not zeros:
                continue
            exps = list(t.exponents)
            exps[zeros[0]] = 2
            grown = Term(tuple(exps), t.func)
            if grown.key in {u.key for u in m.p.terms}:
                continue
            terms = (grown,) + m.p.terms[1:]
            m2 = TirExpr(m.g, ItExpr(terms, m.p.weights, m.p.intercept), m.q)
            assert size_of(m2) > base

    def test_invariant_under_term_reordering(self, rng):
        for _ in range(50):
            m = random_tir(rng)
            if len(m.p) < 2:
                continue
            order = rng.permutation(len(m.p))
            p = ItExpr(
                tuple(m.p.terms[i] for i in order),
                tuple(m.p.weights[i] for i in order),
                m.p.intercept,
            )
            assert size_of(TirExpr(m.g, p, m.q)) == size_of(m)

    def test_division_and_g_nodes(self):
        p = ItExpr((Term((1,), "id"),), (1.0,), 0.0)
        q = ItExpr((Term((1,), "id"),), (1.0,), None)
        assert size_of(TirExpr("id", p, ItExpr())) == 5
        # q adds term (1) + weight + mul (2) + "1", "+", "/" (3)
        assert size_of(TirExpr("id", p, q)) == 5 + 3 + 3
        assert size_of(TirExpr("sqrt", p, q)) == 5 + 3 + 3 + 1


class TestToText:
    def test_constant_model(self):
        m = TirExpr("id", ItExpr((), (), 0.0), ItExpr())
        assert to_text(m) == "0.0"

    def test_simple_ratio_rendering(self):
        m = TirExpr(
            "id",
            ItExpr((Term((1, 0), "id"),), (1.0,), 0.0),
            ItExpr((Term((0, 1), "id"),), (1.0,), None),
        )
        assert to_text(m, "infix") == "(1.0*x0) / (1 + 1.0*x1)"

    def test_python_syntax_evaluates(self, rng):
        ns = {
            "sin": math.sin, "cos": math.cos, "log": math.log, "exp": math.exp,
            "sqrt": math.sqrt, "tanh": math.tanh, "tan": math.tan, "atan": math.atan,
        }
        for _ in range(50):
            m = random_tir(rng, d=2)
            x = rng.uniform(0.5, 2.0, size=2)
            expected = eval_tir(m, x)
            if not math.isfinite(expected):
                continue
            code = to_text(m, "python-syntax")
            got = eval(code, {"__builtins__": {}}, {**ns, "x0": x[0], "x1": x[1]})
            assert got == pytest.approx(expected, rel=1e-9)

    def test_sexpr_round_trip_evaluates_identically(self, rng):
        for _ in range(30):
            m = random_tir(rng)
            d = len(m.p.terms[0].exponents)
            tree = parse_sexpr(to_text(m, "s-expression"))
            X = rng.uniform(0.4, 2.0, size=(100, d))
            ours = eval_tir(m, X)
            theirs = np.array([eval_sexpr(tree, X[i]) for i in range(100)])
            finite = np.isfinite(ours)
            assert np.array_equal(finite, np.isfinite(theirs))
            assert np.array_equal(ours[finite], theirs[finite])

    def test_unknown_style_raises(self):
        m = TirExpr("id", ItExpr((), (), 0.0), ItExpr())
        with pytest.raises(ValueError):
            to_text(m, "latex")


class TestSerialization:
    def test_round_trip_identity(self, rng):
        for _ in range(100):
            m = random_tir(rng)
            assert deserialize(serialize(m)) == m
            assert deserialize(serialize_text(m)) == m

    def test_round_trip_preserves_eval_exactly(self, rng):
        for _ in range(30):
            m = random_tir(rng)
            d = len(m.p.terms[0].exponents)
            m2 = deserialize(json.loads(json.dumps(serialize(m))))
            X = rng.uniform(0.4, 2.0, size=(50, d))
            a, b = eval_tir(m, X), eval_tir(m2, X)
            finite = np.isfinite(a)
            assert np.array_equal(a[finite], b[finite])

    def test_empty_q_serializes_to_explicit_list(self):
        m = TirExpr("id", ItExpr((Term((1,), "id"),), (1.0,), 0.0), ItExpr())
        doc = serialize(m)
        assert doc["q"]["terms"] == []

    def test_tenth_survives_bit_exactly(self):
        m = TirExpr("id", ItExpr((Term((1,), "id"),), (0.1,), 0.3), ItExpr())
        m2 = deserialize(json.loads(json.dumps(serialize(m))))
        assert m2.p.weights[0] == 0.1 and m2.p.intercept == 0.3

    @pytest.mark.parametrize(
        "doc",
        [
            "not json {",
            '{"g": "id"}',
            '{"g": "nope", "p": {"terms": []}, "q": {"terms": []}}',
            '{"g": "id", "p": {"terms": [{"exponents": [1.5], "func": "id", "weight": 1}]}, "q": {"terms": []}}',
            '{"g": "id", "p": {"terms": [{"func": "id", "weight": 1}]}, "q": {"terms": []}}',
            '{"g": "id", "p": {"terms": [{"exponents": [1], "func": "id", "weight": 1}, {"exponents": [1], "func": "id", "weight": 2}]}, "q": {"terms": []}}',
        ],
    )
    def test_malformed_documents_rejected(self, doc):
        with pytest.raises(ModelFormatError):
            deserialize(doc)


class TestInvariantsOfTypes:
    def test_duplicate_terms_forbidden(self):
        t = Term((1, 0), "sin")
        with pytest.raises(ValueError):
            ItExpr((t, Term((1, 0), "sin")), (1.0, 2.0), 0.0)

    def test_weight_length_mismatch(self):
        with pytest.raises(ValueError):
            ItExpr((Term((1,), "id"),), (), 0.0)

    def test_q_with_intercept_rejected(self):
        with pytest.raises(ValueError):
            TirExpr("id", ItExpr((Term((1,), "id"),), (1.0,), 0.0),
                    ItExpr((Term((2,), "id"),), (1.0,), 1.0))

    def test_unknown_tags_rejected(self):
        with pytest.raises(ValueError):
            Term((1,), "cbrt")
        with pytest.raises(ValueError):
            TirExpr("square", ItExpr((), (), 0.0), ItExpr())
