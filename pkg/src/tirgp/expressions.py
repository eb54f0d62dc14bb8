"""Transformation-interaction-rational expressions.

The model family implemented here is ``g(p(x) / (1 + q(x)))`` where ``g`` is
an invertible univariate function and ``p``, ``q`` are affine combinations of
transformed interactions: each term applies one univariate transformation to a
product of input variables raised to integer exponents.

Evaluation is vectorized and never raises on domain violations; out-of-domain
inputs propagate as non-finite values (nan/inf) so batch evaluation can finish
and callers can reject the offending model afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TRANSFORM_FUNCS",
    "INVERTIBLE_FUNCS",
    "INVERSE_OF",
    "Term",
    "ItExpr",
    "TirExpr",
    "eval_term",
    "eval_it",
    "eval_tir",
    "apply_invertible",
    "apply_inverse",
    "size_of",
    "to_text",
    "serialize",
    "serialize_text",
    "deserialize",
    "parse_sexpr",
    "eval_sexpr",
    "ModelFormatError",
]

# Unary transformations allowed inside terms.
TRANSFORM_FUNCS = ("id", "tanh", "sin", "cos", "log", "exp", "sqrt")

# Outer functions; each must have a computable inverse for target linearization.
INVERTIBLE_FUNCS = ("id", "atan", "tan", "tanh", "log", "exp", "sqrt")

INVERSE_OF = {
    "id": "id",
    "atan": "tan",
    "tan": "atan",
    "tanh": "atanh",
    "log": "exp",
    "exp": "log",
    "sqrt": "square",
}

_UNARY = {
    "id": lambda v: v,
    "tanh": np.tanh,
    "sin": np.sin,
    "cos": np.cos,
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "atan": np.arctan,
    "tan": np.tan,
    "atanh": np.arctanh,
    "square": np.square,
}


class ModelFormatError(ValueError):
    """Raised when a serialized model document cannot be decoded."""


@dataclass(frozen=True)
class Term:
    """One summand: ``func`` applied to ``prod_i x_i ** exponents[i]``.

    ``exponents`` has one integer per input variable; a zero exponent means
    the variable does not participate. An all-zero term evaluates its
    interaction to the constant 1.
    """

    exponents: tuple[int, ...]
    func: str = "id"

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(k) for k in self.exponents))
        if self.func not in TRANSFORM_FUNCS:
            raise ValueError(f"unknown transformation function: {self.func!r}")

    @property
    def key(self) -> tuple:
        return (self.exponents, self.func)

    @property
    def active(self) -> tuple[int, ...]:
        """Indices of variables with a nonzero exponent."""
        return tuple(i for i, k in enumerate(self.exponents) if k != 0)


@dataclass(frozen=True)
class ItExpr:
    """Weighted sum of terms plus an optional intercept.

    The intercept is ``None`` for denominator expressions, which already sit
    on top of the constant 1 of the rational form.
    """

    terms: tuple[Term, ...] = ()
    weights: tuple[float, ...] = ()
    intercept: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.terms) != len(self.weights):
            raise ValueError(
                f"{len(self.terms)} terms but {len(self.weights)} weights"
            )
        seen = set()
        for t in self.terms:
            if t.key in seen:
                raise ValueError(f"duplicate term {t.key}")
            seen.add(t.key)
        dims = {len(t.exponents) for t in self.terms}
        if len(dims) > 1:
            raise ValueError("terms disagree on input dimension")

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class TirExpr:
    """Full model ``g(p / (1 + q))``.

    The search keeps ``p`` nonempty so the trivial solution ``q = -1`` cannot
    absorb the fit; a bare intercept-only ``p`` is still representable here
    because the degenerate constant model needs it.
    """

    g: str = "id"
    p: ItExpr = field(default_factory=ItExpr)
    q: ItExpr = field(default_factory=ItExpr)

    def __post_init__(self):
        if self.g not in INVERTIBLE_FUNCS:
            raise ValueError(f"unknown invertible function: {self.g!r}")
        if self.q.intercept is not None:
            raise ValueError("denominator expression must not carry an intercept")

    @property
    def n_terms(self) -> int:
        return len(self.p) + len(self.q)

    def with_weights(self, p_weights, q_weights) -> "TirExpr":
        """Copy with new coefficients; p_weights is [intercept, w_1, ...]."""
        p_weights = [float(w) for w in p_weights]
        q_weights = [float(w) for w in q_weights]
        if len(p_weights) != len(self.p) + 1 or len(q_weights) != len(self.q):
            raise ValueError("weight vector lengths do not match term counts")
        p = ItExpr(self.p.terms, tuple(p_weights[1:]), p_weights[0])
        q = ItExpr(self.q.terms, tuple(q_weights), None)
        return TirExpr(self.g, p, q)


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def eval_term(t: Term, x) -> np.ndarray | float:
    """Evaluate ``func(prod x_i**k_i)`` at a point or a batch of points.

    Domain violations (log of non-positive interaction, zero raised to a
    negative power, ...) come back as nan/inf rather than raising.
    """
    X, single = _as_batch(x)
    with np.errstate(all="ignore"):
        r = np.ones(X.shape[0])
        for i in t.active:
            r = r * np.power(X[:, i], t.exponents[i])
        out = _UNARY[t.func](r)
    return float(out[0]) if single else out


def eval_it(e: ItExpr, x, columns=None) -> np.ndarray | float:
    """Intercept plus weighted sum of term evaluations.

    ``columns`` optionally supplies precomputed term columns (same order as
    ``e.terms``); the accumulation order is fixed so results are reproducible
    bit for bit regardless of how the columns were obtained.
    """
    X, single = _as_batch(x)
    acc = np.full(X.shape[0], e.intercept if e.intercept is not None else 0.0)
    with np.errstate(all="ignore"):
        for j, (w, t) in enumerate(zip(e.weights, e.terms)):
            col = columns[j] if columns is not None else eval_term(t, X)
            acc = acc + w * col
    return float(acc[0]) if single else acc


def eval_tir(m: TirExpr, x, p_columns=None, q_columns=None) -> np.ndarray | float:
    """Evaluate ``g(p / (1 + q))``; a zero denominator yields a non-finite value."""
    X, single = _as_batch(x)
    num = eval_it(m.p, X, p_columns)
    with np.errstate(all="ignore"):
        if len(m.q):
            den = 1.0 + eval_it(m.q, X, q_columns)
            out = num / den
        else:
            out = num
        out = apply_invertible(m.g, out)
    return float(out[0]) if single else out


def apply_invertible(g: str, v):
    """Apply the outer function ``g`` elementwise."""
    with np.errstate(all="ignore"):
        return _UNARY[g](v)


def apply_inverse(g: str, y):
    """Apply ``g``'s inverse elementwise; out-of-domain values become non-finite."""
    with np.errstate(all="ignore"):
        return _UNARY[INVERSE_OF[g]](np.asarray(y, dtype=float))


# --- model size -------------------------------------------------------------
#
# Canonical node count, used by the penalized fitness and the run reports.
# The tree it counts is the literal rendering of the model:
#   term:      one node per variable with nonzero exponent, plus one power
#              node per exponent with |k| > 1, plus (n_active - 1)
#              multiplications; an all-zero interaction is the constant 1
#              (one node); non-id transformations add one node.
#   weighted:  each term adds its weight constant and the multiplication
#              joining them; terms are joined by (m - 1) additions; a present
#              intercept adds a constant and an addition (even when 0.0).
#   rational:  a nonempty q adds the denominator constant 1, the addition and
#              the division (3 nodes); g != id adds one node.
# An ItExpr with no terms collapses to its intercept constant (one node).


def _term_size(t: Term) -> int:
    active = t.active
    if not active:
        base = 1
    else:
        base = sum(1 + (1 if abs(t.exponents[i]) > 1 else 0) for i in active)
        base += len(active) - 1
    return base + (1 if t.func != "id" else 0)


def _it_size(e: ItExpr, with_intercept: bool) -> int:
    if not e.terms:
        return 1 if with_intercept else 0
    s = sum(_term_size(t) + 2 for t in e.terms)
    s += len(e.terms) - 1
    if with_intercept and e.intercept is not None:
        s += 2
    return s


def size_of(m: TirExpr) -> int:
    """Node count of the canonical expression tree (see comment above)."""
    s = _it_size(m.p, with_intercept=True)
    if len(m.q):
        s += _it_size(m.q, with_intercept=False) + 3
    if m.g != "id":
        s += 1
    return s


# --- text rendering ----------------------------------------------------------

_STYLES = ("infix", "python-syntax", "s-expression")


def _fmt(v: float) -> str:
    return repr(float(v))


def _term_text(t: Term, power: str) -> str:
    parts = []
    for i in t.active:
        k = t.exponents[i]
        if k == 1:
            parts.append(f"x{i}")
        elif power == "^":
            parts.append(f"x{i}^{k}")
        else:
            parts.append(f"x{i}**({k})")
    body = "*".join(parts) if parts else "1"
    return body if t.func == "id" else f"{t.func}({body})"


def _it_text(e: ItExpr, power: str) -> str:
    pieces = []
    if e.intercept is not None and (e.intercept != 0.0 or not e.terms):
        pieces.append(_fmt(e.intercept))
    for w, t in zip(e.weights, e.terms):
        pieces.append(f"{_fmt(w)}*{_term_text(t, power)}")
    if not pieces:
        return "0.0"
    return " + ".join(pieces)


def _tir_text(m: TirExpr, power: str) -> str:
    num = _it_text(m.p, power)
    if len(m.q):
        body = f"({num}) / (1 + {_it_text(m.q, power)})"
    else:
        body = num
    return body if m.g == "id" else f"{m.g}({body})"


def _term_sexpr(t: Term) -> str:
    factors = [f"(pow x{i} {t.exponents[i]})" for i in t.active]
    if not factors:
        body = "1.0"
    elif len(factors) == 1:
        body = factors[0]
    else:
        body = f"(mul {' '.join(factors)})"
    return body if t.func == "id" else f"({t.func} {body})"


def _it_sexpr(e: ItExpr) -> str:
    intercept = e.intercept if e.intercept is not None else 0.0
    pieces = [_fmt(intercept)]
    pieces += [f"(mul {_fmt(w)} {_term_sexpr(t)})" for w, t in zip(e.weights, e.terms)]
    if len(pieces) == 1:
        return pieces[0]
    return f"(add {' '.join(pieces)})"


def _tir_sexpr(m: TirExpr) -> str:
    num = _it_sexpr(m.p)
    if len(m.q):
        body = f"(div {num} (add 1.0 {_it_sexpr(m.q)}))"
    else:
        body = num
    return body if m.g == "id" else f"({m.g} {body})"


def to_text(m: TirExpr, style: str = "infix") -> str:
    """Render the model as text.

    ``infix`` writes powers with ``^``; ``python-syntax`` is evaluable Python
    (``**`` powers, math-style function names); ``s-expression`` is the fully
    parenthesized prefix form accepted by :func:`parse_sexpr`.
    """
    if style == "infix":
        return _tir_text(m, "^")
    if style == "python-syntax":
        return _tir_text(m, "**")
    if style == "s-expression":
        return _tir_sexpr(m)
    raise ValueError(f"unknown style {style!r}; expected one of {_STYLES}")


# --- s-expression round trip --------------------------------------------------


def parse_sexpr(text: str):
    """Parse an s-expression into nested lists of ops, variables and numbers."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise ModelFormatError("empty s-expression")
    pos = 0

    def atom(tok: str):
        if tok.startswith("x") and tok[1:].isdigit():
            return tok
        try:
            return int(tok)
        except ValueError:
            pass
        try:
            return float(tok)
        except ValueError:
            return tok

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            node = []
            while pos < len(tokens) and tokens[pos] != ")":
                node.append(read())
            if pos >= len(tokens):
                raise ModelFormatError("unbalanced s-expression")
            pos += 1
            return node
        if tok == ")":
            raise ModelFormatError("unexpected ')' in s-expression")
        return atom(tok)

    tree = read()
    if pos != len(tokens):
        raise ModelFormatError("trailing tokens after s-expression")
    return tree


def eval_sexpr(tree, x) -> float:
    """Evaluate a parsed s-expression at one point.

    Uses the same float64 primitives and left-to-right folds as the native
    evaluator, so a rendered model evaluates to bit-identical results.
    """
    x = np.asarray(x, dtype=float)

    def ev(node):
        if isinstance(node, str):
            return x[int(node[1:])]
        if isinstance(node, (int, float)):
            return np.float64(node)
        op, *args = node
        with np.errstate(all="ignore"):
            if op == "add":
                acc = ev(args[0])
                for a in args[1:]:
                    acc = acc + ev(a)
                return acc
            if op == "mul":
                acc = ev(args[0])
                for a in args[1:]:
                    acc = acc * ev(a)
                return acc
            if op == "div":
                return ev(args[0]) / ev(args[1])
            if op == "pow":
                return np.power(ev(args[0]), args[1])
            if op in _UNARY:
                return _UNARY[op](ev(args[0]))
        raise ModelFormatError(f"unknown operator {op!r}")

    return float(ev(tree))


# --- serialization -------------------------------------------------------------


def serialize(m: TirExpr) -> dict:
    """Structured document for the model; floats survive a JSON round trip exactly."""
    return {
        "g": m.g,
        "p": {
            "intercept": m.p.intercept,
            "terms": [
                {"exponents": list(t.exponents), "func": t.func, "weight": w}
                for t, w in zip(m.p.terms, m.p.weights)
            ],
        },
        "q": {
            "terms": [
                {"exponents": list(t.exponents), "func": t.func, "weight": w}
                for t, w in zip(m.q.terms, m.q.weights)
            ],
        },
    }


def serialize_text(m: TirExpr) -> str:
    """Canonical JSON encoding of :func:`serialize`; byte-stable per model."""
    return json.dumps(serialize(m), sort_keys=True, separators=(",", ":"))


def _decode_terms(obj, where: str) -> tuple[tuple[Term, ...], tuple[float, ...]]:
    if not isinstance(obj, list):
        raise ModelFormatError(f"{where}.terms must be a list")
    terms, weights = [], []
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict):
            raise ModelFormatError(f"{where}.terms[{i}] must be an object")
        try:
            exponents = entry["exponents"]
            func = entry["func"]
            weight = entry["weight"]
        except KeyError as e:
            raise ModelFormatError(f"{where}.terms[{i}] missing field {e}") from None
        if not isinstance(exponents, list) or not all(
            isinstance(k, int) and not isinstance(k, bool) for k in exponents
        ):
            raise ModelFormatError(f"{where}.terms[{i}].exponents must be integers")
        if func not in TRANSFORM_FUNCS:
            raise ModelFormatError(f"{where}.terms[{i}].func {func!r} is unknown")
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise ModelFormatError(f"{where}.terms[{i}].weight must be a number")
        terms.append(Term(tuple(exponents), func))
        weights.append(float(weight))
    return tuple(terms), tuple(weights)


def deserialize(doc) -> TirExpr:
    """Rebuild a model from :func:`serialize` output (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be an object")
    missing = {"g", "p", "q"} - doc.keys()
    if missing:
        raise ModelFormatError(f"model document missing fields: {sorted(missing)}")
    g = doc["g"]
    if g not in INVERTIBLE_FUNCS:
        raise ModelFormatError(f"unknown invertible function {g!r}")
    for part in ("p", "q"):
        if not isinstance(doc[part], dict) or "terms" not in doc[part]:
            raise ModelFormatError(f"{part} must be an object with a terms list")
    intercept = doc["p"].get("intercept")
    if intercept is not None and (
        not isinstance(intercept, (int, float)) or isinstance(intercept, bool)
    ):
        raise ModelFormatError("p.intercept must be a number or null")
    p_terms, p_weights = _decode_terms(doc["p"]["terms"], "p")
    q_terms, q_weights = _decode_terms(doc["q"]["terms"], "q")
    try:
        p = ItExpr(p_terms, p_weights, None if intercept is None else float(intercept))
        q = ItExpr(q_terms, q_weights, None)
        return TirExpr(g, p, q)
    except ValueError as e:
        raise ModelFormatError(str(e)) from None
