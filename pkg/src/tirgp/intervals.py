"""Interval reasoning for term validity and outer-function admissibility.

Because every variable occurs at most once inside a term's interaction, plain
interval arithmetic already yields the exact image of the interaction over a
box of variable domains. That image decides whether a term can ever leave the
domain of its transformation, and the training-target range decides which
outer functions have an applicable inverse.

Filtering is strict: a term survives only if the interaction image lies fully
inside the transformation's domain, so every in-box evaluation of a surviving
term is finite without protected operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expressions import ItExpr, Term

__all__ = [
    "Interval",
    "DomainBox",
    "pow_interval",
    "transform_interval",
    "image_of_term",
    "admissible_g",
    "filter_terms",
    "load_domain_file",
]

_INF = math.inf


@dataclass(frozen=True)
class Interval:
    """Closed range with possibly infinite endpoints; lo > hi encodes empty."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @staticmethod
    def empty() -> "Interval":
        return Interval(_INF, -_INF)

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, value: float) -> bool:
        return not self.is_empty and self.lo <= value <= self.hi

    def __mul__(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        cands = [
            _mul(self.lo, other.lo),
            _mul(self.lo, other.hi),
            _mul(self.hi, other.lo),
            _mul(self.hi, other.hi),
        ]
        return Interval(min(cands), max(cands))


def _mul(a: float, b: float) -> float:
    # 0 * inf is 0 for endpoint products: the zero endpoint wins the hull.
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def _pow(v: float, k: int) -> float:
    if math.isinf(v):
        if k % 2 == 0:
            return _INF
        return v
    try:
        return float(v) ** k
    except OverflowError:
        return -_INF if v < 0 and k % 2 == 1 else _INF


def _recip(iv: Interval) -> Interval:
    if iv.is_empty:
        return iv
    a, b = iv.lo, iv.hi
    if a > 0.0 or b < 0.0:
        return Interval(1.0 / b if b != 0 else 0.0, 1.0 / a if a != 0 else 0.0)
    if a == 0.0 and b == 0.0:
        return Interval(-_INF, _INF)
    if a == 0.0:
        return Interval(1.0 / b, _INF)
    if b == 0.0:
        return Interval(-_INF, 1.0 / a)
    return Interval(-_INF, _INF)


def pow_interval(iv: Interval, k: int) -> Interval:
    """Exact hull of ``{x**k : x in iv}``.

    A negative ``k`` over an interval containing zero has an unbounded image;
    the (unbounded) hull is returned and the caller decides validity.
    """
    if iv.is_empty:
        return iv
    k = int(k)
    if k == 0:
        return Interval(1.0, 1.0)
    if k < 0:
        return _recip(pow_interval(iv, -k))
    lo_k, hi_k = _pow(iv.lo, k), _pow(iv.hi, k)
    if k % 2 == 1:
        return Interval(lo_k, hi_k)
    if iv.lo <= 0.0 <= iv.hi:
        return Interval(0.0, max(lo_k, hi_k))
    return Interval(min(lo_k, hi_k), max(lo_k, hi_k))


def _sin_interval(iv: Interval) -> Interval:
    if math.isinf(iv.lo) or math.isinf(iv.hi) or iv.hi - iv.lo >= 2.0 * math.pi:
        return Interval(-1.0, 1.0)
    lo, hi = math.sin(iv.lo), math.sin(iv.hi)
    lo, hi = min(lo, hi), max(lo, hi)
    # peak at pi/2 + 2k*pi, trough at -pi/2 + 2k*pi inside [lo, hi]
    k = math.ceil((iv.lo - math.pi / 2.0) / (2.0 * math.pi))
    if math.pi / 2.0 + 2.0 * math.pi * k <= iv.hi:
        hi = 1.0
    k = math.ceil((iv.lo + math.pi / 2.0) / (2.0 * math.pi))
    if -math.pi / 2.0 + 2.0 * math.pi * k <= iv.hi:
        lo = -1.0
    return Interval(lo, hi)


def _monotone(fn, iv: Interval) -> Interval:
    return Interval(fn(iv.lo), fn(iv.hi))


def _safe_exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return _INF


def transform_interval(func: str, iv: Interval) -> Interval | None:
    """Exact image of a transformation over ``iv``; None if the domain is violated.

    The domain comparison is strict at open endpoints: log requires lo > 0.
    """
    if iv.is_empty:
        return None
    if func == "id":
        return iv
    if func == "tanh":
        return _monotone(math.tanh, iv)
    if func == "sin":
        return _sin_interval(iv)
    if func == "cos":
        # cos(x) = sin(x + pi/2); shift keeps the endpoint analysis exact
        shifted = _sin_interval(Interval(iv.lo + math.pi / 2.0, iv.hi + math.pi / 2.0))
        return shifted
    if func == "log":
        if iv.lo <= 0.0:
            return None
        return _monotone(math.log, iv)
    if func == "exp":
        return _monotone(_safe_exp, iv)
    if func == "sqrt":
        if iv.lo < 0.0:
            return None
        return _monotone(math.sqrt, iv)
    raise ValueError(f"unknown transformation function: {func!r}")


@dataclass(frozen=True)
class DomainBox:
    """Per-variable domain intervals, usually the min/max of the training data."""

    intervals: tuple[Interval, ...]

    def __len__(self) -> int:
        return len(self.intervals)

    def __getitem__(self, i: int) -> Interval:
        return self.intervals[i]

    @staticmethod
    def from_data(X) -> "DomainBox":
        X = np.asarray(X, dtype=float)
        return DomainBox(
            tuple(Interval(lo, hi) for lo, hi in zip(X.min(axis=0), X.max(axis=0)))
        )


def interaction_image(t: Term, box: DomainBox) -> Interval | None:
    """Exact image of the interaction over the box; None when it can be non-finite.

    A negative exponent on a variable whose domain contains zero makes the
    interaction blow up inside the box, so the term is rejected outright.
    """
    if len(t.exponents) != len(box):
        raise ValueError("box dimension does not match term exponents")
    img = Interval(1.0, 1.0)
    for i in t.active:
        k = t.exponents[i]
        iv = box[i]
        if iv.is_empty:
            return None
        if k < 0 and iv.contains(0.0):
            return None
        img = img * pow_interval(iv, k)
    return img


def image_of_term(t: Term, box: DomainBox) -> Interval | None:
    """Exact image of ``func(interaction)`` over the box; None marks an invalid term."""
    inner = interaction_image(t, box)
    if inner is None:
        return None
    return transform_interval(t.func, inner)


# Target ranges each outer function can be inverted on: the function's image
# intersected with its inverse's domain. Open endpoints are compared strictly.
_ADMISSIBLE = {
    "id": (-_INF, _INF, False, False),
    "atan": (-math.pi / 2.0, math.pi / 2.0, True, True),
    "tan": (-_INF, _INF, False, False),
    "tanh": (-1.0, 1.0, True, True),
    "log": (-_INF, _INF, False, False),
    "exp": (0.0, _INF, True, False),
    "sqrt": (0.0, _INF, False, False),
}


def admissible_g(fns, y_range: Interval) -> list[str]:
    """Outer functions whose inverse is defined on the whole target range.

    The identity is always admissible, so the result is never empty when it
    is part of ``fns``.
    """
    out = []
    for g in fns:
        lo, hi, lo_open, hi_open = _ADMISSIBLE[g]
        lo_ok = y_range.lo > lo if lo_open else y_range.lo >= lo
        hi_ok = y_range.hi < hi if hi_open else y_range.hi <= hi
        if lo_ok and hi_ok:
            out.append(g)
    return out


def filter_terms(e: ItExpr, box: DomainBox) -> ItExpr:
    """Drop terms whose image is invalid over the box; weights shrink in step.

    The survivors are untouched, so their evaluation on in-box points is
    unchanged. The caller must regenerate a numerator that filters to empty.
    """
    kept = [
        (t, w)
        for t, w in zip(e.terms, e.weights)
        if image_of_term(t, box) is not None
    ]
    return ItExpr(
        tuple(t for t, _ in kept), tuple(w for _, w in kept), e.intercept
    )


def load_domain_file(path, names) -> DomainBox:
    """Read user-supplied domains: one ``name lo hi`` line per variable.

    Returns a box in ``names`` order; every variable must be covered.
    """
    ranges = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'name lo hi'")
            name, lo, hi = parts
            try:
                ranges[name] = Interval(float(lo), float(hi))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric bounds") from None
            if ranges[name].is_empty:
                raise ValueError(f"{path}:{lineno}: lo must not exceed hi")
    missing = [n for n in names if n not in ranges]
    if missing:
        raise ValueError(f"domain file {path} missing variables: {missing}")
    return DomainBox(tuple(ranges[n] for n in names))
