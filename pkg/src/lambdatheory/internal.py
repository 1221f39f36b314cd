"""Natural extensions of real sets and hyperfinite sets of rationals.

A hyperfinite set is a level-indexed family of finite sets; its elements at
level n are returned sorted and deduplicated.  Structured families
(integer ranges, uniform grids, constant sets) also know closed forms for
their cardinality, minimum and maximum, which keeps cardinalities and
polynomial hyperfinite sums in closed form.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from . import _poly as P
from .errors import DomainViolation
from .hyperreal import (ClosedForm, EventuallyPeriodic, Hyperreal, SequenceRep, _apply_rep, _as_closed, _binary,
                        _compare_tail, _inverse_rep, from_rep)
from .oracle import MAX_PATTERN, UNKNOWN, SetDescriptor, Tail, UltrafilterOracle
from .realfunc import Polynomial, RealFunction, maximum


# -- real sets ----------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: Fraction | None = None  # None = unbounded
    hi: Fraction | None = None
    lo_closed: bool = True
    hi_closed: bool = True

    def __contains__(self, t) -> bool:
        if self.lo is not None and (t < self.lo or (t == self.lo and not self.lo_closed)):
            return False
        if self.hi is not None and (t > self.hi or (t == self.hi and not self.hi_closed)):
            return False
        return True


class RealSetDescriptor:
    """A subset E of the rationals, given by a total membership test.

    When E is a finite union of intervals, membership of a closed-form
    hyperreal in E* gets an exact classification.
    """

    def __init__(self, contains: Callable[[Fraction], bool], label: str,
                 intervals: tuple[Interval, ...] | None = None):
        self.contains = contains
        self.label = label
        self.intervals = intervals

    def __repr__(self):
        return f"RealSetDescriptor({self.label!r})"

    @classmethod
    def interval(cls, lo=None, hi=None, lo_closed=True, hi_closed=True, label=None) -> "RealSetDescriptor":
        iv = Interval(None if lo is None else Fraction(lo), None if hi is None else Fraction(hi),
                      lo_closed, hi_closed)
        if label is None:
            left = "(-inf" if lo is None else ("[" if lo_closed else "(") + str(iv.lo)
            right = "inf)" if hi is None else str(iv.hi) + ("]" if hi_closed else ")")
            label = f"{left}, {right}"
        return cls(iv.__contains__, label, (iv,))

    @classmethod
    def positive(cls) -> "RealSetDescriptor":
        return cls.interval(0, None, lo_closed=False, label="(0, inf)")

    @classmethod
    def union(cls, *sets: "RealSetDescriptor") -> "RealSetDescriptor":
        ivs = None
        if all(s.intervals is not None for s in sets):
            ivs = tuple(iv for s in sets for iv in s.intervals)
        fns = [s.contains for s in sets]
        return cls(lambda t: any(f(t) for f in fns), " ∪ ".join(s.label for s in sets), ivs)

    @classmethod
    def predicate(cls, fn: Callable[[Fraction], bool], label: str) -> "RealSetDescriptor":
        return cls(fn, label)


def _interval_tail(rep: SequenceRep, iv: Interval) -> Tail | None:
    t = Tail(0, (True,))
    if iv.lo is not None:
        lo = SequenceRep.constant(iv.lo)
        below = _compare_tail(rep, lo, "lt")
        if below is None:
            return None
        side = ~below
        if not iv.lo_closed:
            at = _compare_tail(rep, lo, "eq")
            if at is None:
                return None
            side = side & ~at
        t = t & side
    if iv.hi is not None:
        hi = SequenceRep.constant(iv.hi)
        above = _compare_tail(hi, rep, "lt")
        if above is None:
            return None
        side = ~above
        if not iv.hi_closed:
            at = _compare_tail(rep, hi, "eq")
            if at is None:
                return None
            side = side & ~at
        t = t & side
    return t


def star_set(x: Hyperreal, E: RealSetDescriptor) -> SetDescriptor:
    """The index set {n : x(n) ∈ E}."""
    rep = x.rep
    classification = UNKNOWN
    form = rep.form
    if isinstance(form, EventuallyPeriodic) and len(form.period) <= MAX_PATTERN:
        # membership of each periodic value decides the tail outright
        L, p = len(form.preperiod), len(form.period)
        classification = Tail(L, tuple(bool(E.contains(form.value(L + ((k - L) % p)))) for k in range(p)))
    elif E.intervals is not None:
        tail = Tail(0, (False,))
        for iv in E.intervals:
            t = _interval_tail(rep, iv)
            if t is None or math.lcm(t.period, tail.period) > MAX_PATTERN:
                tail = None
                break
            tail = tail | t
        if tail is not None:
            classification = tail
    contains = E.contains
    return SetDescriptor(lambda n: bool(contains(rep(n))), classification, f"{{n : {rep.label} ∈ {E.label}}}")


def star_membership(x: Hyperreal, E: RealSetDescriptor) -> bool:
    """x ∈ E*: E holds of x's representative on a qualified set."""
    return x.ctx.is_qualified(star_set(x, E))


# -- hyperfinite sets -----------------------------------------------------------


class _Grid(Sequence):
    """The sorted rationals k/den for k = lo..hi, without materializing them."""

    __slots__ = ("lo", "hi", "den")

    def __init__(self, lo: int, hi: int, den: int = 1):
        self.lo, self.hi, self.den = lo, hi, den

    def __len__(self):
        return max(self.hi - self.lo + 1, 0)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        k = self.lo + i
        return k if self.den == 1 else Fraction(k, self.den)

    def __contains__(self, t) -> bool:
        k = Fraction(t) * self.den
        return k.denominator == 1 and self.lo <= k <= self.hi

    def __iter__(self):
        if self.den == 1:
            return iter(range(self.lo, self.hi + 1))
        d = self.den
        return (Fraction(k, d) for k in range(self.lo, self.hi + 1))


def _as_rep(v) -> SequenceRep:
    if isinstance(v, SequenceRep):
        return v
    if isinstance(v, Hyperreal):
        return v.rep
    return SequenceRep.constant(Fraction(v))


def _integer_at(rep: SequenceRep, n: int, what: str) -> int:
    v = Fraction(rep(n))
    if v.denominator != 1:
        raise DomainViolation(f"{what} {rep.label} is not an integer at level {n}: {v}")
    return int(v)


class HyperfiniteSet:
    """A level-indexed family of finite, sorted, deduplicated rational sets."""

    def __init__(self, at_level: Callable[[int], Sequence], label: str, *,
                 card: SequenceRep | None = None, lo: SequenceRep | None = None,
                 hi: SequenceRep | None = None, constant: bool = False,
                 bounds: tuple | None = None):
        self._at_level = at_level
        self.label = label
        self.card = card
        self.lo = lo  # min at nonempty levels
        self.hi = hi  # max at nonempty levels
        self.constant = constant
        self.bounds = bounds  # (k_lo, k_hi, den) reps for ranges and grids

    def __repr__(self):
        return f"HyperfiniteSet({self.label!r})"

    def at_level(self, n: int) -> Sequence:
        return self._at_level(n)

    @classmethod
    def from_function(cls, fn: Callable[[int], Iterable], label: str) -> "HyperfiniteSet":
        def level(n):
            return sorted({Fraction(v) for v in fn(n)})
        return cls(level, label)

    @classmethod
    def constant_set(cls, elements: Iterable, label: str | None = None) -> "HyperfiniteSet":
        elems = tuple(sorted({Fraction(v) for v in elements}))
        label = label or "{" + ", ".join(map(str, elems)) + "}"
        card = SequenceRep.constant(len(elems))
        lo = SequenceRep.constant(elems[0] if elems else 0)
        hi = SequenceRep.constant(elems[-1] if elems else 0)
        return cls(lambda n: elems, label, card=card, lo=lo, hi=hi, constant=True)

    @classmethod
    def grid(cls, k_lo, k_hi, den=1, label: str | None = None) -> "HyperfiniteSet":
        """{k/den(n) : k integer, k_lo(n) <= k <= k_hi(n)} with integer-valued bounds and den(n) >= 1."""
        rlo, rhi, rden = _as_rep(k_lo), _as_rep(k_hi), _as_rep(den)

        def level(n):
            a, b = _integer_at(rlo, n, "lower bound"), _integer_at(rhi, n, "upper bound")
            if a > b:
                return _Grid(a, b)
            d = _integer_at(rden, n, "denominator")
            if d < 1:
                raise DomainViolation(f"grid denominator {rden.label} is {d} at level {n}")
            return _Grid(a, b, d)

        span = _binary(_binary(rhi, rlo, "-", "span"), SequenceRep.constant(1), "+", "span")
        card = _apply_rep(maximum(0), span, f"|{label or 'grid'}|")
        unit = rden.is_constant and rden(0) == 1
        if unit:
            lo, hi = rlo, rhi
        else:
            inv_den = _inverse_rep(rden, f"1/{rden.label}")
            lo = _binary(rlo, inv_den, "*", f"{rlo.label}/{rden.label}")
            hi = _binary(rhi, inv_den, "*", f"{rhi.label}/{rden.label}")
        if label is None:
            label = (f"{{{rlo.label}..{rhi.label}}}" if unit
                     else f"{{k/{rden.label} : k = {rlo.label}..{rhi.label}}}")
        constant = rlo.is_constant and rhi.is_constant and rden.is_constant
        return cls(level, label, card=card, lo=lo, hi=hi, constant=constant, bounds=(rlo, rhi, rden))

    @classmethod
    def integer_range(cls, lo, hi, label: str | None = None) -> "HyperfiniteSet":
        return cls.grid(lo, hi, 1, label)

    def member_tail(self, r: Fraction) -> Tail | None:
        """Exact tail of {n : r ∈ A_n}, when the structure allows it."""
        if self.constant:
            return Tail(0, (Fraction(r) in set(self.at_level(0)),))
        if self.bounds is None:
            return None
        rlo, rhi, rden = self.bounds
        if not rden.is_constant:
            return None
        k = Fraction(r) * rden(0)
        if k.denominator != 1:
            return Tail(0, (False,))
        kr = SequenceRep.constant(k)
        below = _compare_tail(kr, rlo, "lt")
        above = _compare_tail(rhi, kr, "lt")
        if below is None or above is None:
            return None
        return ~below & ~above


def hypercardinality(A: HyperfiniteSet, ctx: UltrafilterOracle) -> Hyperreal:
    """The hyperreal n ↦ |A_n|."""
    if A.card is not None:
        return from_rep(A.card, ctx)
    return from_rep(SequenceRep.opaque(lambda n: len(A.at_level(n)), f"|{A.label}|"), ctx)


def _brute_sum(A: HyperfiniteSet, f: RealFunction, n: int) -> Fraction:
    return sum((f(Fraction(a)) for a in A.at_level(n)), Fraction(0))


def _faulhaber_sum(A: HyperfiniteSet, f: Polynomial, label: str) -> SequenceRep | None:
    rlo, rhi, rden = A.bounds
    lo_minus = _binary(rlo, SequenceRep.constant(1), "-", "lo-1")
    total = SequenceRep.constant(0)
    inv_den = _inverse_rep(rden, "1/den")
    scale = SequenceRep.constant(1)
    for j, c in enumerate(f.coeffs):
        if j:
            scale = _binary(scale, inv_den, "*", "scale")
        if c == 0:
            continue
        F = Polynomial(P.faulhaber(j))
        block = _binary(_apply_rep(F, rhi, "F(hi)"), _apply_rep(F, lo_minus, "F(lo-1)"), "-", "block")
        term = _binary(_binary(block, scale, "*", "term"), SequenceRep.constant(c), "*", "term")
        total = _binary(total, term, "+", "sum")
    # the telescoped formula needs hi >= lo - 1; it is exact from the point where that holds for good
    span = _binary(rhi, lo_minus, "-", "span")
    negative = _compare_tail(span, SequenceRep.constant(0), "lt")
    cf = _as_closed(total.form)
    if negative is None or any(negative.pattern) or cf is None:
        return None
    pieces, head_len = cf.pieces, max(cf.head_len, negative.start)
    head = (lambda n: _brute_sum(A, f, n)) if head_len else None
    return SequenceRep(ClosedForm(pieces, head_len, head), label)


def hyperfinite_sum(A: HyperfiniteSet, f: RealFunction, ctx: UltrafilterOracle) -> Hyperreal:
    """The hyperreal n ↦ Σ_{a ∈ A_n} f(a)."""
    label = f"Σ_{{a ∈ {A.label}}} {getattr(f, 'name', 'f')}(a)"
    if isinstance(f, Polynomial) and A.bounds is not None:
        rep = _faulhaber_sum(A, f, label)
        if rep is not None:
            return from_rep(rep, ctx)
    if A.constant:
        total = _brute_sum(A, f, 0)
        return from_rep(SequenceRep(SequenceRep.constant(total).form, label), ctx)
    return from_rep(SequenceRep.opaque(lambda n: _brute_sum(A, f, n), label), ctx)


def level_contains(A: HyperfiniteSet, n: int, t: Fraction) -> bool:
    elems = A.at_level(n)
    if isinstance(elems, _Grid):
        return t in elems
    i = bisect_left(elems, t)
    return i < len(elems) and elems[i] == t
