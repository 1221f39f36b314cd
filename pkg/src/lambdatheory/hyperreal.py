"""Hyperreals as index sequences modulo oracle-relative eventual equality.

A hyperreal is a :class:`SequenceRep` (a map n ↦ rational) paired with the
:class:`~lambdatheory.oracle.UltrafilterOracle` that decides which index
sets are qualified.  Arithmetic is pointwise; equality and order are oracle
queries on the sets where they hold pointwise, so two hyperreals are equal
exactly when their representatives agree on a qualified set.

Representatives come in three forms:

``ClosedForm``
    a rational function of n on each residue class modulo a period, with
    lazily computed explicit values below a validity bound.  ``omega``
    (n ↦ n) and everything built from it by field operations stays here,
    and equality/order sets get exact tail classifications.
``EventuallyPeriodic``
    explicit preperiod and period values; closed under the field operations.
``Opaque``
    an arbitrary callback; comparisons fall back to heuristic sampling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from . import _poly as P
from .errors import ContextMismatch, DivisionByZero, DomainViolation, Undecided
from .oracle import UNKNOWN, SetDescriptor, Tail, UltrafilterOracle
from .realfunc import ABS, RealFunction

MAX_PERIOD = 1024
EAGER_DOMAIN_CHECK = 10_000

Rational = Union[int, Fraction]


# -- representative forms --------------------------------------------------


@dataclass(frozen=True)
class ClosedForm:
    pieces: tuple  # ((num, den), ...) indexed by n % len(pieces)
    head_len: int = 0
    head: Callable[[int], Fraction] | None = None

    @property
    def period(self) -> int:
        return len(self.pieces)

    def value(self, n: int) -> Fraction:
        if n < self.head_len:
            return self.head(n)
        num, den = self.pieces[n % len(self.pieces)]
        return Fraction(P.evaluate(num, n)) / P.evaluate(den, n)


@dataclass(frozen=True)
class EventuallyPeriodic:
    preperiod: tuple
    period: tuple

    def value(self, n: int) -> Fraction:
        L = len(self.preperiod)
        return self.preperiod[n] if n < L else self.period[(n - L) % len(self.period)]

    def canonical(self) -> "EventuallyPeriodic":
        pre, per = list(self.preperiod), list(self.period)
        p = len(per)
        for d in range(1, p + 1):
            if p % d == 0 and all(per[i] == per[i % d] for i in range(p)):
                per = per[:d]
                break
        # absorb preperiod entries that already follow the period
        while pre and pre[-1] == per[-1]:
            pre.pop()
            per = [per[-1]] + per[:-1]
        return EventuallyPeriodic(tuple(pre), tuple(per))


@dataclass(frozen=True)
class Opaque:
    fn: Callable[[int], Fraction]

    def value(self, n: int) -> Fraction:
        return Fraction(self.fn(n))


class SequenceRep:
    """A representative n ↦ rational of a hyperreal."""

    __slots__ = ("form", "label", "_memo")

    def __init__(self, form, label: str):
        self.form = form
        self.label = label
        self._memo: dict | None = {} if isinstance(form, Opaque) else None

    def __call__(self, n: int) -> Fraction:
        if self._memo is None:
            return self.form.value(n)
        v = self._memo.get(n)
        if v is None:
            v = self._memo[n] = self.form.value(n)
        return v

    def __repr__(self):
        return f"SequenceRep({self.label!r}, {type(self.form).__name__})"

    @property
    def is_constant(self) -> bool:
        f = self.form
        return isinstance(f, EventuallyPeriodic) and not f.preperiod and len(f.period) == 1

    # constructors

    @classmethod
    def constant(cls, c: Rational) -> "SequenceRep":
        c = Fraction(c)
        return cls(EventuallyPeriodic((), (c,)), _fmt(c))

    @classmethod
    def index(cls) -> "SequenceRep":
        return cls(ClosedForm(((P.X, P.ONE),)), "omega")

    @classmethod
    def closed_form(cls, num, den=(1,), explicit=(), label: str | None = None) -> "SequenceRep":
        """n ↦ num(n)/den(n), with ``explicit[n]`` used for small n.

        Every nonnegative integer root of ``den`` must be covered by ``explicit``.
        """
        num, den = P.poly(num), P.poly(den)
        if not den:
            raise ValueError("zero denominator polynomial")
        num, den = P.reduce_fraction(num, den)
        explicit = tuple(Fraction(v) for v in explicit)
        roots = P.nonneg_integer_roots(den)
        if roots is None:
            raise DomainViolation("cannot locate the zeros of the denominator")
        head_len = max([len(explicit)] + [r + 1 for r in roots])
        missing = [r for r in roots if r >= len(explicit)]
        if missing:
            raise DomainViolation(f"denominator vanishes at n={missing}; supply explicit values")
        label = label or f"({P.to_str(num)})/({P.to_str(den)})"
        head = _explicit_head(explicit, num, den)
        return cls(ClosedForm(((num, den),), head_len, head if head_len else None), label)

    @classmethod
    def piecewise_closed_form(cls, pieces, label: str) -> "SequenceRep":
        """Residue-wise rational functions: value at n is pieces[n % len(pieces)] evaluated at n."""
        reps = [cls.closed_form(num, den) for num, den in pieces]
        p = len(reps)
        head_len = max(r.form.head_len for r in reps)
        form = ClosedForm(tuple(r.form.pieces[0] for r in reps), head_len,
                          (lambda n: reps[n % p](n)) if head_len else None)
        return cls(form, label)

    @classmethod
    def periodic(cls, preperiod, period, label: str | None = None) -> "SequenceRep":
        form = EventuallyPeriodic(tuple(Fraction(v) for v in preperiod),
                                  tuple(Fraction(v) for v in period)).canonical()
        if not form.period:
            raise ValueError("empty period")
        return cls(form, label or f"periodic({list(map(_fmt, form.preperiod))}, {list(map(_fmt, form.period))})")

    @classmethod
    def opaque(cls, fn: Callable[[int], Rational], label: str) -> "SequenceRep":
        return cls(Opaque(fn), label)


def _explicit_head(explicit, num, den):
    def head(n):
        return explicit[n] if n < len(explicit) else Fraction(P.evaluate(num, n)) / P.evaluate(den, n)
    return head


def _fmt(c: Fraction) -> str:
    return str(c)


# -- pointwise combination of representatives ------------------------------


def _as_closed(form) -> ClosedForm | None:
    if isinstance(form, ClosedForm):
        return form
    if isinstance(form, EventuallyPeriodic):
        L, per = len(form.preperiod), form.period
        p = len(per)
        pieces = tuple((P.const(per[(r - L) % p]), P.ONE) for r in range(p))
        return ClosedForm(pieces, L, form.value if L else None)
    return None


def _binary(x: SequenceRep, y: SequenceRep, op: str, label: str) -> SequenceRep:
    fx, fy = x.form, y.form
    pointwise = _OPS[op]
    if isinstance(fx, EventuallyPeriodic) and isinstance(fy, EventuallyPeriodic):
        L = max(len(fx.preperiod), len(fy.preperiod))
        p = math.lcm(len(fx.period), len(fy.period))
        if p <= MAX_PERIOD:
            pre = tuple(pointwise(fx.value(n), fy.value(n)) for n in range(L))
            per = tuple(pointwise(fx.value(n), fy.value(n)) for n in range(L, L + p))
            return SequenceRep(EventuallyPeriodic(pre, per).canonical(), label)
    cx, cy = _as_closed(fx), _as_closed(fy)
    if cx is not None and cy is not None:
        p = math.lcm(cx.period, cy.period)
        if p <= MAX_PERIOD:
            pieces = []
            for r in range(p):
                (a, b), (c, d) = cx.pieces[r % cx.period], cy.pieces[r % cy.period]
                if op == "+":
                    num, den = P.add(P.mul(a, d), P.mul(c, b)), P.mul(b, d)
                elif op == "-":
                    num, den = P.sub(P.mul(a, d), P.mul(c, b)), P.mul(b, d)
                else:
                    num, den = P.mul(a, c), P.mul(b, d)
                pieces.append(P.reduce_fraction(num, den))
            head_len = max(cx.head_len, cy.head_len)
            head = (lambda n: pointwise(x(n), y(n))) if head_len else None
            return SequenceRep(ClosedForm(_compact(pieces), head_len, head), label)
    return SequenceRep.opaque(lambda n: pointwise(x(n), y(n)), label)


def _compact(pieces) -> tuple:
    p = len(pieces)
    for d in range(1, p + 1):
        if p % d == 0 and all(pieces[i] == pieces[i % d] for i in range(p)):
            return tuple(pieces[:d])
    return tuple(pieces)


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}


def _patch_inverse(v: Fraction) -> Fraction:
    return 1 / v if v != 0 else Fraction(1)


def _inverse_rep(x: SequenceRep, label: str) -> SequenceRep:
    f = x.form
    if isinstance(f, EventuallyPeriodic):
        return SequenceRep(EventuallyPeriodic(tuple(map(_patch_inverse, f.preperiod)),
                                              tuple(map(_patch_inverse, f.period))).canonical(), label)
    if isinstance(f, ClosedForm):
        pieces, head_len = [], f.head_len
        for num, den in f.pieces:
            if not num:
                pieces.append((P.ONE, P.ONE))
                continue
            roots = P.nonneg_integer_roots(num)
            bound = P.root_bound(num) if roots is None else max([0] + [r + 1 for r in roots])
            head_len = max(head_len, bound)
            pieces.append(P.reduce_fraction(den, num))
        head = (lambda n: _patch_inverse(x(n))) if head_len else None
        return SequenceRep(ClosedForm(tuple(pieces), head_len, head), label)
    return SequenceRep.opaque(lambda n: _patch_inverse(x(n)), label)


def _apply_rep(fn: RealFunction | Callable, x: SequenceRep, label: str) -> SequenceRep:
    if not isinstance(fn, RealFunction):
        from .realfunc import Lambda
        fn = Lambda(fn, getattr(fn, "__name__", "λ"))
    f = x.form
    if isinstance(f, EventuallyPeriodic):
        return SequenceRep(EventuallyPeriodic(tuple(fn(v) for v in f.preperiod),
                                              tuple(fn(v) for v in f.period)).canonical(), label)
    if isinstance(f, ClosedForm):
        pieces, head_len = [], f.head_len
        for num, den in f.pieces:
            composed = fn.compose(num, den)
            if composed is None:
                break
            top, bottom, valid = composed
            top, bottom = P.reduce_fraction(top, bottom)
            roots = P.nonneg_integer_roots(bottom)
            bound = P.root_bound(bottom) if roots is None else max([0] + [r + 1 for r in roots])
            head_len = max(head_len, valid, bound)
            pieces.append((top, bottom))
        else:
            for n in range(min(head_len, EAGER_DOMAIN_CHECK)):
                fn(x(n))  # raises DomainViolation where f is undefined
            head = (lambda n: fn(x(n))) if head_len else None
            return SequenceRep(ClosedForm(_compact(pieces), head_len, head), label)
    return SequenceRep.opaque(lambda n: fn(x(n)), label)


# -- hyperreals -------------------------------------------------------------


class Kind(enum.Enum):
    INFINITESIMAL = "Infinitesimal"
    FINITE = "FiniteNonInfinitesimal"
    INFINITE = "Infinite"

    def __str__(self):
        return self.value


class Hyperreal:
    """An element of the hyperreal field: a representative plus its oracle."""

    __slots__ = ("rep", "ctx")

    def __init__(self, rep: SequenceRep, ctx: UltrafilterOracle):
        self.rep = rep
        self.ctx = ctx

    @property
    def label(self) -> str:
        return self.rep.label

    def __repr__(self):
        return f"Hyperreal({self.rep.label!r})"

    def __call__(self, n: int) -> Fraction:
        return self.rep(n)

    def _coerce(self, other) -> "Hyperreal":
        if isinstance(other, Hyperreal):
            return other
        if isinstance(other, (int, Fraction)):
            return from_rational(other, self.ctx)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else add(self, other)

    def __radd__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else add(other, self)

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else sub(self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else sub(other, self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else mul(self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else mul(other, self)

    def __truediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k: int):
        return power(self, k)

    def __lt__(self, other):
        return lt(self, self._coerce(other))

    def __gt__(self, other):
        return lt(self._coerce(other), self)

    def __le__(self, other):
        return not lt(self._coerce(other), self)

    def __ge__(self, other):
        return not lt(self, self._coerce(other))

    __hash__ = None


def _same_ctx(*xs: Hyperreal) -> UltrafilterOracle:
    ctx = xs[0].ctx
    for x in xs[1:]:
        if x.ctx is not ctx:
            raise ContextMismatch(f"{xs[0].label!r} and {x.label!r} live over different oracles")
    return ctx


def from_rational(c: Rational, ctx: UltrafilterOracle) -> Hyperreal:
    return Hyperreal(SequenceRep.constant(c), ctx)


def omega(ctx: UltrafilterOracle) -> Hyperreal:
    return Hyperreal(SequenceRep.index(), ctx)


def from_rep(rep: SequenceRep, ctx: UltrafilterOracle) -> Hyperreal:
    return Hyperreal(rep, ctx)


def add(x: Hyperreal, y: Hyperreal) -> Hyperreal:
    ctx = _same_ctx(x, y)
    return Hyperreal(_binary(x.rep, y.rep, "+", f"({x.label} + {y.label})"), ctx)


def sub(x: Hyperreal, y: Hyperreal) -> Hyperreal:
    ctx = _same_ctx(x, y)
    return Hyperreal(_binary(x.rep, y.rep, "-", f"({x.label} - {y.label})"), ctx)


def mul(x: Hyperreal, y: Hyperreal) -> Hyperreal:
    ctx = _same_ctx(x, y)
    return Hyperreal(_binary(x.rep, y.rep, "*", f"({x.label} * {y.label})"), ctx)


def neg(x: Hyperreal) -> Hyperreal:
    return Hyperreal(_binary(SequenceRep.constant(0), x.rep, "-", f"-{x.label}"), x.ctx)


def power(x: Hyperreal, k: int) -> Hyperreal:
    if k < 0 or int(k) != k:
        raise DomainViolation(f"exponent must be a nonnegative integer, got {k}")
    out = from_rational(1, x.ctx)
    for _ in range(int(k)):
        out = mul(out, x)
    out.rep.label = f"{x.label}^{k}"
    return out


def inv(x: Hyperreal) -> Hyperreal:
    """Multiplicative inverse: 1/x(n) where x(n) != 0, and 1 elsewhere."""
    if eq(x, from_rational(0, x.ctx)):
        raise DivisionByZero(f"{x.label} is zero on a qualified set")
    return Hyperreal(_inverse_rep(x.rep, f"1/{x.label}"), x.ctx)


def div(x: Hyperreal, y: Hyperreal) -> Hyperreal:
    _same_ctx(x, y)
    out = mul(x, inv(y))
    out.rep.label = f"({x.label} / {y.label})"
    return out


# -- comparison sets --------------------------------------------------------


def _tail_from_pieces(diff: ClosedForm, kind: str) -> Tail | None:
    start = diff.head_len
    pattern = []
    for num, den in diff.pieces:
        if kind == "eq":
            member = not num
            if num:
                roots = P.nonneg_integer_roots(num)
                start = max(start, P.root_bound(num) if roots is None else max([0] + [r + 1 for r in roots]))
        else:
            member = bool(num) and P.eventual_sign(num) * P.eventual_sign(den) < 0
            start = max(start, P.root_bound(num), P.root_bound(den))
        pattern.append(member)
    n = len(pattern)
    # absolute residues: pieces are indexed by n % period, as are tail patterns
    return Tail(start, tuple(pattern[r % n] for r in range(n)))


def _compare_tail(x: SequenceRep, y: SequenceRep, kind: str) -> Tail | None:
    fx, fy = x.form, y.form
    cmp = (lambda a, b: a == b) if kind == "eq" else (lambda a, b: a < b)
    if isinstance(fx, EventuallyPeriodic) and isinstance(fy, EventuallyPeriodic):
        L = max(len(fx.preperiod), len(fy.preperiod))
        p = math.lcm(len(fx.period), len(fy.period))
        if p > MAX_PERIOD:
            return None
        pattern = [False] * p
        for n in range(L, L + p):
            pattern[n % p] = cmp(fx.value(n), fy.value(n))
        return Tail(L, tuple(pattern))
    diff = _binary(x, y, "-", "diff").form
    if isinstance(diff, ClosedForm):
        return _tail_from_pieces(diff, kind)
    return None


def equality_set(x: Hyperreal, y: Hyperreal) -> SetDescriptor:
    _same_ctx(x, y)
    rx, ry = x.rep, y.rep
    t = _compare_tail(rx, ry, "eq")
    return SetDescriptor(lambda n: rx(n) == ry(n), t if t is not None else UNKNOWN,
                         f"{{n : {rx.label} = {ry.label}}}")


def less_set(x: Hyperreal, y: Hyperreal) -> SetDescriptor:
    _same_ctx(x, y)
    rx, ry = x.rep, y.rep
    t = _compare_tail(rx, ry, "lt")
    return SetDescriptor(lambda n: rx(n) < ry(n), t if t is not None else UNKNOWN,
                         f"{{n : {rx.label} < {ry.label}}}")


def eq(x: Hyperreal, y: Hyperreal) -> bool:
    ctx = _same_ctx(x, y)
    return ctx.is_qualified(equality_set(x, y))


def lt(x: Hyperreal, y: Hyperreal) -> bool:
    ctx = _same_ctx(x, y)
    return ctx.is_qualified(less_set(x, y))


# -- classification ---------------------------------------------------------

LADDER = tuple(10**i for i in range(7))


def _piece_limit(num, den) -> tuple[Kind, Fraction | None]:
    if not num:
        return Kind.INFINITESIMAL, Fraction(0)
    dn, dd = P.degree(num), P.degree(den)
    if dn > dd:
        return Kind.INFINITE, None
    if dn < dd:
        return Kind.INFINITESIMAL, Fraction(0)
    return Kind.FINITE, P.lead(num) / P.lead(den)


def _qualified_residue(ctx: UltrafilterOracle, period: int) -> int:
    for r in range(period - 1):
        if ctx.is_qualified(SetDescriptor.residue(r, period)):
            return r
    return period - 1


def analyse(x: Hyperreal, ladder=LADDER) -> tuple[Kind, Fraction | None, bool]:
    """(classification, standard part, exact?) for x."""
    f = x.rep.form
    if isinstance(f, EventuallyPeriodic):
        values = list(dict.fromkeys(f.period))
        v = values[-1]
        for cand in values[:-1]:
            if eq(x, from_rational(cand, x.ctx)):
                v = cand
                break
        return (Kind.INFINITESIMAL if v == 0 else Kind.FINITE), v, True
    if isinstance(f, ClosedForm):
        limits = [_piece_limit(num, den) for num, den in f.pieces]
        if len(set(limits)) == 1:
            kind, st = limits[0]
        else:
            kind, st = limits[_qualified_residue(x.ctx, f.period)]
        return kind, st, True
    return _ladder(x, ladder)


def _ladder(x: Hyperreal, ladder) -> tuple[Kind, Fraction | None, bool]:
    ctx = x.ctx
    a = natural_extension_apply(ABS, x)
    below = [lt(a, from_rational(Fraction(1, k), ctx)) for k in ladder]
    above = [lt(from_rational(k, ctx), a) for k in ladder]
    if all(below) and all(above):
        raise Undecided(f"order ladder gives contradictory answers for {x.label}")
    if all(below):
        return Kind.INFINITESIMAL, Fraction(0), False
    if all(above):
        return Kind.INFINITE, None, False
    # bounded and not infinitesimal: guess the standard part from the sampling window
    # take the simplest fraction within the ladder's resolution of a late sample
    v = Fraction(x.rep(ctx.horizon - 1))
    tol = Fraction(1, max(ladder))
    guess = v.limit_denominator(max(ladder))
    for k in ladder:
        g = v.limit_denominator(k)
        if abs(v - g) < tol:
            guess = g
            break
    h = ctx.horizon
    if any(abs(x.rep(n) - guess) >= tol for n in (h // 2, 5 * h // 8, 3 * h // 4, 7 * h // 8)):
        return Kind.FINITE, None, False  # still drifting across the window
    d = natural_extension_apply(ABS, sub(x, from_rational(guess, ctx)))
    if all(lt(d, from_rational(Fraction(1, k), ctx)) for k in ladder):
        return Kind.FINITE if guess != 0 else Kind.INFINITESIMAL, guess, False
    return Kind.FINITE, None, False


def classify(x: Hyperreal) -> Kind:
    return analyse(x)[0]


def standard_part(x: Hyperreal) -> Fraction | None:
    """The rational r with x - r infinitesimal, or None when x is infinite."""
    kind, st, exact = analyse(x)
    if kind is not Kind.INFINITE and st is None:
        raise Undecided(f"no standard part found for opaque {x.label}")
    return st


def is_infinitesimal(x: Hyperreal) -> bool:
    return classify(x) is Kind.INFINITESIMAL


# -- natural extensions -----------------------------------------------------


def natural_extension_apply(f: RealFunction | Callable, x: Hyperreal) -> Hyperreal:
    """f*(x): the hyperreal represented by n ↦ f(x(n))."""
    name = getattr(f, "name", getattr(f, "__name__", "f"))
    return Hyperreal(_apply_rep(f, x.rep, f"{name}({x.label})"), x.ctx)


class Field:
    """Convenience factory binding constructors to one oracle."""

    def __init__(self, ctx: UltrafilterOracle | None = None):
        self.ctx = ctx if ctx is not None else UltrafilterOracle()

    def __call__(self, c: Rational) -> Hyperreal:
        return from_rational(Fraction(c), self.ctx)

    @property
    def omega(self) -> Hyperreal:
        return omega(self.ctx)

    @property
    def eps(self) -> Hyperreal:
        out = inv(omega(self.ctx))
        out.rep.label = "eps"
        return out

    def rep(self, rep: SequenceRep) -> Hyperreal:
        return Hyperreal(rep, self.ctx)

    def sequence(self, fn: Callable[[int], Rational], label: str) -> Hyperreal:
        return Hyperreal(SequenceRep.opaque(fn, label), self.ctx)
