"""Registered real functions that can be lifted to hyperreals.

Each function has an exact pointwise rule on rationals.  When it can also
act symbolically on a rational function of the index (``num(n)/den(n)``),
:meth:`RealFunction.compose` returns the composite together with the index
from which the symbolic form is valid.  That is what keeps natural
extensions of closed-form sequences in closed form.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

from . import _poly as P
from .errors import DomainViolation


class RealFunction:
    name: str = "f"

    def __call__(self, t: Fraction) -> Fraction:
        raise NotImplementedError

    def compose(self, num, den):
        """Return (num', den', valid_from) or None if no symbolic form is known."""
        return None

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Polynomial(RealFunction):
    def __init__(self, coeffs: Sequence, name: str | None = None):
        self.coeffs = P.poly(coeffs)
        self.name = name or f"t ↦ {P.to_str(self.coeffs, 't')}"

    def __call__(self, t):
        return Fraction(P.evaluate(self.coeffs, Fraction(t)))

    def compose(self, num, den):
        top, bottom = P.homogenize(self.coeffs, num, den)
        return top, bottom, 0


class Rational(RealFunction):
    """t ↦ p(t)/q(t); undefined where q vanishes."""

    def __init__(self, num: Sequence, den: Sequence, name: str | None = None):
        self.num, self.den = P.poly(num), P.poly(den)
        if not self.den:
            raise ValueError("zero denominator")
        self.name = name or f"t ↦ ({P.to_str(self.num, 't')})/({P.to_str(self.den, 't')})"

    def __call__(self, t):
        t = Fraction(t)
        d = P.evaluate(self.den, t)
        if d == 0:
            raise DomainViolation(f"{self.name} undefined at {t}")
        return Fraction(P.evaluate(self.num, t)) / d

    def compose(self, num, den):
        dn, dd = max(P.degree(self.num), 0), max(P.degree(self.den), 0)
        a, _ = P.homogenize(self.num, num, den)
        b, _ = P.homogenize(self.den, num, den)
        if not b:
            raise DomainViolation(f"{self.name}: denominator vanishes identically along the sequence")
        top = P.mul(a, P.power(den, dd))
        bottom = P.mul(b, P.power(den, dn))
        return top, bottom, P.root_bound(b)


class Piecewise(RealFunction):
    """Rational pieces on [b_{i-1}, b_i); pieces[0] covers (-inf, b_1)."""

    def __init__(self, breakpoints: Sequence, pieces: Sequence[RealFunction], name: str | None = None):
        self.breakpoints = [Fraction(b) for b in breakpoints]
        if sorted(self.breakpoints) != self.breakpoints:
            raise ValueError("breakpoints must be increasing")
        if len(pieces) != len(self.breakpoints) + 1:
            raise ValueError("need one more piece than breakpoints")
        self.pieces = list(pieces)
        self.name = name or "piecewise"

    def _index(self, t: Fraction) -> int:
        i = 0
        while i < len(self.breakpoints) and t >= self.breakpoints[i]:
            i += 1
        return i

    def __call__(self, t):
        t = Fraction(t)
        return self.pieces[self._index(t)](t)

    def compose(self, num, den):
        valid = P.root_bound(den)
        i = 0
        for b in self.breakpoints:
            diff = P.sub(num, P.scale(den, b))
            # sign of num/den - b for large n
            s = P.eventual_sign(diff) * P.eventual_sign(den)
            valid = max(valid, P.root_bound(diff))
            if s >= 0:
                i += 1
            else:
                break
        inner = self.pieces[i].compose(num, den)
        if inner is None:
            return None
        top, bottom, v = inner
        return top, bottom, max(valid, v)


class _Abs(RealFunction):
    name = "abs"

    def __call__(self, t):
        return abs(Fraction(t))

    def compose(self, num, den):
        s = P.eventual_sign(num) * P.eventual_sign(den)
        return (P.neg(num) if s < 0 else num), den, max(P.root_bound(num), P.root_bound(den))


class Lambda(RealFunction):
    """An arbitrary rational-valued callback; lifts only to opaque sequences."""

    def __init__(self, fn: Callable, name: str = "λ"):
        self.fn = fn
        self.name = name

    def __call__(self, t):
        try:
            return Fraction(self.fn(Fraction(t)))
        except (ZeroDivisionError, ValueError, ArithmeticError) as exc:
            raise DomainViolation(f"{self.name} undefined at {t}: {exc}") from exc


ABS = _Abs()
IDENTITY = Polynomial([0, 1], name="id")
SQUARE = Polynomial([0, 0, 1], name="sq")
ONE = Polynomial([1], name="one")


def minimum(c) -> Piecewise:
    c = Fraction(c)
    return Piecewise([c], [IDENTITY, Polynomial([c])], name=f"min(·, {c})")


def maximum(c) -> Piecewise:
    c = Fraction(c)
    return Piecewise([c], [Polynomial([c]), IDENTITY], name=f"max(·, {c})")


REGISTRY: dict[str, RealFunction] = {
    "abs": ABS,
    "id": IDENTITY,
    "sq": SQUARE,
    "one": ONE,
}


def lookup(name: str) -> RealFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise DomainViolation(f"unregistered function {name!r}; known: {sorted(REGISTRY)}") from None
