"""Parser and evaluator for the hyperreal expression language used by ``hr eval``.

Grammar (loosest binding first)::

    expr   := sum (("==" | "<" | ">") sum)?
    sum    := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" INTEGER)?
    atom   := NUMBER | "omega" | "eps" | NAME | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := "st" | "abs"

Numbers are integers or decimals; ``p/q`` is ordinary division and folds to an
exact rational.  Standard subexpressions stay plain ``Fraction`` values so
they cost no oracle queries.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping, Union

from . import hyperreal as H
from .errors import DivisionByZero, DomainViolation, ParseError
from .hyperreal import Hyperreal
from .realfunc import ABS

GRAMMAR = __doc__.split("::", 1)[1].split("\n\n", 2)[1]

Value = Union[Fraction, Hyperreal, bool]

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_]\w*)|(==|[-+*/^()<>]))")


def tokenize(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos}")
        num, name, op = m.groups()
        out.append(("num", num) if num else ("name", name) if name else ("op", op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str, ctx, names: Mapping[str, Value]):
        self.tokens = tokenize(text)
        self.i = 0
        self.ctx = ctx
        self.names = names

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "")

    def take(self, value=None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}")
        if tok[0] == "eof":
            raise ParseError("unexpected end of input")
        self.i += 1
        return tok

    def parse(self) -> Value:
        v = self.expr()
        if self.peek()[0] != "eof":
            raise ParseError(f"unexpected token {self.peek()[1]!r}")
        return v

    def expr(self):
        left = self.sum()
        op = self.peek()[1]
        if op in ("==", "<", ">"):
            self.take()
            right = self.sum()
            a, b = self.lift(left), self.lift(right)
            if op == "==":
                return H.eq(a, b)
            return H.lt(a, b) if op == "<" else H.lt(b, a)
        return left

    def sum(self):
        v = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            w = self.term()
            v = self.arith(v, w, op)
        return v

    def term(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            w = self.unary()
            v = self.arith(v, w, op)
        return v

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.numeric(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, tok = self.take()
            if kind != "num" or not tok.isdigit():
                raise ParseError(f"exponent must be a nonnegative integer, found {tok!r}")
            k = int(tok)
            base = self.numeric(base)
            return base ** k if isinstance(base, Fraction) else H.power(base, k)
        return base

    def atom(self):
        kind, tok = self.take()
        if kind == "num":
            return Fraction(tok)
        if kind == "op" and tok == "(":
            v = self.expr()
            self.take(")")
            return v
        if kind == "name":
            if tok in ("st", "abs"):
                self.take("(")
                arg = self.numeric(self.expr())
                self.take(")")
                return self.apply(tok, arg)
            if tok == "omega":
                return H.omega(self.ctx)
            if tok == "eps":
                return H.inv(H.omega(self.ctx))
            if tok in self.names:
                return self.names[tok]
            raise ParseError(f"unknown name {tok!r}")
        raise ParseError(f"unexpected token {tok!r}")

    # -- evaluation helpers --

    def numeric(self, v):
        if isinstance(v, bool):
            raise ParseError("comparison result used as a number")
        return v

    def lift(self, v) -> Hyperreal:
        v = self.numeric(v)
        return v if isinstance(v, Hyperreal) else H.from_rational(v, self.ctx)

    def arith(self, a, b, op):
        a, b = self.numeric(a), self.numeric(b)
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            if op == "/" and b == 0:
                raise DivisionByZero("division by zero")
            return {"+": a.__add__, "-": a.__sub__, "*": a.__mul__, "/": a.__truediv__}[op](b)
        a, b = self.lift(a), self.lift(b)
        return {"+": H.add, "-": H.sub, "*": H.mul, "/": H.div}[op](a, b)

    def apply(self, fn, v):
        if fn == "abs":
            return abs(v) if isinstance(v, Fraction) else H.natural_extension_apply(ABS, v)
        if isinstance(v, Fraction):
            return v
        s = H.standard_part(v)
        if s is None:
            raise DomainViolation(f"{v.label} is infinite and has no standard part")
        return s


def evaluate(text: str, ctx, names: Mapping[str, Value] | None = None) -> Value:
    """Evaluate an expression; the result is a Fraction, a Hyperreal or a bool."""
    return _Parser(text, ctx, names or {}).parse()


def evaluate_hyperreal(text: str, ctx, names: Mapping[str, Value] | None = None) -> Hyperreal:
    v = evaluate(text, ctx, names)
    if isinstance(v, bool):
        raise ParseError(f"{text!r} is a comparison, not a number")
    return v if isinstance(v, Hyperreal) else H.from_rational(v, ctx)
