"""Bounded formulas over hyperfinite sets, and their evaluation in the hyperreal universe.

A formula holds of hyperreal arguments when the set of levels n at which it is
true (with each argument replaced by its value at n and every quantifier
ranging over the level-n set) is qualified.  Whenever the shape of the formula
allows it, that level set is classified exactly, so the oracle answers
without sampling.  Formulas are written as s-expressions::

    (forall x A (>= x 0))
    (exists x A (= (* x x) 2))
    (and (< eps 1/1000) (not (= w 0)))
"""

from __future__ import annotations

import json
import math
import re
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping

from . import _poly as P
from .errors import ContextMismatch, DomainViolation, LambdaError, ParseError
from .exprparse import evaluate_hyperreal
from .hyperreal import Hyperreal, SequenceRep, _apply_rep, _binary, _compare_tail
from .internal import HyperfiniteSet, level_contains
from .oracle import MAX_PATTERN, UNKNOWN, SetDescriptor, Tail, UltrafilterOracle
from .realfunc import REGISTRY, Polynomial, RealFunction, maximum, minimum

# -- syntax tree ----------------------------------------------------------------


class Term:
    def free_vars(self) -> frozenset:
        return frozenset()


@dataclass(frozen=True)
class Const(Term):
    value: Fraction

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Var(Term):
    name: str

    def free_vars(self):
        return frozenset((self.name,))

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Arith(Term):
    op: str  # + - * / min max
    left: Term
    right: Term

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def __str__(self):
        return f"({self.op} {self.left} {self.right})"


@dataclass(frozen=True)
class Neg(Term):
    arg: Term

    def free_vars(self):
        return self.arg.free_vars()

    def __str__(self):
        return f"(- {self.arg})"


@dataclass(frozen=True)
class Pow(Term):
    base: Term
    k: int

    def free_vars(self):
        return self.base.free_vars()

    def __str__(self):
        return f"(^ {self.base} {self.k})"


@dataclass(frozen=True)
class Apply(Term):
    fn: RealFunction
    fn_name: str
    arg: Term

    def free_vars(self):
        return self.arg.free_vars()

    def __str__(self):
        return f"({self.fn_name} {self.arg})"


class Formula:
    def free_vars(self) -> frozenset:
        return frozenset()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Bool(Formula):
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    left: Term
    right: Term

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def __str__(self):
        return f"({self.op} {self.left} {self.right})"


@dataclass(frozen=True)
class And(Formula):
    parts: tuple

    def free_vars(self):
        return frozenset().union(*(p.free_vars() for p in self.parts))

    def __str__(self):
        return "(and " + " ".join(map(str, self.parts)) + ")"


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple

    def free_vars(self):
        return frozenset().union(*(p.free_vars() for p in self.parts))

    def __str__(self):
        return "(or " + " ".join(map(str, self.parts)) + ")"


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def free_vars(self):
        return self.arg.free_vars()

    def __str__(self):
        return f"(not {self.arg})"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def __str__(self):
        return f"(implies {self.left} {self.right})"


@dataclass(frozen=True)
class Quant(Formula):
    kind: str  # forall | exists
    var: str
    domain: HyperfiniteSet
    domain_name: str
    body: Formula

    def free_vars(self):
        return self.body.free_vars() - {self.var}

    def __str__(self):
        return f"({self.kind} {self.var} {self.domain_name} {self.body})"


def forall(var: str, domain: HyperfiniteSet, body: Formula, name: str | None = None) -> Quant:
    return Quant("forall", var, domain, name or domain.label, body)


def exists(var: str, domain: HyperfiniteSet, body: Formula, name: str | None = None) -> Quant:
    return Quant("exists", var, domain, name or domain.label, body)


def const(c) -> Const:
    return Const(Fraction(c))


# -- s-expression parser -------------------------------------------------------

_ATOM = re.compile(r"\(|\)|[^\s()]+")
_NUMBER = re.compile(r"^-?\d+(?:/\d+|\.\d+)?$")


def _read(tokens: list[str], i: int):
    if i >= len(tokens):
        raise ParseError("unexpected end of formula")
    tok = tokens[i]
    if tok == ")":
        raise ParseError("unbalanced ')'")
    if tok != "(":
        return tok, i + 1
    out, i = [], i + 1
    while True:
        if i >= len(tokens):
            raise ParseError("missing ')'")
        if tokens[i] == ")":
            return out, i + 1
        item, i = _read(tokens, i)
        out.append(item)


def read_sexpr(text: str):
    tokens = _ATOM.findall(text)
    if not tokens:
        raise ParseError("empty formula")
    tree, end = _read(tokens, 0)
    if end != len(tokens):
        raise ParseError(f"trailing input after formula: {' '.join(tokens[end:])}")
    return tree


class FormulaParser:
    """Builds formulas from s-expressions, resolving set names through ``sets``."""

    def __init__(self, sets: Mapping[str, HyperfiniteSet], functions: Mapping[str, RealFunction] = REGISTRY):
        self.sets = sets
        self.functions = functions

    def parse(self, text: str) -> Formula:
        return self.formula(read_sexpr(text))

    def formula(self, e) -> Formula:
        if isinstance(e, str):
            if e in ("true", "false"):
                return Bool(e == "true")
            raise ParseError(f"expected a formula, found {e!r}")
        if not e:
            raise ParseError("empty list")
        head, args = e[0], e[1:]
        if head in CMP_OPS:
            self._arity(head, args, 2)
            return Cmp(head, self.term(args[0]), self.term(args[1]))
        if head in ("and", "or"):
            if not args:
                raise ParseError(f"({head}) needs arguments")
            parts = tuple(self.formula(a) for a in args)
            return And(parts) if head == "and" else Or(parts)
        if head == "not":
            self._arity(head, args, 1)
            return Not(self.formula(args[0]))
        if head in ("implies", "=>"):
            self._arity(head, args, 2)
            return Implies(self.formula(args[0]), self.formula(args[1]))
        if head in ("forall", "exists"):
            self._arity(head, args, 3)
            var, name, body = args
            if not isinstance(var, str) or not isinstance(name, str):
                raise ParseError(f"({head} VAR SET BODY) expects names for VAR and SET")
            if name not in self.sets:
                raise ParseError(f"unknown set {name!r}")
            return Quant(head, var, self.sets[name], name, self.formula(body))
        raise ParseError(f"unknown connective {head!r}")

    def term(self, e) -> Term:
        if isinstance(e, str):
            if _NUMBER.match(e):
                return Const(Fraction(e))
            if e in self.sets:
                raise ParseError(f"set {e!r} used as a number")
            return Var(e)
        if not e:
            raise ParseError("empty list")
        head, args = e[0], e[1:]
        if head == "-" and len(args) == 1:
            return Neg(self.term(args[0]))
        if head in ("+", "*", "-", "/", "min", "max"):
            if len(args) < 2:
                raise ParseError(f"({head}) needs two or more arguments")
            out = self.term(args[0])
            for a in args[1:]:
                out = Arith(head, out, self.term(a))
            return out
        if head == "^":
            self._arity(head, args, 2)
            if not isinstance(args[1], str) or not args[1].isdigit():
                raise ParseError("exponent must be a nonnegative integer literal")
            return Pow(self.term(args[0]), int(args[1]))
        if isinstance(head, str) and head in self.functions:
            self._arity(head, args, 1)
            return Apply(self.functions[head], head, self.term(args[0]))
        raise ParseError(f"unknown function {head!r}")

    @staticmethod
    def _arity(head, args, k):
        if len(args) != k:
            raise ParseError(f"({head}) takes {k} argument(s), got {len(args)}")


def parse_formula(text: str, sets: Mapping[str, HyperfiniteSet] | None = None) -> Formula:
    return FormulaParser(sets or {}).parse(text)


# -- evaluation at a single level ---------------------------------------------

_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "min": min,
    "max": max,
}


def _divide(a, b):
    if b == 0:
        raise DomainViolation("division by zero inside a formula")
    return a / b


_ARITH["/"] = _divide

_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

_FLIP = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}

LevelFn = Callable[[dict, int], object]


def _fold(t: Term) -> Term:
    """Replace a variable-free term by its value; leave it alone if evaluating it fails."""
    if isinstance(t, Const) or t.free_vars():
        return t
    try:
        return Const(Fraction(_compile_term(t)({}, 0)))
    except LambdaError:
        return t


def compile_term(t: Term) -> LevelFn:
    return _compile_term(_fold(t))


def _compile_term(t: Term) -> LevelFn:
    if isinstance(t, Const):
        v = t.value
        return lambda env, n: v
    if isinstance(t, Var):
        name = t.name
        return lambda env, n: env[name]
    if isinstance(t, Arith):
        f, a, b = _ARITH[t.op], compile_term(t.left), compile_term(t.right)
        return lambda env, n: f(a(env, n), b(env, n))
    if isinstance(t, Neg):
        a = compile_term(t.arg)
        return lambda env, n: -a(env, n)
    if isinstance(t, Pow):
        a, k = compile_term(t.base), t.k
        return lambda env, n: a(env, n) ** k
    if isinstance(t, Apply):
        fn, a = t.fn, compile_term(t.arg)
        return lambda env, n: fn(a(env, n))
    raise TypeError(f"not a term: {t!r}")


def _bound_comparison(q: Quant):
    """Recognize (Q x S (op x t)) with t free of x; returns (op, t) oriented as x op t."""
    body = q.body
    if not isinstance(body, Cmp):
        return None
    if body.left == Var(q.var) and q.var not in body.right.free_vars():
        return body.op, body.right
    if body.right == Var(q.var) and q.var not in body.left.free_vars():
        return _FLIP[body.op], body.left
    diff = _linear(Arith("-", body.left, body.right), q.var)
    if diff is None or diff[0] == 0:
        return None
    a, rest = diff
    # a*x + rest op 0  <=>  x op' -rest/a
    op = body.op if a > 0 else _FLIP[body.op]
    return op, Arith("*", rest, Const(-1 / a))


def _linear(t: Term, var: str) -> tuple[Fraction, Term] | None:
    """(a, r) with t = a*var + r and r free of var, when t has that shape."""
    if var not in t.free_vars():
        return Fraction(0), t
    if t == Var(var):
        return Fraction(1), Const(Fraction(0))
    if isinstance(t, Neg):
        inner = _linear(t.arg, var)
        return None if inner is None else (-inner[0], Neg(inner[1]))
    if isinstance(t, Arith) and t.op in ("+", "-"):
        a, b = _linear(t.left, var), _linear(t.right, var)
        if a is None or b is None:
            return None
        if t.op == "+":
            return a[0] + b[0], Arith("+", a[1], b[1])
        return a[0] - b[0], Arith("-", a[1], b[1])
    if isinstance(t, Arith) and t.op in ("*", "/"):
        left, right = _fold(t.left), _fold(t.right)
        if t.op == "*" and isinstance(left, Const):
            left, right = right, left
        if not isinstance(right, Const) or (t.op == "/" and right.value == 0):
            return None
        inner = _linear(left, var)
        if inner is None:
            return None
        k = right.value if t.op == "*" else 1 / right.value
        return inner[0] * k, Arith("*", inner[1], Const(k))
    return None


def as_polynomial(t: Term, var: str, constants: Mapping[str, Fraction] = {}) -> P.Poly | None:
    """t as a polynomial in ``var`` with rational coefficients, if it is one."""
    t = _fold(t)
    if isinstance(t, Const):
        return P.const(t.value)
    if isinstance(t, Var):
        if t.name == var:
            return P.X
        return P.const(constants[t.name]) if t.name in constants else None
    if isinstance(t, Neg):
        a = as_polynomial(t.arg, var, constants)
        return None if a is None else P.neg(a)
    if isinstance(t, Pow):
        a = as_polynomial(t.base, var, constants)
        return None if a is None else P.power(a, t.k)
    if isinstance(t, Arith) and t.op in ("+", "-", "*", "/"):
        a, b = as_polynomial(t.left, var, constants), as_polynomial(t.right, var, constants)
        if a is None or b is None:
            return None
        if t.op == "+":
            return P.add(a, b)
        if t.op == "-":
            return P.sub(a, b)
        if t.op == "*":
            return P.mul(a, b)
        if P.degree(b) == 0:
            return P.scale(a, 1 / b[0])
        return None
    if isinstance(t, Apply) and isinstance(t.fn, Polynomial):
        a = as_polynomial(t.arg, var, constants)
        return None if a is None else P.compose(t.fn.coeffs, a)
    return None


def _root_equation(q: Quant):
    """Recognize a body (= l r) where l - r is a fixed polynomial in the bound variable."""
    body = q.body
    if not isinstance(body, Cmp) or body.op != "=":
        return None
    if body.free_vars() - {q.var}:
        return None
    left, right = as_polynomial(body.left, q.var), as_polynomial(body.right, q.var)
    if left is None or right is None:
        return None
    return P.sub(left, right)


def compile_formula(p: Formula) -> LevelFn:
    if isinstance(p, Bool):
        v = p.value
        return lambda env, n: v
    if isinstance(p, Cmp):
        f, a, b = _CMP[p.op], compile_term(p.left), compile_term(p.right)
        return lambda env, n: f(a(env, n), b(env, n))
    if isinstance(p, And):
        parts = [compile_formula(q) for q in p.parts]
        return lambda env, n: all(q(env, n) for q in parts)
    if isinstance(p, Or):
        parts = [compile_formula(q) for q in p.parts]
        return lambda env, n: any(q(env, n) for q in parts)
    if isinstance(p, Not):
        a = compile_formula(p.arg)
        return lambda env, n: not a(env, n)
    if isinstance(p, Implies):
        a, b = compile_formula(p.left), compile_formula(p.right)
        return lambda env, n: (not a(env, n)) or b(env, n)
    if isinstance(p, Quant):
        return _compile_quant(p)
    raise TypeError(f"not a formula: {p!r}")


def _split(q: Quant) -> Formula | None:
    """Distribute forall over and, exists over or."""
    body, universal = q.body, q.kind == "forall"
    if universal and isinstance(body, And):
        return And(tuple(Quant(q.kind, q.var, q.domain, q.domain_name, b) for b in body.parts))
    if not universal and isinstance(body, Or):
        return Or(tuple(Quant(q.kind, q.var, q.domain, q.domain_name, b) for b in body.parts))
    return None


def _interval_body(q: Quant):
    """Recognize exists x in S (and (x op t) ...) with every op an order comparison."""
    if q.kind != "exists" or not isinstance(q.body, And):
        return None
    bounds = []
    for part in q.body.parts:
        shortcut = _bound_comparison(Quant(q.kind, q.var, q.domain, q.domain_name, part))
        if shortcut is None or shortcut[0] in ("=", "!="):
            return None
        bounds.append((shortcut[0], compile_term(shortcut[1])))
    return bounds


def _compile_interval(S: HyperfiniteSet, bounds) -> LevelFn:
    def run(env, n):
        lo, lo_strict, hi, hi_strict = None, False, None, False
        for op, tf in bounds:
            v = tf(env, n)
            if op in (">", ">="):
                if lo is None or v > lo or (v == lo and op == ">"):
                    lo, lo_strict = v, op == ">"
            elif hi is None or v < hi or (v == hi and op == "<"):
                hi, hi_strict = v, op == "<"
        elems = S.at_level(n)
        i = 0 if lo is None else (bisect_right if lo_strict else bisect_left)(elems, lo)
        if i >= len(elems):
            return False
        return hi is None or (elems[i] < hi if hi_strict else elems[i] <= hi)
    return run


def _compile_quant(q: Quant) -> LevelFn:
    split = _split(q)
    if split is not None:
        return compile_formula(split)
    S, var, universal = q.domain, q.var, q.kind == "forall"
    bounds = _interval_body(q)
    if bounds is not None:
        return _compile_interval(S, bounds)
    shortcut = _bound_comparison(q)
    if shortcut is not None:
        op, t = shortcut
        cmp, tf = _CMP[op], compile_term(t)
        # x op t over a sorted set is decided by one extreme element (or two, for = and !=)
        if op in ("<", "<="):
            pick = (lambda e: e[-1]) if universal else (lambda e: e[0])
        elif op in (">", ">="):
            pick = (lambda e: e[0]) if universal else (lambda e: e[-1])
        else:
            pick = None

        def run(env, n):
            elems = S.at_level(n)
            if not len(elems):
                return universal
            v = tf(env, n)
            if pick is not None:
                return cmp(pick(elems), v)
            hit = level_contains(S, n, v)
            if op == "=":
                return (len(elems) == 1 and hit) if universal else hit
            return (not hit) if universal else (len(elems) > 1 or not hit)
        return run

    poly = _root_equation(q)
    if poly is not None:
        roots = None if not poly else P.rational_roots(poly)
        if not poly:
            return lambda env, n: universal or bool(len(S.at_level(n)))
        if roots is not None:
            def run(env, n):
                hits = sum(level_contains(S, n, r) for r in roots)
                return hits == len(S.at_level(n)) if universal else hits > 0
            return run

    body = compile_formula(q.body)

    def run(env, n):
        inner = dict(env)
        for a in S.at_level(n):
            inner[var] = a
            if body(inner, n) != universal:
                return not universal
        return universal
    return run


# -- exact classification -------------------------------------------------------


def _term_rep(t: Term, reps: Mapping[str, SequenceRep]) -> SequenceRep | None:
    if isinstance(t, Const):
        return SequenceRep.constant(t.value)
    if isinstance(t, Var):
        return reps.get(t.name)
    if isinstance(t, Neg):
        a = _term_rep(t.arg, reps)
        return None if a is None else _binary(SequenceRep.constant(0), a, "-", str(t))
    if isinstance(t, Pow):
        a = _term_rep(t.base, reps)
        if a is None:
            return None
        out = SequenceRep.constant(1)
        for _ in range(t.k):
            out = _binary(out, a, "*", str(t))
        return out
    if isinstance(t, Apply):
        a = _term_rep(t.arg, reps)
        return None if a is None else _apply_rep(t.fn, a, str(t))
    if isinstance(t, Arith):
        a, b = _term_rep(t.left, reps), _term_rep(t.right, reps)
        if a is None or b is None:
            return None
        if t.op in ("+", "-", "*"):
            return _binary(a, b, t.op, str(t))
        if t.op == "/":
            if not b.is_constant or b(0) == 0:
                return None
            return _binary(a, SequenceRep.constant(1 / b(0)), "*", str(t))
        fn = minimum(0) if t.op == "min" else maximum(0)
        # min(a, b) = a + min(b - a, 0)
        return _binary(a, _apply_rep(fn, _binary(b, a, "-", "d"), "d"), "+", str(t))
    return None


def _cmp_tail(op: str, a: SequenceRep, b: SequenceRep) -> Tail | None:
    if op in ("=", "!="):
        t = _compare_tail(a, b, "eq")
        return t if t is None or op == "=" else ~t
    if op in (">", "<="):
        a, b = b, a
    t = _compare_tail(a, b, "lt")  # a < b, after orientation
    if t is None:
        return None
    return t if op in ("<", ">") else ~t


def _combine(tails, how: str) -> Tail | None:
    out = Tail(0, (how == "and",))
    for t in tails:
        if t is None or math.lcm(out.period, t.period) > MAX_PATTERN:
            return None
        out = out & t if how == "and" else out | t
    return out


def _exact_tail(p: Formula, reps: Mapping[str, SequenceRep]) -> Tail | None:
    if isinstance(p, Bool):
        return Tail(0, (p.value,))
    if isinstance(p, Cmp):
        a, b = _term_rep(p.left, reps), _term_rep(p.right, reps)
        return None if a is None or b is None else _cmp_tail(p.op, a, b)
    if isinstance(p, And):
        return _combine([_exact_tail(q, reps) for q in p.parts], "and")
    if isinstance(p, Or):
        return _combine([_exact_tail(q, reps) for q in p.parts], "or")
    if isinstance(p, Not):
        t = _exact_tail(p.arg, reps)
        return None if t is None else ~t
    if isinstance(p, Implies):
        a = _exact_tail(p.left, reps)
        return None if a is None else _combine([~a, _exact_tail(p.right, reps)], "or")
    if isinstance(p, Quant):
        return _exact_quant(p, reps)
    return None


def _exact_quant(q: Quant, reps: Mapping[str, SequenceRep]) -> Tail | None:
    split = _split(q)
    if split is not None:
        return _exact_tail(split, reps)
    S, universal = q.domain, q.kind == "forall"
    if S.card is None:
        return None
    nonempty = _cmp_tail("<", SequenceRep.constant(0), S.card)
    if nonempty is None:
        return None
    if q.var not in q.body.free_vars():
        body = _exact_tail(q.body, reps)
        return _combine([~nonempty, body], "or") if universal else _combine([nonempty, body], "and")

    shortcut = _bound_comparison(q)
    if shortcut is not None and S.lo is not None and S.hi is not None:
        op, t = shortcut
        rt = _term_rep(t, reps)
        if rt is not None and op not in ("=", "!="):
            if op in ("<", "<="):
                extreme = S.hi if universal else S.lo
            else:
                extreme = S.lo if universal else S.hi
            holds = _cmp_tail(op, extreme, rt)
            return _combine([~nonempty, holds], "or") if universal else _combine([nonempty, holds], "and")

    poly = _root_equation(q)
    if poly is not None:
        if not poly:
            return Tail(0, (True,)) if universal else nonempty
        roots = P.rational_roots(poly)
        if roots is None:
            return None
        if not roots:
            return ~nonempty if universal else Tail(0, (False,))
        if universal:
            return None
        return _combine([S.member_tail(r) for r in roots], "or")
    return None


# -- public entry points ----------------------------------------------------------


def _level_independent(p: Formula, reps: Mapping[str, SequenceRep]) -> bool:
    if not all(r.is_constant for r in reps.values()):
        return False

    def sets(f):
        if isinstance(f, Quant):
            yield f.domain
            yield from sets(f.body)
        elif isinstance(f, (And, Or)):
            for g in f.parts:
                yield from sets(g)
        elif isinstance(f, Not):
            yield from sets(f.arg)
        elif isinstance(f, Implies):
            yield from sets(f.left)
            yield from sets(f.right)
    return all(S.constant for S in sets(p))


def _resolve(p: Formula, assignment: Mapping[str, Hyperreal] | None, ctx):
    assignment = dict(assignment or {})
    missing = p.free_vars() - set(assignment)
    if missing:
        raise ParseError(f"free variables without values: {sorted(missing)}")
    ctxs = {id(v.ctx): v.ctx for v in assignment.values()}
    if ctx is not None:
        ctxs.setdefault(id(ctx), ctx)
    if len(ctxs) > 1:
        raise ContextMismatch("formula arguments come from different oracles")
    if not ctxs:
        raise ContextMismatch("no oracle: pass ctx= for a sentence without arguments")
    used = {k: assignment[k] for k in sorted(p.free_vars())}
    return used, next(iter(ctxs.values()))


def formula_set(p: Formula, assignment: Mapping[str, Hyperreal] | None = None,
                ctx: UltrafilterOracle | None = None) -> SetDescriptor:
    """The index set {n : p holds at level n}."""
    used, _ = _resolve(p, assignment, ctx)
    reps = {k: v.rep for k, v in used.items()}
    run = compile_formula(p)

    def at(n: int) -> bool:
        return bool(run({k: r(n) for k, r in reps.items()}, n))

    if _level_independent(p, reps):
        classification = Tail(0, (at(0),))
    else:
        tail = _exact_tail(p, reps)
        classification = tail if tail is not None else UNKNOWN
    where = ", ".join(f"{k}={r.label}" for k, r in reps.items())
    label = f"{{n : {p}" + (f" | {where}" if where else "") + "}"
    return SetDescriptor(at, classification, label)


def transfer_eval(p: Formula, assignment: Mapping[str, Hyperreal] | None = None,
                  ctx: UltrafilterOracle | None = None) -> bool:
    """Whether p holds on a qualified set of levels."""
    _, oracle = _resolve(p, assignment, ctx)
    return oracle.is_qualified(formula_set(p, assignment, oracle))


def evaluate_standard(p: Formula, values: Mapping[str, Fraction] | None = None) -> bool:
    """Direct evaluation at level 0, i.e. in the standard universe when all data is level-constant."""
    env = {k: Fraction(v) for k, v in (values or {}).items()}
    return bool(compile_formula(p)(env, 0))


# -- formula files -------------------------------------------------------------


@dataclass
class FormulaFile:
    sets: dict
    hyperreals: dict
    sentences: list  # (line number, source text, Formula)


def _set_from_entry(name: str, entry, ctx) -> HyperfiniteSet:
    if not isinstance(entry, dict) or len(entry) != 1:
        raise ParseError(f"set {name!r}: expected an object with one of range/grid/finite")
    (kind, args), = entry.items()

    def rep(v):
        return evaluate_hyperreal(str(v), ctx).rep

    if kind == "range":
        lo, hi = args
        return HyperfiniteSet.integer_range(rep(lo), rep(hi), label=name)
    if kind == "grid":
        lo, hi, den = args
        return HyperfiniteSet.grid(rep(lo), rep(hi), rep(den), label=name)
    if kind == "finite":
        return HyperfiniteSet.constant_set([Fraction(str(v)) for v in args], label=name)
    raise ParseError(f"set {name!r}: unknown kind {kind!r}")


def parse_formula_file(text: str, ctx: UltrafilterOracle) -> FormulaFile:
    """A JSON preamble declaring ``sets`` and ``hyperreals``, then one sentence per line.

    Blank lines and lines starting with ``;`` or ``#`` are ignored.
    """
    stripped = text.lstrip()
    preamble, body_start = {}, 0
    if stripped.startswith("{"):
        try:
            preamble, end = json.JSONDecoder().raw_decode(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON preamble: {exc}") from None
        body_start = (len(text) - len(stripped)) + end
    unknown = set(preamble) - {"sets", "hyperreals"}
    if unknown:
        raise ParseError(f"unknown preamble keys: {sorted(unknown)}")
    sets = {k: _set_from_entry(k, v, ctx) for k, v in preamble.get("sets", {}).items()}
    hyperreals = {}
    for k, v in preamble.get("hyperreals", {}).items():
        hyperreals[k] = evaluate_hyperreal(str(v), ctx, hyperreals)
    parser = FormulaParser(sets)
    first_line = text[:body_start].count("\n") + 1
    sentences = []
    for offset, line in enumerate(text[body_start:].split("\n")):
        src = line.strip()
        if not src or src.startswith((";", "#")):
            continue
        try:
            sentences.append((first_line + offset, src, parser.parse(src)))
        except ParseError as exc:
            raise ParseError(f"line {first_line + offset}: {exc}") from None
    return FormulaFile(sets, hyperreals, sentences)


def check_file(path: str | Path, ctx: UltrafilterOracle) -> list[dict]:
    """Evaluate every sentence of a formula file; one result record per sentence."""
    ff = parse_formula_file(Path(path).read_text(), ctx)
    out = []
    for line, src, formula in ff.sentences:
        desc = formula_set(formula, ff.hyperreals, ctx)
        value = ctx.is_qualified(desc)
        out.append({"line": line, "formula": src, "value": value, "exact": desc.exact})
    return out
