"""Dense univariate polynomials over the rationals.

A polynomial is a tuple of ``Fraction`` coefficients, lowest degree first,
with no trailing zeros; the zero polynomial is ``()``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

Poly = tuple

ZERO: Poly = ()
ONE: Poly = (Fraction(1),)
X: Poly = (Fraction(0), Fraction(1))


def poly(coeffs: Iterable) -> Poly:
    cs = [Fraction(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def const(c) -> Poly:
    return poly([c])


def degree(p: Poly) -> int:
    return len(p) - 1


def lead(p: Poly) -> Fraction:
    return p[-1] if p else Fraction(0)


def add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly((p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n))


def neg(p: Poly) -> Poly:
    return tuple(-c for c in p)


def sub(p: Poly, q: Poly) -> Poly:
    return add(p, neg(q))


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ZERO
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly(out)


def scale(p: Poly, c) -> Poly:
    return poly(a * c for a in p)


def power(p: Poly, k: int) -> Poly:
    out = ONE
    for _ in range(k):
        out = mul(out, p)
    return out


def evaluate(p: Poly, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def compose(f: Poly, g: Poly) -> Poly:
    """Return f(g(x))."""
    out = ZERO
    for c in reversed(f):
        out = add(mul(out, g), const(c))
    return out


def homogenize(f: Poly, num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Write f(num/den) as a quotient of polynomials: (sum c_i num^i den^(d-i), den^d)."""
    d = max(degree(f), 0)
    top = ZERO
    for i, c in enumerate(f):
        top = add(top, scale(mul(power(num, i), power(den, d - i)), c))
    return top, power(den, d)


def root_bound(p: Poly) -> int:
    """An integer B such that p has no real root x with |x| >= B (Cauchy bound)."""
    if degree(p) <= 0:
        return 0
    a = lead(p)
    return math.floor(1 + max(abs(c / a) for c in p[:-1])) + 1


def eventual_sign(p: Poly) -> int:
    """Sign of p(n) as n -> +infinity."""
    if not p:
        return 0
    return 1 if p[-1] > 0 else -1


def derivative(p: Poly) -> Poly:
    return poly(i * c for i, c in enumerate(p) if i)


def _divisors(k: int, limit: int = 10**6) -> list[int] | None:
    k = abs(k)
    if k > limit * limit:
        return None
    out = []
    i = 1
    while i * i <= k:
        if k % i == 0:
            out.append(i)
            if i != k // i:
                out.append(k // i)
        i += 1
    return out


def rational_roots(p: Poly) -> list[Fraction] | None:
    """All rational roots of a nonzero p, or None when the coefficients are too large."""
    if not p:
        raise ValueError("zero polynomial has every root")
    roots = []
    cs = list(p)
    if cs[0] == 0:
        roots.append(Fraction(0))
        while cs and cs[0] == 0:
            cs.pop(0)
    if len(cs) <= 1:
        return roots
    lcm = 1
    for c in cs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in cs]
    num_divs = _divisors(ints[0])
    den_divs = _divisors(ints[-1])
    if num_divs is None or den_divs is None:
        return None
    found = set()
    for a in num_divs:
        for b in den_divs:
            for r in (Fraction(a, b), Fraction(-a, b)):
                if r not in found and evaluate(poly(ints), r) == 0:
                    found.add(r)
    return sorted(set(roots) | found)


def faulhaber(j: int) -> Poly:
    """F with F(N) = sum_{k=0}^{N} k**j for integer N >= 0 (and F(N) - F(N-1) = N**j for all N)."""
    # Lagrange interpolation through j + 2 points.
    xs = list(range(j + 2))
    ys = []
    acc = Fraction(0)
    for x in xs:
        acc += Fraction(x) ** j
        ys.append(acc)
    out = ZERO
    for i, xi in enumerate(xs):
        basis = ONE
        denom = Fraction(1)
        for k, xk in enumerate(xs):
            if k != i:
                basis = mul(basis, poly([-xk, 1]))
                denom *= xi - xk
        out = add(out, scale(basis, ys[i] / denom))
    return out


def to_str(p: Poly, var: str = "n") -> str:
    if not p:
        return "0"
    terms = []
    for i in range(len(p) - 1, -1, -1):
        c = p[i]
        if c == 0:
            continue
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        if mono and abs(c) == 1:
            body = mono
        elif mono:
            body = f"{abs(c)}*{mono}"
        else:
            body = str(abs(c))
        sign = "-" if c < 0 else "+"
        terms.append((sign, body))
    first_sign, first = terms[0]
    s = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        s += f" {sign} {body}"
    return s


def divmod_poly(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    quo = [Fraction(0)] * max(len(p) - len(q) + 1, 0)
    rem = list(p)
    while len(rem) >= len(q) and rem:
        shift = len(rem) - len(q)
        c = rem[-1] / q[-1]
        quo[shift] = c
        for i, b in enumerate(q):
            rem[shift + i] -= c * b
        while rem and rem[-1] == 0:
            rem.pop()
    return poly(quo), poly(rem)


def gcd(p: Poly, q: Poly) -> Poly:
    while q:
        p, q = q, divmod_poly(p, q)[1]
    return scale(p, 1 / lead(p)) if p else ONE


def reduce_fraction(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Cancel common factors and make the denominator monic."""
    if not num:
        return ZERO, ONE
    g = gcd(num, den)
    if degree(g) > 0:
        num, den = divmod_poly(num, g)[0], divmod_poly(den, g)[0]
    c = lead(den)
    return scale(num, 1 / c), scale(den, 1 / c)


def nonneg_integer_roots(p: Poly) -> list[int] | None:
    """Integer roots n >= 0 of a nonzero p, or None if they cannot be enumerated."""
    if degree(p) <= 0:
        return []
    roots = rational_roots(p)
    if roots is None:
        return None
    return [int(r) for r in roots if r.denominator == 1 and r >= 0]
