"""Random bounded formulas as nested tuples, plus a direct evaluator over exact rationals.

The evaluator works on the tuples, not on parsed ASTs, so it is independent of the
compiler under test.
"""

from fractions import Fraction

from hypothesis import strategies as st

CONSTS = [Fraction(0), Fraction(1), Fraction(2), Fraction(-1), Fraction(1, 2), Fraction(5), Fraction(4)]
CMPS = ["=", "!=", "<", "<=", ">", ">="]


def render(e) -> str:
    if isinstance(e, Fraction):
        return str(e)
    if isinstance(e, str):
        return e
    return "(" + " ".join(render(a) for a in e) + ")"


def terms(variables):
    leaves = st.sampled_from(CONSTS) | st.sampled_from(sorted(variables)) if variables else st.sampled_from(CONSTS)
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*", "min", "max"]), inner, inner),
            st.tuples(st.sampled_from(["sq", "abs"]), inner),
        ),
        max_leaves=4,
    )


@st.composite
def formulas(draw, variables=frozenset(), sets=("F",), depth=2):
    variables = frozenset(variables)
    kinds = ["cmp", "cmp"]
    if depth > 0:
        kinds += ["and", "or", "not", "implies", "quant"]
    kind = draw(st.sampled_from(kinds))
    if kind == "cmp":
        return (draw(st.sampled_from(CMPS)), draw(terms(variables)), draw(terms(variables)))
    sub = lambda v=variables: formulas(v, sets, depth - 1)  # noqa: E731
    if kind == "not":
        return ("not", draw(sub()))
    if kind in ("and", "or", "implies"):
        return (kind, draw(sub()), draw(sub()))
    var = "x" if "x" not in variables else "z"
    q = draw(st.sampled_from(["forall", "exists"]))
    return (q, var, draw(st.sampled_from(sets)), draw(sub(variables | {var})))


def evaluate(e, env, sets):
    """Truth of a formula tuple with exact arithmetic; sets maps names to finite lists."""
    head = e[0]
    if head in CMPS:
        a, b = term(e[1], env), term(e[2], env)
        return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[head]
    if head == "not":
        return not evaluate(e[1], env, sets)
    if head == "and":
        return evaluate(e[1], env, sets) and evaluate(e[2], env, sets)
    if head == "or":
        return evaluate(e[1], env, sets) or evaluate(e[2], env, sets)
    if head == "implies":
        return (not evaluate(e[1], env, sets)) or evaluate(e[2], env, sets)
    _, var, S, body = e
    results = (evaluate(body, {**env, var: Fraction(v)}, sets) for v in sets[S])
    return all(results) if head == "forall" else any(results)


def term(e, env):
    if isinstance(e, Fraction):
        return e
    if isinstance(e, str):
        return env[e]
    op, *args = e
    vals = [term(a, env) for a in args]
    if op == "sq":
        return vals[0] ** 2
    if op == "abs":
        return abs(vals[0])
    a, b = vals
    return {"+": a + b, "-": a - b, "*": a * b, "min": min(a, b), "max": max(a, b)}[op]


def random_term(rng, variables, depth=2):
    """Seeded counterpart of :func:`terms` for fixed-size suites."""
    r = rng.random()
    if depth == 0 or r < 0.4:
        if variables and rng.random() < 0.5:
            return rng.choice(sorted(variables))
        return rng.choice(CONSTS)
    if r < 0.8:
        return (rng.choice(["+", "-", "*", "min", "max"]), random_term(rng, variables, depth - 1),
                random_term(rng, variables, depth - 1))
    return (rng.choice(["sq", "abs"]), random_term(rng, variables, depth - 1))


def random_formula(rng, variables=frozenset(), sets=("F",), depth=2):
    variables = frozenset(variables)
    kinds = ["cmp", "cmp"] + (["and", "or", "not", "implies", "quant"] if depth > 0 else [])
    kind = rng.choice(kinds)
    if kind == "cmp":
        return (rng.choice(CMPS), random_term(rng, variables), random_term(rng, variables))
    if kind == "not":
        return ("not", random_formula(rng, variables, sets, depth - 1))
    if kind in ("and", "or", "implies"):
        return (kind, random_formula(rng, variables, sets, depth - 1), random_formula(rng, variables, sets, depth - 1))
    var = "x" if "x" not in variables else "z"
    return (rng.choice(["forall", "exists"]), var, rng.choice(sets),
            random_formula(rng, variables | {var}, sets, depth - 1))

