"""Registered real functions on (0, 1) for projection and quadrature.

Only registered functions may be projected: expressions in ``x`` built from
a small whitelist, rational polynomials, and callables explicitly wrapped
with :func:`register`.  Everything is evaluated on numpy arrays.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParseError, QuadratureFailure
from .realfunc import Polynomial

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs,
    "log": np.log, "where": np.where, "minimum": np.minimum, "maximum": np.maximum,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Compare, ast.IfExp, ast.BoolOp,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
          ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq, ast.And, ast.Or)


@dataclass(frozen=True)
class RealFn:
    """A vectorized function x ↦ f(x) with a display label."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            y = np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape)
        if not np.all(np.isfinite(y)):
            raise QuadratureFailure(f"{self.label} is not finite on the quadrature nodes")
        return y


def parse_function(text: str) -> RealFn:
    """Compile an expression in ``x`` (``^`` allowed for powers) into a vectorized function."""
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"bad function expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ParseError(f"{type(node).__name__} is not allowed in function expressions")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id != "x":
            raise ParseError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ParseError("only whitelisted functions may be called")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ParseError(f"constant {node.value!r} is not a number")
        if isinstance(node, (ast.IfExp, ast.BoolOp)):
            raise ParseError("use where(cond, a, b) for piecewise definitions")
    code = compile(tree, "<function>", "eval")
    namespace = {"__builtins__": {}, **_FUNCS, **_CONSTS}
    return RealFn(lambda x: eval(code, namespace, {"x": x}), text)


def from_polynomial(p: Polynomial) -> RealFn:
    coeffs = [float(c) for c in reversed(p.coeffs)] or [0.0]
    return RealFn(lambda x: np.polyval(coeffs, x), p.name)


def register(fn: Callable[[np.ndarray], np.ndarray], label: str) -> RealFn:
    """Vouch for a vectorized callable so it can be projected."""
    return RealFn(fn, label)


def as_function(f) -> RealFn:
    if isinstance(f, RealFn):
        return f
    if isinstance(f, str):
        return parse_function(f)
    if isinstance(f, Polynomial):
        return from_polynomial(f)
    to_fn = getattr(f, "as_function", None)
    if to_fn is not None:
        return to_fn()
    raise QuadratureFailure(f"{f!r} is not a registered function; wrap it with register(fn, label)")
