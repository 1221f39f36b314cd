"""Minimizing the double-well functional J(u) = ∫ ((u')² − 1)² + u² over Galerkin levels.

J has infimum 0 on functions vanishing at both ends but no classical
minimizer: ever finer zigzags with slopes ±1 drive it down.  On each level
the minimum is positive and attained; the net of these minima shrinks like
h², and the minimizers shrink uniformly like h.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonConvergence, UnsupportedBasis
from .galerkin import Basis, GalerkinLevel, Ultrafunction

GRAD_TOL = 1e-8
MAX_ITER = 10_000
MONOTONE_SLACK = 1e-10
NOISE_FLOOR = 1e-14  # relative size of rounding noise in objective values
SEED_ENV = "LAMBDA_ORACLE_SEED"


# -- the functional ---------------------------------------------------------------


def _nodal(u: Ultrafunction) -> np.ndarray:
    return np.concatenate(([0.0], u.coeffs, [0.0]))


def j0_closed_form(u: Ultrafunction) -> float:
    """Σ_e h[(s_e² − 1)² + (a² + ab + b²)/3] over elements with end values a, b and slope s_e."""
    if u.level.basis is not Basis.HAT:
        raise UnsupportedBasis("the elementwise closed form needs the hat basis")
    v, h = _nodal(u), u.level.h
    a, b = v[:-1], v[1:]
    s = (b - a) / h
    return float(h * np.sum((s * s - 1) ** 2 + (a * a + a * b + b * b) / 3))


def j0_quadrature(u: Ultrafunction) -> float:
    """The same integral by the level's composite 5-point Gauss rule."""
    pts, _ = u.level.quadrature
    du, val = u.derivative_at(pts), u(pts)
    return u.level.integrate((du * du - 1) ** 2 + val * val)


def j0_value(u: Ultrafunction) -> float:
    if u.level.basis is Basis.HAT:
        return j0_closed_form(u)
    return j0_quadrature(u)


def j0_gradient(u: Ultrafunction) -> np.ndarray:
    """Exact gradient of :func:`j0_closed_form` with respect to the interior nodal values."""
    if u.level.basis is not Basis.HAT:
        raise UnsupportedBasis("analytic gradient is only available for the hat basis")
    return _j0_grad(u.coeffs, u.level.h)


def _j0(c: np.ndarray, h: float) -> float:
    v = np.concatenate(([0.0], c, [0.0]))
    a, b = v[:-1], v[1:]
    s = (b - a) / h
    return float(h * np.sum((s * s - 1) ** 2 + (a * a + a * b + b * b) / 3))


def _j0_grad(c: np.ndarray, h: float) -> np.ndarray:
    v = np.concatenate(([0.0], c, [0.0]))
    a, b = v[:-1], v[1:]
    s = (b - a) / h
    w = 4 * s * (s * s - 1)  # d/d(b) of h (s² − 1)²; the left end gets −w
    g = np.zeros_like(v)
    g[1:] += w + h * (a + 2 * b) / 3
    g[:-1] += -w + h * (2 * a + b) / 3
    return g[1:-1]


def convex_value(u: Ultrafunction) -> float:
    """J_c(u) = ∫ (u')² + u² = uᵀ (K + M) u."""
    L = u.level
    return float(u.coeffs @ ((L.stiffness_matrix + L.mass_matrix) @ u.coeffs))


def sawtooth(level: GalerkinLevel) -> Ultrafunction:
    """The zigzag with slopes ±1: nodal values 0, h, 0, h, ..., 0 (needs even m)."""
    if level.basis is not Basis.HAT:
        raise UnsupportedBasis("the sawtooth start is a hat-basis function")
    if level.m % 2:
        raise ValueError(f"the sawtooth needs an even element count, got m={level.m}")
    i = np.arange(1, level.m)
    return Ultrafunction(level, np.where(i % 2 == 1, level.h, 0.0))


# -- optimizer -------------------------------------------------------------------


@dataclass
class LocalResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


def bfgs(f: Callable[[np.ndarray], float], grad: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
         tol: float = GRAD_TOL, max_iter: int = MAX_ITER) -> LocalResult:
    """Quasi-Newton descent with Armijo backtracking; stops when max |∇f| ≤ tol."""
    x = np.array(x0, dtype=float)
    fx, g = f(x), grad(x)
    n = x.size
    H = np.eye(n)
    it = 0
    while it < max_iter:
        gmax = float(np.max(np.abs(g), initial=0.0))
        if gmax <= tol:
            return LocalResult(x, fx, gmax, it, True)
        it += 1
        d = -H @ g
        slope = float(g @ d)
        if slope >= 0:  # lost positive definiteness numerically
            H = np.eye(n)
            d, slope = -g, -float(g @ g)
        t = 1.0
        noise = NOISE_FLOOR * max(abs(fx), 1e-300)
        while True:
            x_new = x + t * d
            f_new = f(x_new)
            if f_new <= fx + 1e-4 * t * slope or t < 1e-20:
                g_new = grad(x_new)
                break
            if f_new <= fx + noise:
                # f no longer resolves the decrease; accept if the gradient still shrinks
                g_new = grad(x_new)
                if np.max(np.abs(g_new)) < gmax:
                    break
            t *= 0.5
        step, dg = x_new - x, g_new - g
        if t < 1e-20 and f_new >= fx:
            # no further progress in floating point
            gmax = float(np.max(np.abs(g), initial=0.0))
            return LocalResult(x, fx, gmax, it, gmax <= tol)
        x, fx, g = x_new, f_new, g_new
        sy = float(step @ dg)
        if sy > 1e-300:
            rho = 1.0 / sy
            Hy = H @ dg
            H += (rho * rho * float(dg @ Hy) + rho) * np.outer(step, step) - rho * (np.outer(Hy, step) + np.outer(step, Hy))
    gmax = float(np.max(np.abs(g), initial=0.0))
    return LocalResult(x, fx, gmax, it, gmax <= tol)


# -- per-level and net minimization --------------------------------------------------


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


@dataclass(frozen=True)
class MinimizeConfig:
    starts: int = 4  # random starts on top of the sawtooth and zero
    grad_tol: float = GRAD_TOL
    max_iter: int = MAX_ITER
    seed: int | None = None
    functional: str = "j0"  # j0 | convex
    workers: int = 1
    strict: bool = False  # raise NonConvergence instead of flagging it

    def resolved_seed(self) -> int:
        return default_seed() if self.seed is None else self.seed


@dataclass
class LevelMinimizer:
    level: GalerkinLevel
    u_star: Ultrafunction
    j_value: float
    grad_norm: float
    iterations: int
    starts_used: int
    converged: bool

    @property
    def m(self) -> int:
        return self.level.m

    @property
    def h(self) -> float:
        return self.level.h

    @property
    def sup_norm(self) -> float:
        return self.u_star.sup_norm()

    def as_dict(self) -> dict:
        return {"m": self.m, "h": self.h, "j_value": self.j_value, "sup_norm": self.sup_norm,
                "grad_norm": self.grad_norm, "iterations": self.iterations,
                "starts_used": self.starts_used, "converged": self.converged}


def _objective(level: GalerkinLevel, functional: str):
    if functional == "j0":
        h = level.h
        return (lambda c: _j0(c, h)), (lambda c: _j0_grad(c, h))
    if functional == "convex":
        A = level.stiffness_matrix + level.mass_matrix
        return (lambda c: float(c @ A @ c)), (lambda c: 2 * (A @ c))
    raise ValueError(f"unknown functional {functional!r}")


def starting_points(level: GalerkinLevel, k: int, seed: int) -> list[np.ndarray]:
    """Sawtooth, zero, then k seeded random perturbations of the sawtooth."""
    saw = sawtooth(level).coeffs
    rng = np.random.default_rng([seed, level.m])
    out = [saw, np.zeros(level.dim)]
    for _ in range(k):
        out.append(saw + level.h * rng.uniform(-1.0, 1.0, level.dim))
    return out


def minimize_level(m: int, cfg: MinimizeConfig = MinimizeConfig()) -> LevelMinimizer:
    """Best local minimizer over the multistart set on the hat level with m elements."""
    if m < 2 or m % 2:
        raise ValueError(f"m must be even and at least 2, got {m}")
    level = GalerkinLevel(m, Basis.HAT)
    f, g = _objective(level, cfg.functional)
    best, total_iter = None, 0
    starts = starting_points(level, cfg.starts, cfg.resolved_seed())
    for x0 in starts:
        r = bfgs(f, g, x0, cfg.grad_tol, cfg.max_iter)
        total_iter += r.iterations
        if best is None or r.value < best.value:
            best = r
    result = LevelMinimizer(level, Ultrafunction(level, best.x), best.value, best.grad_norm,
                            total_iter, len(starts), best.converged)
    if cfg.strict and not result.converged:
        raise NonConvergence(f"m={m}: gradient sup-norm {best.grad_norm:.3e} after {cfg.max_iter} iterations",
                             result)
    return result


def fit_order(hs: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope p of log(value) against log(h): value ≈ C h^p."""
    hs, values = np.asarray(hs, float), np.asarray(values, float)
    if np.any(values <= 0):
        return float("nan")
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])


@dataclass
class NetResult:
    levels: list  # LevelMinimizer, increasing m
    order_j: float
    order_sup: float
    monotone: bool

    def as_dict(self) -> dict:
        return {"levels": [lv.as_dict() for lv in self.levels], "order_j": self.order_j,
                "order_sup": self.order_sup, "monotone": self.monotone}


def _minimize_one(args):
    m, cfg = args
    return minimize_level(m, cfg)


def minimize_net(levels: Sequence[int], cfg: MinimizeConfig = MinimizeConfig()) -> NetResult:
    levels = list(levels)
    if len(levels) < 4:
        raise ValueError("a decay fit needs at least 4 levels")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    for m in levels:
        if m < 2 or m % 2:
            raise ValueError(f"m must be even and at least 2, got {m}")
    lax = MinimizeConfig(**{**cfg.__dict__, "strict": False})
    jobs = [(m, lax) for m in levels]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_minimize_one, jobs))
    else:
        results = [_minimize_one(j) for j in jobs]
    hs = [r.h for r in results]
    order_j = fit_order(hs, [r.j_value for r in results])
    order_sup = fit_order(hs, [r.sup_norm for r in results])
    monotone = all(a.j_value >= b.j_value - MONOTONE_SLACK for a, b in zip(results, results[1:]))
    return NetResult(results, order_j, order_sup, monotone)


@dataclass
class Certificate:
    passed: bool
    order: float
    reasons: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    @property
    def reading(self) -> str:
        if self.passed:
            return (f"J0(u_m) > 0 at every level and decays like h^{self.order:.2f}: the net of level minima "
                    "represents a positive infinitesimal hyperreal")
        return "the net of level minima is not certified to be a positive infinitesimal"

    def as_dict(self) -> dict:
        return {"certificate": self.verdict, "order": self.order, "reasons": self.reasons,
                "reading": self.reading}


def certify_infinitesimal(net: NetResult | Sequence[tuple[float, float]]) -> Certificate:
    """PASS iff every j is positive, the sequence strictly decreases, and the fitted order is at least 1.

    Accepts a :class:`NetResult` or a sequence of (h, j) pairs ordered by decreasing h.
    """
    if isinstance(net, NetResult):
        pairs = [(r.h, r.j_value) for r in net.levels]
    else:
        pairs = [(float(h), float(j)) for h, j in net]
    hs = [h for h, _ in pairs]
    js = [j for _, j in pairs]
    reasons = []
    if not all(j > 0 for j in js):
        reasons.append("some level value is not positive")
    if not all(b < a for a, b in zip(js, js[1:])):
        reasons.append("values are not strictly decreasing")
    order = fit_order(hs, js) if all(j > 0 for j in js) else float("nan")
    if not order >= 1:
        reasons.append(f"fitted decay order {order:.3f} is below 1")
    return Certificate(not reasons, order, reasons)
