"""Finite-dimensional function spaces on (0, 1) with zero boundary values.

A :class:`GalerkinLevel` is the span of either the interior hat functions of a
uniform mesh with ``m`` elements, or the first ``m - 1`` sine modes.  Its mass,
first-derivative and stiffness matrices are assembled exactly in rationals
(where they are rational) and converted to floats for solving.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from .errors import LevelMismatch, QuadratureFailure
from .functions import RealFn, as_function

GAUSS_POINTS, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(5)
SINE_SUBDIVISION = 4  # quadrature elements per mesh element for sine modes
MIN_SINE_ELEMENTS = 64


class Basis(str, enum.Enum):
    HAT = "hat"
    SINE = "sine"


def _tridiagonal(sub, diag, sup) -> list[list[Fraction]]:
    n = len(diag)
    out = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        out[i][i] = diag[i]
        if i + 1 < n:
            out[i][i + 1] = sup[i]
            out[i + 1][i] = sub[i]
    return out


class GalerkinLevel:
    """The space V_m on (0, 1): hats at the interior nodes i/m, or sin(kπx) for k < m."""

    def __init__(self, m: int, basis: Basis | str = Basis.HAT):
        if int(m) != m or m < 2:
            raise ValueError(f"need an integer element count m >= 2, got {m}")
        self.m = int(m)
        self.basis = Basis(basis)
        self.h_exact = Fraction(1, self.m)
        self.h = 1.0 / self.m
        self.dim = self.m - 1

    def __repr__(self):
        return f"GalerkinLevel(m={self.m}, basis={self.basis.value})"

    def __eq__(self, other):
        return isinstance(other, GalerkinLevel) and (self.m, self.basis) == (other.m, other.basis)

    def __hash__(self):
        return hash((self.m, self.basis))

    @cached_property
    def nodes(self) -> np.ndarray:
        """Interior mesh nodes i·h, i = 1..m-1."""
        return np.arange(1, self.m) * self.h

    # -- exact assembly --

    @cached_property
    def mass_bands_exact(self) -> tuple[list, list, list]:
        """(sub, diag, super) diagonals of the hat mass matrix, assembled element by element."""
        self._require_hat()
        h, n = self.h_exact, self.dim
        diag, off = [Fraction(0)] * n, [Fraction(0)] * max(n - 1, 0)
        local = ((2 * h / 6, h / 6), (h / 6, 2 * h / 6))
        for e in range(self.m):  # element e joins nodes e and e + 1 (node 0 and m are boundary)
            ends = (e - 1, e)  # interior indices of the two endpoints
            for a in range(2):
                for b in range(2):
                    i, j = ends[a], ends[b]
                    if 0 <= i < n and 0 <= j < n:
                        if i == j:
                            diag[i] += local[a][b]
                        elif j == i + 1:
                            off[i] += local[a][b]
        return off, diag, off

    @cached_property
    def derivative_bands_exact(self) -> tuple[list, list, list]:
        """Bands of B_ij = ∫ φ_i' φ_j for hats."""
        self._require_hat()
        n = self.dim
        diag, sub, sup = [Fraction(0)] * n, [Fraction(0)] * max(n - 1, 0), [Fraction(0)] * max(n - 1, 0)
        half = Fraction(1, 2)
        # on element e the left endpoint shape has slope -1/h, the right +1/h; each integrates to h/2
        local = ((-half, -half), (half, half))  # local[a][b] = ∫ (shape a)' (shape b)
        for e in range(self.m):
            ends = (e - 1, e)
            for a in range(2):
                for b in range(2):
                    i, j = ends[a], ends[b]
                    if 0 <= i < n and 0 <= j < n:
                        if i == j:
                            diag[i] += local[a][b]
                        elif j == i + 1:
                            sup[i] += local[a][b]
                        else:
                            sub[j] += local[a][b]
        return sub, diag, sup

    @cached_property
    def stiffness_bands_exact(self) -> tuple[list, list, list]:
        self._require_hat()
        n, inv_h = self.dim, 1 / self.h_exact
        return [-inv_h] * (n - 1), [2 * inv_h] * n, [-inv_h] * (n - 1)

    def mass_exact(self) -> list[list[Fraction]]:
        if self.basis is Basis.HAT:
            return _tridiagonal(*self.mass_bands_exact)
        n = self.dim
        return [[Fraction(1, 2) if i == j else Fraction(0) for j in range(n)] for i in range(n)]

    def derivative_exact(self) -> list[list[Fraction]]:
        if self.basis is Basis.HAT:
            return _tridiagonal(*self.derivative_bands_exact)
        n = self.dim
        out = [[Fraction(0)] * n for _ in range(n)]
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if (i + j) % 2:
                    # ∫ iπ cos(iπx) sin(jπx) dx
                    out[i - 1][j - 1] = Fraction(2 * i * j, j * j - i * i)
        return out

    # -- float matrices --

    @cached_property
    def mass_matrix(self) -> np.ndarray:
        return np.array(self.mass_exact(), dtype=float)

    @cached_property
    def first_derivative_matrix(self) -> np.ndarray:
        if self.basis is Basis.HAT:
            return np.array(self.derivative_exact(), dtype=float)
        k = np.arange(1, self.m)
        i, j = np.meshgrid(k, k, indexing="ij")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where((i + j) % 2 == 1, 2.0 * i * j / (j * j - i * i), 0.0)
        return out

    @cached_property
    def stiffness_matrix(self) -> np.ndarray:
        if self.basis is Basis.HAT:
            return np.array(_tridiagonal(*self.stiffness_bands_exact), dtype=float)
        k = np.arange(1, self.m)
        return np.diag((k * np.pi) ** 2 / 2)

    @cached_property
    def _mass_banded(self) -> np.ndarray:
        sub, diag, sup = self.mass_bands_exact
        ab = np.zeros((3, self.dim))
        ab[0, 1:] = [float(v) for v in sup]
        ab[1, :] = [float(v) for v in diag]
        ab[2, :-1] = [float(v) for v in sub]
        return ab

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M c = rhs: banded for hats, diagonal for the orthogonal sine modes."""
        rhs = np.asarray(rhs, dtype=float)
        if self.basis is Basis.SINE:
            return 2.0 * rhs
        return solve_banded((1, 1), self._mass_banded, rhs)

    # -- evaluation --

    def evaluate(self, coeffs: np.ndarray, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.basis is Basis.HAT:
            grid = np.linspace(0.0, 1.0, self.m + 1)
            return np.interp(x, grid, np.concatenate(([0.0], coeffs, [0.0])))
        k = np.arange(1, self.m)
        return np.sin(np.pi * np.multiply.outer(x, k)) @ coeffs

    def evaluate_derivative(self, coeffs: np.ndarray, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.basis is Basis.HAT:
            full = np.concatenate(([0.0], coeffs, [0.0]))
            slopes = np.diff(full) * self.m
            e = np.clip(np.floor(x * self.m).astype(int), 0, self.m - 1)
            return slopes[e]
        k = np.arange(1, self.m)
        return np.cos(np.pi * np.multiply.outer(x, k)) @ (coeffs * k * np.pi)

    def basis_values(self, x) -> np.ndarray:
        """Matrix of φ_i(x): one row per point, one column per basis function."""
        return np.stack([self.evaluate(np.eye(self.dim)[i], x) for i in range(self.dim)], axis=-1)

    # -- quadrature --

    @cached_property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Points and weights of the composite 5-point Gauss rule (flattened)."""
        n_el = self.m if self.basis is Basis.HAT else max(SINE_SUBDIVISION * self.m, MIN_SINE_ELEMENTS)
        left = np.arange(n_el) / n_el
        width = 1.0 / n_el
        pts = left[:, None] + width * (GAUSS_POINTS + 1) / 2
        wts = np.broadcast_to(width * GAUSS_WEIGHTS / 2, pts.shape)
        return pts.ravel(), wts.ravel().copy()

    @cached_property
    def _basis_at_quadrature(self) -> np.ndarray:
        pts, _ = self.quadrature
        if self.basis is Basis.SINE:
            return np.sin(np.pi * np.multiply.outer(pts, np.arange(1, self.m)))
        # hats: on element e the local coordinate t gives shapes 1 - t (node e) and t (node e + 1)
        out = np.zeros((pts.size, self.dim))
        t = np.tile((GAUSS_POINTS + 1) / 2, self.m)
        e = np.repeat(np.arange(self.m), GAUSS_POINTS.size)
        rows = np.arange(pts.size)
        left, right = e - 1, e
        keep = left >= 0
        out[rows[keep], left[keep]] = 1 - t[keep]
        keep = right < self.dim
        out[rows[keep], right[keep]] = t[keep]
        return out

    def load_vector(self, values: np.ndarray) -> np.ndarray:
        """b_i = ∫ g φ_i, where ``values`` holds g at the quadrature points."""
        _, wts = self.quadrature
        return self._basis_at_quadrature.T @ (wts * values)

    def integrate(self, values: np.ndarray) -> float:
        _, wts = self.quadrature
        return float(wts @ values)

    def _require_hat(self):
        if self.basis is not Basis.HAT:
            raise AttributeError("only defined for the hat basis")


@dataclass(frozen=True, eq=False)
class Ultrafunction:
    """A coefficient vector in a Galerkin level."""

    level: GalerkinLevel
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.level.dim,):
            raise ValueError(f"expected {self.level.dim} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x):
        return self.level.evaluate(self.coeffs, x)

    def derivative_at(self, x):
        return self.level.evaluate_derivative(self.coeffs, x)

    def as_function(self) -> RealFn:
        return RealFn(self.__call__, f"u[{self.level.basis.value}, m={self.level.m}]")

    def _same(self, other: "Ultrafunction"):
        if self.level != other.level:
            raise LevelMismatch(f"{self.level} vs {other.level}")

    def __add__(self, other):
        self._same(other)
        return Ultrafunction(self.level, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same(other)
        return Ultrafunction(self.level, self.coeffs - other.coeffs)

    def __mul__(self, c: float):
        return Ultrafunction(self.level, self.coeffs * float(c))

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.sqrt(max(inner_product(self, self), 0.0))

    def sup_norm(self) -> float:
        if self.level.basis is Basis.HAT:
            return float(np.max(np.abs(self.coeffs), initial=0.0))
        x = np.linspace(0, 1, 16 * self.level.m + 1)
        return float(np.max(np.abs(self(x))))

    @classmethod
    def zero(cls, level: GalerkinLevel) -> "Ultrafunction":
        return cls(level, np.zeros(level.dim))

    @classmethod
    def basis_function(cls, level: GalerkinLevel, i: int) -> "Ultrafunction":
        """The i-th basis function, i = 1..m-1."""
        c = np.zeros(level.dim)
        c[i - 1] = 1.0
        return cls(level, c)


def inner_product(u: Ultrafunction, v: Ultrafunction) -> float:
    """⟨u, v⟩ = uᵀ M v."""
    u._same(v)
    return float(u.coeffs @ (u.level.mass_matrix @ v.coeffs))


def load_vector(f, level: GalerkinLevel) -> np.ndarray:
    """b_i = ∫ f φ_i by composite 5-point Gauss quadrature."""
    g = as_function(f)
    pts, _ = level.quadrature
    return level.load_vector(g(pts))


def project(f, level: GalerkinLevel) -> Ultrafunction:
    """Orthogonal L² projection onto the level."""
    return Ultrafunction(level, level.solve_mass(load_vector(f, level)))


def inner_with_function(u: Ultrafunction, g) -> float:
    """∫ u g over (0, 1)."""
    return float(u.coeffs @ load_vector(g, u.level))


def l2_distance(f, u: Ultrafunction) -> float:
    """‖f - u‖ in L²(0, 1), by the level's quadrature."""
    g = as_function(f)
    pts, _ = u.level.quadrature
    return math.sqrt(u.level.integrate((g(pts) - u(pts)) ** 2))


def residual_moments(f, u: Ultrafunction) -> np.ndarray:
    """⟨f - u, φ_i⟩ for every basis function."""
    return load_vector(f, u.level) - u.level.mass_matrix @ u.coeffs


# -- operators ---------------------------------------------------------------


class Operator:
    """A linear map on functions; ``assemble`` returns (∫ (A u) φ_j)_j."""

    label = "A"

    def assemble(self, u: Ultrafunction) -> np.ndarray:
        raise NotImplementedError


class Identity(Operator):
    label = "identity"

    def assemble(self, u):
        return u.level.mass_matrix @ u.coeffs


class Derivative(Operator):
    label = "derivative"

    def assemble(self, u):
        # ∫ u' φ_j = Σ_i u_i B_ij
        return u.level.first_derivative_matrix.T @ u.coeffs


class Multiplication(Operator):
    """u ↦ g·u for a registered function g."""

    def __init__(self, g):
        self.g = as_function(g)
        self.label = f"multiply by {self.g.label}"

    def assemble(self, u):
        pts, _ = u.level.quadrature
        return u.level.load_vector(self.g(pts) * u(pts))


class Pointwise(Operator):
    """u ↦ F(x, u(x), u'(x)) for a vectorized F; linear only if F is."""

    def __init__(self, fn, label: str = "pointwise"):
        self.fn = fn
        self.label = label

    def assemble(self, u):
        pts, _ = u.level.quadrature
        with np.errstate(all="ignore"):
            vals = np.asarray(self.fn(pts, u(pts), u.derivative_at(pts)), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise QuadratureFailure(f"{self.label} is not finite on the quadrature nodes")
        return u.level.load_vector(np.broadcast_to(vals, pts.shape))


IDENTITY = Identity()
DERIVATIVE = Derivative()


class ExtendedOperator:
    """u ↦ P(A u): apply A, then project back onto u's level."""

    def __init__(self, op: Operator):
        self.op = op

    def __call__(self, u: Ultrafunction) -> Ultrafunction:
        return Ultrafunction(u.level, u.level.solve_mass(self.op.assemble(u)))

    def __repr__(self):
        return f"ExtendedOperator({self.op.label})"


def extend_operator(op: Operator | str) -> ExtendedOperator:
    if isinstance(op, str):
        named = {"identity": IDENTITY, "derivative": DERIVATIVE}
        if op not in named:
            raise ValueError(f"unknown operator {op!r}; known: {sorted(named)}")
        op = named[op]
    return ExtendedOperator(op)


def generalized_derivative(u: Ultrafunction) -> Ultrafunction:
    """Projection of u' onto u's level."""
    return ExtendedOperator(DERIVATIVE)(u)


def prolong(u: Ultrafunction, m: int) -> Ultrafunction:
    """The same function, written in the finer level with m elements (m a multiple of u's)."""
    level = u.level
    if m % level.m:
        raise LevelMismatch(f"V_{level.m} is not contained in V_{m}")
    fine = GalerkinLevel(m, level.basis)
    if level.basis is Basis.HAT:
        return Ultrafunction(fine, u(fine.nodes))
    c = np.zeros(fine.dim)
    c[: level.dim] = u.coeffs
    return Ultrafunction(fine, c)
