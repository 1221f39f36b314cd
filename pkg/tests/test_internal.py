from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lambdatheory import hyperreal as H
from lambdatheory.errors import ContextMismatch, DomainViolation
from lambdatheory.hyperreal import Field, SequenceRep
from lambdatheory.internal import (HyperfiniteSet, RealSetDescriptor, hypercardinality, hyperfinite_sum,
                                   star_membership, star_set)
from lambdatheory.oracle import UltrafilterOracle
from lambdatheory.realfunc import ONE, IDENTITY, SQUARE, Lambda, Polynomial, Rational

W = SequenceRep.index()


def brute_sum(elements, f):
    """Independent oracle: plain summation over an explicit list."""
    total = Fraction(0)
    for a in elements:
        total += f(Fraction(a))
    return total


# -- star membership ----------------------------------------------------------------


def test_omega_not_in_unit_interval(K):
    assert star_membership(K.omega, RealSetDescriptor.interval(0, 1)) is False


def test_eps_is_positive(K):
    assert star_membership(K.eps, RealSetDescriptor.positive()) is True


def test_standard_point_of_the_set(K):
    assert star_membership(K(Fraction(1, 2)), RealSetDescriptor.interval(0, 1)) is True


def test_membership_set_is_exact_for_intervals(K):
    s = star_set(K.omega, RealSetDescriptor.interval(0, 10, hi_closed=False))
    assert s.exact
    assert [s.eval(n) for n in (0, 9, 10)] == [True, True, False]


def test_predicate_sets_fall_back_to_sampling(K):
    E = RealSetDescriptor.predicate(lambda t: t.denominator == 1 and t % 3 == 0, "multiples of 3")
    assert star_set(K.omega, E).exact is False
    answer = star_membership(K.omega, E)
    assert K.ctx.decision_log[-1].mode == "heuristic"
    assert answer is True  # first such query: the tie-break commits the queried set


def test_membership_rejects_foreign_context():
    a, b = Field(UltrafilterOracle()), Field(UltrafilterOracle())
    assert star_membership(a.omega, RealSetDescriptor.positive()) in (True, False)
    with pytest.raises(ContextMismatch):
        H.add(a.omega, b.omega)


@given(st.fractions(min_value=-5, max_value=5, max_denominator=20))
def test_standard_elements_belong_to_the_extension(c):
    K = Field(UltrafilterOracle())
    sets = [RealSetDescriptor.interval(0, 1), RealSetDescriptor.interval(-1, 2, lo_closed=False),
            RealSetDescriptor.positive(),
            RealSetDescriptor.union(RealSetDescriptor.interval(None, -2), RealSetDescriptor.interval(3, None)),
            RealSetDescriptor.predicate(lambda t: t.denominator == 1, "integers")]
    for E in sets:
        assert star_membership(K(c), E) == E.contains(c)


# -- hypercardinality --------------------------------------------------------------------


def test_range_cardinality_is_omega_plus_one(K):
    A = HyperfiniteSet.integer_range(0, W)
    assert H.eq(hypercardinality(A, K.ctx), K.omega + K(1))


def test_empty_family(K):
    A = HyperfiniteSet.from_function(lambda n: [], "empty")
    assert H.eq(hypercardinality(A, K.ctx), K(0))


def test_square_range_outgrows_omega(K):
    A = HyperfiniteSet.integer_range(0, H.power(K.omega, 2))
    assert H.lt(K.omega, hypercardinality(A, K.ctx))


def test_levels_are_sorted_and_deduplicated():
    A = HyperfiniteSet.from_function(lambda n: [3, 1, 2, 1, Fraction(6, 2)], "dups")
    assert list(A.at_level(5)) == [1, 2, 3]


def test_grid_levels():
    G = HyperfiniteSet.grid(1, W, W)
    assert list(G.at_level(4)) == [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1]
    assert list(G.at_level(0)) == []
    assert Fraction(1, 2) in G.at_level(4) and Fraction(1, 3) not in G.at_level(4)


def test_grid_requires_integer_bounds():
    A = HyperfiniteSet.integer_range(0, SequenceRep.closed_form([0, 1], [2]))  # n/2
    with pytest.raises(DomainViolation):
        A.at_level(3)


# -- hyperfinite sums -----------------------------------------------------------------------


def test_sum_of_ones_is_the_cardinality(K):
    A = HyperfiniteSet.grid(1, W, W)
    assert H.eq(hyperfinite_sum(A, ONE, K.ctx), hypercardinality(A, K.ctx))


def test_triangular_numbers(K):
    A = HyperfiniteSet.integer_range(0, W)
    s = hyperfinite_sum(A, IDENTITY, K.ctx)
    assert H.eq(s, K.rep(SequenceRep.closed_form([0, 1, 1], [2])))
    assert H.lt(K.omega, s)


def test_riemann_sum_of_identity(K):
    # (1/n) Σ_{k=1..n} k/n = (n+1)/(2n): compare with direct summation
    A = HyperfiniteSet.grid(1, W, W)
    riemann = hyperfinite_sum(A, IDENTITY, K.ctx) * K.eps
    for n in (1, 2, 7, 50):
        assert riemann(n) == brute_sum([Fraction(k, n) for k in range(1, n + 1)], lambda t: t) / n
        assert riemann(n) == Fraction(n + 1, 2 * n)
    assert H.standard_part(riemann) == Fraction(1, 2)


def test_sums_are_closed_forms_for_polynomials(K):
    A = HyperfiniteSet.grid(0, W, W)
    s = hyperfinite_sum(A, SQUARE, K.ctx) * K.eps  # → ∫_0^1 t² dt
    assert s.rep.form.__class__.__name__ == "ClosedForm"
    assert H.standard_part(s) == Fraction(1, 3)


def test_sums_of_other_functions_are_pointwise(K):
    A = HyperfiniteSet.integer_range(1, W)
    f = Rational([1], [0, 1])  # 1/t
    s = hyperfinite_sum(A, f, K.ctx)
    assert s(4) == Fraction(25, 12)


def test_sum_outside_the_domain_raises(K):
    A = HyperfiniteSet.integer_range(0, W)
    s = hyperfinite_sum(A, Rational([1], [0, 1]), K.ctx)
    with pytest.raises(DomainViolation):
        s(3)


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=4), st.integers(0, 3), st.integers(1, 40))
def test_faulhaber_sums_match_brute_force(coeffs, lo, n):
    K = Field(UltrafilterOracle())
    f = Polynomial(coeffs)
    for A in (HyperfiniteSet.integer_range(lo, W), HyperfiniteSet.grid(lo, H.power(K.omega, 2).rep, W)):
        s = hyperfinite_sum(A, f, K.ctx)
        assert s(n) == brute_sum(A.at_level(n), f)


@given(st.integers(0, 30))
def test_opaque_sum_matches_brute_force(n):
    K = Field(UltrafilterOracle())
    A = HyperfiniteSet.from_function(lambda k: [i * i % 7 for i in range(k)], "squares mod 7")
    f = Lambda(lambda t: t * t - 1, "t^2-1")
    assert hyperfinite_sum(A, f, K.ctx)(n) == brute_sum(sorted({i * i % 7 for i in range(n)}), f)
