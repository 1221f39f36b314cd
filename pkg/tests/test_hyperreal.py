from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from lambdatheory import hyperreal as H
from lambdatheory.errors import ContextMismatch, DivisionByZero, DomainViolation, Undecided
from lambdatheory.hyperreal import Field, Kind, SequenceRep
from lambdatheory.oracle import UltrafilterOracle
from lambdatheory.realfunc import ABS, IDENTITY, SQUARE, Lambda, Piecewise, Polynomial, Rational, maximum

# -- construction and arithmetic ------------------------------------------------


def test_from_rational_is_constant(K):
    x = K(Fraction(3, 4))
    assert [x(n) for n in (0, 7, 10**9)] == [Fraction(3, 4)] * 3


def test_omega_is_the_index(K):
    assert [K.omega(n) for n in (0, 5, 99)] == [0, 5, 99]


def test_inverse_patch_at_zero(K):
    x = H.inv(K.omega)
    assert x(0) == 1 and x(4) == Fraction(1, 4)


def test_inverse_of_eventually_zero_raises(K):
    z = K.rep(SequenceRep.periodic([5, 1], [0]))
    with pytest.raises(DivisionByZero):
        H.inv(z)


def test_inverse_of_constant_zero_raises(K):
    with pytest.raises(DivisionByZero):
        H.inv(K(0))


def test_mixing_oracles_is_rejected():
    a, b = Field(UltrafilterOracle()), Field(UltrafilterOracle())
    with pytest.raises(ContextMismatch):
        H.add(a.omega, b.omega)


def test_closed_form_arithmetic_stays_closed(K):
    x = (K.omega + 1) * (K.omega - 1)
    assert x.rep.form.__class__.__name__ == "ClosedForm"
    assert x(10) == 99


def test_power_matches_repeated_product(K):
    x = K.omega + K(Fraction(1, 2))
    assert H.eq(H.power(x, 3), x * x * x)
    assert H.eq(H.power(x, 0), K(1))


# -- eq / lt examples ---------------------------------------------------------------


def test_omega_differs_from_omega_plus_eps(K):
    assert H.eq(K.omega, H.add(K.omega, H.inv(K.omega))) is False


@pytest.mark.parametrize("q", [Fraction(1, 10**9), Fraction(1, 3), Fraction(7), Fraction(10**12)])
def test_eps_below_every_positive_rational(K, q):
    assert H.lt(H.inv(K.omega), K(q)) is True


def test_parity_sequence_equals_exactly_one_sign(K):
    x = K.rep(SequenceRep.periodic([], [1, -1]))
    plus, minus = H.eq(x, K(1)), H.eq(x, K(-1))
    assert plus != minus
    # the oracle committed to one residue class mod 2; the evens class gives +1
    evens = K.ctx.is_qualified(H.equality_set(K.rep(SequenceRep.periodic([], [0, 1])), K(0)))
    assert plus == evens


def test_trichotomy_on_examples(K):
    pairs = [(K.omega, K(10**6)), (K.eps, K(0)), (K(2), K(2)), (K.omega * K.omega, K.omega)]
    for x, y in pairs:
        assert [H.lt(x, y), H.eq(x, y), H.lt(y, x)].count(True) == 1


# -- classification ---------------------------------------------------------------


def test_one_plus_shrinking_term(K):
    x = K.rep(SequenceRep.closed_form([2, 1], [1, 1]))  # 1 + 1/(n+1)
    assert H.classify(x) is Kind.FINITE
    assert H.standard_part(x) == 1


def test_omega_is_infinite(K):
    assert H.classify(K.omega) is Kind.INFINITE
    assert H.standard_part(K.omega) is None


def test_eps_is_infinitesimal(K):
    assert H.classify(K.eps) is Kind.INFINITESIMAL
    assert H.standard_part(K.eps) == 0
    assert H.is_infinitesimal(K.eps)


def test_alternating_fraction_follows_the_parity_commitment(K):
    x = K.rep(SequenceRep.piecewise_closed_form([([0, 1], [1, 1]), ([0, -1], [1, 1])], "n(-1)^n/(n+1)"))
    sign = H.eq(K.rep(SequenceRep.periodic([], [1, -1])), K(1))
    assert H.standard_part(x) == (1 if sign else -1)


def test_standard_part_of_product_near_one(K):
    x = (K(1) + K.eps) * (K(1) - K.eps)
    assert H.standard_part(x) == 1
    assert H.eq(x, K(1) - K.eps * K.eps)


def test_periodic_standard_part(K):
    x = K.rep(SequenceRep.periodic([9, 9], [Fraction(1, 2), 3]))
    st_ = H.standard_part(x)
    assert st_ in (Fraction(1, 2), 3)
    assert H.eq(x, K(st_))


def test_opaque_classification_uses_the_ladder(K):
    x = K.sequence(lambda n: Fraction(1, n * n + 1) if n % 7 else Fraction(1, n + 1), "mixed decay")
    kind, st_, exact = H.analyse(x)
    assert kind is Kind.INFINITESIMAL and st_ == 0 and not exact
    assert any(d.mode == "heuristic" for d in K.ctx.decision_log)


def test_opaque_standard_part_guess(K):
    x = K.sequence(lambda n: Fraction(1, 3) + Fraction((-1) ** n, n * n + 1), "third")
    assert H.standard_part(x) == Fraction(1, 3)


def test_opaque_converging_too_slowly_for_the_horizon_is_undecided(K):
    # |x - 1/3| ~ 1/n never drops below 1e-6 inside the sampling window [h/2, h)
    x = K.sequence(lambda n: Fraction(1, 3) + Fraction(1, n + 1), "slow third")
    with pytest.raises(Undecided):
        H.standard_part(x)


# -- natural extensions -------------------------------------------------------------


def test_square_of_omega_exceeds_omega(K):
    y = H.natural_extension_apply(SQUARE, K.omega)
    assert y(12) == 144
    assert H.lt(K.omega, y)


def test_abs_of_alternating_reciprocal_is_eps(K):
    x = K.sequence(lambda n: Fraction((-1) ** n, n) if n else Fraction(1), "(-1)^n/n")
    y = H.natural_extension_apply(ABS, x)
    assert all(y(n) == Fraction(1, n) for n in range(1, 50))
    assert H.eq(y, H.inv(K.omega))


def test_abs_of_closed_form_alternation(K):
    x = K.rep(SequenceRep.piecewise_closed_form([([1], [1, 1]), ([-1], [1, 1])], "(-1)^n/(n+1)"))
    y = H.natural_extension_apply(ABS, x)
    assert y.rep.form.__class__.__name__ == "ClosedForm"
    assert H.eq(y, H.inv(K.omega + K(1)))


@pytest.mark.parametrize("f", [IDENTITY, SQUARE, ABS, maximum(3), Polynomial([1, -2, 5])])
def test_extension_agrees_on_constants(K, f):
    for c in (Fraction(-7, 2), Fraction(0), Fraction(5)):
        assert H.eq(H.natural_extension_apply(f, K(c)), K(f(c)))


def test_identity_extension_is_identity(K):
    x = K.omega * K.omega - K(3)
    assert H.eq(H.natural_extension_apply(IDENTITY, x), x)


def test_rational_function_outside_its_domain(K):
    f = Rational([1], [-2, 1])  # 1/(t - 2)
    with pytest.raises(DomainViolation):
        H.natural_extension_apply(f, K(2))


def test_piecewise_rational_extension(K):
    f = Piecewise([0, 1], [Polynomial([0]), IDENTITY, Polynomial([1])])
    assert H.eq(H.natural_extension_apply(f, K.omega), K(1))
    assert H.eq(H.natural_extension_apply(f, K.eps), K.eps)


def test_callback_gives_opaque(K):
    y = H.natural_extension_apply(Lambda(lambda t: t * t + 1, "t^2+1"), K.omega)
    assert y.rep.form.__class__.__name__ == "Opaque"
    assert y(3) == 10


# -- properties: field and order laws on closed forms ----------------------------------

small = st.integers(-4, 4)


@st.composite
def closed_forms(draw):
    num = draw(st.lists(small, min_size=1, max_size=3))
    den = [draw(st.integers(1, 3)), draw(st.integers(0, 2))]  # no nonnegative integer roots
    return SequenceRep.closed_form(num, den)


def _field():
    return Field(UltrafilterOracle())


@given(closed_forms(), closed_forms(), closed_forms())
def test_field_axioms(a, b, c):
    K = _field()
    x, y, z = K.rep(a), K.rep(b), K.rep(c)
    assert H.eq((x + y) + z, x + (y + z))
    assert H.eq((x * y) * z, x * (y * z))
    assert H.eq(x + y, y + x) and H.eq(x * y, y * x)
    assert H.eq(x * (y + z), x * y + x * z)
    assert H.eq(x + K(0), x) and H.eq(x * K(1), x)
    assert H.eq(x + (-x), K(0))


@given(closed_forms())
def test_multiplicative_inverse(a):
    K = _field()
    x = K.rep(a)
    if H.eq(x, K(0)):
        return
    assert H.eq(x * H.inv(x), K(1))


@given(st.lists(small, min_size=1, max_size=3))
def test_inverse_needs_the_patch_where_the_sequence_vanishes(num):
    K = _field()
    x = K.rep(SequenceRep.closed_form(num + [1]))  # polynomial; may vanish at small n
    if H.eq(x, K(0)):
        return
    assert H.eq(x * H.inv(x), K(1))


@given(closed_forms(), closed_forms(), closed_forms())
def test_order_laws(a, b, c):
    K = _field()
    x, y, z = K.rep(a), K.rep(b), K.rep(c)
    assert [H.lt(x, y), H.eq(x, y), H.lt(y, x)].count(True) == 1
    if H.lt(x, y) and H.lt(y, z):
        assert H.lt(x, z)
    if H.lt(x, y):
        assert H.lt(x + z, y + z)
        if H.lt(K(0), z):
            assert H.lt(x * z, y * z)


@given(st.lists(st.fractions(min_value=-9, max_value=9, max_denominator=5), min_size=1, max_size=4),
       st.lists(st.fractions(min_value=-9, max_value=9, max_denominator=5), min_size=1, max_size=5))
def test_finite_range_sequence_equals_exactly_one_value(pre, per):
    K = _field()
    x = K.rep(SequenceRep.periodic(pre, per))
    values = set(pre) | set(per)
    hits = [v for v in values if H.eq(x, K(v))]
    assert len(hits) == 1


@given(st.fractions(max_denominator=50), st.fractions(max_denominator=50))
def test_rationals_embed_as_an_ordered_field(p, q):
    K = _field()
    assert H.eq(K(p), K(q)) == (p == q)
    assert H.lt(K(p), K(q)) == (p < q)
    assert H.eq(K(p) + K(q), K(p + q)) and H.eq(K(p) * K(q), K(p * q))
