import threading

import pytest
from hypothesis import given, strategies as st

from lambdatheory.errors import HorizonExhausted, InconsistentDescriptor, ReplayConflict
from lambdatheory.oracle import (Cofinite, Finite, PeriodicUnion, SetDescriptor, Tail, UltrafilterOracle,
                                 tail_of)


def evens():
    return SetDescriptor.residue(0, 2, "evens")


def odds():
    return SetDescriptor.residue(1, 2, "odds")


def test_cofinite_set_is_qualified(oracle):
    assert oracle.is_qualified(SetDescriptor.cofinite(5)) is True


def test_finite_set_is_not_qualified(oracle):
    assert oracle.is_qualified(SetDescriptor.finite([0, 1, 2])) is False


def test_complementary_residue_classes_get_opposite_answers(oracle):
    b = oracle.is_qualified(evens())
    assert oracle.is_qualified(odds()) is (not b)


def test_tie_break_commits_the_queried_set(oracle):
    assert oracle.is_qualified(odds()) is True
    assert oracle.is_qualified(evens()) is False


def test_decisions_are_logged_with_mode(oracle):
    oracle.is_qualified(SetDescriptor.cofinite(3))
    oracle.is_qualified(SetDescriptor.predicate(lambda n: n % 3 == 0, "mult3"))
    log = oracle.log_records()
    assert [r["mode"] for r in log] == ["exact", "heuristic"]
    assert log[1]["witness_count"] >= oracle.theta
    assert set(log[0]) == {"label", "answer", "mode", "witness_count"}


def test_fresh_oracle_consistency_report(oracle):
    rep = oracle.check_consistency()
    assert rep.commitments == 0
    assert rep.witness_counts == [oracle.horizon]
    assert rep.ok


def test_consistency_after_evens_and_tail(oracle):
    oracle.is_qualified(evens())
    oracle.is_qualified(SetDescriptor.cofinite(10))
    rep = oracle.check_consistency()
    assert rep.ok and rep.witness_counts[-1] >= oracle.theta


def test_consistency_after_evens_then_odds(oracle):
    assert oracle.is_qualified(evens()) is True
    assert oracle.is_qualified(odds()) is False
    rep = oracle.check_consistency()
    assert rep.ok
    assert oracle.decision_log[-1].answer is False


def test_answers_are_stable_for_equivalent_descriptors(oracle):
    a = oracle.is_qualified(SetDescriptor.predicate(lambda n: n % 5 == 2, "r5"))
    b = oracle.is_qualified(SetDescriptor.predicate(lambda n: (n - 2) % 5 == 0, "r5"))
    assert a == b


def test_sampled_sets_respect_earlier_commitments(oracle):
    first = oracle.is_qualified(SetDescriptor.predicate(lambda n: n % 3 == 0, "mult3"))
    second = oracle.is_qualified(SetDescriptor.predicate(lambda n: n % 3 != 0, "not mult3"))
    assert first != second


def test_far_tail_beyond_horizon_is_still_exact(oracle):
    assert oracle.is_qualified(SetDescriptor.cofinite(10**6)) is True
    assert oracle.is_qualified(SetDescriptor.finite(range(10**3))) is False


def test_inconsistent_descriptor_is_rejected(oracle):
    bad = SetDescriptor(lambda n: n < 3, Cofinite(0), "liar")
    with pytest.raises(InconsistentDescriptor):
        oracle.is_qualified(bad)


def test_horizon_exhaustion_poisons_the_oracle():
    o = UltrafilterOracle(horizon=64)
    # the window [32, 64) holds exactly theta = 8 multiples of 4
    assert o.is_qualified(SetDescriptor.predicate(lambda n: n % 4 == 0, "mult4")) is True
    with pytest.raises(HorizonExhausted):
        # either side of this cut keeps only 4 of them
        o.is_qualified(SetDescriptor.predicate(lambda n: n % 8 == 0, "mult8"))
    with pytest.raises(HorizonExhausted):
        o.is_qualified(SetDescriptor.cofinite(1))


def test_horizon_from_environment(monkeypatch):
    monkeypatch.setenv("LAMBDA_HORIZON", "2000")
    assert UltrafilterOracle().horizon == 2000


def test_replay_forces_logged_answers():
    first = UltrafilterOracle()
    first.is_qualified(evens())
    replayed = UltrafilterOracle(replay={"evens": [False]})
    assert replayed.is_qualified(evens()) is False
    assert replayed.is_qualified(odds()) is True


def test_replay_of_impossible_answer_conflicts():
    o = UltrafilterOracle(replay={"{n : n >= 5}": [False]})
    with pytest.raises(ReplayConflict):
        o.is_qualified(SetDescriptor.cofinite(5))


def test_concurrent_queries_see_one_commit_order():
    o = UltrafilterOracle()
    answers = {}

    def ask(r):
        answers[r] = o.is_qualified(SetDescriptor.residue(r, 4))

    threads = [threading.Thread(target=ask, args=(r,)) for r in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sum(answers.values()) == 1
    assert o.check_consistency().ok


def test_classifications_normalize_to_tails():
    assert tail_of(Finite(4)) == Tail(4, (False,))
    assert tail_of(Cofinite(2)) == Tail(2, (True,))
    t = tail_of(PeriodicUnion((True,), (False, True)))
    assert t.start == 1 and [t.member(n) for n in range(1, 5)] == [False, True, False, True]


# -- properties -------------------------------------------------------------------

patterns = st.lists(st.booleans(), min_size=1, max_size=6)


@st.composite
def exact_sets(draw):
    kind = draw(st.sampled_from(["finite", "cofinite", "periodic"]))
    if kind == "finite":
        return SetDescriptor.finite(draw(st.lists(st.integers(0, 200), max_size=5)))
    if kind == "cofinite":
        return SetDescriptor.cofinite(draw(st.integers(0, 500)))
    return SetDescriptor.periodic(draw(st.lists(st.booleans(), max_size=4)), draw(patterns))


@given(exact_sets())
def test_complement_gets_the_other_answer(s):
    o = UltrafilterOracle()
    assert o.is_qualified(~s) is (not o.is_qualified(s))


@given(exact_sets(), exact_sets())
def test_intersection_closure(a, b):
    o = UltrafilterOracle()
    qa, qb = o.is_qualified(a), o.is_qualified(b)
    assert o.is_qualified(a & b) == (qa and qb)


@given(exact_sets(), exact_sets())
def test_supersets_of_qualified_sets_are_qualified(a, b):
    o = UltrafilterOracle()
    if o.is_qualified(a):
        assert o.is_qualified(a | b)


@given(st.integers(0, 10**9))
def test_singletons_are_never_qualified(k):
    assert UltrafilterOracle().is_qualified(SetDescriptor.finite([k])) is False


@given(st.lists(exact_sets(), min_size=1, max_size=8))
def test_query_sequences_are_deterministic_and_consistent(sets):
    logs = []
    for _ in range(2):
        o = UltrafilterOracle()
        for s in sets:
            o.is_qualified(s)
        assert o.check_consistency().ok
        logs.append(o.log_records())
    assert logs[0] == logs[1]
