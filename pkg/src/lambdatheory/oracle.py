"""A lazily decided free ultrafilter on the natural numbers.

No free ultrafilter can be written down, but every computation here only
ever asks finitely many membership questions.  :class:`UltrafilterOracle`
answers them one at a time and commits each answer, so that the committed
family always has the finite-intersection property and every later answer
is forced by the earlier ones whenever that can be proved.

Sets are described by :class:`SetDescriptor`: a membership predicate plus an
optional exact classification of its tail.  When every set involved carries
an exact classification the decision is exact; otherwise the oracle counts
witnesses in a sampling window and flags the decision as heuristic.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import HorizonExhausted, InconsistentDescriptor, ReplayConflict

DEFAULT_HORIZON = 100_000
DEFAULT_THETA = 8
FINGERPRINT_SPAN = 4096
MAX_PATTERN = 1 << 12


# -- classifications -------------------------------------------------------


@dataclass(frozen=True)
class Finite:
    bound: int


@dataclass(frozen=True)
class Cofinite:
    bound: int


@dataclass(frozen=True)
class PeriodicUnion:
    preperiod: tuple
    period: tuple


@dataclass(frozen=True)
class Tail:
    """Membership for n >= start is ``pattern[n % len(pattern)]``.

    Below ``start`` nothing is claimed; the descriptor's predicate decides.
    Finite, Cofinite and PeriodicUnion all normalize to a Tail.
    """

    start: int
    pattern: tuple

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("empty tail pattern")

    @property
    def period(self) -> int:
        return len(self.pattern)

    def is_infinite(self) -> bool:
        return any(self.pattern)

    def member(self, n: int) -> bool:
        return self.pattern[n % len(self.pattern)]

    def _combine(self, other: "Tail", op) -> "Tail":
        p = math.lcm(self.period, other.period)
        pat = tuple(op(self.pattern[r % self.period], other.pattern[r % other.period]) for r in range(p))
        return Tail(max(self.start, other.start), _reduce(pat))

    def __and__(self, other: "Tail") -> "Tail":
        return self._combine(other, lambda a, b: a and b)

    def __or__(self, other: "Tail") -> "Tail":
        return self._combine(other, lambda a, b: a or b)

    def __invert__(self) -> "Tail":
        return Tail(self.start, tuple(not b for b in self.pattern))


@dataclass(frozen=True)
class Unknown:
    pass


UNKNOWN = Unknown()
EVERYTHING = Tail(0, (True,))


def _reduce(pattern: tuple) -> tuple:
    """Shortest period that generates the same absolute-residue pattern."""
    p = len(pattern)
    for d in range(1, p + 1):
        if p % d == 0 and all(pattern[i] == pattern[i % d] for i in range(p)):
            return pattern[:d]
    return pattern


def tail_of(classification) -> Tail | None:
    if isinstance(classification, Tail):
        return classification
    if isinstance(classification, Finite):
        return Tail(classification.bound, (False,))
    if isinstance(classification, Cofinite):
        return Tail(classification.bound, (True,))
    if isinstance(classification, PeriodicUnion):
        pre, per = classification.preperiod, classification.period
        start, p = len(pre), len(per)
        return Tail(start, _reduce(tuple(bool(per[(r - start) % p]) for r in range(p))))
    return None


# -- set descriptors -------------------------------------------------------


class SetDescriptor:
    """A subset of the index set: predicate, classification and a log label."""

    __slots__ = ("eval", "classification", "label")

    def __init__(self, eval: Callable[[int], bool], classification=UNKNOWN, label: str = "?"):
        self.eval = eval
        self.classification = classification
        self.label = label

    def __repr__(self):
        return f"SetDescriptor({self.label!r}, {self.classification})"

    def __contains__(self, n: int) -> bool:
        return bool(self.eval(n))

    @property
    def tail(self) -> Tail | None:
        return tail_of(self.classification)

    @property
    def exact(self) -> bool:
        return self.tail is not None

    def __invert__(self) -> "SetDescriptor":
        t = self.tail
        f = self.eval
        return SetDescriptor(lambda n: not f(n), ~t if t is not None else UNKNOWN, _negate_label(self.label))

    def __and__(self, other: "SetDescriptor") -> "SetDescriptor":
        f, g = self.eval, other.eval
        return SetDescriptor(lambda n: f(n) and g(n), _merge(self.tail, other.tail, "and"),
                             f"({self.label} ∩ {other.label})")

    def __or__(self, other: "SetDescriptor") -> "SetDescriptor":
        f, g = self.eval, other.eval
        return SetDescriptor(lambda n: f(n) or g(n), _merge(self.tail, other.tail, "or"),
                             f"({self.label} ∪ {other.label})")

    # constructors

    @classmethod
    def finite(cls, elements: Iterable[int], label: str | None = None) -> "SetDescriptor":
        elems = frozenset(int(e) for e in elements)
        bound = max(elems) + 1 if elems else 0
        return cls(elems.__contains__, Finite(bound), label or "{" + ", ".join(map(str, sorted(elems))) + "}")

    @classmethod
    def cofinite(cls, bound: int, label: str | None = None) -> "SetDescriptor":
        return cls(lambda n: n >= bound, Cofinite(bound), label or f"{{n : n >= {bound}}}")

    @classmethod
    def periodic(cls, preperiod: Iterable[bool], period: Iterable[bool], label: str | None = None) -> "SetDescriptor":
        pre, per = tuple(map(bool, preperiod)), tuple(map(bool, period))
        L, p = len(pre), len(per)

        def member(n: int) -> bool:
            return pre[n] if n < L else per[(n - L) % p]

        return cls(member, PeriodicUnion(pre, per), label or f"periodic(pre={_bits(pre)}, period={_bits(per)})")

    @classmethod
    def residue(cls, r: int, modulus: int, label: str | None = None) -> "SetDescriptor":
        pattern = tuple(i == r % modulus for i in range(modulus))
        return cls(lambda n: n % modulus == r % modulus, Tail(0, pattern),
                   label or f"{{n : n ≡ {r % modulus} (mod {modulus})}}")

    @classmethod
    def predicate(cls, fn: Callable[[int], bool], label: str) -> "SetDescriptor":
        return cls(fn, UNKNOWN, label)


EVERY_INDEX = SetDescriptor(lambda n: True, EVERYTHING, "ℕ")


def _bits(bs) -> str:
    return "".join("1" if b else "0" for b in bs)


def _negate_label(label: str) -> str:
    if label.startswith("¬(") and label.endswith(")"):
        return label[2:-1]
    return f"¬({label})"


def _merge(a: Tail | None, b: Tail | None, how: str):
    if a is None or b is None:
        return UNKNOWN
    if math.lcm(a.period, b.period) > MAX_PATTERN:
        return UNKNOWN
    return a & b if how == "and" else a | b


# -- the oracle ------------------------------------------------------------


@dataclass
class Decision:
    label: str
    answer: bool
    mode: str  # "exact" | "heuristic"
    witness_count: int | None

    def as_dict(self) -> dict:
        return {"label": self.label, "answer": self.answer, "mode": self.mode,
                "witness_count": self.witness_count}


@dataclass
class ConsistencyReport:
    horizon: int
    theta: int
    commitments: int
    witness_counts: list
    exact_infinite: list
    heuristic_decisions: list
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"horizon": self.horizon, "theta": self.theta, "commitments": self.commitments,
                "witness_counts": self.witness_counts, "exact_infinite": self.exact_infinite,
                "heuristic_decisions": self.heuristic_decisions, "failures": self.failures, "ok": self.ok}


def default_horizon() -> int:
    env = os.environ.get("LAMBDA_HORIZON")
    return int(env) if env else DEFAULT_HORIZON


class UltrafilterOracle:
    """Incremental decision engine for qualified sets.

    Every query commits either the queried set or its complement.  Queries
    are serialized by an internal lock, so one oracle may be shared between
    threads; the commit order is then the order in which queries acquire it.

    ``replay`` maps labels to previously logged answers (in order); a query
    whose label has a pending replayed answer is forced to that answer,
    unless the answer is provably impossible, which raises ReplayConflict.
    """

    def __init__(self, horizon: int | None = None, theta: int = DEFAULT_THETA,
                 replay: dict[str, list[bool]] | None = None):
        self.horizon = int(horizon) if horizon is not None else default_horizon()
        if self.horizon < 4 * theta:
            raise ValueError(f"horizon {self.horizon} too small for theta={theta}")
        self.theta = theta
        self.committed: list[SetDescriptor] = []
        self.decision_log: list[Decision] = []
        self._exact = EVERYTHING
        self._sampled: list[tuple[SetDescriptor, dict]] = []
        self._seen: dict[str, list] = {}
        self._replay = {k: list(v) for k, v in (replay or {}).items()}
        self._poisoned = False
        self._lock = threading.RLock()

    # public API

    def is_qualified(self, s: SetDescriptor) -> bool:
        with self._lock:
            if self._poisoned:
                raise HorizonExhausted("oracle poisoned by an earlier exhausted horizon")
            self._validate(s)
            cached = self._lookup(s)
            if cached is not None:
                answer, mode = cached
                self.decision_log.append(Decision(s.label, answer, mode, None))
                return answer

            answer, mode, witnesses = self._decide(s)
            forced = self._replay.get(s.label)
            if forced:
                wanted = forced.pop(0)
                t = s.tail
                if wanted != answer and t is not None:
                    side = t if wanted else ~t
                    if math.lcm(side.period, self._exact.period) <= MAX_PATTERN \
                            and not (self._exact & side).is_infinite():
                        raise ReplayConflict(f"replayed answer {wanted} for {s.label!r} contradicts commitments")
                answer = wanted

            chosen = s if answer else ~s
            self._commit(chosen)
            if self._sampled:
                witnesses = self._count_witnesses(None)
                if witnesses < self.theta:
                    self._poisoned = True
                    self.decision_log.append(Decision(s.label, answer, mode, witnesses))
                    raise HorizonExhausted(
                        f"after deciding {s.label!r} only {witnesses} witnesses remain in the sampling window")
            elif mode == "exact":
                witnesses = None
            self._remember(s, answer, mode)
            self.decision_log.append(Decision(s.label, answer, mode, witnesses))
            return answer

    def check_consistency(self) -> ConsistencyReport:
        """Witness counts below the horizon for every prefix of the commitment log."""
        with self._lock:
            h = self.horizon
            mask = np.ones(h, dtype=bool)
            running = EVERYTHING
            counts, exact_inf, failures = [h], [True], []
            for k, s in enumerate(self.committed, start=1):
                mask &= self._mask(s, h)
                t = s.tail
                running = (running & t) if (running is not None and t is not None
                                            and math.lcm(running.period, t.period) <= MAX_PATTERN) else None
                c = int(mask.sum())
                inf = running is not None and running.is_infinite()
                counts.append(c)
                exact_inf.append(inf)
                if not inf and c < self.theta:
                    failures.append(f"prefix {k} ({s.label}): {c} witnesses < theta={self.theta}")
            heuristic = [d.label for d in self.decision_log if d.mode == "heuristic"]
            return ConsistencyReport(h, self.theta, len(self.committed), counts, exact_inf, heuristic, failures)

    def log_records(self) -> list[dict]:
        return [d.as_dict() for d in self.decision_log]

    @property
    def decisions_used(self) -> int:
        return len(self.decision_log)

    # internals

    def _validate(self, s: SetDescriptor) -> None:
        c = s.classification
        probes: list[tuple[int, bool]] = []
        if isinstance(c, PeriodicUnion):
            probes += [(n, c.preperiod[n]) for n in range(min(len(c.preperiod), 64))]
        t = s.tail
        if t is not None:
            span = max(self.horizon, 1)
            pts = {t.start + i for i in range(min(2 * t.period, 32))}
            pts |= {t.start + (span * i) // 16 for i in range(16)}
            probes += [(n, t.member(n)) for n in sorted(pts)]
        for n, expected in probes:
            got = bool(s.eval(n))
            if got != bool(expected):
                raise InconsistentDescriptor(
                    f"{s.label!r}: classification {c} says {expected} at n={n}, predicate says {got}")

    def _window(self, extra_tail: Tail | None) -> tuple[int, int, Tail]:
        t = self._exact if extra_tail is None else self._exact & extra_tail
        half = self.horizon // 2
        lo = max(half, t.start)
        return lo, lo + (self.horizon - half), t

    def _count_witnesses(self, s: SetDescriptor | None, need: int | None = None) -> int:
        extra_tail = s.tail if s is not None else None
        lo, hi, t = self._window(extra_tail)
        need = self.theta if need is None else need
        count = 0
        check_s = s is not None and extra_tail is None
        for n in range(lo, hi):
            if not t.member(n):
                continue
            if check_s and not s.eval(n):
                continue
            ok = True
            for d, memo in self._sampled:
                v = memo.get(n)
                if v is None:
                    v = memo[n] = bool(d.eval(n))
                if not v:
                    ok = False
                    break
            if ok:
                count += 1
                if count >= need:
                    break
        return count

    def _decide(self, s: SetDescriptor) -> tuple[bool, str, int | None]:
        t = s.tail
        if t is not None and math.lcm(t.period, self._exact.period) <= MAX_PATTERN:
            inter = self._exact & t
            if not inter.is_infinite():
                return False, "exact", 0
            if not (self._exact & ~t).is_infinite():
                # s almost contains the exact commitments, so it is qualified whatever was sampled
                return True, "exact", None
            if not self._sampled:
                return True, "exact", None
        count = self._count_witnesses(s)
        return count >= self.theta, "heuristic", count

    def _commit(self, s: SetDescriptor) -> None:
        self.committed.append(s)
        t = s.tail
        if t is not None and math.lcm(t.period, self._exact.period) <= MAX_PATTERN:
            self._exact = self._exact & t
        else:
            self._sampled.append((s, {}))

    def _fingerprint(self, s: SetDescriptor) -> bytes:
        n = min(self.horizon, FINGERPRINT_SPAN)
        return np.packbits([bool(s.eval(i)) for i in range(n)]).tobytes()

    def _lookup(self, s: SetDescriptor):
        if s.exact:
            return None  # exact answers are already forced by the commitments
        entries = self._seen.get(s.label)
        if not entries:
            return None
        fp = self._fingerprint(s)
        for entry in entries:
            if entry[3] is None:
                entry[3] = self._fingerprint(entry[0])
            if entry[3] == fp:
                return entry[1], entry[2]
        return None

    def _remember(self, s: SetDescriptor, answer: bool, mode: str) -> None:
        if not s.exact:
            self._seen.setdefault(s.label, []).append([s, answer, mode, None])

    def _mask(self, s: SetDescriptor, h: int) -> np.ndarray:
        t = s.tail
        if t is None:
            return np.fromiter((bool(s.eval(n)) for n in range(h)), dtype=bool, count=h)
        idx = np.arange(h)
        mask = np.asarray(t.pattern, dtype=bool)[idx % t.period]
        for n in range(min(t.start, h)):
            mask[n] = bool(s.eval(n))
        return mask
