"""Query language AST, fragment classifier, and brute-force reference semantics.

The reference evaluator (`eval_cel_oracle`) is a direct structural recursion
over the language's denotational semantics.  It is deliberately exhaustive and
desk-scale only; everything else in the system is tested against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import (
    ComplexEvent,
    Interval,
    Predicate,
    TimedStream,
    project_ce,
    sat,
    union_ce,
)

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventType:
    etype: str


@dataclass(frozen=True)
class As:
    body: "CelFormula"
    var: str


@dataclass(frozen=True)
class Filter:
    body: "CelFormula"
    var: str
    pred: Predicate


@dataclass(frozen=True)
class Or:
    left: "CelFormula"
    right: "CelFormula"


@dataclass(frozen=True)
class And:
    left: "CelFormula"
    right: "CelFormula"


@dataclass(frozen=True)
class Seq:
    left: "CelFormula"
    right: "CelFormula"


@dataclass(frozen=True)
class ContigSeq:
    left: "CelFormula"
    right: "CelFormula"


@dataclass(frozen=True)
class Plus:
    body: "CelFormula"


@dataclass(frozen=True)
class ContigPlus:
    body: "CelFormula"


@dataclass(frozen=True)
class Project:
    vars: frozenset[str]
    body: "CelFormula"

    def __post_init__(self) -> None:
        object.__setattr__(self, "vars", frozenset(self.vars))


@dataclass(frozen=True)
class Within:
    body: "CelFormula"
    interval: Interval


@dataclass(frozen=True)
class TimedSeq:
    left: "CelFormula"
    interval: Interval
    right: "CelFormula"


@dataclass(frozen=True)
class TimedContigSeq:
    left: "CelFormula"
    interval: Interval
    right: "CelFormula"


@dataclass(frozen=True)
class TimedIter:
    body: "CelFormula"
    interval: Interval


@dataclass(frozen=True)
class TimedContigIter:
    body: "CelFormula"
    interval: Interval


CelFormula = Union[
    EventType,
    As,
    Filter,
    Or,
    And,
    Seq,
    ContigSeq,
    Plus,
    ContigPlus,
    Project,
    Within,
    TimedSeq,
    TimedContigSeq,
    TimedIter,
    TimedContigIter,
]

_BINARY = (Or, And, Seq, ContigSeq, TimedSeq, TimedContigSeq)
_UNARY = (As, Filter, Plus, ContigPlus, Project, Within, TimedIter, TimedContigIter)


def children(phi: CelFormula) -> tuple[CelFormula, ...]:
    if isinstance(phi, EventType):
        return ()
    if isinstance(phi, _BINARY):
        return (phi.left, phi.right)
    return (phi.body,)


def subformulas(phi: CelFormula):
    yield phi
    for child in children(phi):
        yield from subformulas(child)


def formula_vars(phi: CelFormula) -> frozenset[str]:
    """All variables a formula can bind (event types count as variables)."""
    acc: set[str] = set()
    for sub in subformulas(phi):
        if isinstance(sub, EventType):
            acc.add(sub.etype)
        elif isinstance(sub, As):
            acc.add(sub.var)
    return frozenset(acc)


# ---------------------------------------------------------------------------
# Fragment classifier
# ---------------------------------------------------------------------------

TIMED_OPS = (Within, TimedSeq, TimedContigSeq, TimedIter, TimedContigIter)


def _is_standard(phi: CelFormula) -> bool:
    """No time operators anywhere (the core language, projection included)."""
    return not any(isinstance(sub, TIMED_OPS) for sub in subformulas(phi))


def _is_simple(phi: CelFormula) -> bool:
    """No projection and no window anywhere; other time operators are free."""
    return not any(isinstance(sub, (Project, Within)) for sub in subformulas(phi))


def _is_windowed(phi: CelFormula) -> bool:
    """The two-level fragment: an outer layer of AS/FILTER/OR/AND/WITHIN (and
    projection) over bodies that are either simple or free of time operators.
    """
    if _is_standard(phi) or _is_simple(phi):
        return True
    if isinstance(phi, As):
        return _is_windowed(phi.body)
    if isinstance(phi, Filter):
        return _is_windowed(phi.body)
    if isinstance(phi, (Or, And)):
        return _is_windowed(phi.left) and _is_windowed(phi.right)
    if isinstance(phi, Within):
        return _is_windowed(phi.body)
    if isinstance(phi, Project):
        return _is_windowed(phi.body)
    return False


def _is_type_disjunction(phi: CelFormula) -> bool:
    if isinstance(phi, EventType):
        return True
    if isinstance(phi, Or):
        return _is_type_disjunction(phi.left) and _is_type_disjunction(phi.right)
    return False


def _is_swg_block(phi: CelFormula) -> bool:
    # FILTER (types AS X, X[P])
    return (
        isinstance(phi, Filter)
        and isinstance(phi.body, As)
        and phi.var == phi.body.var
        and _is_type_disjunction(phi.body.body)
    )


def _is_swg_chain(phi: CelFormula) -> bool:
    if _is_swg_block(phi):
        return True
    return (
        isinstance(phi, TimedSeq)
        and _is_swg_chain(phi.left)
        and _is_swg_block(phi.right)
    )


def _is_swg(phi: CelFormula) -> bool:
    """Sequence-with-gaps form: a window over a chain of timed-sequenced
    filtered single-event blocks."""
    if not isinstance(phi, Within):
        return False
    window = phi.interval
    if window.high is None or window.low != 0 or not window.low_closed:
        return False
    return _is_swg_chain(phi.body)


def classify(phi: CelFormula) -> tuple[str, frozenset[str]]:
    """Return (most specific fragment label, all matching labels).

    Labels: ``swg`` (sequence-with-gaps queries), ``simple`` (no projection or
    window), ``windowed`` (two-level fragment), ``general``.
    """
    flags: set[str] = set()
    if _is_swg(phi):
        flags.add("swg")
    if _is_simple(phi):
        flags.add("simple")
    if _is_windowed(phi):
        flags.add("windowed")
    for label in ("swg", "simple", "windowed"):
        if label in flags:
            return label, frozenset(flags)
    return "general", frozenset(flags)


# ---------------------------------------------------------------------------
# Reference semantics
# ---------------------------------------------------------------------------

DEFAULT_ORACLE_CAP = 14


class OracleCapExceeded(Exception):
    pass


def eval_cel_oracle(
    phi: CelFormula, stream: TimedStream, cap: int = DEFAULT_ORACLE_CAP
) -> frozenset[ComplexEvent]:
    """The full output set of the formula over the stream, by brute force."""
    if len(stream) > cap:
        raise OracleCapExceeded(
            f"stream length {len(stream)} exceeds oracle cap {cap}"
        )
    memo: dict[CelFormula, frozenset[ComplexEvent]] = {}
    return _sem(phi, stream, memo)


def eval_cel_at(
    phi: CelFormula, stream: TimedStream, j: int, cap: int = DEFAULT_ORACLE_CAP
) -> frozenset[ComplexEvent]:
    return frozenset(
        c for c in eval_cel_oracle(phi, stream, cap=cap) if c.end == j
    )


def _sem(
    phi: CelFormula,
    s: TimedStream,
    memo: dict[CelFormula, frozenset[ComplexEvent]],
) -> frozenset[ComplexEvent]:
    cached = memo.get(phi)
    if cached is not None:
        return cached
    result = frozenset(_sem_uncached(phi, s, memo))
    memo[phi] = result
    return result


def _gap_ok(c1: ComplexEvent, c2: ComplexEvent, s: TimedStream, interval: Interval) -> bool:
    return interval.contains(s.time(c2.start) - s.time(c1.end))


def _iterate(
    base: frozenset[ComplexEvent],
    s: TimedStream,
    contiguous: bool,
    interval: Interval | None,
) -> frozenset[ComplexEvent]:
    """Least fixed point of C = base ∪ {c1 ∪ c2 | c1 ∈ base, c2 ∈ C, joinable}."""
    acc: set[ComplexEvent] = set(base)
    frontier = set(base)
    while frontier:
        fresh: set[ComplexEvent] = set()
        for c2 in frontier:
            for c1 in base:
                if contiguous:
                    if c1.end + 1 != c2.start:
                        continue
                elif c1.end >= c2.start:
                    continue
                if interval is not None and not _gap_ok(c1, c2, s, interval):
                    continue
                joined = union_ce(c1, c2)
                if joined not in acc:
                    fresh.add(joined)
        acc.update(fresh)
        frontier = fresh
    return frozenset(acc)


def _sem_uncached(phi, s, memo):
    if isinstance(phi, EventType):
        return {
            ComplexEvent.make(i, i, {phi.etype: {i}})
            for i, e, _ in s.pairs()
            if e.etype == phi.etype
        }
    if isinstance(phi, As):
        out = set()
        for c in _sem(phi.body, s, memo):
            bound = set().union(*(ps for _, ps in c.binding)) if c.binding else set()
            mapping = c.mapping()
            mapping[phi.var] = bound
            out.add(ComplexEvent.make(c.start, c.end, mapping))
        return out
    if isinstance(phi, Filter):
        return {
            c
            for c in _sem(phi.body, s, memo)
            if all(sat(s.event(i), phi.pred) for i in c.get(phi.var))
        }
    if isinstance(phi, Or):
        return _sem(phi.left, s, memo) | _sem(phi.right, s, memo)
    if isinstance(phi, And):
        return _sem(phi.left, s, memo) & _sem(phi.right, s, memo)
    if isinstance(phi, (Seq, ContigSeq, TimedSeq, TimedContigSeq)):
        contiguous = isinstance(phi, (ContigSeq, TimedContigSeq))
        interval = phi.interval if isinstance(phi, (TimedSeq, TimedContigSeq)) else None
        out = set()
        for c1 in _sem(phi.left, s, memo):
            for c2 in _sem(phi.right, s, memo):
                if contiguous:
                    if c1.end + 1 != c2.start:
                        continue
                elif c1.end >= c2.start:
                    continue
                if interval is not None and not _gap_ok(c1, c2, s, interval):
                    continue
                out.add(union_ce(c1, c2))
        return out
    if isinstance(phi, (Plus, ContigPlus, TimedIter, TimedContigIter)):
        contiguous = isinstance(phi, (ContigPlus, TimedContigIter))
        interval = phi.interval if isinstance(phi, (TimedIter, TimedContigIter)) else None
        return _iterate(_sem(phi.body, s, memo), s, contiguous, interval)
    if isinstance(phi, Project):
        return {project_ce(c, phi.vars) for c in _sem(phi.body, s, memo)}
    if isinstance(phi, Within):
        return {
            c
            for c in _sem(phi.body, s, memo)
            if phi.interval.contains(s.time(c.end) - s.time(c.start))
        }
    raise TypeError(f"not a formula: {phi!r}")
