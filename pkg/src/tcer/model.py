"""Core data model: exact time values, events, streams, predicates, complex events.

Time values are exact rationals (``fractions.Fraction``); floats are never used
for timestamps or clock arithmetic.  Streams are sequences of ``(event, ts)``
pairs with strictly increasing timestamps, indexed from 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

Rational = Fraction

AttrValue = Union[int, Fraction, str]


def rat(value: Union[int, str, Fraction]) -> Fraction:
    """Build an exact rational from an int, a Fraction, or a decimal string.

    ``rat("1.33")`` is exactly 133/100.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not time values")
    if isinstance(value, float):
        # Floats only enter through sloppy callers; round-trip through the
        # shortest decimal repr so "0.1" means 1/10, not the binary float.
        return Fraction(repr(value))
    return Fraction(value)


# ---------------------------------------------------------------------------
# Intervals over the non-negative rationals (used for time windows and gaps).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """An interval of non-negative rationals, possibly unbounded above.

    ``high is None`` means +infinity (and then ``high_closed`` is False).
    """

    low: Fraction
    high: Optional[Fraction]
    low_closed: bool = True
    high_closed: bool = True

    def __post_init__(self) -> None:
        if self.low < 0:
            raise ValueError("interval bound below zero")
        if self.high is None and self.high_closed:
            object.__setattr__(self, "high_closed", False)
        if self.high is not None:
            if self.high < self.low:
                raise ValueError("empty interval: high < low")
            if self.high == self.low and not (self.low_closed and self.high_closed):
                raise ValueError("empty interval: open at the single point")

    def contains(self, value: Fraction) -> bool:
        if self.low_closed:
            if value < self.low:
                return False
        elif value <= self.low:
            return False
        if self.high is None:
            return True
        if self.high_closed:
            return value <= self.high
        return value < self.high

    def contains_zero(self) -> bool:
        return self.contains(Fraction(0))

    @staticmethod
    def at_most(c: Union[int, str, Fraction]) -> "Interval":
        return Interval(Fraction(0), rat(c))

    @staticmethod
    def less_than(c: Union[int, str, Fraction]) -> "Interval":
        return Interval(Fraction(0), rat(c), high_closed=False)

    @staticmethod
    def at_least(c: Union[int, str, Fraction]) -> "Interval":
        return Interval(rat(c), None)

    @staticmethod
    def greater_than(c: Union[int, str, Fraction]) -> "Interval":
        return Interval(rat(c), None, low_closed=False)

    @staticmethod
    def exactly(c: Union[int, str, Fraction]) -> "Interval":
        return Interval(rat(c), rat(c))

    def __str__(self) -> str:
        lo = "[" if self.low_closed else "("
        hi_val = "inf" if self.high is None else format_rat(self.high)
        hi = "]" if self.high_closed else ")"
        return f"{lo}{format_rat(self.low)},{hi_val}{hi}"


def format_rat(value: Fraction) -> str:
    """Render a rational: as a decimal when the denominator is 10^k, else n/d."""
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num)
    d = den
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        # denominator divides some power of ten; print exact decimal
        k = 0
        scaled = value
        while scaled.denominator != 1:
            scaled *= 10
            k += 1
        digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
        sign = "-" if num < 0 else ""
        return f"{sign}{digits[:-k]}.{digits[-k:]}"
    return f"{num}/{den}"


# ---------------------------------------------------------------------------
# Events and streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    """A data item: an event type plus a mapping of attribute values."""

    etype: str
    attrs: Mapping[str, AttrValue]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attrs", dict(self.attrs))

    def get(self, name: str) -> Optional[AttrValue]:
        return self.attrs.get(name)

    def __hash__(self) -> int:
        return hash((self.etype, tuple(sorted(self.attrs.items()))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Event):
            return NotImplemented
        return self.etype == other.etype and dict(self.attrs) == dict(other.attrs)


class TimedStream:
    """A finite timed stream: events paired with strictly increasing timestamps.

    Positions are 1-based: ``stream[i]`` is the i-th ``(event, ts)`` pair.
    """

    def __init__(self, items: Iterable[tuple[Event, Union[int, str, Fraction]]]):
        self._events: list[Event] = []
        self._times: list[Fraction] = []
        prev: Optional[Fraction] = None
        for event, ts in items:
            t = rat(ts)
            if t <= 0:
                raise ValueError("timestamps must be positive")
            if prev is not None and t <= prev:
                raise ValueError(f"timestamps not strictly increasing at t={t}")
            self._events.append(event)
            self._times.append(t)
            prev = t

    def __len__(self) -> int:
        return len(self._events)

    def __getitem__(self, pos: int) -> tuple[Event, Fraction]:
        if not 1 <= pos <= len(self._events):
            raise IndexError(f"stream position {pos} out of range")
        return self._events[pos - 1], self._times[pos - 1]

    def event(self, pos: int) -> Event:
        return self[pos][0]

    def time(self, pos: int) -> Fraction:
        return self[pos][1]

    def pairs(self) -> Iterable[tuple[int, Event, Fraction]]:
        for i, (e, t) in enumerate(zip(self._events, self._times), start=1):
            yield i, e, t

    def pairs_et(self) -> Iterable[tuple[Event, Fraction]]:
        yield from zip(self._events, self._times)

    def delta(self, pos: int) -> Fraction:
        """Time elapsed since the previous position (the timestamp itself at 1)."""
        if pos == 1:
            return self.time(1)
        return self.time(pos) - self.time(pos - 1)


# ---------------------------------------------------------------------------
# Predicates over single events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrueP:
    """The predicate satisfied by every event."""

    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class TypeIs:
    etype: str

    def __str__(self) -> str:
        return f"type={self.etype}"


@dataclass(frozen=True)
class Basic:
    """Comparison of one attribute against a constant.

    Absent attributes never satisfy a Basic predicate, and neither do values
    of a different kind than the constant (string vs. number).
    """

    attr: str
    op: str  # one of < <= > >= == !=
    value: AttrValue

    def __post_init__(self) -> None:
        if self.op not in ("<", "<=", ">", ">=", "==", "!="):
            raise ValueError(f"unknown comparison {self.op!r}")
        if isinstance(self.value, float):
            object.__setattr__(self, "value", rat(self.value))

    def __str__(self) -> str:
        v = self.value
        if isinstance(v, str):
            rendered = f"'{v}'"
        elif isinstance(v, Fraction):
            rendered = format_rat(v)
        else:
            rendered = str(v)
        return f"{self.attr} {self.op} {rendered}"


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Not:
    body: "Predicate"

    def __str__(self) -> str:
        return f"(not {self.body})"


Predicate = Union[TrueP, TypeIs, Basic, And, Not]


def _compare(lhs: AttrValue, op: str, rhs: AttrValue) -> bool:
    lhs_num = not isinstance(lhs, str) and not isinstance(lhs, bool)
    rhs_num = not isinstance(rhs, str)
    if lhs_num != rhs_num:
        # Mixed string/number never satisfies any comparison, including !=;
        # a Basic predicate constrains values of its constant's kind.
        return False
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    if op == "==":
        return lhs == rhs
    return lhs != rhs


def sat(event: Event, pred: Predicate) -> bool:
    """Does the event satisfy the predicate?"""
    if isinstance(pred, TrueP):
        return True
    if isinstance(pred, TypeIs):
        return event.etype == pred.etype
    if isinstance(pred, Basic):
        value = event.get(pred.attr)
        if value is None:
            return False
        if isinstance(value, float):
            value = rat(value)
        return _compare(value, pred.op, pred.value)
    if isinstance(pred, And):
        return sat(event, pred.left) and sat(event, pred.right)
    if isinstance(pred, Not):
        return not sat(event, pred.body)
    raise TypeError(f"not a predicate: {pred!r}")


def pred_and(*preds: Predicate) -> Predicate:
    """Conjunction, folding away ``true`` conjuncts."""
    acc: Optional[Predicate] = None
    for p in preds:
        if isinstance(p, TrueP):
            continue
        acc = p if acc is None else And(acc, p)
    return acc if acc is not None else TrueP()


# --- satisfiability / disjointness (syntactic, exact for this language) ----

_NEG = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}

Literal = tuple[bool, Union[TypeIs, Basic]]  # (positive?, atom)


def _pred_dnf(pred: Predicate, positive: bool) -> list[list[Literal]]:
    """DNF of the predicate (or of its negation), as lists of literals.

    An empty conjunct means "true"; an empty list of conjuncts means "false".
    """
    if isinstance(pred, TrueP):
        return [[]] if positive else []
    if isinstance(pred, (TypeIs, Basic)):
        return [[(positive, pred)]]
    if isinstance(pred, Not):
        return _pred_dnf(pred.body, not positive)
    if isinstance(pred, And):
        lhs = _pred_dnf(pred.left, positive)
        rhs = _pred_dnf(pred.right, positive)
        if positive:
            return [a + b for a in lhs for b in rhs]
        return lhs + rhs  # de Morgan: negation of a conjunction
    raise TypeError(f"not a predicate: {pred!r}")


def _conjunct_satisfiable(literals: list[Literal]) -> bool:
    pos_types: set[str] = set()
    neg_types: set[str] = set()
    per_attr: dict[str, list[tuple[bool, Basic]]] = {}
    for positive, atom in literals:
        if isinstance(atom, TypeIs):
            (pos_types if positive else neg_types).add(atom.etype)
        else:
            per_attr.setdefault(atom.attr, []).append((positive, atom))
    if len(pos_types) > 1 or pos_types & neg_types:
        return False
    for constraints in per_attr.values():
        if not _attr_constraints_satisfiable(constraints):
            return False
    return True


def _attr_constraints_satisfiable(constraints: list[tuple[bool, Basic]]) -> bool:
    """Is there a single attribute value (or absence) meeting all constraints?

    Negated Basic literals admit an absent attribute, so a set with no
    positive literal is always satisfiable.
    """
    norm: list[tuple[str, AttrValue]] = []
    any_positive = False
    for positive, atom in constraints:
        any_positive = any_positive or positive
        norm.append((atom.op if positive else _NEG[atom.op], atom.value))
    if not any_positive:
        return True
    # With a positive literal present, the attribute must hold a value of the
    # constant's kind; negative literals of the other kind are then free...
    # except that a negated literal of kind K only excludes values of kind K.
    pos_kinds = {isinstance(v, str) for (positive, a) in constraints if positive for v in [a.value]}
    if len(pos_kinds) > 1:
        return False  # e.g. attr == 'a' and attr < 3
    string_kind = pos_kinds.pop()
    if string_kind:
        required: set[str] = set()
        excluded: set[str] = set()
        for positive, atom in constraints:
            if not isinstance(atom.value, str):
                if not positive:
                    continue  # negated numeric literal: satisfied by a string value
                return False
            op = atom.op if positive else _NEG[atom.op]
            if op == "==":
                required.add(atom.value)
            elif op == "!=":
                excluded.add(atom.value)
            else:
                return False  # ordered comparison forced on a string value
        if len(required) > 1 or required & excluded:
            return False
        return True
    # numeric: track an interval plus equalities/disequalities over rationals
    lo: Optional[Fraction] = None
    lo_strict = False
    hi: Optional[Fraction] = None
    hi_strict = False
    equal: set[Fraction] = set()
    unequal: set[Fraction] = set()
    for positive, atom in constraints:
        if isinstance(atom.value, str):
            if not positive:
                continue  # negated string literal holds for numeric values
            return False
        op = atom.op if positive else _NEG[atom.op]
        v = rat(atom.value)
        if op == "<" or op == "<=":
            strict = op == "<"
            if hi is None or v < hi or (v == hi and strict and not hi_strict):
                hi, hi_strict = v, strict
        elif op == ">" or op == ">=":
            strict = op == ">"
            if lo is None or v > lo or (v == lo and strict and not lo_strict):
                lo, lo_strict = v, strict
        elif op == "==":
            equal.add(v)
        else:
            unequal.add(v)
    if len(equal) > 1:
        return False
    if equal:
        v = next(iter(equal))
        if v in unequal:
            return False
        if lo is not None and (v < lo or (v == lo and lo_strict)):
            return False
        if hi is not None and (v > hi or (v == hi and hi_strict)):
            return False
        return True
    if lo is not None and hi is not None:
        if lo > hi or (lo == hi and (lo_strict or hi_strict)):
            return False
        if lo == hi and lo in unequal:
            return False
    # dense domain: finitely many disequalities cannot empty a non-point interval
    return True


def pred_satisfiable(pred: Predicate) -> bool:
    """Is some event satisfying the predicate possible at all?"""
    return any(_conjunct_satisfiable(conj) for conj in _pred_dnf(pred, True))


def preds_intersect(p: Predicate, q: Predicate) -> bool:
    """Do the event sets of two predicates overlap?"""
    return pred_satisfiable(And(p, q))


# ---------------------------------------------------------------------------
# Complex events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexEvent:
    """An output: an interval of stream positions plus variable bindings.

    ``binding`` maps variables to non-empty frozensets of positions within
    ``[start, end]``.  Variables bound to the empty set are dropped.
    """

    start: int
    end: int
    binding: tuple[tuple[str, frozenset[int]], ...]

    @staticmethod
    def make(start: int, end: int, binding: Mapping[str, Iterable[int]]) -> "ComplexEvent":
        if start > end:
            raise ValueError("start > end")
        items = []
        for var in sorted(binding):
            positions = frozenset(binding[var])
            if not positions:
                continue
            if min(positions) < start or max(positions) > end:
                raise ValueError(f"binding for {var} outside [{start}, {end}]")
            items.append((var, positions))
        return ComplexEvent(start, end, tuple(items))

    def mapping(self) -> dict[str, frozenset[int]]:
        return dict(self.binding)

    def vars(self) -> frozenset[str]:
        return frozenset(var for var, _ in self.binding)

    def get(self, var: str) -> frozenset[int]:
        for name, positions in self.binding:
            if name == var:
                return positions
        return frozenset()

    def __str__(self) -> str:
        inner = ", ".join(
            f"{var} -> {{{', '.join(map(str, sorted(ps)))}}}" for var, ps in self.binding
        )
        return f"({self.start}, {self.end}, [{inner}])"


def union_ce(c1: ComplexEvent, c2: ComplexEvent) -> ComplexEvent:
    """Pointwise union: min start, max end, per-variable union of positions."""
    merged: dict[str, set[int]] = {}
    for var, positions in c1.binding:
        merged.setdefault(var, set()).update(positions)
    for var, positions in c2.binding:
        merged.setdefault(var, set()).update(positions)
    return ComplexEvent.make(min(c1.start, c2.start), max(c1.end, c2.end), merged)


def project_ce(c: ComplexEvent, keep: Iterable[str]) -> ComplexEvent:
    """Keep only the bindings of the given variables; the span is unchanged."""
    keep_set = set(keep)
    return ComplexEvent.make(
        c.start, c.end, {var: ps for var, ps in c.binding if var in keep_set}
    )
