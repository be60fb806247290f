"""Shared fixtures: the nine-event reference stream, two reference queries,
and the hand-built single-clock automaton used across the suite."""

from __future__ import annotations

from fractions import Fraction

import pytest

from tcer.cea import Cmp, GTrue, TimedCea, Transition
from tcer.model import Basic, Event, TimedStream, TrueP

# A heat-then-dry scenario: humidity (H) and temperature (T) readings.
S0_ROWS = [
    ("H", "hum", 25, "1.2"),
    ("T", "temp", 45, "1.33"),
    ("H", "hum", 20, "2.5"),
    ("H", "hum", 25, "3.7"),
    ("T", "temp", 40, "4.5"),
    ("T", "temp", 42, "5.3"),
    ("T", "temp", 25, "5.9"),
    ("H", "hum", 70, "6.1"),
    ("H", "hum", 18, "7.2"),
]

PHI2_TEXT = (
    "pi {X, Y, T} ((H as X :[0,1] (T (+)[0,1]) :[0,1] H as Y)"
    " filter (X[hum < 30] and Y[hum > 30]))"
)

PHI1P_TEXT = (
    "pi {X, Y} (((T as X ;[0,1] T ; H as Y) within [0,5])"
    " filter (T[temp > 40] and H[hum < 25]))"
)


def make_s0() -> TimedStream:
    return TimedStream(
        (Event(etype, {attr: Fraction(value)}), ts)
        for etype, attr, value, ts in S0_ROWS
    )


def make_t1(temp_op: str = ">=") -> TimedCea:
    """Hot reading marks X, a confirming hot reading within 1s, then a dry
    reading within 5s of X marks Y."""
    hot = Basic("temp", temp_op, Fraction(40))
    dry = Basic("hum", "<", Fraction(25))
    return TimedCea(
        states=frozenset({0, 1, 2, 3}),
        vars=frozenset({"X", "Y"}),
        clocks=frozenset({"z"}),
        delta=(
            Transition(0, hot, GTrue(), frozenset({"X"}), frozenset({"z"}), 1),
            Transition(1, TrueP(), GTrue(), frozenset(), frozenset(), 1),
            Transition(1, hot, Cmp("z", "<=", Fraction(1)), frozenset(), frozenset(), 2),
            Transition(2, TrueP(), GTrue(), frozenset(), frozenset(), 2),
            Transition(2, dry, Cmp("z", "<=", Fraction(5)), frozenset({"Y"}), frozenset(), 3),
        ),
        initial=0,
        finals=frozenset({3}),
    )


@pytest.fixture
def s0() -> TimedStream:
    return make_s0()


@pytest.fixture
def t1() -> TimedCea:
    return make_t1()
