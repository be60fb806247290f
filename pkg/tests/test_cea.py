"""Clocked automata: guards, valuations, runs, classifiers, serialization."""

from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from tcer.cea import (
    Cmp,
    GAnd,
    GOr,
    GTrue,
    TimedCea,
    Transition,
    cea_from_json,
    cea_to_dot,
    cea_to_json,
    eval_cea_at,
    eval_cea_oracle,
    guard_sat,
    guard_satisfiable,
    guard_size,
    is_deterministic,
    is_monotonic,
    reset,
    step,
)
from tcer.model import Basic, ComplexEvent, Event, TimedStream, TrueP, TypeIs
from tcer.randgen import random_stream, random_sync_cea

from conftest import make_t1


# -- guards over partial valuations ------------------------------------------


def test_guard_sat_reference_values():
    nu = {"x": Fraction(5), "y": Fraction(1, 2)}
    disj = GOr(Cmp("x", ">=", Fraction(4)), Cmp("y", "<", Fraction(1, 2)))
    assert guard_sat(nu, disj)
    conj = GAnd(Cmp("z", "<=", Fraction(5, 3)), Cmp("y", ">=", Fraction(1)))
    assert not guard_sat(nu, conj)  # z is not initialized
    assert guard_sat(nu, GTrue())


def test_uninitialized_clock_fails_even_under_or():
    nu = {"x": Fraction(5)}
    assert not guard_sat(nu, GOr(Cmp("x", ">=", 0), Cmp("z", ">=", 0)))


def test_guard_size_counts_comparisons():
    g = GAnd(Cmp("x", "<", 1), GOr(Cmp("y", ">", 2), Cmp("y", "=", 3)))
    assert guard_size(g) == 3
    assert guard_size(GTrue()) == 1  # the constant itself is one operation


def test_guard_satisfiable():
    assert guard_satisfiable(GAnd(Cmp("z", ">", 1), Cmp("z", "<", 2)))
    assert not guard_satisfiable(GAnd(Cmp("z", ">", 2), Cmp("z", "<", 1)))
    assert not guard_satisfiable(Cmp("z", "<", 0))  # clocks are non-negative


def test_reset_initializes_and_zeroes():
    nu = reset({"x": Fraction(3)}, ["y"])
    assert nu == {"x": Fraction(3), "y": Fraction(0)}


# -- steps and runs ----------------------------------------------------------


def test_step_starts_a_run_on_a_hot_reading(s0, t1):
    succ = step((0, {}), s0[2], s0.time(2), t1)
    assert succ == {(1, (("z", Fraction(0)),), frozenset({"X"}))}


def test_step_closes_a_run_on_a_dry_reading(s0, t1):
    # at state 2 with z about to reach 2.7, event 9 (hum 18) fires z<=5
    nu = {"z": Fraction("7.2") - Fraction("4.5") - Fraction(1)}
    succ = step((2, nu), s0[9], Fraction(1), t1)
    assert any(q == 3 and label == frozenset({"Y"}) for q, _, label in succ)


def test_step_with_no_matching_predicate(s0, t1):
    assert step((0, {}), s0[1], s0.time(1), t1) == set()  # humidity event


def test_run_oracle_reference_output(s0, t1):
    assert eval_cea_oracle(t1, s0) == frozenset(
        {ComplexEvent.make(5, 9, {"X": {5}, "Y": {9}})}
    )
    assert eval_cea_at(t1, s0, 9) == eval_cea_oracle(t1, s0)
    assert eval_cea_at(t1, s0, 5) == frozenset()


def test_strict_variant_has_no_output(s0):
    # with a strict > 40 the borderline reading cannot confirm the heat
    assert eval_cea_oracle(make_t1(">"), s0) == frozenset()


def test_no_finals_means_no_output(s0, t1):
    dead = TimedCea(
        t1.states, t1.vars, t1.clocks, t1.delta, t1.initial, frozenset()
    )
    assert eval_cea_oracle(dead, s0) == frozenset()


def test_never_reset_clock_never_fires(s0):
    cea = TimedCea(
        states=frozenset({0, 1}),
        vars=frozenset({"X"}),
        clocks=frozenset({"z"}),
        delta=(
            Transition(0, TrueP(), Cmp("z", ">=", 0), frozenset({"X"}), frozenset(), 1),
        ),
        initial=0,
        finals=frozenset({1}),
    )
    assert eval_cea_oracle(cea, s0) == frozenset()


def test_outputs_partition_by_end_position(s0, t1):
    total = eval_cea_oracle(t1, s0)
    assert total == frozenset().union(
        *(eval_cea_at(t1, s0, j) for j in range(1, len(s0) + 1))
    )


# -- classifiers -------------------------------------------------------------


def test_t1_is_not_deterministic_but_monotonic(t1):
    assert not is_deterministic(t1)  # hot reading: stay at 1 or advance to 2
    assert is_monotonic(t1) == "le"


def test_single_transition_is_deterministic():
    cea = TimedCea(
        frozenset({0, 1}),
        frozenset({"X"}),
        frozenset(),
        (Transition(0, TrueP(), GTrue(), frozenset({"X"}), frozenset(), 1),),
        0,
        frozenset({1}),
    )
    assert is_deterministic(cea)
    assert is_monotonic(cea) == "le"  # all-true guards default


def test_disjoint_predicates_keep_determinism(t1):
    delta = tuple(
        tr if tr.pred != TrueP() else Transition(
            tr.source, TypeIs("T"), tr.guard, tr.label, tr.resets, tr.target
        )
        for tr in t1.delta
    )
    cea = TimedCea(t1.states, t1.vars, t1.clocks, delta, t1.initial, t1.finals)
    assert not is_deterministic(cea)  # hot T readings still overlap


def test_equality_guard_is_not_monotonic(t1):
    delta = t1.delta[:2] + (
        Transition(1, TrueP(), Cmp("z", "=", 3), frozenset(), frozenset(), 2),
    )
    cea = TimedCea(t1.states, t1.vars, t1.clocks, delta, t1.initial, t1.finals)
    assert is_monotonic(cea) == "no"


def test_mixed_directions_are_not_monotonic(t1):
    delta = t1.delta + (
        Transition(1, TrueP(), Cmp("z", ">=", 3), frozenset(), frozenset(), 2),
    )
    cea = TimedCea(t1.states, t1.vars, t1.clocks, delta, t1.initial, t1.finals)
    assert is_monotonic(cea) == "no"


def test_size_counts_states_and_transition_parts(t1):
    # 4 states + per transition: |guard| + |pred| + |label| + |resets|,
    # where the constant true guard/predicate each count as one
    assert t1.size() == 4 + (1 + 1 + 1 + 1) + (1 + 1 + 0 + 0) + (1 + 1 + 0 + 0) + (
        1 + 1 + 0 + 0
    ) + (1 + 1 + 1 + 0)


# -- serialization -----------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_json_round_trip(seed):
    rng = random.Random(seed)
    cea = random_sync_cea(rng)
    doc = json.loads(json.dumps(cea_to_json(cea)))
    back = cea_from_json(doc)
    stream = random_stream(rng, 6)
    assert eval_cea_oracle(back, stream) == eval_cea_oracle(cea, stream)
    assert back.clocks == cea.clocks and back.finals == cea.finals


def test_json_round_trip_preserves_fractions(t1):
    delta = t1.delta[:1] + (
        Transition(1, TrueP(), Cmp("z", "<=", Fraction(4, 3)), frozenset(), frozenset(), 2),
    )
    cea = TimedCea(t1.states, t1.vars, t1.clocks, delta, t1.initial, t1.finals)
    back = cea_from_json(cea_to_json(cea))
    guards = {tr.guard for tr in back.delta}
    assert Cmp("z", "<=", Fraction(4, 3)) in guards


def test_dot_export_mentions_all_states(t1):
    dot = cea_to_dot(t1)
    for q in t1.states:
        assert str(q) in dot
