"""Clock regions and the synchronous-reset decision procedure."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from tcer.cea import Cmp, GAnd, GTrue, TimedCea, Transition
from tcer.model import TrueP, TypeIs
from tcer.randgen import random_sync_cea
from tcer.regions import (
    EMPTY_REGION,
    SyncResult,
    check_sync,
    guard_holds,
    region_successor,
    reset_region,
    time_successors,
)

from conftest import make_t1


# -- region mechanics ---------------------------------------------------------


def test_successor_advances_fraction_then_integer():
    ceil = {"z": 3}
    r0 = reset_region(EMPTY_REGION, frozenset({"z"}))
    assert guard_holds(r0, Cmp("z", "=", 0), 1)
    r1 = region_successor(r0, ceil)
    assert guard_holds(r1, GAnd(Cmp("z", ">", 0), Cmp("z", "<", 1)), 1)
    r2 = region_successor(r1, ceil)
    assert guard_holds(r2, Cmp("z", "=", 1), 1)


def test_successor_saturates_above_the_ceiling():
    ceil = {"z": 1}
    region = reset_region(EMPTY_REGION, frozenset({"z"}))
    for _ in range(4):
        region = region_successor(region, ceil)
    assert guard_holds(region, Cmp("z", ">", 1), 1)
    assert region_successor(region, ceil) == region


def test_time_successors_cover_all_later_regions():
    ceil = {"z": 2}
    r0 = reset_region(EMPTY_REGION, frozenset({"z"}))
    succ = time_successors(r0, ceil)
    # strictly positive delay: (0,1), 1, (1,2), 2, (2,inf)
    assert len(succ) == 5
    assert not any(guard_holds(s, Cmp("z", "=", 0), 1) for s in succ)
    assert any(guard_holds(s, Cmp("z", "=", 2), 1) for s in succ)


def test_reset_zeroes_only_the_given_clocks():
    ceil = {"x": 1, "y": 1}
    region = reset_region(EMPTY_REGION, frozenset({"x", "y"}))
    region = region_successor(region, ceil)  # both in (0,1)
    region = reset_region(region, frozenset({"x"}))
    assert guard_holds(region, Cmp("x", "=", 0), 1)
    assert guard_holds(region, GAnd(Cmp("y", ">", 0), Cmp("y", "<", 1)), 1)


def test_uninitialized_clock_satisfies_no_guard():
    region = reset_region(EMPTY_REGION, frozenset({"x"}))
    assert not guard_holds(region, Cmp("y", ">=", 0), 1)
    assert guard_holds(region, GTrue(), 1)


# -- the decision procedure ---------------------------------------------------


def test_reference_automaton_is_synchronous(t1):
    result = check_sync(t1)
    assert result.verdict == "yes"
    assert result.is_sync
    assert result.witness is None
    assert result.explored > 0


@pytest.mark.parametrize("seed", range(20))
def test_random_generator_emits_synchronous_automata(seed):
    rng = random.Random(90_000 + seed)
    assert check_sync(random_sync_cea(rng)).verdict == "yes"


def _conflict_automaton(guard1=GTrue(), guard2=GTrue(), pred1=TrueP(), pred2=TrueP()):
    return TimedCea(
        states=frozenset({0, 1, 2}),
        vars=frozenset({"X"}),
        clocks=frozenset({"z"}),
        delta=(
            Transition(0, pred1, guard1, frozenset({"X"}), frozenset({"z"}), 1),
            Transition(0, pred2, guard2, frozenset({"X"}), frozenset(), 2),
        ),
        initial=0,
        finals=frozenset({1, 2}),
    )


def test_immediate_conflict_is_found_with_witness():
    result = check_sync(_conflict_automaton())
    assert result.verdict == "no"
    run1, run2 = result.witness
    assert len(run1) == len(run2) == 1
    assert run1[-1].resets != run2[-1].resets
    assert run1[-1].label == run2[-1].label


def test_witness_runs_share_labels_and_sources():
    # a deeper conflict: identical first step, divergent resets on the second
    cea = TimedCea(
        states=frozenset({0, 1, 2, 3}),
        vars=frozenset({"X"}),
        clocks=frozenset({"z"}),
        delta=(
            Transition(0, TrueP(), GTrue(), frozenset(), frozenset({"z"}), 1),
            Transition(1, TrueP(), Cmp("z", "<=", 2), frozenset({"X"}), frozenset({"z"}), 2),
            Transition(1, TrueP(), Cmp("z", "<=", 2), frozenset({"X"}), frozenset(), 3),
        ),
        initial=0,
        finals=frozenset({2, 3}),
    )
    result = check_sync(cea)
    assert result.verdict == "no"
    run1, run2 = result.witness
    assert len(run1) == len(run2) == 2
    for u1, u2 in zip(run1, run2):
        assert u1.label == u2.label
    assert run1[-1].resets != run2[-1].resets


def test_disjoint_predicates_avoid_the_conflict():
    result = check_sync(_conflict_automaton(pred1=TypeIs("A"), pred2=TypeIs("B")))
    assert result.verdict == "yes"


def test_disjoint_guards_avoid_the_conflict():
    result = check_sync(
        _conflict_automaton(guard1=Cmp("z", "<=", 1), guard2=Cmp("z", ">", 1))
    )
    # the guards mention z before any reset initializes it: neither can fire,
    # so the runs never take these transitions together
    assert result.verdict == "yes"


def test_guards_with_fractional_constants_are_rescaled():
    result = check_sync(
        _conflict_automaton(
            guard1=Cmp("z", "<=", Fraction(1, 2)), guard2=Cmp("z", ">", Fraction(1, 2))
        )
    )
    assert result.verdict == "yes"


def test_overlapping_guards_still_conflict():
    cea = TimedCea(
        states=frozenset({0, 1, 2, 3}),
        vars=frozenset({"X"}),
        clocks=frozenset({"z"}),
        delta=(
            Transition(0, TrueP(), GTrue(), frozenset(), frozenset({"z"}), 1),
            Transition(1, TrueP(), Cmp("z", "<=", 3), frozenset({"X"}), frozenset({"z"}), 2),
            Transition(1, TrueP(), Cmp("z", ">=", 2), frozenset({"X"}), frozenset(), 3),
        ),
        initial=0,
        finals=frozenset({2, 3}),
    )
    assert check_sync(cea).verdict == "no"


def test_cap_yields_unknown():
    result = check_sync(make_t1(">="), cap=1)
    assert result.verdict == "unknown"
    assert not result.is_sync
