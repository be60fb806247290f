"""Streaming evaluation of deterministic monotonic single-clock automata.

Per event: start a fresh run from the initial state, advance every stored
run, and store the surviving runs' result sets (as CAECS union-lists) keyed
by their current state.  Reset transitions are executed before non-reset
ones, and states are visited in anchor order, so union-lists stay ordered.
Update work per event is constant in the stream length; outputs for the
position are then enumerated from the union-lists of the final states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .caecs import Caecs, Node, enumerate_node, is_empty
from .cea import Cmp, GAnd, GTrue, TimedCea, Transition, guard_clocks, is_deterministic, is_monotonic
from .model import ComplexEvent, Event, Rational, sat


class NotStreamable(Exception):
    """The automaton is outside the streamable class."""


@dataclass(frozen=True)
class _Trans:
    source: object
    pred: object
    bound: Optional[Rational]  # None = true guard; else z ≤ bound (or ≥)
    label: frozenset
    reset: bool
    target: object


def _conj_atoms(gamma) -> list[Cmp]:
    if isinstance(gamma, GTrue):
        return []
    if isinstance(gamma, Cmp):
        return [gamma]
    if isinstance(gamma, GAnd):
        return _conj_atoms(gamma.left) + _conj_atoms(gamma.right)
    raise NotStreamable(f"guard is not a conjunction of comparisons: {gamma}")


def _prepare(cea: TimedCea) -> tuple[list[_Trans], Optional[str], str]:
    """Validate the automaton and collapse guards to single bounds."""
    if not is_deterministic(cea):
        raise NotStreamable("automaton is not deterministic")
    direction = is_monotonic(cea)
    if direction == "no":
        raise NotStreamable("guards are not monotonic")
    checked = frozenset(z for tr in cea.delta for z in guard_clocks(tr.guard))
    if len(checked) > 1:
        raise NotStreamable(f"more than one checked clock: {sorted(checked)}")
    clock = next(iter(checked), None)
    for tr in cea.delta:
        if tr.target == cea.initial:
            raise NotStreamable("transition back into the initial state")
    out: list[_Trans] = []
    for tr in cea.delta:
        atoms = _conj_atoms(tr.guard)
        bound: Optional[Rational] = None
        for atom in atoms:
            assert atom.clock == clock
            if bound is None:
                bound = atom.constant
            elif direction == "le":
                bound = min(bound, atom.constant)
            else:
                bound = max(bound, atom.constant)
        reset = clock is not None and clock in tr.resets
        if tr.source == cea.initial and clock is not None and not reset and bound is None:
            raise NotStreamable(
                "unguarded initial transition must initialize the clock"
            )
        out.append(_Trans(tr.source, tr.pred, bound, tr.label, reset, tr.target))
    return out, clock, direction


class StreamingEngine:
    """One evaluation session over a single stream."""

    def __init__(self, cea: TimedCea, debug: bool = True):
        trans, clock, direction = _prepare(cea)
        self.cea = cea
        self.clock = clock
        self.caecs = Caecs(direction, debug=debug)
        self.debug = debug
        self.delta_z: dict[object, list[_Trans]] = {}
        self.delta_0: dict[object, list[_Trans]] = {}
        for tr in trans:
            table = self.delta_z if tr.reset else self.delta_0
            table.setdefault(tr.source, []).append(tr)
        self.table: dict[object, list[Node]] = {}
        self.position = 0
        self.last_time: Optional[Rational] = None
        self.max_list_len = 0
        self.max_odepth = 0

    # -- update --------------------------------------------------------------

    def feed(self, event: Event, time: Rational) -> list[ComplexEvent]:
        """Consume one stream element; return this position's matches."""
        if self.last_time is not None and time <= self.last_time:
            raise ValueError("timestamps must increase strictly")
        self.last_time = time
        self.position += 1
        j = self.position
        self.next_table: dict[object, list[Node]] = {}
        fresh = [self.caecs.new_bottom(j, time)]
        self._exec(self.cea.initial, fresh, event, j, time, self.delta_z, fresh=True)
        for p in list(self.table):
            self._exec(p, self.table[p], event, j, time, self.delta_z)
        self._exec(self.cea.initial, fresh, event, j, time, self.delta_0, fresh=True)
        for p in self._ordered_keys(self.table):
            self._exec(p, self.table[p], event, j, time, self.delta_0)
        self.table = self.next_table
        if self.debug:
            self._check_invariants()
        return self._output(j)

    def _exec(self, p, ul, event, j, time, delta, fresh: bool = False):
        caecs = self.caecs
        merged: Optional[Node] = None
        for tr in delta.get(p, ()):
            if fresh and tr.bound is not None:
                continue  # a guard cannot pass before the clock is started
            if not sat(event, tr.pred):
                continue
            if tr.label:
                if merged is None:
                    merged = caecs.ul_merge(ul)
                node = caecs.extend(merged, j, tr.label)
                if tr.bound is not None:
                    node = caecs.add_clock_check(node, time, tr.bound)
                if tr.reset and not is_empty(node):
                    node = caecs.add_reset(node, time)
                if not is_empty(node):
                    self._add(tr.target, node, caecs.new_union_list(node))
            else:
                ul2: Optional[list[Node]] = ul
                if tr.bound is not None:
                    ul2 = caecs.ul_clock_check(ul2, time, tr.bound)
                if tr.reset and ul2 is not None:
                    ul2 = caecs.ul_reset(ul2, time)
                if ul2 is not None:
                    self._add(tr.target, caecs.ul_merge(ul2), ul2)

    def _add(self, q, node: Node, ul: list[Node]) -> None:
        if is_empty(node):
            return
        if q in self.next_table:
            self.next_table[q] = self.caecs.ul_insert(self.next_table[q], node)
        else:
            self.next_table[q] = ul

    def _ordered_keys(self, table):
        sign = -1 if self.caecs.direction == "le" else 1
        return sorted(table, key=lambda q: (sign * table[q][0].anchor, repr(q)))

    # -- output --------------------------------------------------------------

    def _output(self, j: int) -> list[ComplexEvent]:
        out: list[ComplexEvent] = []
        for p in self._ordered_keys(self.table):
            if p in self.cea.finals:
                merged = self.caecs.ul_merge(self.table[p])
                out.extend(enumerate_node(self.caecs, merged, j))
        return out

    def enumerate_at(self, j: int) -> Iterator[ComplexEvent]:
        for p in self._ordered_keys(self.table):
            if p in self.cea.finals:
                yield from enumerate_node(
                    self.caecs, self.caecs.ul_merge(self.table[p]), j
                )

    # -- invariants ----------------------------------------------------------

    def _check_invariants(self) -> None:
        bound = len(self.cea.states) + 2
        for ul in self.table.values():
            assert len(ul) <= bound, f"union-list length {len(ul)} > {bound}"
            self.max_list_len = max(self.max_list_len, len(ul))
            for a, b in zip(ul[1:], ul[2:]):
                assert a.anchor != b.anchor and self.caecs.better(a.anchor, b.anchor)
            if len(ul) > 1:
                assert self.caecs.better(ul[0].anchor, ul[1].anchor)
            for u in ul:
                self.max_odepth = max(self.max_odepth, u.odepth)


def run_stream(cea: TimedCea, pairs, debug: bool = True):
    """Evaluate the automaton over (event, time) pairs.

    Yields (position, [matches]) for every position with at least one match.
    """
    engine = StreamingEngine(cea, debug=debug)
    for event, time in pairs:
        matches = engine.feed(event, time)
        if matches:
            yield engine.position, matches
