"""Query-to-automaton compilation, operator by operator.

`compile_cel` builds one automaton per syntax node with fresh states/clocks.
`compile_windowed` builds the restricted two-clock form for the two-level
fragment: one clock (``zx``) reset on exactly the marking transitions and one
(``zn``) reset on exactly the initial out-transitions, which keeps resets a
function of the transition label and hence synchronous across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import cel
from .cea import (
    Cmp,
    ClockCondition,
    GAnd,
    GFalse,
    GTrue,
    State,
    TimedCea,
    Transition,
    gand,
)
from .model import And as PAnd
from .model import Interval, Predicate, TrueP, TypeIs


class NotWindowed(Exception):
    pass


ZX = "zx"  # marking clock of the windowed build
ZN = "zn"  # window clock of the windowed build


def interval_guard(clock: str, interval: Interval) -> ClockCondition:
    """Clock condition for "value of `clock` lies in `interval`"."""
    atoms: list[ClockCondition] = []
    if interval.high is not None and interval.low == interval.high:
        return Cmp(clock, "=", interval.low)
    if interval.low > 0 or not interval.low_closed:
        atoms.append(Cmp(clock, ">=" if interval.low_closed else ">", interval.low))
    if interval.high is not None:
        atoms.append(Cmp(clock, "<=" if interval.high_closed else "<", interval.high))
    return gand(*atoms)


def zero_in(interval: Interval) -> ClockCondition:
    return GTrue() if interval.contains_zero() else GFalse()


@dataclass
class _Build:
    """One sub-automaton under construction (mutable scaffolding)."""

    states: set[State]
    delta: list[Transition]
    initial: State
    finals: set[State]
    clocks: set[str]


@dataclass
class _Fresh:
    state_counter: int = 0
    clock_counter: int = 0

    def state(self) -> int:
        self.state_counter += 1
        return self.state_counter

    def clock(self) -> str:
        self.clock_counter += 1
        return f"z{self.clock_counter}"


def _finish(build: _Build, formula: cel.CelFormula) -> TimedCea:
    out = TimedCea(
        states=frozenset(build.states),
        vars=cel.formula_vars(formula),
        clocks=frozenset(build.clocks),
        delta=tuple(build.delta),
        initial=build.initial,
        finals=frozenset(build.finals),
    )
    assert out.no_transition_into_initial()
    assert out.resets_before_checks()
    return out


def compile_cel(phi: cel.CelFormula) -> TimedCea:
    """The general operator-by-operator construction."""
    fresh = _Fresh()
    return _finish(_compile(phi, fresh), phi)


def _retarget(tr: Transition, target: State) -> Transition:
    return Transition(tr.source, tr.pred, tr.guard, tr.label, tr.resets, target)


def _resource(tr: Transition, source: State) -> Transition:
    return Transition(source, tr.pred, tr.guard, tr.label, tr.resets, tr.target)


def _compile(phi: cel.CelFormula, fresh: _Fresh, shared_clock: Optional[str] = None) -> _Build:
    """Build the automaton for a formula.

    With ``shared_clock`` set, every marking transition resets that clock and
    every timed operator checks it instead of allocating a fresh clock (the
    single-clock build for projection- and window-free formulas).
    """
    if isinstance(phi, cel.EventType):
        q1, q2 = fresh.state(), fresh.state()
        resets = frozenset((shared_clock,)) if shared_clock else frozenset()
        tr = Transition(q1, TypeIs(phi.etype), GTrue(), frozenset((phi.etype,)), resets, q2)
        clocks = {shared_clock} if shared_clock else set()
        return _Build({q1, q2}, [tr], q1, {q2}, clocks)

    if isinstance(phi, cel.As):
        b = _compile(phi.body, fresh, shared_clock)
        b.delta = [
            tr
            if not tr.label
            else Transition(tr.source, tr.pred, tr.guard, tr.label | {phi.var}, tr.resets, tr.target)
            for tr in b.delta
        ]
        return b

    if isinstance(phi, cel.Filter):
        b = _compile(phi.body, fresh, shared_clock)
        b.delta = [
            tr
            if phi.var not in tr.label
            else Transition(tr.source, PAnd(tr.pred, phi.pred), tr.guard, tr.label, tr.resets, tr.target)
            for tr in b.delta
        ]
        return b

    if isinstance(phi, cel.Or):
        b1 = _compile(phi.left, fresh, shared_clock)
        b2 = _compile(phi.right, fresh, shared_clock)
        q0 = fresh.state()
        delta = list(b1.delta) + list(b2.delta)
        for b in (b1, b2):
            for tr in b.delta:
                if tr.source == b.initial:
                    delta.append(_resource(tr, q0))
        return _Build(
            b1.states | b2.states | {q0},
            delta,
            q0,
            b1.finals | b2.finals,
            b1.clocks | b2.clocks,
        )

    if isinstance(phi, cel.And):
        b1 = _compile(phi.left, fresh, shared_clock)
        b2 = _compile(phi.right, fresh, shared_clock)
        if shared_clock is None:
            assert not (b1.clocks & b2.clocks), "operand clocks must be disjoint"
        delta = []
        for t1 in b1.delta:
            for t2 in b2.delta:
                if t1.label != t2.label:
                    continue
                delta.append(
                    Transition(
                        (t1.source, t2.source),
                        PAnd(t1.pred, t2.pred),
                        gand(t1.guard, t2.guard),
                        t1.label,
                        t1.resets | t2.resets,
                        (t1.target, t2.target),
                    )
                )
        states = {(p1, p2) for p1 in b1.states for p2 in b2.states}
        finals = {(f1, f2) for f1 in b1.finals for f2 in b2.finals}
        return _Build(states, delta, (b1.initial, b2.initial), finals, b1.clocks | b2.clocks)

    if isinstance(phi, (cel.Seq, cel.ContigSeq)):
        b1 = _compile(phi.left, fresh, shared_clock)
        b2 = _compile(phi.right, fresh, shared_clock)
        delta = list(b1.delta) + list(b2.delta)
        for tr in b1.delta:
            if tr.target in b1.finals:
                delta.append(_retarget(tr, b2.initial))
        if isinstance(phi, cel.Seq):
            delta.append(Transition(b2.initial, TrueP(), GTrue(), frozenset(), frozenset(), b2.initial))
        return _Build(
            b1.states | b2.states, delta, b1.initial, set(b2.finals), b1.clocks | b2.clocks
        )

    if isinstance(phi, (cel.Plus, cel.ContigPlus)):
        b = _compile(phi.body, fresh, shared_clock)
        q_new = fresh.state()
        delta = list(b.delta)
        for tr in b.delta:
            if tr.target in b.finals:
                delta.append(_retarget(tr, q_new))
        if isinstance(phi, cel.Plus):
            delta.append(Transition(q_new, TrueP(), GTrue(), frozenset(), frozenset(), q_new))
        for tr in b.delta:
            if tr.source == b.initial:
                delta.append(_resource(tr, q_new))
                if tr.target in b.finals:
                    delta.append(_retarget(_resource(tr, q_new), q_new))
        return _Build(b.states | {q_new}, delta, b.initial, set(b.finals), b.clocks)

    if isinstance(phi, cel.Project):
        b = _compile(phi.body, fresh, shared_clock)
        b.delta = [
            Transition(tr.source, tr.pred, tr.guard, tr.label & phi.vars, tr.resets, tr.target)
            for tr in b.delta
        ]
        return b

    if isinstance(phi, cel.Within):
        b = _compile(phi.body, fresh, shared_clock)
        z_n = fresh.clock()
        return _within_wrap(b, phi.interval, z_n, fresh, add_initial_resets=True)

    if isinstance(phi, (cel.TimedSeq, cel.TimedContigSeq)):
        b1 = _compile(phi.left, fresh, shared_clock)
        b2 = _compile(phi.right, fresh, shared_clock)
        z_x = shared_clock if shared_clock else fresh.clock()
        q_new = fresh.state()
        gamma_i = interval_guard(z_x, phi.interval)
        delta = list(b1.delta) + list(b2.delta)
        for tr in b1.delta:
            if tr.target in b1.finals:
                delta.append(
                    Transition(tr.source, tr.pred, tr.guard, tr.label, tr.resets | {z_x}, q_new)
                )
        if isinstance(phi, cel.TimedSeq):
            delta.append(Transition(q_new, TrueP(), GTrue(), frozenset(), frozenset(), q_new))
        for tr in b2.delta:
            if tr.source == b2.initial:
                delta.append(
                    Transition(q_new, tr.pred, gand(tr.guard, gamma_i), tr.label, tr.resets, tr.target)
                )
        return _Build(
            b1.states | b2.states | {q_new},
            delta,
            b1.initial,
            set(b2.finals),
            b1.clocks | b2.clocks | {z_x},
        )

    if isinstance(phi, (cel.TimedIter, cel.TimedContigIter)):
        b = _compile(phi.body, fresh, shared_clock)
        z_x = shared_clock if shared_clock else fresh.clock()
        q_new = fresh.state()
        gamma_i = interval_guard(z_x, phi.interval)
        delta = list(b.delta)
        for tr in b.delta:
            if tr.target in b.finals:
                delta.append(
                    Transition(tr.source, tr.pred, tr.guard, tr.label, tr.resets | {z_x}, q_new)
                )
        if isinstance(phi, cel.TimedIter):
            delta.append(Transition(q_new, TrueP(), GTrue(), frozenset(), frozenset(), q_new))
        for tr in b.delta:
            if tr.source == b.initial:
                delta.append(
                    Transition(q_new, tr.pred, gand(tr.guard, gamma_i), tr.label, tr.resets, tr.target)
                )
                if tr.target in b.finals:
                    # one-step sub-match looping back: the gap must also be
                    # checked here, and the block-end reset applied
                    delta.append(
                        Transition(
                            q_new,
                            tr.pred,
                            gand(tr.guard, gamma_i),
                            tr.label,
                            tr.resets | {z_x},
                            q_new,
                        )
                    )
        return _Build(b.states | {q_new}, delta, b.initial, set(b.finals), b.clocks | {z_x})

    raise TypeError(f"not a formula: {phi!r}")


def _within_wrap(
    b: _Build, interval: Interval, z_n: str, fresh: _Fresh, add_initial_resets: bool
) -> _Build:
    """Wrap a build with a window clock: reset on the initial out-transitions,
    checked on the transitions entering a fresh final state."""
    q_f = fresh.state()
    gamma_i = interval_guard(z_n, interval)
    delta: list[Transition] = []
    for tr in b.delta:
        if tr.source == b.initial:
            if tr.target not in b.finals:
                resets = tr.resets | {z_n} if add_initial_resets else tr.resets
                delta.append(
                    Transition(tr.source, tr.pred, tr.guard, tr.label, resets, tr.target)
                )
            resets = tr.resets | {z_n} if add_initial_resets else tr.resets
            if tr.target in b.finals and interval.contains_zero():
                # single-event matches are possible only when 0 lies in the window
                delta.append(
                    Transition(tr.source, tr.pred, tr.guard, tr.label, resets, q_f)
                )
        else:
            delta.append(tr)
            if tr.target in b.finals:
                delta.append(
                    Transition(tr.source, tr.pred, gand(tr.guard, gamma_i), tr.label, tr.resets, q_f)
                )
    return _Build(b.states | {q_f}, delta, b.initial, {q_f}, b.clocks | {z_n})


# ---------------------------------------------------------------------------
# Windowed build (two clocks, synchronous resets)
# ---------------------------------------------------------------------------


def compile_windowed(phi: cel.CelFormula) -> TimedCea:
    label, flags = cel.classify(phi)
    if label == "general":
        raise NotWindowed(f"formula is outside the two-level fragment: {phi!r}")
    fresh = _Fresh()
    build = _windowed(phi, fresh)
    build = _prune_unreachable(build)
    out = _finish(build, phi)
    assert out.clocks <= {ZX, ZN}
    return out


def _add_zn_on_initial(b: _Build) -> _Build:
    b.delta = [
        tr
        if tr.source != b.initial
        else Transition(tr.source, tr.pred, tr.guard, tr.label, tr.resets | {ZN}, tr.target)
        for tr in b.delta
    ]
    b.clocks.add(ZN)
    return b


def _add_zx_on_marking(b: _Build) -> _Build:
    b.delta = [
        tr
        if not tr.label
        else Transition(tr.source, tr.pred, tr.guard, tr.label, tr.resets | {ZX}, tr.target)
        for tr in b.delta
    ]
    b.clocks.add(ZX)
    return b


def _windowed(phi: cel.CelFormula, fresh: _Fresh) -> _Build:
    if cel._is_standard(phi):
        return _add_zn_on_initial(_add_zx_on_marking(_compile(phi, fresh)))
    if cel._is_simple(phi):
        return _add_zn_on_initial(_compile(phi, fresh, shared_clock=ZX))
    if isinstance(phi, cel.As):
        b = _windowed(phi.body, fresh)
        b.delta = [
            tr
            if not tr.label
            else Transition(tr.source, tr.pred, tr.guard, tr.label | {phi.var}, tr.resets, tr.target)
            for tr in b.delta
        ]
        return b
    if isinstance(phi, cel.Filter):
        b = _windowed(phi.body, fresh)
        b.delta = [
            tr
            if phi.var not in tr.label
            else Transition(tr.source, PAnd(tr.pred, phi.pred), tr.guard, tr.label, tr.resets, tr.target)
            for tr in b.delta
        ]
        return b
    if isinstance(phi, cel.Or):
        b1 = _windowed(phi.left, fresh)
        b2 = _windowed(phi.right, fresh)
        q0 = fresh.state()
        delta = list(b1.delta) + list(b2.delta)
        for b in (b1, b2):
            for tr in b.delta:
                if tr.source == b.initial:
                    delta.append(_resource(tr, q0))
        return _Build(
            b1.states | b2.states | {q0}, delta, q0, b1.finals | b2.finals, b1.clocks | b2.clocks
        )
    if isinstance(phi, cel.And):
        b1 = _windowed(phi.left, fresh)
        b2 = _windowed(phi.right, fresh)
        delta = []
        for t1 in b1.delta:
            for t2 in b2.delta:
                if t1.label != t2.label:
                    continue
                delta.append(
                    Transition(
                        (t1.source, t2.source),
                        PAnd(t1.pred, t2.pred),
                        gand(t1.guard, t2.guard),
                        t1.label,
                        t1.resets | t2.resets,
                        (t1.target, t2.target),
                    )
                )
        states = {(p1, p2) for p1 in b1.states for p2 in b2.states}
        finals = {(f1, f2) for f1 in b1.finals for f2 in b2.finals}
        return _Build(states, delta, (b1.initial, b2.initial), finals, b1.clocks | b2.clocks)
    if isinstance(phi, cel.Within):
        b = _windowed(phi.body, fresh)
        # the shared window clock is already reset on the initial transitions
        b.clocks.add(ZN)
        return _within_wrap(b, phi.interval, ZN, fresh, add_initial_resets=False)
    if isinstance(phi, cel.Project):
        b = _windowed(phi.body, fresh)
        b.delta = [
            Transition(tr.source, tr.pred, tr.guard, tr.label & phi.vars, tr.resets, tr.target)
            for tr in b.delta
        ]
        return _drop_dead_marking_resets(b)
    raise NotWindowed(f"operator outside the two-level fragment: {phi!r}")


def _drop_dead_marking_resets(b: _Build) -> _Build:
    """After projection, some formerly-marking transitions carry a reset of
    the marking clock without a label.  When no later guard can observe that
    reset, remove it; this restores "reset iff marking" (and synchronicity).
    """
    exposed = _exposed_states(b, ZX)
    delta = []
    for tr in b.delta:
        if not tr.label and ZX in tr.resets and tr.target not in exposed:
            tr = Transition(tr.source, tr.pred, tr.guard, tr.label, tr.resets - {ZX}, tr.target)
        delta.append(tr)
    b.delta = delta
    return b


def _exposed_states(b: _Build, clock: str) -> set[State]:
    """States from which some path checks the clock before resetting it."""
    from .cea import guard_clocks

    exposed: set[State] = set()
    changed = True
    while changed:
        changed = False
        for tr in b.delta:
            if tr.source in exposed:
                continue
            if clock in guard_clocks(tr.guard) or (
                clock not in tr.resets and tr.target in exposed
            ):
                exposed.add(tr.source)
                changed = True
    return exposed


def _prune_unreachable(b: _Build) -> _Build:
    reachable = {b.initial}
    frontier = [b.initial]
    out: dict[State, list[Transition]] = {}
    for tr in b.delta:
        out.setdefault(tr.source, []).append(tr)
    while frontier:
        q = frontier.pop()
        for tr in out.get(q, ()):
            if tr.target not in reachable:
                reachable.add(tr.target)
                frontier.append(tr.target)
    b.states = set(reachable)
    b.delta = [tr for tr in b.delta if tr.source in reachable and tr.target in reachable]
    b.finals = b.finals & reachable
    used = set()
    for tr in b.delta:
        from .cea import guard_clocks

        used |= set(tr.resets) | set(guard_clocks(tr.guard))
    b.clocks = b.clocks & used
    return b
