"""Clocked automata over event streams: clock conditions, valuations,
transitions, a brute-force run-enumeration oracle, and structural classifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .model import (
    ComplexEvent,
    Event,
    Predicate,
    TimedStream,
    format_rat,
    pred_satisfiable,
    preds_intersect,
)
from . import model

# ---------------------------------------------------------------------------
# Clock conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GTrue:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class GFalse:
    """Unsatisfiable condition; internal (the dual of GTrue under negation)."""

    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Cmp:
    clock: str
    op: str  # one of = < <= >= >
    constant: Fraction

    def __post_init__(self) -> None:
        if self.op not in ("=", "<", "<=", ">=", ">"):
            raise ValueError(f"unknown clock comparator {self.op!r}")
        object.__setattr__(self, "constant", model.rat(self.constant))

    def __str__(self) -> str:
        return f"{self.clock} {self.op} {format_rat(self.constant)}"


@dataclass(frozen=True)
class GAnd:
    left: "ClockCondition"
    right: "ClockCondition"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class GOr:
    left: "ClockCondition"
    right: "ClockCondition"

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


ClockCondition = Union[GTrue, GFalse, Cmp, GAnd, GOr]

ClockValuation = Mapping[str, Fraction]


def guard_clocks(gamma: ClockCondition) -> frozenset[str]:
    if isinstance(gamma, (GTrue, GFalse)):
        return frozenset()
    if isinstance(gamma, Cmp):
        return frozenset((gamma.clock,))
    return guard_clocks(gamma.left) | guard_clocks(gamma.right)


def guard_size(gamma: ClockCondition) -> int:
    """Number of comparisons (GTrue/GFalse count 1, connectives are free)."""
    if isinstance(gamma, (GTrue, GFalse, Cmp)):
        return 1
    return guard_size(gamma.left) + guard_size(gamma.right)


def guard_constants(gamma: ClockCondition) -> dict[str, set[Fraction]]:
    out: dict[str, set[Fraction]] = {}
    for sub in _guard_atoms(gamma):
        out.setdefault(sub.clock, set()).add(sub.constant)
    return out


def _guard_atoms(gamma: ClockCondition):
    if isinstance(gamma, Cmp):
        yield gamma
    elif isinstance(gamma, (GAnd, GOr)):
        yield from _guard_atoms(gamma.left)
        yield from _guard_atoms(gamma.right)


def guard_sat(nu: ClockValuation, gamma: ClockCondition) -> bool:
    """A valuation satisfies a condition only if it initializes every clock
    the condition mentions (an uninitialized clock fails even under Or)."""
    if not all(z in nu for z in guard_clocks(gamma)):
        return False
    return _guard_eval(nu, gamma)


def _guard_eval(nu: ClockValuation, gamma: ClockCondition) -> bool:
    if isinstance(gamma, GTrue):
        return True
    if isinstance(gamma, GFalse):
        return False
    if isinstance(gamma, Cmp):
        value = nu[gamma.clock]
        c = gamma.constant
        return {
            "=": value == c,
            "<": value < c,
            "<=": value <= c,
            ">=": value >= c,
            ">": value > c,
        }[gamma.op]
    if isinstance(gamma, GAnd):
        return _guard_eval(nu, gamma.left) and _guard_eval(nu, gamma.right)
    return _guard_eval(nu, gamma.left) or _guard_eval(nu, gamma.right)


def gand(*gammas: ClockCondition) -> ClockCondition:
    acc: Optional[ClockCondition] = None
    for g in gammas:
        if isinstance(g, GTrue):
            continue
        acc = g if acc is None else GAnd(acc, g)
    return acc if acc is not None else GTrue()


# --- guard satisfiability over some full-domain valuation ------------------


def _guard_dnf(gamma: ClockCondition) -> list[list[Cmp]]:
    if isinstance(gamma, GTrue):
        return [[]]
    if isinstance(gamma, GFalse):
        return []
    if isinstance(gamma, Cmp):
        return [[gamma]]
    if isinstance(gamma, GAnd):
        return [a + b for a in _guard_dnf(gamma.left) for b in _guard_dnf(gamma.right)]
    return _guard_dnf(gamma.left) + _guard_dnf(gamma.right)


def _conj_box(conj: Iterable[Cmp]) -> Optional[dict[str, tuple[Fraction, bool, Optional[Fraction], bool]]]:
    """Per-clock interval (lo, lo_strict, hi, hi_strict) of a conjunction,
    intersected with value ≥ 0; None if empty."""
    box: dict[str, tuple[Fraction, bool, Optional[Fraction], bool]] = {}
    for atom in conj:
        lo, lo_s, hi, hi_s = box.get(atom.clock, (Fraction(0), False, None, False))
        c = atom.constant
        if atom.op in ("<", "<="):
            strict = atom.op == "<"
            if hi is None or c < hi or (c == hi and strict):
                hi, hi_s = c, strict
        elif atom.op in (">", ">="):
            strict = atom.op == ">"
            if c > lo or (c == lo and strict):
                lo, lo_s = c, strict
        else:  # equality
            if c < lo or (c == lo and lo_s):
                return None
            if hi is not None and (c > hi or (c == hi and hi_s)):
                return None
            lo, lo_s, hi, hi_s = c, False, c, False
        box[atom.clock] = (lo, lo_s, hi, hi_s)
    for lo, lo_s, hi, hi_s in box.values():
        if hi is not None and (lo > hi or (lo == hi and (lo_s or hi_s))):
            return None
    return box


def guard_satisfiable(gamma: ClockCondition) -> bool:
    """Is there a valuation (initializing all mentioned clocks) satisfying γ?"""
    return any(_conj_box(conj) is not None for conj in _guard_dnf(gamma))


def guards_jointly_satisfiable(g1: ClockCondition, g2: ClockCondition) -> bool:
    return guard_satisfiable(gand(g1, g2))


# ---------------------------------------------------------------------------
# Transitions and automata
# ---------------------------------------------------------------------------

State = Union[int, str, tuple]


@dataclass(frozen=True)
class Transition:
    source: State
    pred: Predicate
    guard: ClockCondition
    label: frozenset[str]
    resets: frozenset[str]
    target: State

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", frozenset(self.label))
        object.__setattr__(self, "resets", frozenset(self.resets))

    def __str__(self) -> str:
        lab = "{" + ",".join(sorted(self.label)) + "}"
        rst = "{" + ",".join(sorted(self.resets)) + "}"
        return f"{self.source} --{self.pred}, {self.guard} / {lab}, {rst}--> {self.target}"


@dataclass(frozen=True)
class TimedCea:
    states: frozenset[State]
    vars: frozenset[str]
    clocks: frozenset[str]
    delta: tuple[Transition, ...]
    initial: State
    finals: frozenset[State]
    _out: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "vars", frozenset(self.vars))
        object.__setattr__(self, "clocks", frozenset(self.clocks))
        object.__setattr__(self, "delta", tuple(self.delta))
        object.__setattr__(self, "finals", frozenset(self.finals))
        out: dict[State, list[Transition]] = {}
        for tr in self.delta:
            if tr.source not in self.states or tr.target not in self.states:
                raise ValueError(f"transition over unknown state: {tr}")
            out.setdefault(tr.source, []).append(tr)
        object.__setattr__(self, "_out", out)
        if self.initial not in self.states:
            raise ValueError("initial state unknown")
        if not self.finals <= self.states:
            raise ValueError("final state unknown")

    def out(self, state: State) -> tuple[Transition, ...]:
        return tuple(self._out.get(state, ()))

    def size(self) -> int:
        total = len(self.states)
        for tr in self.delta:
            total += guard_size(tr.guard) + _pred_size(tr.pred) + len(tr.label) + len(tr.resets)
        return total

    def no_transition_into_initial(self) -> bool:
        return all(tr.target != self.initial for tr in self.delta)

    def exposed_clocks(self, state: State) -> frozenset[str]:
        """Clocks that some path from the state checks before resetting."""
        exposed: dict[State, set[str]] = {q: set() for q in self.states}
        changed = True
        while changed:
            changed = False
            for tr in self.delta:
                want = set(guard_clocks(tr.guard))
                want |= exposed[tr.target] - set(tr.resets)
                if not want <= exposed[tr.source]:
                    exposed[tr.source] |= want
                    changed = True
        return frozenset(exposed[state])

    def resets_before_checks(self) -> bool:
        """Every clock is reset before it is first checked, on every path."""
        return not self.exposed_clocks(self.initial)


def _pred_size(pred: Predicate) -> int:
    if isinstance(pred, model.And):
        return _pred_size(pred.left) + _pred_size(pred.right)
    if isinstance(pred, model.Not):
        return _pred_size(pred.body)
    return 1


# ---------------------------------------------------------------------------
# Single-step semantics and the run oracle
# ---------------------------------------------------------------------------


def advance(nu: ClockValuation, dt: Fraction) -> dict[str, Fraction]:
    return {z: v + dt for z, v in nu.items()}


def reset(nu: ClockValuation, clocks: Iterable[str]) -> dict[str, Fraction]:
    out = dict(nu)
    for z in clocks:
        out[z] = Fraction(0)
    return out


def step(
    config: tuple[State, ClockValuation],
    timed_event: tuple[Event, Fraction],
    dt: Fraction,
    cea: TimedCea,
) -> set[tuple[State, tuple[tuple[str, Fraction], ...], frozenset[str]]]:
    """All successor configurations for one event; valuations are returned as
    sorted item tuples so results are hashable."""
    state, nu = config
    event, _ = timed_event
    advanced = advance(nu, dt)
    successors = set()
    for tr in cea.out(state):
        if not model.sat(event, tr.pred):
            continue
        if not guard_sat(advanced, tr.guard):
            continue
        nxt = reset(advanced, tr.resets)
        successors.add((tr.target, tuple(sorted(nxt.items())), tr.label))
    return successors


DEFAULT_CEA_CAP = 14


class CeaCapExceeded(Exception):
    pass


def eval_cea_oracle(
    cea: TimedCea, stream: TimedStream, cap: int = DEFAULT_CEA_CAP
) -> frozenset[ComplexEvent]:
    """All outputs of accepting runs from every start position, by exhaustive
    depth-first enumeration."""
    if len(stream) > cap:
        raise CeaCapExceeded(f"stream length {len(stream)} exceeds cap {cap}")
    results: set[ComplexEvent] = set()
    n = len(stream)
    for start in range(1, n + 1):
        stack: list[tuple[int, State, tuple[tuple[str, Fraction], ...], tuple]] = [
            (start, cea.initial, (), ())
        ]
        while stack:
            pos, state, nu_items, labels = stack.pop()
            if pos > n:
                continue
            event, t = stream[pos]
            dt = stream.delta(pos)
            for nxt_state, nxt_nu, label in step(
                (state, dict(nu_items)), (event, t), dt, cea
            ):
                nxt_labels = labels + ((pos, label),)
                if nxt_state in cea.finals:
                    results.add(_run_output(start, pos, nxt_labels))
                stack.append((pos + 1, nxt_state, nxt_nu, nxt_labels))
    return frozenset(results)


def _run_output(start: int, end: int, labels: tuple) -> ComplexEvent:
    binding: dict[str, set[int]] = {}
    for pos, label in labels:
        for var in label:
            binding.setdefault(var, set()).add(pos)
    return ComplexEvent.make(start, end, binding)


def eval_cea_at(
    cea: TimedCea, stream: TimedStream, j: int, cap: int = DEFAULT_CEA_CAP
) -> frozenset[ComplexEvent]:
    return frozenset(c for c in eval_cea_oracle(cea, stream, cap=cap) if c.end == j)


# ---------------------------------------------------------------------------
# Structural classifiers
# ---------------------------------------------------------------------------


def deterministic_violations(cea: TimedCea) -> list[tuple[Transition, Transition]]:
    """Pairs of simultaneously fireable same-label transitions."""
    violations = []
    for state in cea.states:
        out = cea.out(state)
        for i, t1 in enumerate(out):
            for t2 in out[i + 1 :]:
                if t1.label != t2.label:
                    continue
                if not preds_intersect(t1.pred, t2.pred):
                    continue
                if not guards_jointly_satisfiable(t1.guard, t2.guard):
                    continue
                violations.append((t1, t2))
    return violations


def is_deterministic(cea: TimedCea) -> bool:
    return not deterministic_violations(cea)


def _conj_atoms(gamma: ClockCondition) -> Optional[list[Cmp]]:
    """Atoms of a pure conjunction, or None if the guard is not one."""
    if isinstance(gamma, GTrue):
        return []
    if isinstance(gamma, Cmp):
        return [gamma]
    if isinstance(gamma, GAnd):
        left = _conj_atoms(gamma.left)
        right = _conj_atoms(gamma.right)
        if left is None or right is None:
            return None
        return left + right
    return None


def is_monotonic(cea: TimedCea) -> str:
    """'le' if every guard is a conjunction of z ≤ c atoms, 'ge' dually,
    'no' otherwise.  All-true guards report 'le' by convention."""
    ops: set[str] = set()
    for tr in cea.delta:
        atoms = _conj_atoms(tr.guard)
        if atoms is None:
            return "no"
        for atom in atoms:
            ops.add(atom.op)
    if ops <= {"<="}:
        return "le"
    if ops <= {">="}:
        return "ge"
    return "no"


# ---------------------------------------------------------------------------
# Serialization (JSON-friendly dicts) and DOT export
# ---------------------------------------------------------------------------


def _state_key(state: State) -> str:
    if isinstance(state, (int, str)):
        return str(state)
    return repr(state)


def pred_to_json(pred: Predicate):
    if isinstance(pred, model.TrueP):
        return {"kind": "true"}
    if isinstance(pred, model.TypeIs):
        return {"kind": "type", "etype": pred.etype}
    if isinstance(pred, model.Basic):
        value = pred.value
        if isinstance(value, Fraction):
            value = {"rat": f"{value.numerator}/{value.denominator}"}
        return {"kind": "basic", "attr": pred.attr, "op": pred.op, "value": value}
    if isinstance(pred, model.And):
        return {"kind": "and", "left": pred_to_json(pred.left), "right": pred_to_json(pred.right)}
    if isinstance(pred, model.Not):
        return {"kind": "not", "body": pred_to_json(pred.body)}
    raise TypeError(f"not a predicate: {pred!r}")


def pred_from_json(doc) -> Predicate:
    kind = doc["kind"]
    if kind == "true":
        return model.TrueP()
    if kind == "type":
        return model.TypeIs(doc["etype"])
    if kind == "basic":
        value = doc["value"]
        if isinstance(value, dict):
            value = Fraction(value["rat"])
        return model.Basic(doc["attr"], doc["op"], value)
    if kind == "and":
        return model.And(pred_from_json(doc["left"]), pred_from_json(doc["right"]))
    if kind == "not":
        return model.Not(pred_from_json(doc["body"]))
    raise ValueError(f"unknown predicate kind {kind!r}")


def guard_to_json(gamma: ClockCondition):
    if isinstance(gamma, GTrue):
        return {"kind": "true"}
    if isinstance(gamma, GFalse):
        return {"kind": "false"}
    if isinstance(gamma, Cmp):
        return {
            "kind": "cmp",
            "clock": gamma.clock,
            "op": gamma.op,
            "constant": f"{gamma.constant.numerator}/{gamma.constant.denominator}",
        }
    tag = "and" if isinstance(gamma, GAnd) else "or"
    return {"kind": tag, "left": guard_to_json(gamma.left), "right": guard_to_json(gamma.right)}


def guard_from_json(doc) -> ClockCondition:
    kind = doc["kind"]
    if kind == "true":
        return GTrue()
    if kind == "false":
        return GFalse()
    if kind == "cmp":
        return Cmp(doc["clock"], doc["op"], Fraction(doc["constant"]))
    ctor = GAnd if kind == "and" else GOr
    return ctor(guard_from_json(doc["left"]), guard_from_json(doc["right"]))


def cea_to_json(cea: TimedCea) -> dict:
    states = sorted(cea.states, key=_state_key)
    index = {q: i for i, q in enumerate(states)}
    return {
        "states": [_state_key(q) for q in states],
        "vars": sorted(cea.vars),
        "clocks": sorted(cea.clocks),
        "initial": index[cea.initial],
        "finals": sorted(index[q] for q in cea.finals),
        "transitions": [
            {
                "source": index[tr.source],
                "pred": pred_to_json(tr.pred),
                "guard": guard_to_json(tr.guard),
                "label": sorted(tr.label),
                "resets": sorted(tr.resets),
                "target": index[tr.target],
            }
            for tr in cea.delta
        ],
    }


def cea_from_json(doc: dict) -> TimedCea:
    n = len(doc["states"])
    delta = tuple(
        Transition(
            tr["source"],
            pred_from_json(tr["pred"]),
            guard_from_json(tr["guard"]),
            frozenset(tr["label"]),
            frozenset(tr["resets"]),
            tr["target"],
        )
        for tr in doc["transitions"]
    )
    return TimedCea(
        states=frozenset(range(n)),
        vars=frozenset(doc["vars"]),
        clocks=frozenset(doc["clocks"]),
        delta=delta,
        initial=doc["initial"],
        finals=frozenset(doc["finals"]),
    )


def cea_to_dot(cea: TimedCea) -> str:
    lines = ["digraph cea {", "  rankdir=LR;"]
    states = sorted(cea.states, key=_state_key)
    index = {q: i for i, q in enumerate(states)}
    for q in states:
        shape = "doublecircle" if q in cea.finals else "circle"
        lines.append(f'  n{index[q]} [label="{_state_key(q)}", shape={shape}];')
    lines.append(f"  start [shape=point];")
    lines.append(f"  start -> n{index[cea.initial]};")
    for tr in cea.delta:
        lab = ",".join(sorted(tr.label)) or "∅"
        rst = ",".join(sorted(tr.resets)) or "∅"
        text = f"{tr.pred}, {tr.guard} / {{{lab}}}, {{{rst}}}"
        text = text.replace('"', "'")
        lines.append(f'  n{index[tr.source]} -> n{index[tr.target]} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines)
