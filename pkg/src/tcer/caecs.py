"""Clock-aware enumerable compact sets.

The per-state results of the streaming evaluator are stored as an immutable
DAG whose nodes denote sets of *open* complex events (start index, bound
positions, last clock-reset time).  Reset and clock-check nodes never stack:
adjacent ones are merged by a small gadget algebra, which keeps the distance
from any node to the next output node bounded and therefore makes
enumeration output-linear.

All operations exist in two mirrored flavours selected by ``direction``:
``le`` for automata whose guards are upper bounds (anchor = latest reset)
and ``ge`` for lower bounds (anchor = earliest reset, orderings inverted).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .model import ComplexEvent, Rational

MAX_ODEPTH = 11


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------


class Node:
    __slots__ = ("anchor", "odepth")


class Bottom(Node):
    __slots__ = ("index", "time")

    def __init__(self, index: int, time: Rational):
        self.index = index
        self.time = time
        self.anchor = time
        self.odepth = 0


class Extended(Node):
    __slots__ = ("index", "label", "left")

    def __init__(self, index: int, label: frozenset, left: Node):
        self.index = index
        self.label = label
        self.left = left
        self.anchor = left.anchor
        self.odepth = 0


class Union(Node):
    __slots__ = ("left", "right")

    def __init__(self, left: Node, right: Node):
        self.left = left
        self.right = right
        self.anchor = left.anchor
        self.odepth = 1 + left.odepth


class Reset(Node):
    __slots__ = ("time", "left")

    def __init__(self, time: Rational, left: Node):
        self.time = time
        self.left = left
        self.anchor = time
        self.odepth = 1 + left.odepth


class ClockCheck(Node):
    __slots__ = ("t0", "bound", "left")

    def __init__(self, t0: Rational, bound: Rational, left: Node):
        self.t0 = t0
        self.bound = bound
        self.left = left
        self.anchor = left.anchor
        self.odepth = 1 + left.odepth


class Empty(Node):
    __slots__ = ("left",)

    def __init__(self, left: Optional[Node] = None):
        self.left = left
        self.anchor = None
        self.odepth = 0


def is_empty(node: Optional[Node]) -> bool:
    return node is None or isinstance(node, Empty)


# ---------------------------------------------------------------------------
# Gadgets: the at-most-two-node reset/check blocks sitting over a base node
# ---------------------------------------------------------------------------

_EMPTY_GADGET = object()

# gadget items: ("r", t) or ("c", t0, bound); a gadget is [] (void), [r], [c],
# or [r, c] (composed), always paired with the node below it


@dataclass
class Gadget:
    items: list
    base: Node


class Caecs:
    """One evaluation session's node factory and gadget algebra."""

    def __init__(self, direction: str = "le", debug: bool = False):
        assert direction in ("le", "ge")
        self.direction = direction
        self.debug = debug
        self.created = 0

    # -- direction helpers ---------------------------------------------------

    def window_pass(self, t0: Rational, bound: Rational, t: Rational) -> bool:
        if self.direction == "le":
            return t0 - t <= bound
        return t0 - t >= bound

    def better(self, a: Rational, b: Rational) -> bool:
        """Whether anchor a should precede anchor b in orderings."""
        if self.direction == "le":
            return a >= b
        return a <= b

    # -- node constructors ---------------------------------------------------

    def _made(self, node: Node) -> Node:
        self.created += 1
        if self.debug:
            assert node.odepth <= MAX_ODEPTH, f"odepth {node.odepth} exceeds bound"
            if isinstance(node, Union):
                assert self.better(node.left.anchor, node.right.anchor)
            if isinstance(node, ClockCheck):
                assert self.window_pass(node.t0, node.bound, node.left.anchor)
            if isinstance(node, (Reset, ClockCheck)):
                assert not isinstance(node.left, (Reset, ClockCheck)) or isinstance(
                    node, Reset
                ) and isinstance(node.left, ClockCheck)
        return node

    def new_bottom(self, i: int, t: Rational) -> Node:
        return self._made(Bottom(i, t))

    def extend(self, n: Node, j: int, label: frozenset) -> Node:
        assert not is_empty(n)
        return self._made(Extended(j, label, n))

    def _union_node(self, a: Node, b: Node) -> Node:
        if not self.better(a.anchor, b.anchor):
            a, b = b, a
        return self._made(Union(a, b))

    # -- gadget algebra ------------------------------------------------------

    def get_gadget(self, n: Node) -> Gadget:
        if isinstance(n, Reset):
            if isinstance(n.left, ClockCheck):
                inner = n.left
                return Gadget([("r", n.time), ("c", inner.t0, inner.bound)], inner.left)
            return Gadget([("r", n.time)], n.left)
        if isinstance(n, ClockCheck):
            return Gadget([("c", n.t0, n.bound)], n.left)
        return Gadget([], n)

    def _pair(self, outer, inner):
        """Merge two adjacent reset/check items; None means not mergeable."""
        if outer[0] == "r" and inner[0] == "r":
            return outer
        if outer[0] == "c" and inner[0] == "c":
            _, t1, w1 = outer
            _, t2, w2 = inner
            if self.direction == "le":
                if t1 - w1 <= t2 - w2:
                    return inner  # outer window contains the inner one
                if t1 - w1 <= t2:
                    return ("c", t2, w1 - (t1 - t2))  # windows intersect
                return _EMPTY_GADGET
            if t1 - w1 >= t2 - w2:
                return inner
            return ("c", t2, w1 - (t1 - t2))
        if outer[0] == "c" and inner[0] == "r":
            _, t1, w1 = outer
            _, t2 = inner
            return inner if self.window_pass(t1, w1, t2) else _EMPTY_GADGET
        return None  # reset over check: already the composed form

    def merge_gadgets(self, g1: Gadget, g2: Gadget) -> Gadget | object:
        """g1 composed over g2; returns the merged gadget or the empty marker."""
        out: list = []
        for item in reversed(g1.items + g2.items):
            while out:
                merged = self._pair(item, out[0])
                if merged is None:
                    break
                if merged is _EMPTY_GADGET:
                    return _EMPTY_GADGET
                item = merged
                out.pop(0)
            out.insert(0, item)
        assert len(out) <= 2
        return Gadget(out, g2.base)

    def apply_gadget(self, g, base: Node) -> Node:
        if g is _EMPTY_GADGET:
            return Empty(base)
        node = base
        for item in reversed(g.items):
            if item[0] == "c":
                _, t0, bound = item
                if not self.window_pass(t0, bound, node.anchor):
                    return Empty(base)
                node = self._made(ClockCheck(t0, bound, node))
            else:
                node = self._made(Reset(item[1], node))
        return node

    def _regadget(self, g1: Gadget, n: Node) -> Node:
        """Compose gadget g1 over node n's own leading gadget."""
        g2 = self.get_gadget(n)
        return self.apply_gadget(self.merge_gadgets(g1, g2), g2.base)

    def add_reset(self, n: Node, t: Rational) -> Node:
        assert not is_empty(n)
        return self._regadget(Gadget([("r", t)], n), n)

    def add_clock_check(self, n: Node, t0: Rational, bound: Rational) -> Node:
        assert not is_empty(n)
        if not self.window_pass(t0, bound, n.anchor):
            return Empty(n)
        return self._regadget(Gadget([("c", t0, bound)], n), n)

    # -- union ---------------------------------------------------------------

    def union(self, n1: Node, n2: Node) -> Node:
        """Union of two safe roots with equal anchors."""
        assert not is_empty(n1) and not is_empty(n2)
        assert n1.anchor == n2.anchor
        g1 = self.get_gadget(n1)
        g2 = self.get_gadget(n2)
        t1 = isinstance(g1.base, (Bottom, Extended))
        t2 = isinstance(g2.base, (Bottom, Extended))
        if t1 and t2:
            return self._union_node(n1, n2)
        if t1 != t2:
            if not t1:
                n1, n2 = n2, n1
                g1, g2 = g2, g1
            # n1 is the plain gadget-over-output root, n2 carries a union
            u = g2.base
            m_left = self._regadget(g2, u.left)
            m_right = self._regadget(g2, u.right)
            return self._chain([n1, m_left, m_right])
        u1, u2 = g1.base, g2.base
        e13 = self._regadget(g1, u1.left)
        e24 = self._regadget(g2, u2.left)
        m5 = self._regadget(g1, u1.right)
        m6 = self._regadget(g2, u2.right)
        tail = [m for m in (m5, m6) if not is_empty(m)]
        if len(tail) == 2 and not self.better(tail[0].anchor, tail[1].anchor):
            tail.reverse()
        return self._chain([e13, e24] + tail)

    def _chain(self, parts: list[Node]) -> Node:
        parts = [p for p in parts if not is_empty(p)]
        assert parts
        node = parts[-1]
        for p in reversed(parts[:-1]):
            node = self._union_node(p, node)
        return node

    # -- union-lists ---------------------------------------------------------

    def new_union_list(self, n: Node) -> list[Node]:
        return [n]

    def ul_insert(self, ul: list[Node], n: Node) -> list[Node]:
        out = list(ul)
        for idx, u in enumerate(out):
            if u.anchor == n.anchor:
                out[idx] = self.union(n, u)
                return out
            if self.better(n.anchor, u.anchor):
                out.insert(idx, n)
                return out
        out.append(n)
        return out

    def ul_merge(self, ul: list[Node]) -> Node:
        node = ul[-1]
        for u in reversed(ul[:-1]):
            node = self._made(Union(u, node))
        return node

    def ul_clock_check(
        self, ul: list[Node], t0: Rational, bound: Rational
    ) -> Optional[list[Node]]:
        out = []
        for u in ul:
            checked = self.add_clock_check(u, t0, bound)
            if not is_empty(checked):
                out.append(checked)
        return out or None

    def ul_reset(self, ul: list[Node], t: Rational) -> list[Node]:
        # after a reset every node is anchored at t, so the whole list
        # folds into a single union
        nodes = [self.add_reset(u, t) for u in ul]
        node = nodes[0]
        for u in nodes[1:]:
            node = self.union(node, u)
        return [node]


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def enumerate_node(
    caecs: Caecs, node: Node, end: int
) -> Iterator[ComplexEvent]:
    """Yield each complex event of the node once, closed at position ``end``."""
    for start, entries in _enum(caecs, node, None, None):
        mapping: dict[str, set[int]] = {}
        for pos, label in entries:
            for var in label:
                mapping.setdefault(var, set()).add(pos)
        yield ComplexEvent.make(start, end, mapping)


def _enum(caecs: Caecs, node: Node, t0, bound):
    if isinstance(node, Empty):
        return
    if isinstance(node, Bottom):
        yield node.index, ()
        return
    if isinstance(node, Extended):
        entry = (node.index, node.label)
        for start, entries in _enum(caecs, node.left, t0, bound):
            yield start, entries + (entry,)
        return
    if isinstance(node, Reset):
        yield from _enum(caecs, node.left, None, None)
        return
    if isinstance(node, ClockCheck):
        if t0 is None:
            yield from _enum(caecs, node.left, node.t0, node.bound)
            return
        outer = t0 - bound
        inner = node.t0 - node.bound
        if caecs.better(inner, outer):
            # the incoming window is the looser one
            yield from _enum(caecs, node.left, node.t0, node.bound)
        elif caecs.direction == "ge" or outer <= node.t0:
            # re-express the tighter incoming bound at this node's instant
            yield from _enum(caecs, node.left, node.t0, bound - (t0 - node.t0))
        return
    # union: flatten the chain, pruning right children outside the window
    stack = [node]
    while stack:
        top = stack.pop()
        if isinstance(top, Union):
            if t0 is None or caecs.window_pass(t0, bound, top.right.anchor):
                stack.append(top.right)
            stack.append(top.left)
            continue
        yield from _enum(caecs, top, t0, bound)


def node_semantics(caecs: Caecs, node: Node) -> frozenset:
    """Brute-force denotation {(start, entries, clock)} for testing."""
    if isinstance(node, Empty) or node is None:
        return frozenset()
    if isinstance(node, Bottom):
        return frozenset({(node.index, frozenset(), node.time)})
    if isinstance(node, Extended):
        entry = (node.index, node.label)
        return frozenset(
            (i, entries | {entry}, t)
            for i, entries, t in node_semantics(caecs, node.left)
        )
    if isinstance(node, Union):
        return node_semantics(caecs, node.left) | node_semantics(caecs, node.right)
    if isinstance(node, Reset):
        return frozenset(
            (i, entries, node.time)
            for i, entries, _ in node_semantics(caecs, node.left)
        )
    if isinstance(node, ClockCheck):
        return frozenset(
            (i, entries, t)
            for i, entries, t in node_semantics(caecs, node.left)
            if caecs.window_pass(node.t0, node.bound, t)
        )
    raise TypeError(node)
