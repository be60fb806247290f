"""Command-line interface: stream ingestion, compilation, and evaluation.

Streams are JSON Lines, one event per line:
``{"type": "H", "attrs": {"temp": 45}, "ts": "2.5"}``.
Timestamps and numeric attributes are parsed as exact decimal rationals.
Exit codes: 0 ok, 1 mismatch/violation, 2 usage error, 3 input format error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time as _time
from fractions import Fraction
from functools import partial

from . import cel
from .cea import (
    CeaCapExceeded,
    cea_from_json,
    cea_to_json,
    eval_cea_oracle,
)
from .cel import OracleCapExceeded, classify, eval_cel_oracle
from .compiler import NotWindowed, compile_cel, compile_windowed
from .determinize import SyncResetViolation, determinize
from .engine import NotStreamable, StreamingEngine
from .model import Basic, ComplexEvent, Event, TimedStream, format_rat
from .parser import ParseError, parse_query
from .regions import check_sync


class StreamFormatError(Exception):
    pass


def parse_stream_line(line: str, lineno: int) -> tuple[Event, Fraction]:
    try:
        obj = json.loads(line, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise StreamFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
    try:
        etype = obj["type"]
        attrs = obj.get("attrs", {})
        ts = Fraction(obj["ts"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StreamFormatError(f"line {lineno}: bad event object: {exc}") from exc
    if not isinstance(etype, str) or not isinstance(attrs, dict):
        raise StreamFormatError(f"line {lineno}: bad event object")
    return Event(etype, dict(attrs)), ts


def read_stream(fh):
    """Yield (event, timestamp) pairs, enforcing strictly increasing time."""
    last = None
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        event, ts = parse_stream_line(line, lineno)
        if last is not None and ts <= last:
            raise StreamFormatError(
                f"line {lineno}: timestamp {format_rat(ts)} does not increase "
                f"past {format_rat(last)}"
            )
        last = ts
        yield event, ts


def load_stream(path: str) -> TimedStream:
    with open(path, encoding="utf-8") as fh:
        return TimedStream(list(read_stream(fh)))


def ce_sort_key(ce: ComplexEvent):
    return (ce.start, ce.end, [(var, sorted(ps)) for var, ps in ce.binding])


def match_json(ce: ComplexEvent, pos: int) -> str:
    bindings = {var: sorted(ps) for var, ps in sorted(ce.binding)}
    return json.dumps(
        {"start": ce.start, "end": ce.end, "bindings": bindings, "pos": pos},
        sort_keys=True,
    )


def rewrite_ge40(phi):
    """Turn strict temp > 40 filters into temp ≥ 40 (the narrative fixture)."""
    def fix_pred(p):
        if isinstance(p, Basic) and p.attr == "temp" and p.op == ">" and p.value == 40:
            return Basic("temp", ">=", p.value)
        return p

    if isinstance(phi, cel.Filter):
        return cel.Filter(rewrite_ge40(phi.body), phi.var, fix_pred(phi.pred))
    kids = cel.children(phi)
    if not kids:
        return phi
    if len(kids) == 2:
        left, right = (rewrite_ge40(k) for k in kids)
        if isinstance(phi, (cel.TimedSeq, cel.TimedContigSeq)):
            return type(phi)(left, phi.interval, right)
        return type(phi)(left, right)
    body = rewrite_ge40(kids[0])
    if isinstance(phi, cel.As):
        return cel.As(body, phi.var)
    if isinstance(phi, cel.Project):
        return cel.Project(phi.vars, body)
    if isinstance(phi, (cel.Within, cel.TimedIter, cel.TimedContigIter)):
        return type(phi)(body, phi.interval)
    return type(phi)(body)


def load_query(path: str, fixture_ge40: bool = False):
    with open(path, encoding="utf-8") as fh:
        phi = parse_query(fh.read())
    if fixture_ge40:
        phi = rewrite_ge40(phi)
    return phi


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    phi = load_query(args.query, args.fixture_ge40)
    stream = load_stream(args.stream)
    lines: list[str] = []
    if args.engine == "oracle":
        for ce in sorted(eval_cel_oracle(phi, stream, cap=max(len(stream), 1)), key=ce_sort_key):
            lines.append(match_json(ce, ce.end))
    elif args.engine == "automaton":
        cea = compile_cel(phi)
        for ce in sorted(eval_cea_oracle(cea, stream, cap=max(len(stream), 1)), key=ce_sort_key):
            lines.append(match_json(ce, ce.end))
    else:
        label, _ = classify(phi)
        if label == "general":
            print("query is outside the windowed fragment", file=sys.stderr)
            return 1
        try:
            det = determinize(compile_windowed(phi))
            engine = StreamingEngine(det, debug=False)
        except (NotWindowed, SyncResetViolation, NotStreamable) as exc:
            print(f"streaming engine rejected the query: {exc}", file=sys.stderr)
            return 1
        for event, ts in stream.pairs_et():
            for ce in sorted(engine.feed(event, ts), key=ce_sort_key):
                lines.append(match_json(ce, engine.position))
    for line in lines:
        print(line)
    return 0


def cmd_compile(args) -> int:
    phi = load_query(args.query, args.fixture_ge40)
    try:
        cea = compile_windowed(phi) if args.windowed else compile_cel(phi)
    except NotWindowed as exc:
        print(str(exc), file=sys.stderr)
        return 1
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(cea_to_json(cea), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_determinize(args) -> int:
    with open(args.automaton, encoding="utf-8") as fh:
        cea = cea_from_json(json.load(fh))
    try:
        det = determinize(cea)
    except SyncResetViolation as exc:
        print(f"resets are not synchronous: {exc}", file=sys.stderr)
        return 1
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(cea_to_json(det), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_check_sync(args) -> int:
    with open(args.automaton, encoding="utf-8") as fh:
        cea = cea_from_json(json.load(fh))
    result = check_sync(cea, cap=args.cap)
    report = {"verdict": result.verdict, "explored": result.explored}
    if result.witness is not None:
        run1, run2 = result.witness
        report["witness"] = [
            [_trans_brief(tr) for tr in run1],
            [_trans_brief(tr) for tr in run2],
        ]
    print(json.dumps(report, sort_keys=True))
    return 0 if result.verdict == "yes" else 1


def _trans_brief(tr) -> dict:
    return {
        "source": repr(tr.source),
        "target": repr(tr.target),
        "label": sorted(tr.label),
        "resets": sorted(tr.resets),
    }


def _bench_stream(phi, n: int, rng: random.Random):
    types = sorted(
        {sub.etype for sub in cel.subformulas(phi) if isinstance(sub, cel.EventType)}
    ) or ["A"]
    attrs = sorted(
        {
            (sub.pred.attr, sub.pred.value)
            for sub in cel.subformulas(phi)
            if isinstance(sub, cel.Filter) and isinstance(sub.pred, Basic)
        }
    )
    t = Fraction(0)
    for _ in range(n):
        t += Fraction(rng.randint(5, 40), 100)
        values = {
            attr: base + Fraction(rng.randint(-500, 500), 100) for attr, base in attrs
        }
        yield Event(rng.choice(types), values), t


def cmd_bench(args) -> int:
    phi = load_query(args.query, args.fixture_ge40)
    det = determinize(compile_windowed(phi))
    engine = StreamingEngine(det, debug=False)
    rng = random.Random(args.seed)
    update_times: list[float] = []
    delay_ratios: list[float] = []
    for event, ts in _bench_stream(phi, args.events, rng):
        t0 = _time.perf_counter()
        matches = engine.feed(event, ts)
        t1 = _time.perf_counter()
        update_times.append(t1 - t0)
        if matches:
            delay_ratios.append((t1 - t0) / max(1, sum(1 + len(m.binding) for m in matches)))
    decile = max(1, len(update_times) // 10)
    deciles = [
        sum(update_times[i : i + decile]) / decile
        for i in range(0, decile * 10, decile)
    ]
    report = {
        "events": args.events,
        "decile_mean_update_s": deciles,
        "last_over_first": deciles[-1] / deciles[0] if deciles[0] else None,
        "max_delay_per_output": max(delay_ratios) if delay_ratios else None,
        "nodes_created": engine.caecs.created,
    }
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_diff_test(args) -> int:
    from .randgen import random_formula, random_stream

    rng = random.Random(args.seed)
    for case in range(args.cases):
        phi = random_formula(rng, rng.randint(1, args.max_depth))
        stream = random_stream(rng, rng.randint(0, args.max_stream))
        mismatch = _diff_one(phi, stream)
        if mismatch is not None:
            stream = _shrink(phi, stream)
            repro = {
                "case": case,
                "seed": args.seed,
                "query": mismatch,
                "stream": [
                    {"type": e.etype, "attrs": {k: str(v) for k, v in e.attrs.items()}, "ts": str(t)}
                    for e, t in stream.pairs_et()
                ],
            }
            print(json.dumps(repro, sort_keys=True), file=sys.stderr)
            return 1
    return 0


def _diff_one(phi, stream) -> str | None:
    """Return a description of the first disagreement, or None."""
    from .parser import pretty

    try:
        expected = eval_cel_oracle(phi, stream, cap=len(stream) + 1)
        via_cea = eval_cea_oracle(compile_cel(phi), stream, cap=len(stream) + 1)
    except (OracleCapExceeded, CeaCapExceeded):
        return None
    if expected != via_cea:
        return f"compiled automaton disagrees for: {pretty(phi)}"
    label, _ = classify(phi)
    if label != "general":
        try:
            det = determinize(compile_windowed(phi))
            engine = StreamingEngine(det, debug=True)
        except (NotWindowed, SyncResetViolation, NotStreamable):
            return None
        got = set()
        for event, ts in stream.pairs_et():
            got.update(engine.feed(event, ts))
        want = {ce for ce in eval_cel_oracle(phi, stream, cap=len(stream) + 1)}
        if got != want:
            return f"streaming engine disagrees for: {pretty(phi)}"
    return None


def _shrink(phi, stream):
    changed = True
    while changed and len(stream) > 1:
        changed = False
        for i in range(len(stream)):
            pairs = [p for k, p in enumerate(stream.pairs_et()) if k != i]
            candidate = TimedStream(pairs)
            if _diff_one(phi, candidate) is not None:
                stream = candidate
                changed = True
                break
    return stream


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate a query over a stream")
    p.add_argument("--query", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--engine", choices=["oracle", "automaton", "streaming"], required=True)
    p.add_argument("--fixture-ge40", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compile", help="compile a query to an automaton file")
    p.add_argument("--query", required=True)
    p.add_argument("--windowed", action="store_true")
    p.add_argument("--fixture-ge40", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("determinize", help="determinize an automaton file")
    p.add_argument("--automaton", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_determinize)

    p = sub.add_parser("check-sync", help="decide whether resets are synchronous")
    p.add_argument("--automaton", required=True)
    p.add_argument("--cap", type=int, default=1_000_000)
    p.set_defaults(func=cmd_check_sync)

    p = sub.add_parser("bench", help="measure per-event update latency")
    p.add_argument("--query", required=True)
    p.add_argument("--events", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixture-ge40", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diff-test", help="randomized differential testing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--max-stream", type=int, default=10)
    p.set_defaults(func=cmd_diff_test)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, StreamFormatError) as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
