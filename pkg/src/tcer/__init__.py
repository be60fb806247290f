"""Timed complex-event recognition: query language, clocked automata,
determinization, and constant-update streaming evaluation."""

from .cea import TimedCea, Transition, eval_cea_oracle, is_deterministic, is_monotonic
from .cel import classify, eval_cel_oracle
from .compiler import compile_cel, compile_windowed
from .determinize import SyncResetViolation, determinize
from .engine import NotStreamable, StreamingEngine, run_stream
from .model import ComplexEvent, Event, Interval, TimedStream, rat
from .parser import parse_query, pretty
from .regions import check_sync

__all__ = [
    "ComplexEvent",
    "Event",
    "Interval",
    "NotStreamable",
    "StreamingEngine",
    "SyncResetViolation",
    "TimedCea",
    "TimedStream",
    "Transition",
    "check_sync",
    "classify",
    "compile_cel",
    "compile_windowed",
    "determinize",
    "eval_cea_oracle",
    "eval_cel_oracle",
    "is_deterministic",
    "is_monotonic",
    "parse_query",
    "pretty",
    "rat",
    "run_stream",
]

__version__ = "0.1.0"
