"""Parameterized automata compiled from Datalog queries."""

from .build import (
    DEFAULT_STATE_CAP,
    AnswerDecl,
    Automaton,
    CompileError,
    State,
    StateCapExceeded,
    Transition,
    build_automaton,
)
from .emit import dump_automaton, emit_rewritten_program
from .items import Item, canonicalize, closure, compile_rules
from .runtime import run_automaton

__all__ = [
    "DEFAULT_STATE_CAP",
    "AnswerDecl",
    "Automaton",
    "CompileError",
    "Item",
    "State",
    "StateCapExceeded",
    "Transition",
    "build_automaton",
    "canonicalize",
    "closure",
    "compile_rules",
    "dump_automaton",
    "emit_rewritten_program",
    "run_automaton",
]
