"""Earley Deduction and query-to-automaton compilation for Datalog."""

from .ir import Atom, Const, Program, Rule, Var, validate_program
from .syntax import ParseError, parse_program, print_program
from .store import FactStore, load_facts
from .seminaive import answer_query, evaluate
from .earley import earley_run
from .automaton import build_automaton, emit_rewritten_program, run_automaton

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Const",
    "FactStore",
    "ParseError",
    "Program",
    "Rule",
    "Var",
    "answer_query",
    "build_automaton",
    "earley_run",
    "emit_rewritten_program",
    "evaluate",
    "load_facts",
    "parse_program",
    "print_program",
    "run_automaton",
    "validate_program",
]
