"""Command-line frontend: eval, compile, check, bench, from-grammar.

Exit codes: 0 ok, 1 input error, 2 engine disagreement, 3 cap or budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Optional

from . import bench as benchmod
from . import earley, seminaive
from .automaton import (
    DEFAULT_STATE_CAP,
    CompileError,
    StateCapExceeded,
    build_automaton,
    dump_automaton,
    emit_rewritten_program,
    run_automaton,
)
from .grammar import GrammarError, encode, facts_text, parse_grammar
from .ir import Atom, Const, Program, validate_program
from .store import FactLoadError, FactStore, UnknownPredicate, load_facts
from .syntax import ParseError, parse_atom, parse_program, print_program

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DISAGREE = 2
EXIT_LIMIT = 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would exit with 2, which is reserved for engine disagreement
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- engines ------------------------------------------------------------------


def _run_seminaive(p: Program, store: FactStore, state_cap: int, trace=None) -> list:
    return seminaive.answer_query(p, store, trace=trace)


def _run_earley(p: Program, store: FactStore, state_cap: int, trace=None) -> list:
    return earley.earley_run(p, store, trace=trace)


def _run_automaton(p: Program, store: FactStore, state_cap: int, trace=None) -> list:
    return run_automaton(build_automaton(p, state_cap=state_cap), store, trace=trace)


def _run_rewritten(p: Program, store: FactStore, state_cap: int, trace=None) -> list:
    rewritten = emit_rewritten_program(build_automaton(p, state_cap=state_cap))
    return seminaive.answer_query(rewritten, store, trace=trace)


# Looked up at call time so a test can swap in a faulty engine.
ENGINES: dict = {
    "seminaive": _run_seminaive,
    "earley": _run_earley,
    "automaton": _run_automaton,
}
CHECK_ENGINES: dict = {**ENGINES, "rewritten": _run_rewritten}


# -- input handling -------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from e


def load_program(path: str, consts=None, query: Optional[str] = None) -> Program:
    p = parse_program(_read(path), path)
    if query is not None:
        p = Program(p.edb, p.rules, parse_atom(query))
    if consts:
        p = _override_constants(p, consts)
    problems = validate_program(p)
    if problems:
        raise InputError("\n".join(f"{path}: {v}" for v in problems))
    return p


def _override_constants(p: Program, consts) -> Program:
    if p.query is None:
        raise InputError("--const given but the program has no query")
    slots = [i for i, t in enumerate(p.query.args) if isinstance(t, Const)]
    if len(consts) != len(slots):
        raise InputError(
            f"query {p.query} has {len(slots)} constant(s), {len(consts)} --const value(s) given"
        )
    args = list(p.query.args)
    for i, value in zip(slots, consts):
        args[i] = Const(value)
    return Program(p.edb, p.rules, Atom(p.query.name, tuple(args)))


def load_store(p: Program, paths) -> FactStore:
    for path in paths or ():
        if not Path(path).is_file():
            raise InputError(f"{path}: no such file")
    return load_facts(paths or (), p.edb)


def _tracer(enabled: bool) -> Optional[Callable[[str], None]]:
    if not enabled:
        return None
    return lambda line: print(line, file=sys.stderr)


def format_row(row) -> str:
    return ",".join(str(c) for c in row) if row else "()"


# -- commands -------------------------------------------------------------------


def cmd_eval(args) -> int:
    p = load_program(args.program, args.const, args.query)
    store = load_store(p, args.facts)
    answers = ENGINES[args.engine](p, store, args.state_cap, _tracer(args.trace))
    if args.format == "table":
        names = [v.name for v in dict.fromkeys(p.query.variables())]
        rows = [[str(c) for c in r] for r in answers]
        if not names:
            print("yes" if answers else "no")
            return EXIT_OK
        widths = [max([len(n)] + [len(r[i]) for r in rows]) for i, n in enumerate(names)]
        print("  ".join(n.ljust(w) for n, w in zip(names, widths)).rstrip())
        for r in rows:
            print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return EXIT_OK
    for row in answers:
        print(format_row(row))
    return EXIT_OK


def cmd_compile(args) -> int:
    p = load_program(args.program, args.const, args.query)
    a = build_automaton(p, state_cap=args.state_cap)
    if args.format == "rewritten":
        text = print_program(emit_rewritten_program(a))
    else:
        text = dump_automaton(a)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _plural(n: int) -> str:
    return f"{n} answer" if n == 1 else f"{n} answers"


def check_engines(p: Program, store: FactStore, state_cap: int, trace=None) -> dict:
    results = {}
    for name, fn in CHECK_ENGINES.items():
        store.reset_counters()
        results[name] = set(fn(p, store, state_cap, trace))
    return results


def cmd_check(args) -> int:
    p = load_program(args.program, args.const, args.query)
    store = load_store(p, args.facts)
    results = check_engines(p, store, args.state_cap, _tracer(args.trace))
    names = list(results)
    first = results[names[0]]
    if all(r == first for r in results.values()):
        print(f"OK: {len(names)} engines agree ({_plural(len(first))})")
        return EXIT_OK
    print(f"DISAGREEMENT among {len(names)} engines")
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if results[a] == results[b]:
                continue
            print(f"{a} vs {b}:")
            for label, rows in ((a, results[a] - results[b]), (b, results[b] - results[a])):
                for row in seminaive.sort_answers(rows):
                    print(f"  only {label}: {format_row(row)}")
    return EXIT_DISAGREE


def cmd_bench(args) -> int:
    p = load_program(args.program, args.const, args.query)
    store = load_store(p, args.facts)
    rows = benchmod.bench(
        p,
        store,
        repetitions=args.repetitions,
        engines=args.engines or benchmod.ENGINES,
        oracle_budget=args.oracle_budget,
        state_cap=args.state_cap,
    )
    if args.csv:
        sys.stdout.write(benchmod.format_csv(rows))
    else:
        sys.stdout.write(benchmod.format_table(rows))
        counts = {r.answers for r in rows if r.answers is not None}
        if len(counts) > 1:
            print("answer counts differ between engines", file=sys.stderr)
            return EXIT_DISAGREE
    return EXIT_OK


def cmd_from_grammar(args) -> int:
    try:
        g = parse_grammar(_read(args.grammar))
    except GrammarError as e:
        raise InputError(f"{args.grammar}: {e}") from e
    enc = encode(g, args.input)
    if args.facts_out:
        Path(args.facts_out).write_text(facts_text(enc.facts), encoding="utf-8")
    if not args.run:
        sys.stdout.write(print_program(enc.program))
        return EXIT_OK
    results = check_engines(enc.program, enc.store, args.state_cap, _tracer(args.trace))
    verdicts = {name: bool(r) for name, r in results.items()}
    if len(set(verdicts.values())) != 1:
        for name, ok in verdicts.items():
            print(f"{name}: {'accepted' if ok else 'rejected'}")
        return EXIT_DISAGREE
    print("accepted" if next(iter(verdicts.values())) else "rejected")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    # defaults are suppressed so a flag given before the subcommand is not reset after it
    c = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    c.add_argument("--facts", nargs="+", action="extend", metavar="PATH",
                   help="fact files: <predicate>.csv or .dl ground facts (repeatable)")
    c.add_argument("--state-cap", type=int, metavar="N",
                   help=f"automaton state limit (default {DEFAULT_STATE_CAP})")
    c.add_argument("--csv", action="store_true", help="machine-readable output (bench)")
    c.add_argument("--trace", action="store_true", help="log engine events to stderr")
    return c


GLOBAL_DEFAULTS = {"facts": [], "state_cap": DEFAULT_STATE_CAP, "csv": False, "trace": False}


def _query_options(sp) -> None:
    sp.add_argument("program", help=".dl program with a query")
    sp.add_argument("--const", action="append", metavar="VALUE",
                    help="replace the query constants in order (repeatable)")
    sp.add_argument("--query", metavar="ATOM", help="replace the program's query")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="earleydl", parents=[common],
                     description="Datalog by Earley Deduction and compiled query automata.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("eval", parents=[common], help="answer the query with one engine")
    _query_options(sp)
    sp.add_argument("--engine", choices=list(ENGINES), default="automaton")
    sp.add_argument("--format", choices=["answers", "table"], default="answers")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("compile", parents=[common], help="print the automaton or rewritten program")
    _query_options(sp)
    sp.add_argument("--format", choices=["dump", "rewritten"], default="dump")
    sp.add_argument("-o", "--out", metavar="PATH", help="write to a file instead of stdout")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("check", parents=[common], help="cross-check all engines")
    _query_options(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("bench", parents=[common], help="time the engines")
    _query_options(sp)
    sp.add_argument("-r", "--repetitions", type=int, default=5, metavar="N")
    sp.add_argument("--engines", nargs="+", choices=list(benchmod.ENGINES))
    sp.add_argument("--oracle-budget", type=int, default=None, metavar="TUPLES",
                    help="stop the oracle after this many derived tuples")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("from-grammar", parents=[common], help="encode a grammar and input as Datalog")
    sp.add_argument("grammar", help="grammar file: 'N -> sym ... | .' per line")
    sp.add_argument("input", help="input string (one terminal per character)")
    sp.add_argument("--facts-out", metavar="PATH", help="write the input facts as .dl")
    sp.add_argument("--run", action="store_true", help="recognize with all engines instead of printing")
    sp.set_defaults(func=cmd_from_grammar)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    if args.state_cap < 1:
        parser.error("--state-cap must be positive")
    try:
        return args.func(args)
    except (StateCapExceeded, seminaive.BudgetExceeded, earley.BudgetExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LIMIT
    except (InputError, ParseError, FactLoadError, CompileError, UnknownPredicate) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
