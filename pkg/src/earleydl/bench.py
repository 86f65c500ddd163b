"""Timing harness: oracle vs interpreter vs compiled automaton on one workload."""

from __future__ import annotations

import csv
import gc
import io
import statistics
import time
from dataclasses import dataclass
from typing import Optional

from . import earley, seminaive
from .automaton import DEFAULT_STATE_CAP, build_automaton, run_automaton
from .ir import Const, Program
from .store import FactStore
from .syntax import parse_program

ENGINES = ("seminaive", "earley", "automaton")
ROLES = {"seminaive": "oracle", "earley": "interpreter", "automaton": "compiled"}
CSV_HEADER = ("engine", "compile_ms", "run_ms", "answers", "lookups")

ANCESTOR = """\
.edb par/2.
anc(X,Y) :- par(X,Y).
anc(X,Y) :- anc(X,Z), par(Z,Y).
?- anc(0,Y).
"""


@dataclass
class BenchRow:
    engine: str
    compile_ms: Optional[float]
    run_ms: Optional[float]
    answers: Optional[int]
    lookups: int
    status: str = "ok"


def chain_workload(n: int):
    """Left-recursive ancestor over par(i, i+1), i < n, queried from 0."""
    p = parse_program(ANCESTOR)
    facts = [("par", (Const(str(i)), Const(str(i + 1)))) for i in range(n)]
    return p, FactStore.from_facts(p.edb, facts)


def _ms(seconds: float) -> float:
    return seconds * 1000.0


def bench(
    p: Program,
    store: FactStore,
    repetitions: int = 5,
    engines=ENGINES,
    oracle_budget: Optional[int] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> list:
    """Median timings per engine.

    The oracle is stopped after `oracle_budget` derived tuples; its row then
    has status "budget" and no timing.  Lookup counts are from the last run.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    rows = []
    for engine in engines:
        compile_times, run_times = [], []
        answers = None
        status = "ok"
        for _ in range(repetitions):
            store.reset_counters()
            # settle collector debt left by the previous run so it is not billed to this one
            gc.collect()
            if engine == "automaton":
                t0 = time.perf_counter()
                a = build_automaton(p, state_cap=state_cap)
                compile_times.append(time.perf_counter() - t0)
                t0 = time.perf_counter()
                answers = run_automaton(a, store)
                run_times.append(time.perf_counter() - t0)
            elif engine == "earley":
                t0 = time.perf_counter()
                answers = earley.earley_run(p, store)
                run_times.append(time.perf_counter() - t0)
            elif engine == "seminaive":
                t0 = time.perf_counter()
                try:
                    answers = seminaive.answer_query(p, store, max_tuples=oracle_budget)
                except seminaive.BudgetExceeded:
                    status = "budget"
                    break
                run_times.append(time.perf_counter() - t0)
            else:
                raise ValueError(f"unknown engine {engine!r}")
        rows.append(
            BenchRow(
                engine,
                _ms(statistics.median(compile_times)) if compile_times else None,
                _ms(statistics.median(run_times)) if status == "ok" else None,
                len(answers) if status == "ok" else None,
                store.total_lookups(),
                status,
            )
        )
    return rows


def _cell(x, status="ok") -> str:
    if x is None:
        return status if status != "ok" else "-"
    if isinstance(x, float):
        return f"{x:.2f}"
    return str(x)


def format_table(rows, title: Optional[str] = None) -> str:
    header = ("engine", "role", "compile_ms", "run_ms", "answers", "lookups")
    body = [
        (
            r.engine,
            ROLES.get(r.engine, ""),
            _cell(r.compile_ms),
            _cell(r.run_ms, r.status),
            _cell(r.answers, r.status),
            str(r.lookups),
        )
        for r in rows
    ]
    widths = [max(len(row[i]) for row in (header, *body)) for i in range(len(header))]

    def line(cells):
        # names left-aligned, numbers right-aligned
        return "  ".join(
            c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths))
        ).rstrip()

    out = [title] if title else []
    out.append(line(header))
    out.append("  ".join("-" * w for w in widths))
    out.extend(line(b) for b in body)
    return "\n".join(out) + "\n"


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            (
                r.engine,
                "" if r.compile_ms is None else f"{r.compile_ms:.3f}",
                r.status if r.run_ms is None else f"{r.run_ms:.3f}",
                "" if r.answers is None else r.answers,
                r.lookups,
            )
        )
    return buf.getvalue()


def compiled_not_slower(rows) -> Optional[bool]:
    """Whether the automaton run time is at most the interpreter's; None if either is missing."""
    by = {r.engine: r for r in rows}
    a, e = by.get("automaton"), by.get("earley")
    if a is None or e is None or a.run_ms is None or e.run_ms is None:
        return None
    return a.run_ms <= e.run_ms
