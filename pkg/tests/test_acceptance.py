"""Acceptance criteria, one test (or group) per criterion.

Each criterion prints a PASS/FAIL line in the terminal summary (see conftest).
"""

import gc
import os
import random
import statistics
import subprocess
import sys
import time

import pytest

from earleydl import (
    Const,
    answer_query,
    build_automaton,
    earley_run,
    emit_rewritten_program,
    parse_program,
    run_automaton,
)
from earleydl.automaton import dump_automaton
from earleydl.bench import CSV_HEADER, bench, chain_workload, compiled_not_slower, format_csv, format_table
from earleydl.earley import DerivedRule, RuleStore, subsumes
from earleydl.grammar import encode, parse_grammar
from earleydl.ir import Atom, Var
from earleydl.randprog import corpus

from conftest import REPORTS, SG, store_of
from oracles import brute_subsumes

CORPUS_SIZE = 300
ORACLE_BUDGET = 500_000


def criterion(n, text):
    return pytest.mark.criterion(n, text)


def report(n, ok, detail=""):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


# -- 1 and 2: differential corpus ---------------------------------------------------


@pytest.fixture(scope="module")
def corpus_results():
    t0 = time.perf_counter()
    out = []
    for case in corpus(CORPUS_SIZE):
        p, s = case.program, case.store
        a = build_automaton(p)
        out.append({
            "seed": case.seed,
            "seminaive": answer_query(p, s),
            "earley": earley_run(p, s),
            "automaton": run_automaton(a, s),
            "rewritten": answer_query(emit_rewritten_program(a), s),
        })
    return out, time.perf_counter() - t0


@criterion(1, f"differential corpus ({CORPUS_SIZE} programs): seminaive = earley = automaton, < 5 min")
def test_c1_differential_corpus(corpus_results):
    results, elapsed = corpus_results
    bad = [r["seed"] for r in results if not (r["seminaive"] == r["earley"] == r["automaton"])]
    nonempty = sum(1 for r in results if r["seminaive"])
    report(1, not bad and elapsed < 300, f"mismatches={len(bad)} time={elapsed:.1f}s nonempty={nonempty}")
    assert len(results) >= 200
    assert bad == []
    assert elapsed < 300
    # the corpus must exercise real answers, not only empty sets
    assert nonempty >= len(results) // 4


@criterion(2, "rewritten program under seminaive = run_automaton on the corpus")
def test_c2_rewritten_equivalence(corpus_results):
    results, _ = corpus_results
    bad = [r["seed"] for r in results if r["rewritten"] != r["automaton"]]
    report(2, not bad, f"mismatches={len(bad)}")
    assert bad == []


# -- 3: left-recursive chain ----------------------------------------------------------


@criterion(3, "chain of 1000: exactly 1000 answers on all engines; dump byte-identical over 3 runs")
def test_c3_chain_1000():
    p, s = chain_workload(1000)
    expect = [(Const(str(i)),) for i in range(1, 1001)]
    expect.sort(key=lambda r: r[0].name)
    got = {
        "seminaive": answer_query(p, s),
        "earley": earley_run(p, s),
        "automaton": run_automaton(build_automaton(p), s),
    }
    counts = {k: len(v) for k, v in got.items()}
    dumps = set()
    src = "import sys\nfrom earleydl.bench import chain_workload\nfrom earleydl.automaton import build_automaton, dump_automaton\nsys.stdout.write(dump_automaton(build_automaton(chain_workload(0)[0])))\n"
    for hashseed in ("0", "1", "12345"):
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        r = subprocess.run([sys.executable, "-c", src], capture_output=True, env=env, check=True)
        dumps.add(r.stdout)
    report(3, all(v == expect for v in got.values()) and len(dumps) == 1, f"answers={counts} distinct_dumps={len(dumps)}")
    for v in got.values():
        assert v == expect
    assert len(dumps) == 1
    assert dumps.pop().decode() == dump_automaton(build_automaton(p))


# -- 4: same generation on a binary tree -------------------------------------------------


def tree_facts(depth):
    """Heap-numbered complete binary tree; leaves are 2**depth .. 2**(depth+1)-1."""
    n = 2 ** (depth + 1) - 1
    up, down, flat = [], [], []
    for child in range(2, n + 1):
        up.append((f"n{child}", f"n{child // 2}"))
        down.append((f"n{child // 2}", f"n{child}"))
    for left in range(2 ** depth, n + 1, 2):
        flat.append((f"n{left}", f"n{left + 1}"))
        flat.append((f"n{left + 1}", f"n{left}"))
    return up, down, flat


def sg_by_hand(up, down, flat):
    """Independent set-based fixpoint of sg(X,Y) :- flat | up, sg, down."""
    sg = set(flat)
    parents = {}
    for c, par in up:
        parents.setdefault(c, set()).add(par)
    children = {}
    for par, c in down:
        children.setdefault(par, set()).add(c)
    while True:
        new = set()
        for x, us in parents.items():
            for u in us:
                for (a, v) in sg:
                    if a == u:
                        new.update((x, y) for y in children.get(v, ()))
        if new <= sg:
            return sg
        sg |= new


@criterion(4, "same generation, complete binary tree depth 8: answers equal the oracle")
def test_c4_same_generation_tree():
    up, down, flat = tree_facts(8)
    p = parse_program(SG.replace("sg(a,Y)", "sg(n256,Y)"))
    s = store_of(p, [("up", f) for f in up] + [("down", f) for f in down] + [("flat", f) for f in flat])
    oracle = answer_query(p, s)
    hand = sorted({(Const(y),) for x, y in sg_by_hand(up, down, flat) if x == "n256"}, key=lambda r: r[0].name)
    got = {"earley": earley_run(p, s), "automaton": run_automaton(build_automaton(p), s)}
    ok = oracle == hand and all(v == oracle for v in got.values())
    report(4, ok, f"answers={[r[0].name for r in oracle]}")
    assert oracle == hand == [(Const("n257"),)]
    for v in got.values():
        assert v == oracle


# -- 5: scaling --------------------------------------------------------------------------


@criterion(5, "automaton run time on chain n=10k,20k,40k: time(2n)/time(n) <= 3.0")
def test_c5_scaling():
    medians = {}
    for n in (10_000, 20_000, 40_000):
        p, s = chain_workload(n)
        a = build_automaton(p)
        run_automaton(a, s)  # warm the store indexes
        times = []
        for _ in range(5):
            gc.collect()
            t0 = time.perf_counter()
            answers = run_automaton(a, s)
            times.append(time.perf_counter() - t0)
        assert len(answers) == n
        medians[n] = statistics.median(times)
    r1 = medians[20_000] / medians[10_000]
    r2 = medians[40_000] / medians[20_000]
    detail = " ".join(f"{n}:{t * 1000:.0f}ms" for n, t in medians.items()) + f" ratios={r1:.2f},{r2:.2f}"
    report(5, r1 <= 3.0 and r2 <= 3.0, detail)
    assert r1 <= 3.0
    assert r2 <= 3.0


# -- 6: relevance --------------------------------------------------------------------------

RELEVANCE = """\
.edb par/2.
.edb link/2.
.edb mark/1.
anc(X,Y) :- par(X,Y).
anc(X,Y) :- anc(X,Z), par(Z,Y).
reach(X,Y) :- link(X,Y).
reach(X,Y) :- reach(X,Z), link(Z,Y), mark(Y).
?- anc(a,Y).
"""


@criterion(6, "relevance: disconnected EDB lookups are 0 for earley/automaton, > 0 for seminaive")
def test_c6_relevance():
    p = parse_program(RELEVANCE)
    facts = [("par", ("a", "b")), ("par", ("b", "c")), ("link", ("x", "y")), ("link", ("y", "z")),
             ("mark", ("z",))]
    counts = {}
    for engine, fn in (
        ("earley", lambda s: earley_run(p, s)),
        ("automaton", lambda s: run_automaton(build_automaton(p), s)),
        ("seminaive", lambda s: answer_query(p, s)),
    ):
        s = store_of(p, facts)
        assert fn(s) == [(Const("b"),), (Const("c"),)]
        counts[engine] = (s.lookup_count(("link", 2)), s.lookup_count(("mark", 1)))
    ok = counts["earley"] == (0, 0) and counts["automaton"] == (0, 0) and min(counts["seminaive"]) > 0
    report(6, ok, f"(link, mark) lookups={counts}")
    assert counts["earley"] == (0, 0)
    assert counts["automaton"] == (0, 0)
    assert min(counts["seminaive"]) > 0


# -- 7: subsumption store ------------------------------------------------------------------

PREDS = [("p", 2), ("q", 1), ("r", 2)]


def _rand_rule(rng, nvars=3, nconsts=3):
    vs = [Var(f"V{i}") for i in range(nvars)]
    cs = [Const(f"k{i}") for i in range(nconsts)]

    def atom(pred):
        return Atom(pred[0], tuple(rng.choice(vs) if rng.random() < 0.55 else rng.choice(cs) for _ in range(pred[1])))

    body = tuple(atom(rng.choice(PREDS)) for _ in range(rng.randint(0, 2)))
    return DerivedRule(atom(rng.choice(PREDS)), body)


def _instance(rng, rule):
    terms = [Var(f"V{i}") for i in range(3)] + [Const(f"k{i}") for i in range(3)]
    theta = {Var(f"V{i}"): rng.choice(terms) for i in range(3)}

    def ap(a):
        return Atom(a.name, tuple(theta.get(t, t) for t in a.args))

    return DerivedRule(ap(rule.head), tuple(ap(a) for a in rule.body))


@criterion(7, "subsumption store: 10^4 insertions never leave a subsuming pair; subsumes = brute force")
def test_c7_subsumption_store():
    rng = random.Random(77)
    rs = RuleStore()
    insertions = 0
    for i in range(10_000):
        rule = _rand_rule(rng)
        residents = list(rs.rules.items())
        rid, removed = rs.insert(rule)
        insertions += 1
        # every decision is checked with `subsumes` (itself checked against brute force
        # below); every 100th also directly against brute force
        checks = (subsumes, brute_subsumes) if i % 100 == 0 else (subsumes,)
        for sub in checks:
            if rid is None:
                assert any(sub(r, rule) for _, r in residents)
                continue
            assert not any(sub(r, rule) for _, r in residents if r != rule)
            gone = set(removed)
            for k, r in residents:
                assert (k in gone) == sub(rule, r)
        if i % 2500 == 2499:
            rules = list(rs.rules.values())
            for a in rules:
                for b in rules:
                    assert a is b or not subsumes(a, b)
    pairs = 0
    disagreements = 0
    positives = 0
    for _ in range(6000):
        g = _rand_rule(rng)
        s = _instance(rng, g) if rng.random() < 0.5 else _rand_rule(rng)
        expect = brute_subsumes(g, s)
        positives += expect
        disagreements += subsumes(g, s) != expect
        pairs += 1
    report(7, disagreements == 0, f"insertions={insertions} final_size={len(rs)} pairs={pairs} "
           f"positives={positives} disagreements={disagreements}")
    assert disagreements == 0
    assert positives > 1000


# -- 8: grammar bridge ----------------------------------------------------------------------


@criterion(8, "grammar S -> a S b | eps: ab, aabb, '' accepted; a, aab, ba rejected; engines agree")
def test_c8_grammar():
    g = parse_grammar("S -> a S b | .")
    verdicts = {}
    for word, accept in (("ab", True), ("aabb", True), ("", True), ("a", False), ("aab", False), ("ba", False)):
        e = encode(g, word)
        res = [
            answer_query(e.program, e.store),
            earley_run(e.program, e.store),
            run_automaton(build_automaton(e.program), e.store),
        ]
        verdicts[word] = [r == [()] for r in res]
        assert all(r == ([()] if accept else []) for r in res), (word, res)
    report(8, True, f"verdicts={verdicts}")


# -- 9: bench table --------------------------------------------------------------------------


@criterion(9, "bench table (oracle/interpreter/compiled) for the chain-1000 and scaling workloads")
def test_c9_bench_tables():
    observations = []
    for n, reps in ((1000, 3), (10_000, 3), (20_000, 3), (40_000, 3)):
        p, s = chain_workload(n)
        rows = bench(p, s, repetitions=reps, oracle_budget=None if n == 1000 else ORACLE_BUDGET)
        assert [r.engine for r in rows] == ["seminaive", "earley", "automaton"]
        finished = [r for r in rows if r.status == "ok"]
        assert {r.answers for r in finished} == {n}
        assert {"earley", "automaton"} <= {r.engine for r in finished}
        csv_text = format_csv(rows)
        assert csv_text.splitlines()[0] == ",".join(CSV_HEADER)
        REPORTS.append(format_table(rows, title=f"chain n={n}, query anc(0,Y), {reps} repetitions"))
        if n == 40_000:
            observations.append(compiled_not_slower(rows))
    note = "compiled <= interpreter at 40000: " + ("yes" if observations[0] else "no")
    REPORTS.append(f"observation (non-blocking): {note}\n")
    report(9, True, note)
