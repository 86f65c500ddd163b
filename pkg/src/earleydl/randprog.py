"""Seeded generator of small valid positive Datalog programs with EDB instances.

Used by the differential tests and the acceptance corpus.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .ir import Atom, Const, Program, Rule, Var
from .store import FactStore

VARS = ("X", "Y", "Z", "W")


@dataclass
class Case:
    program: Program
    store: FactStore
    seed: int


def random_case(
    rng: random.Random,
    max_idb: int = 4,
    max_rules: int = 3,
    max_body: int = 3,
    max_facts: int = 50,
    max_consts: int = 8,
    seed: int = -1,
) -> Case:
    consts = [Const(f"c{i}") for i in range(rng.randint(2, max_consts))]
    edb = [(f"e{i}", rng.randint(1, 3)) for i in range(rng.randint(1, 3))]
    idb = [(f"p{i}", rng.randint(0, 3)) for i in range(rng.randint(1, max_idb))]

    def term(pool):
        if rng.random() < 0.15:
            return rng.choice(consts)
        return Var(rng.choice(pool))

    rules = []
    for pred in idb:
        for _ in range(rng.randint(1, max_rules)):
            nbody = rng.choice([0] + [n for n in range(1, max_body + 1)] * 3)
            pool = VARS[: rng.randint(1, len(VARS))]
            body = []
            for _ in range(nbody):
                name, arity = rng.choice(edb + idb) if rng.random() < 0.6 else rng.choice(idb)
                body.append(Atom(name, tuple(term(pool) for _ in range(arity))))
            body_vars = [v for a in body for v in a.variables()]
            head_args = []
            for _ in range(pred[1]):
                if body_vars and rng.random() < 0.85:
                    head_args.append(rng.choice(body_vars))
                else:
                    head_args.append(rng.choice(consts))
            rules.append(Rule(Atom(pred[0], tuple(head_args)), tuple(body)))

    qpred = rng.choice(idb)
    qargs = []
    for i in range(qpred[1]):
        qargs.append(rng.choice(consts) if rng.random() < 0.4 else Var(f"Q{i}"))
    program = Program(tuple(edb), tuple(rules), Atom(qpred[0], tuple(qargs)))

    budget = rng.randint(0, max_facts)
    facts = []
    for _ in range(budget):
        name, arity = rng.choice(edb)
        facts.append((name, tuple(rng.choice(consts) for _ in range(arity))))
    return Case(program, FactStore.from_facts(edb, facts), seed)


def corpus(n: int, seed: int = 20140719, **kw) -> list:
    """`n` cases, each drawn from its own derived seed (so a failure is replayable alone)."""
    master = random.Random(seed)
    out = []
    for _ in range(n):
        s = master.randrange(2**32)
        out.append(random_case(random.Random(s), seed=s, **kw))
    return out
