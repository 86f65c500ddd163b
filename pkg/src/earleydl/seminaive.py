"""Bottom-up semi-naive evaluation: the reference oracle for the other engines."""

from __future__ import annotations

from dataclasses import dataclass, field

from ._gc import paused_gc
from .ir import Const, Program, Var, pred_str


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class DerivedSet:
    relations: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    iterations: int = 0

    def __getitem__(self, pred) -> set:
        return self.relations.get(pred, set())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DerivedSet):
            return NotImplemented
        preds = set(self.relations) | set(other.relations)
        return all(self[p] == other[p] for p in preds)

    def size(self) -> int:
        return sum(len(v) for v in self.relations.values())


class Relation:
    """Tuple set with lazily created hash indexes on bound-position subsets."""

    __slots__ = ("tuples", "indexes")

    def __init__(self, tuples=()):
        self.tuples = set(tuples)
        self.indexes = {}

    def add_all(self, new):
        self.tuples |= new
        for positions, idx in self.indexes.items():
            for t in new:
                idx.setdefault(tuple(t[i] for i in positions), []).append(t)

    def match(self, positions, key):
        if not positions:
            return self.tuples
        idx = self.indexes.get(positions)
        if idx is None:
            idx = {}
            for t in self.tuples:
                idx.setdefault(tuple(t[i] for i in positions), []).append(t)
            self.indexes[positions] = idx
        return idx.get(key, ())


def _join(body, i, env, program_edb, store, rel_for):
    """Enumerate environments extending `env` that satisfy body[i:]."""
    if i == len(body):
        yield env
        return
    atom, source = body[i]
    positions, key = [], []
    for pos, t in enumerate(atom.args):
        if isinstance(t, Const):
            positions.append(pos)
            key.append(t)
        elif t in env:
            positions.append(pos)
            key.append(env[t])
    if atom.pred in program_edb:
        pattern = "".join("b" if p in positions else "f" for p in range(atom.arity))
        candidates = (f.args for f in store.lookup(atom.pred, pattern, key))
    else:
        candidates = rel_for(atom.pred, source).match(tuple(positions), tuple(key))
    for row in candidates:
        new = env
        ok = True
        for pos, t in enumerate(atom.args):
            if isinstance(t, Var):
                cur = new.get(t)
                if cur is None:
                    if new is env:
                        new = dict(env)
                    new[t] = row[pos]
                elif cur is not row[pos]:
                    ok = False
                    break
        if ok:
            yield from _join(body, i + 1, new, program_edb, store, rel_for)


@paused_gc()
def evaluate(p: Program, store, max_tuples=None, trace=None) -> DerivedSet:
    """Least fixpoint of `p` over `store`, computed semi-naively.

    Each round, every rule is re-joined once per IDB body position with that
    position restricted to the previous round's new tuples.  `max_tuples`
    bounds the total number of derived tuples (BudgetExceeded when passed).
    `trace`, if given, receives one line per round.
    """
    edb = p.edb_set
    total: dict = {}
    for r in p.rules:
        total.setdefault(r.head.pred, Relation())
        for a in r.body:
            if a.pred not in edb:
                total.setdefault(a.pred, Relation())
    if p.query is not None and p.query.pred not in edb:
        total.setdefault(p.query.pred, Relation())

    delta: dict = {}

    def rel_for(pred, source):
        return total[pred] if source == "total" else delta[pred]

    def fire(rule, body_sources, out):
        head = rule.head
        for env in _join(body_sources, 0, {}, edb, store, rel_for):
            out.setdefault(head.pred, set()).add(
                tuple(env[t] if isinstance(t, Var) else t for t in head.args)
            )

    new: dict = {}
    for r in p.rules:
        if all(a.pred in edb for a in r.body):
            fire(r, [(a, "total") for a in r.body], new)
    count = 0
    iterations = 0
    while True:
        iterations += 1
        delta = {}
        for pred, rows in new.items():
            rows = rows - total[pred].tuples
            if rows:
                delta[pred] = Relation(rows)
                total[pred].add_all(rows)
                count += len(rows)
        if trace is not None:
            sizes = ", ".join(f"{pred_str(k)}+{len(v.tuples)}" for k, v in sorted(delta.items()))
            trace(f"round {iterations}: {sizes or 'no new tuples'}")
        if max_tuples is not None and count > max_tuples:
            raise BudgetExceeded(f"derived more than {max_tuples} tuples")
        if not delta:
            break
        new = {}
        for r in p.rules:
            for i, a in enumerate(r.body):
                if a.pred in delta:
                    sources = [(b, "delta" if j == i else "total") for j, b in enumerate(r.body)]
                    fire(r, sources, new)
    return DerivedSet(
        relations={pred: set(rel.tuples) for pred, rel in total.items()},
        delta={},
        iterations=iterations,
    )


def project_answers(query, tuples) -> list:
    """Filter `tuples` of the query predicate by its constants; project onto its variables."""
    const_pos = [(i, t) for i, t in enumerate(query.args) if isinstance(t, Const)]
    var_pos = [i for i, t in enumerate(query.args) if isinstance(t, Var)]
    out = set()
    for row in tuples:
        if all(row[i] is c for i, c in const_pos):
            out.add(tuple(row[i] for i in var_pos))
    return sort_answers(out)


def sort_answers(rows) -> list:
    return sorted(set(rows), key=lambda r: tuple(c.name for c in r))


def answer_query(p: Program, store, max_tuples=None, trace=None) -> list:
    """The query's answer tuples, sorted lexicographically; `[()]` means yes."""
    derived = evaluate(p, store, max_tuples=max_tuples, trace=trace)
    return project_answers(p.query, derived[p.query.pred])
