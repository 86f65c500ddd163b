"""Earley Deduction interpreter.

Derived rules are saturated under two inference steps, both acting on the
leftmost body literal:

* instantiation: a selected IDB literal predicts each program rule whose head
  unifies with it;
* reduction: a selected literal is resolved against a unit (a derived rule
  with an empty body) or, for EDB literals, against a stored fact.

The store keeps only rules not subsumed by another stored rule.  Rules are
grouped by schema: the predicate signature plus the term shape with constants
abstracted.  Within a signature, subsumption between two shapes reduces to a
hash probe on the constants, so checks cost O(#shapes) rather than O(#rules).
"""

from __future__ import annotations

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Optional, Tuple

from ._gc import paused_gc
from .ir import Atom, Const, Program, Rule, Var, rename_rule
from .seminaive import Relation, sort_answers
from .store import Fact

GOAL = "$goal"


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DerivedRule:
    head: Atom
    body: Tuple[Atom, ...] = ()

    @property
    def selected(self) -> int:
        return 0

    @property
    def is_unit(self) -> bool:
        return not self.body

    @classmethod
    def of(cls, rule: Rule) -> "DerivedRule":
        return cls(rule.head, rule.body)

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}."


# --- unification -----------------------------------------------------------

def _walk(t, s):
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def unify_atoms(a: Atom, b: Atom, s: Optional[dict] = None) -> Optional[dict]:
    """Most general unifier of two flat atoms, binding `a`'s variables first."""
    if a.pred != b.pred:
        return None
    s = dict(s or {})
    for x, y in zip(a.args, b.args):
        x, y = _walk(x, s), _walk(y, s)
        if x == y:
            continue
        if isinstance(x, Var):
            s[x] = y
        elif isinstance(y, Var):
            s[y] = x
        else:
            return None
    return s


def _apply(atom: Atom, s: dict) -> Atom:
    return Atom(atom.name, tuple(_walk(t, s) for t in atom.args))


def instantiate(caller: DerivedRule, program_rule: Rule) -> Optional[DerivedRule]:
    """Prediction: `program_rule` specialised by the mgu of its head and the caller's selected literal.

    `program_rule` must already be renamed apart from `caller`.
    """
    if not caller.body:
        return None
    s = unify_atoms(program_rule.head, caller.body[0])
    if s is None:
        return None
    return DerivedRule(_apply(program_rule.head, s), tuple(_apply(a, s) for a in program_rule.body))


def reduce(waiter: DerivedRule, unit) -> Optional[DerivedRule]:
    """Resolve the waiter's selected literal against a unit rule or a Fact."""
    if not waiter.body:
        return None
    if isinstance(unit, Fact):
        unit_atom = Atom(unit.pred[0], unit.args)
    else:
        if unit.body:
            raise ValueError("reduce needs a unit (empty body)")
        unit_atom = unit.head
    s = unify_atoms(waiter.body[0], unit_atom)
    if s is None:
        return None
    return DerivedRule(_apply(waiter.head, s), tuple(_apply(a, s) for a in waiter.body[1:]))


def _reduce_ground(waiter: DerivedRule, row: tuple) -> Optional[DerivedRule]:
    s = {}
    for t, c in zip(waiter.body[0].args, row):
        if isinstance(t, Var):
            cur = s.get(t)
            if cur is None:
                s[t] = c
            elif cur is not c:
                return None
        elif t is not c:
            return None
    return DerivedRule(_apply(waiter.head, s), tuple(_apply(a, s) for a in waiter.body[1:]))


# --- subsumption -----------------------------------------------------------

def _flat(r: DerivedRule):
    return (r.head, *r.body)


def subsumes(general: DerivedRule, specific: DerivedRule) -> bool:
    """True iff some substitution maps `general` onto `specific` position-wise."""
    ga, sa = _flat(general), _flat(specific)
    if len(ga) != len(sa):
        return False
    theta: dict = {}
    for x, y in zip(ga, sa):
        if x.pred != y.pred:
            return False
        for t, u in zip(x.args, y.args):
            if isinstance(t, Var):
                bound = theta.get(t)
                if bound is None:
                    theta[t] = u
                elif bound != u:
                    return False
            elif t is not u:
                return False
    return True


def schema_key(r: DerivedRule):
    """(signature, shape, constants): variants share a key; the shape marks constants with -1."""
    sig = (r.head.pred, tuple(a.pred for a in r.body))
    shape, cs, vmap = [], [], {}
    for a in _flat(r):
        for t in a.args:
            if isinstance(t, Var):
                shape.append(vmap.setdefault(t, len(vmap)))
            else:
                shape.append(-1)
                cs.append(t)
    return sig, tuple(shape), tuple(cs)


def _compat(g: tuple, s: tuple):
    """Shape-level test whether shape `g` can subsume shape `s`.

    Returns None, or (from_idx, eq_groups): the constants of a subsuming rule
    are s-constants at `from_idx`, and each group in `eq_groups` lists
    s-constant indexes that must coincide.
    """
    s_ci = {}
    for i, e in enumerate(s):
        if e == -1:
            s_ci[i] = len(s_ci)
    from_idx = []
    classes: dict = defaultdict(list)
    for i, e in enumerate(g):
        if e == -1:
            if s[i] != -1:
                return None
            from_idx.append(s_ci[i])
        else:
            classes[e].append(i)
    eq_groups = []
    for positions in classes.values():
        kinds = {s[i] for i in positions}
        if -1 in kinds:
            if len(kinds) > 1:
                return None
            if len(positions) > 1:
                eq_groups.append(tuple(s_ci[i] for i in positions))
        elif len(kinds) > 1:
            return None
    return tuple(from_idx), tuple(eq_groups)


def _eq_ok(consts: tuple, eq_groups) -> bool:
    for grp in eq_groups:
        first = consts[grp[0]]
        for j in grp[1:]:
            if consts[j] is not first:
                return False
    return True


class RuleStore:
    """Subsumption-reduced set of derived rules, indexed by schema."""

    def __init__(self):
        self.rules: dict = {}
        self._groups: dict = {}
        self._compat_cache: dict = {}
        self._proj: dict = {}
        self._proj_of_shape: dict = defaultdict(list)
        self._ids = itertools.count()

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules.values())

    def _plan(self, g, s):
        key = (g, s)
        if key not in self._compat_cache:
            self._compat_cache[key] = _compat(g, s)
        return self._compat_cache[key]

    def find_subsumer(self, rule: DerivedRule) -> Optional[int]:
        sig, shape, cs = schema_key(rule)
        group = self._groups.get(sig)
        if not group:
            return None
        for g, members in group.items():
            plan = self._plan(g, shape)
            if plan is None:
                continue
            from_idx, eq_groups = plan
            if not _eq_ok(cs, eq_groups):
                continue
            hit = members.get(tuple(cs[j] for j in from_idx))
            if hit is not None:
                return hit
        return None

    def _projection(self, sig, s, from_idx):
        key = (sig, s, from_idx)
        idx = self._proj.get(key)
        if idx is None:
            idx = defaultdict(set)
            for cs in self._groups[sig][s]:
                idx[tuple(cs[j] for j in from_idx)].add(cs)
            self._proj[key] = idx
            self._proj_of_shape[(sig, s)].append(from_idx)
        return idx

    def find_subsumed(self, rule: DerivedRule) -> list:
        """Ids of stored rules strictly subsumed by `rule` (variants excluded)."""
        sig, g, gc = schema_key(rule)
        group = self._groups.get(sig)
        if not group:
            return []
        out = []
        for s in list(group):
            if s == g:
                continue
            plan = self._plan(g, s)
            if plan is None:
                continue
            from_idx, eq_groups = plan
            for cs in self._projection(sig, s, from_idx).get(gc, ()):
                if _eq_ok(cs, eq_groups):
                    out.append(group[s][cs])
        return sorted(out)

    def insert(self, rule: DerivedRule):
        """Add `rule` unless subsumed.  Returns (new id or None, ids of discarded rules)."""
        if self.find_subsumer(rule) is not None:
            return None, []
        removed = self.find_subsumed(rule)
        for rid in removed:
            self._remove(rid)
        rid = next(self._ids)
        sig, shape, cs = schema_key(rule)
        self._groups.setdefault(sig, {}).setdefault(shape, {})[cs] = rid
        for from_idx in self._proj_of_shape.get((sig, shape), ()):
            self._proj[(sig, shape, from_idx)][tuple(cs[j] for j in from_idx)].add(cs)
        self.rules[rid] = rule
        return rid, removed

    def _remove(self, rid: int) -> None:
        rule = self.rules.pop(rid)
        sig, shape, cs = schema_key(rule)
        members = self._groups[sig][shape]
        del members[cs]
        for from_idx in self._proj_of_shape.get((sig, shape), ()):
            self._proj[(sig, shape, from_idx)][tuple(cs[j] for j in from_idx)].discard(cs)
        if not members:
            del self._groups[sig][shape]


# --- saturation ------------------------------------------------------------

def _bound_positions(atom: Atom):
    positions = tuple(i for i, t in enumerate(atom.args) if isinstance(t, Const))
    return positions, tuple(atom.args[i] for i in positions)


@paused_gc()
def earley_run(p: Program, store, budget: Optional[int] = 50_000_000, trace=None) -> list:
    """Answer `p`'s query by Earley Deduction; returns sorted answer tuples.

    `trace`, if given, is called with one line per inference event.
    Raises BudgetExceeded after `budget` agenda steps (None disables the limit).
    """
    edb = p.edb_set
    q = p.query
    qvars = list(dict.fromkeys(q.variables()))
    rules_by_head = defaultdict(list)
    for i, r in enumerate(p.rules):
        rules_by_head[r.head.pred].append(i)

    rs = RuleStore()
    agenda: deque = deque()
    units: dict = defaultdict(Relation)
    waiters: dict = defaultdict(dict)
    fresh = itertools.count()

    def add(rule: DerivedRule, kind: str, parent, other):
        rid, removed = rs.insert(rule)
        if trace is not None:
            tag = "" if rid is not None else " [subsumed]"
            trace(f"{kind} {parent} {other} -> {rule}{tag}")
        if rid is not None:
            agenda.append(rid)

    seed = DerivedRule(Atom(GOAL, tuple(qvars)), (q,))
    add(seed, "S", "-", "-")
    steps = 0
    while agenda:
        rid = agenda.popleft()
        rule = rs.rules.get(rid)
        if rule is None:
            continue
        steps += 1
        if budget is not None and steps > budget:
            raise BudgetExceeded(f"Earley deduction exceeded {budget} steps")
        if not rule.body:
            pred = rule.head.pred
            row = rule.head.args
            rel = units[pred]
            if row in rel.tuples:
                continue
            rel.add_all({row})
            for positions, table in waiters[pred].items():
                for wid in table.get(tuple(row[i] for i in positions), ()):
                    waiter = rs.rules.get(wid)
                    if waiter is None:
                        continue
                    new = _reduce_ground(waiter, row)
                    if new is not None:
                        add(new, "R", wid, rid)
            continue
        lit = rule.body[0]
        if lit.pred in edb:
            positions, key = _bound_positions(lit)
            pattern = "".join("b" if i in positions else "f" for i in range(lit.arity))
            for fact in store.lookup(lit.pred, pattern, key):
                new = _reduce_ground(rule, fact.args)
                if new is not None:
                    add(new, "R", rid, fact)
            continue
        positions, key = _bound_positions(lit)
        waiters[lit.pred].setdefault(positions, {}).setdefault(key, []).append(rid)
        for ri in rules_by_head.get(lit.pred, ()):
            renamed = rename_rule(p.rules[ri], f"#{next(fresh)}")
            new = instantiate(rule, renamed)
            if new is not None:
                add(new, "I", rid, f"r{ri}")
        rel = units.get(lit.pred)
        if rel is not None:
            for row in list(rel.match(positions, key)):
                new = _reduce_ground(rule, row)
                if new is not None:
                    add(new, "R", rid, row_str(lit.pred, row))
    return sort_answers(units[(GOAL, len(qvars))].tuples)


def row_str(pred, row) -> str:
    return str(Fact(pred, tuple(row)))
