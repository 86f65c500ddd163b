"""Dotted rule schemas (items), compile-time prediction, and canonical state forms.

An item records a rule, a dot position, the call pattern it was predicted
under, and a binding for each rule variable:

* ``None``   - unbound,
* a ``Const`` - a constant taken from the program text,
* anything else - a parameter slot.

Canonical states use ``int`` slots.  While a transition is being built the
slots are tagged tuples instead: ``('s', i)`` for slot ``i`` of the source
state, ``('a', p)`` for argument ``p`` of the fact or answer being consumed,
``('q', i)`` for the ``i``-th query constant.

Guards are runtime equalities, each a pair ``(slot, Const)`` or
``(slot, slot)``, recorded when a call passes a parameter into a head
position that holds a constant or a repeated variable.  They filter work in
the state where the item was predicted and are not carried past the dot.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

from ..ir import Atom, Const, Program, Var

GOAL_RULE = -1
GOAL_PRED = "goal"

# Upper bound on tie-breaking permutations tried while canonicalizing.
CANON_PERMUTATION_CAP = 720


class Item(NamedTuple):
    rule_id: int
    dot: int
    alpha: str
    binding: tuple
    guards: tuple = ()


@dataclass(frozen=True)
class CompiledRule:
    rule_id: int
    var_names: Tuple[str, ...]
    head: Tuple[str, tuple]
    body: Tuple[Tuple[tuple, tuple], ...]

    @property
    def head_pred(self):
        return (self.head[0], len(self.head[1]))


def is_slot(x) -> bool:
    return x is not None and not isinstance(x, Const)


def _compile_rule(rule_id, head: Atom, body, var_names=None) -> CompiledRule:
    if var_names is None:
        seen: dict = {}
        for a in (head, *body):
            for t in a.variables():
                seen.setdefault(t.name, None)
        var_names = tuple(seen)
    index = {n: i for i, n in enumerate(var_names)}

    def terms(a: Atom):
        return tuple(index[t.name] if isinstance(t, Var) else t for t in a.args)

    return CompiledRule(
        rule_id,
        tuple(var_names),
        (head.name, terms(head)),
        tuple((a.pred, terms(a)) for a in body),
    )


def compile_rules(p: Program) -> dict:
    """Rule table keyed by rule id; the synthetic goal rule has id GOAL_RULE.

    The goal rule is ``goal(V...) :- q(...)`` where every query constant is
    replaced by a fresh variable, later bound to an initial parameter.
    """
    table = {i: _compile_rule(i, r.head, r.body) for i, r in enumerate(p.rules)}
    q = p.query
    qvars = [t.name for t in q.args if isinstance(t, Var)]
    used = set(qvars)
    const_vars = []
    counter = itertools.count()
    args = []
    for t in q.args:
        if isinstance(t, Var):
            args.append(t)
        else:
            name = f"Q{next(counter)}"
            while name in used:
                name = f"Q{next(counter)}"
            used.add(name)
            const_vars.append(name)
            args.append(Var(name))
    head = Atom(GOAL_PRED, tuple(Var(n) for n in qvars))
    table[GOAL_RULE] = _compile_rule(
        GOAL_RULE, head, [Atom(q.name, tuple(args))], var_names=tuple(qvars + const_vars)
    )
    return table


def _tkey(x):
    if x is None:
        return (0,)
    if isinstance(x, Const):
        return (3, x.name)
    if isinstance(x, int):
        return (1, x)
    return (2, x)


def norm_guard(a, b) -> tuple:
    """A guard as an ordered pair: slot first; two slots in key order."""
    if isinstance(a, Const):
        a, b = b, a
    if is_slot(b) and _tkey(b) < _tkey(a):
        a, b = b, a
    return (a, b)


def norm_guards(guards) -> tuple:
    return tuple(sorted(set(guards), key=lambda g: (_tkey(g[0]), _tkey(g[1]))))


def selected(item: Item, table: dict):
    rule = table[item.rule_id]
    if item.dot >= len(rule.body):
        return None
    return rule.body[item.dot]


def is_complete(item: Item, table: dict) -> bool:
    return item.dot >= len(table[item.rule_id].body)


def signature(item: Item, table: dict):
    """Call signature of the selected literal: (pred, entries).

    Each entry is ``('b', source)`` for a bound position (slot or constant)
    or ``('f', k)`` where ``k`` numbers the distinct unbound variables.
    """
    pred, terms = selected(item, table)
    free: dict = {}
    entries = []
    for t in terms:
        if isinstance(t, Const):
            entries.append(("b", t))
        else:
            b = item.binding[t]
            if b is None:
                entries.append(("f", free.setdefault(t, len(free))))
            else:
                entries.append(("b", b))
    return pred, tuple(entries)


def alpha_of(entries) -> str:
    return "".join(e[0] for e in entries)


def predict(entries, rule: CompiledRule) -> Optional[Item]:
    """Item for `rule` at dot 0 called with `entries`, or None on a constant clash."""
    binding = [None] * len(rule.var_names)
    guards = []
    for h, (kind, src) in zip(rule.head[1], entries):
        if kind == "f":
            continue
        if isinstance(h, Const):
            if isinstance(src, Const):
                if src is not h:
                    return None
            else:
                guards.append(norm_guard(src, h))
            continue
        cur = binding[h]
        if cur is None:
            binding[h] = src
        elif cur == src:
            continue
        elif isinstance(cur, Const) and isinstance(src, Const):
            return None
        else:
            guards.append(norm_guard(cur, src))
    fixed: dict = {}
    for a, b in guards:
        if isinstance(b, Const) and fixed.setdefault(a, b) is not b:
            return None
    return Item(rule.rule_id, 0, alpha_of(entries), tuple(binding), norm_guards(guards))


def closure(kernel, table: dict, idb: set, by_head: dict):
    """Close `kernel` under prediction.

    Returns (items in discovery order, predicted_by) where predicted_by maps
    each predicted item to the items whose selected literal predicted it.
    """
    items: dict = {}
    predicted_by: dict = {}
    work = deque()
    for it in kernel:
        if it not in items:
            items[it] = None
            work.append(it)
    while work:
        it = work.popleft()
        sel = selected(it, table)
        if sel is None or sel[0] not in idb:
            continue
        pred, entries = signature(it, table)
        for rid in by_head.get(pred, ()):
            new = predict(entries, table[rid])
            if new is None:
                continue
            callers = predicted_by.setdefault(new, [])
            if it not in callers:
                callers.append(it)
            if new not in items:
                items[new] = None
                work.append(new)
    return list(items), predicted_by


def _ekey(x):
    """Sort key for canonical binding/guard entries (None, int slot, Const)."""
    if x is None:
        return (0,)
    if isinstance(x, Const):
        return (2, x.name)
    return (1, x)


def item_sort_key(item: Item):
    return (
        item.rule_id,
        item.dot,
        item.alpha,
        tuple(_ekey(x) for x in item.binding),
        tuple(tuple(_ekey(x) for x in g) for g in item.guards),
    )


def _rename(item: Item, num: dict) -> Item:
    def assign(x):
        if is_slot(x):
            n = num.get(x)
            if n is None:
                n = num[x] = len(num)
            return n
        return x

    binding = tuple(assign(x) for x in item.binding)

    def known(x):
        if isinstance(x, Const):
            return (2, x.name)
        return (1, num.get(x, math.inf))

    for g in sorted(item.guards, key=lambda g: sorted(known(x) for x in g)):
        for x in sorted(g, key=known):
            assign(x)
    guards = []
    for a, b in item.guards:
        g = (num[a], b if isinstance(b, Const) else num[b])
        if not isinstance(g[1], Const) and g[1] < g[0]:
            g = (g[1], g[0])
        guards.append(g)
    guards.sort(key=lambda g: (_ekey(g[0]), _ekey(g[1])))
    return Item(item.rule_id, item.dot, item.alpha, binding, tuple(guards))


def canonicalize(items):
    """Canonical form of an item set up to slot renaming.

    Items are ordered by their renaming-invariant local form; ties are broken
    by trying permutations (capped) and keeping the smallest renamed result.
    Slots are numbered by first occurrence.  Returns (items, slot map).
    """
    unique = list(dict.fromkeys(items))
    local = {it: item_sort_key(_rename(it, {})) for it in unique}
    unique.sort(key=lambda it: local[it])
    groups = [list(g) for _, g in itertools.groupby(unique, key=lambda it: local[it])]
    combos = 1
    for g in groups:
        combos *= math.factorial(len(g))
    if combos > CANON_PERMUTATION_CAP:
        choices = [[g] for g in groups]
    else:
        choices = [list(itertools.permutations(g)) for g in groups]
    best = None
    for combo in itertools.product(*choices):
        num: dict = {}
        renamed = tuple(_rename(it, num) for group in combo for it in group)
        key = tuple(item_sort_key(it) for it in renamed)
        if best is None or key < best[0]:
            best = (key, renamed, num)
    if best is None:
        return (), {}
    return best[1], best[2]


def param_count(items) -> int:
    slots = set()
    for it in items:
        slots.update(x for x in it.binding if is_slot(x))
        for g in it.guards:
            slots.update(x for x in g if is_slot(x))
    return len(slots)
