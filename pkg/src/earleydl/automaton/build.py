"""Construction of the parameterized automaton for a (program, query) pair.

States are canonical closed item sets.  From each state:

* items selecting the same EDB call signature advance together over one
  scan transition;
* items selecting the same IDB call signature advance together over one
  completion transition fed by the ``ans_<q>_<pattern>`` channel;
* completed items become answer declarations on their channel.

When an advance completes an item that was predicted in the source state,
its answer is delivered to its callers in that state right away, as long as
that needs no runtime comparison.  The completed item is then dropped from
the target, so a channel only exists where an answer really has to cross
state instances.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..ir import Const, Program, pred_str, validate_program
from .items import (
    GOAL_PRED,
    GOAL_RULE,
    Item,
    _rename,
    alpha_of,
    canonicalize,
    closure,
    compile_rules,
    is_complete,
    item_sort_key,
    param_count,
    selected,
    signature,
)

DEFAULT_STATE_CAP = 100_000


class CompileError(ValueError):
    pass


class StateCapExceeded(RuntimeError):
    def __init__(self, cap: int, reached: int):
        self.cap = cap
        self.reached = reached
        super().__init__(f"state cap {cap} exceeded ({reached} states reached)")


@dataclass(frozen=True)
class State:
    id: int
    items: Tuple[Item, ...]
    param_count: int


@dataclass(frozen=True)
class Transition:
    """A scan (EDB fact) or completion (channel answer) transition.

    bound:   (position, source) per bound argument; source is a slot of the
             source state or a Const.
    assign:  (target slot, source) with source ('p', slot) or ('a', position).
    compare: (position, earlier position) pairs that must hold equal values.
    when:    alternative guard sets of the advanced items; the transition is
             enabled if any holds.  Empty means always enabled.
    """

    kind: str
    source: int
    pred: tuple
    pattern: str
    bound: tuple
    target: int
    assign: tuple
    compare: tuple
    when: tuple = ()

    @property
    def channel(self) -> str:
        return channel_name(self.pred[0], self.pattern)


@dataclass(frozen=True)
class AnswerDecl:
    pred: tuple
    pattern: str
    state: int
    proj: tuple
    guards: tuple = ()

    @property
    def channel(self) -> str:
        return channel_name(self.pred[0], self.pattern)


def channel_name(name: str, pattern: str) -> str:
    return f"ans_{name}_{pattern}" if pattern else f"ans_{name}"


@dataclass
class Automaton:
    states: list
    scans: list
    completions: list
    answers: list
    initial: int
    init_params: tuple
    init_slots: tuple
    rules: dict = field(repr=False)
    edb: tuple = ()
    goal_arity: int = 0
    query: object = None

    @property
    def goal_channel(self) -> tuple:
        return ((GOAL_PRED, self.goal_arity), "f" * self.goal_arity)


def _is_reserved(name: str) -> bool:
    return (
        name == GOAL_PRED
        or name.startswith("ans_")
        or (name.startswith("s") and name[1:].isdigit() and len(name) > 1)
    )


class _Builder:
    def __init__(self, p: Program, state_cap: int):
        self.p = p
        self.table = compile_rules(p)
        self.edb = p.edb_set
        self.idb = p.idb_preds() - self.edb
        self.by_head = defaultdict(list)
        for i, r in enumerate(p.rules):
            self.by_head[r.head.pred].append(i)
        self.cap = state_cap
        self.states: list = []
        self.index: dict = {}
        self.queue: deque = deque()
        self.scans: list = []
        self.completions: list = []
        self.answers: list = []
        self.live_channels: set = set()
        self.pending: dict = defaultdict(list)

    def intern(self, items) -> int:
        sid = self.index.get(items)
        if sid is not None:
            return sid
        if len(self.states) >= self.cap:
            raise StateCapExceeded(self.cap, len(self.states) + 1)
        sid = len(self.states)
        self.states.append(State(sid, items, param_count(items)))
        self.index[items] = sid
        self.queue.append(sid)
        return sid

    def _closure(self, kernel):
        return closure(kernel, self.table, self.idb, self.by_head)

    # -- advancing items ----------------------------------------------------

    def _advance(self, it: Item, entries) -> Item:
        """Move the dot over the selected literal, binding free variables to argument positions."""
        _, terms = selected(it, self.table)
        binding = [None if x is None else x if isinstance(x, Const) else ("s", x) for x in it.binding]
        for pos, t in enumerate(terms):
            if not isinstance(t, Const) and binding[t] is None:
                binding[t] = ("a", pos)
        return Item(it.rule_id, it.dot + 1, it.alpha, tuple(binding), ())

    def _advance_with(self, caller: Item, values) -> Optional[Item]:
        """Advance `caller` with a compile-time known answer; None if a runtime check would be needed."""
        _, terms = selected(caller, self.table)
        binding = [None if x is None else x if isinstance(x, Const) else ("s", x) for x in caller.binding]
        local: dict = {}
        for t, val in zip(terms, values):
            if isinstance(t, Const):
                if val is not t:
                    return None
                continue
            b = binding[t]
            if b is None:
                cur = local.get(t)
                if cur is None:
                    local[t] = val
                elif cur != val:
                    return None
            elif b != val:
                return None
        for v, val in local.items():
            binding[v] = val
        return Item(caller.rule_id, caller.dot + 1, caller.alpha, tuple(binding), ())

    def _head_values(self, it: Item) -> tuple:
        rule = self.table[it.rule_id]
        out = []
        for h in rule.head[1]:
            out.append(h if isinstance(h, Const) else it.binding[h])
        return tuple(out)

    # -- transitions --------------------------------------------------------

    def _transition(self, kind, sid, sig, group, predicted_by) -> list:
        pred, entries = sig
        kernel: dict = {}
        origin: dict = {}
        for it in group:
            adv = self._advance(it, entries)
            kernel[adv] = None
            if it.dot == 0 and it.rule_id != GOAL_RULE:
                origin[adv] = it
        done: set = set()
        todo = deque(a for a in kernel if a in origin and is_complete(a, self.table))
        while todo:
            c = todo.popleft()
            if c not in kernel or c in done:
                continue
            callers = predicted_by.get(origin[c], ())
            if not callers:
                continue
            values = self._head_values(c)
            advanced = [(caller, self._advance_with(caller, values)) for caller in callers]
            if any(a is None for _, a in advanced):
                continue
            del kernel[c]
            done.add(c)
            for caller, a in advanced:
                if a in kernel or a in done:
                    continue
                kernel[a] = None
                if caller.dot == 0 and caller.rule_id != GOAL_RULE:
                    origin[a] = caller
                    if is_complete(a, self.table):
                        todo.append(a)
        bound = tuple((pos, e[1]) for pos, e in enumerate(entries) if e[0] == "b")
        first: dict = {}
        compare = []
        for pos, (k, v) in enumerate(entries):
            if k == "f":
                if v in first:
                    compare.append((pos, first[v]))
                else:
                    first[v] = pos
        if any(not it.guards for it in group):
            when = ()
        else:
            when = tuple(sorted({it.guards for it in group}, key=repr))
        out = []
        for bucket in _split_by_schema(kernel):
            closed, _ = self._closure(bucket)
            canon, num = canonicalize(closed)
            target = self.intern(canon)
            assign = tuple(
                sorted((slot, ("p", x[1]) if x[0] == "s" else ("a", x[1])) for x, slot in num.items())
            )
            out.append(
                Transition(
                    kind, sid, pred, alpha_of(entries), bound, target, assign, tuple(compare), when
                )
            )
        return out

    # -- main loop ------------------------------------------------------------

    def process(self, sid: int) -> None:
        state = self.states[sid]
        items, predicted_by = self._closure(state.items)
        edb_groups: dict = {}
        idb_groups: dict = {}
        decls = []
        for it in items:
            sel = selected(it, self.table)
            if sel is None:
                decls.append(self._decl(sid, it))
                continue
            sig = signature(it, self.table)
            groups = edb_groups if sel[0] in self.edb else idb_groups
            groups.setdefault(sig, []).append(it)
        for sig, group in edb_groups.items():
            self.scans.extend(self._transition("scan", sid, sig, group, predicted_by))
        for d in dict.fromkeys(decls):
            self.answers.append(d)
            self._open_channel((d.pred, d.pattern))
        for sig, group in idb_groups.items():
            channel = (sig[0], alpha_of(sig[1]))
            job = (sid, sig, group, predicted_by)
            if channel in self.live_channels:
                self.completions.extend(self._transition("complete", *job))
            else:
                self.pending[channel].append(job)

    def _open_channel(self, channel) -> None:
        if channel in self.live_channels:
            return
        self.live_channels.add(channel)
        for job in self.pending.pop(channel, ()):
            self.completions.extend(self._transition("complete", *job))

    def _decl(self, sid: int, it: Item) -> AnswerDecl:
        rule = self.table[it.rule_id]
        proj = self._head_values(it)
        if it.rule_id == GOAL_RULE:
            return AnswerDecl((GOAL_PRED, len(proj)), "f" * len(proj), sid, proj, it.guards)
        return AnswerDecl(rule.head_pred, it.alpha, sid, proj, it.guards)


def _split_by_schema(kernel) -> list:
    """Partition a kernel so no part holds two items alike up to slot renaming.

    A state instance is just a set of independent item instances, so splitting
    is always sound.  It keeps the slot count of every state bounded; without
    it a recursion can keep adding copies of one item over fresh slots.
    """
    buckets: list = []
    for it in kernel:
        key = item_sort_key(_rename(it, {}))
        for keys, items in buckets:
            if key not in keys:
                keys.add(key)
                items.append(it)
                break
        else:
            buckets.append(({key}, [it]))
    return [items for _, items in buckets]


def check_compilable(p: Program) -> None:
    problems = validate_program(p)
    if problems:
        raise CompileError("invalid program: " + "; ".join(str(v) for v in problems))
    preds = set(p.edb) | {r.head.pred for r in p.rules}
    preds |= {a.pred for r in p.rules for a in r.body} | {p.query.pred}
    reserved = sorted(pred_str(k) for k in preds if _is_reserved(k[0]))
    if reserved:
        raise CompileError("program uses reserved predicate names: " + ", ".join(reserved))


def build_automaton(p: Program, state_cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Compile `p` and its query into a parameterized automaton.

    Query constants become initial parameters, so the result can be run for
    any query of the same shape.  Raises StateCapExceeded when more than
    `state_cap` states would be needed.
    """
    check_compilable(p)
    b = _Builder(p, state_cap)
    goal = b.table[GOAL_RULE]
    nvars = len(goal.var_names)
    nq = len(p.query_constants())
    binding = [None] * (nvars - nq) + [("q", i) for i in range(nq)]
    kernel = [Item(GOAL_RULE, 0, "f" * (nvars - nq), tuple(binding), ())]
    closed, _ = b._closure(kernel)
    canon, num = canonicalize(closed)
    initial = b.intern(canon)
    init_slots = tuple(num[("q", i)] for i in range(nq))
    while b.queue:
        b.process(b.queue.popleft())
    return Automaton(
        states=b.states,
        scans=b.scans,
        completions=b.completions,
        answers=b.answers,
        initial=initial,
        init_params=tuple(p.query_constants()),
        init_slots=init_slots,
        rules=b.table,
        edb=p.edb,
        goal_arity=nvars - nq,
        query=p.query,
    )
