"""Executing a parameterized automaton against a fact store."""

from __future__ import annotations

from collections import defaultdict, deque

from .._gc import paused_gc
from ..ir import Const
from ..seminaive import sort_answers
from .build import channel_name


class _Compiled:
    """Transitions and answer declarations regrouped per source state for the run loop."""

    def __init__(self, a):
        self.scans = defaultdict(list)
        for t in a.scans:
            self.scans[t.source].append(
                (t.pred, t.pattern, _sources(t.bound), t.compare, _assign(t.assign), t.target, t.when)
            )
        self.completions = defaultdict(list)
        self.channel_bound = {}
        for t in a.completions:
            ch = (t.pred, t.pattern)
            self.channel_bound[ch] = tuple(i for i, c in enumerate(t.pattern) if c == "b")
            self.completions[t.source].append(
                (ch, _sources(t.bound), t.compare, _assign(t.assign), t.target, t.when)
            )
        self.decls = defaultdict(list)
        for d in a.answers:
            self.decls[d.state].append(((d.pred, d.pattern), d.proj, d.guards))


def _sources(bound):
    return tuple(src for _, src in bound)


def _assign(assign):
    return tuple((kind == "a", idx) for _, (kind, idx) in assign)


def _value(src, params):
    return src if isinstance(src, Const) else params[src]


def _guards_hold(guards, params) -> bool:
    for a, b in guards:
        if params[a] is not (b if isinstance(b, Const) else params[b]):
            return False
    return True


def _enabled(when, params) -> bool:
    return not when or any(_guards_hold(g, params) for g in when)


@paused_gc()
def run_automaton(a, store, query_constants=None, trace=None) -> list:
    """Saturate state instances and channel answers; return the goal answers sorted.

    An instance is a state id with a tuple of constants for its parameters.
    Scans look facts up by the instance's bound values; completions join
    instances with channel answers on the bound positions.  `trace`, if
    given, receives one line per new instance and per new answer.
    """
    if query_constants is None:
        query_constants = a.init_params
    query_constants = tuple(c if isinstance(c, Const) else Const(str(c)) for c in query_constants)
    if len(query_constants) != len(a.init_slots):
        raise ValueError(
            f"automaton expects {len(a.init_slots)} query constants, got {len(query_constants)}"
        )
    c = _Compiled(a)
    k0 = a.states[a.initial].param_count
    init = [None] * k0
    for slot, value in zip(a.init_slots, query_constants):
        init[slot] = value
    goal_channel = a.goal_channel

    instances: set = set()
    answers: dict = defaultdict(set)
    answer_index: dict = defaultdict(lambda: defaultdict(list))
    waiters: dict = defaultdict(lambda: defaultdict(list))
    agenda: deque = deque()

    def add_instance(sid, params):
        key = (sid, params)
        if key not in instances:
            instances.add(key)
            if trace is not None:
                trace(f"I s{sid}({','.join(map(str, params))})")
            agenda.append((True, sid, params))

    def fire(assign, target, params, row):
        add_instance(target, tuple(row[i] if from_row else params[i] for from_row, i in assign))

    add_instance(a.initial, tuple(init))
    while agenda:
        is_instance, x, y = agenda.popleft()
        if not is_instance:
            ch, row = x, y
            bound = c.channel_bound.get(ch)
            if bound is None:
                continue
            for compare, assign, target, params in waiters[ch].get(tuple(row[i] for i in bound), ()):
                if all(row[p] is row[q] for p, q in compare):
                    fire(assign, target, params, row)
            continue
        sid, params = x, y
        for ch, proj, guards in c.decls.get(sid, ()):
            if guards and not _guards_hold(guards, params):
                continue
            row = tuple(_value(s, params) for s in proj)
            if row not in answers[ch]:
                answers[ch].add(row)
                if trace is not None:
                    trace(f"A {channel_name(ch[0][0], ch[1])}({','.join(map(str, row))})")
                bound = c.channel_bound.get(ch)
                if bound is not None:
                    answer_index[ch][tuple(row[i] for i in bound)].append(row)
                agenda.append((False, ch, row))
        for pred, pattern, sources, compare, assign, target, when in c.scans.get(sid, ()):
            if not _enabled(when, params):
                continue
            values = [_value(s, params) for s in sources]
            for fact in store.lookup(pred, pattern, values):
                row = fact.args
                if all(row[p] is row[q] for p, q in compare):
                    fire(assign, target, params, row)
        for ch, sources, compare, assign, target, when in c.completions.get(sid, ()):
            if not _enabled(when, params):
                continue
            key = tuple(_value(s, params) for s in sources)
            waiters[ch][key].append((compare, assign, target, params))
            for row in list(answer_index[ch].get(key, ())):
                if all(row[p] is row[q] for p, q in compare):
                    fire(assign, target, params, row)
    return sort_answers(answers.get(goal_channel, ()))
