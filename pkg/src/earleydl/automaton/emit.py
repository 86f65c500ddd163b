"""Textual views of an automaton: the golden-testable dump and the rewritten program."""

from __future__ import annotations

from ..ir import Atom, Const, Program, Rule, Var
from .build import Automaton, channel_name
from .items import GOAL_PRED, GOAL_RULE


def _src(x) -> str:
    return str(x) if isinstance(x, Const) else f"P{x}"


def _guards(guards) -> str:
    return "guards{" + ",".join(f"{_src(a)}={_src(b)}" for a, b in guards) + "}"


def _when(when) -> str:
    if not when:
        return ""
    return " when[" + "|".join(",".join(f"{_src(a)}={_src(b)}" for a, b in g) for g in when) + "]"


def format_item(item, rules) -> str:
    rule = rules[item.rule_id]
    name = "goal" if item.rule_id == GOAL_RULE else f"r{item.rule_id}"
    binding = ",".join(
        f"{v}={'_' if x is None else _src(x)}" for v, x in zip(rule.var_names, item.binding)
    )
    return f"{name}@{item.dot}/{item.alpha} {{{binding}}} {_guards(item.guards)}"


def _assign(assign) -> str:
    return "assign[" + ",".join(
        f"P{slot}<-{'P' if kind == 'p' else 'F'}{idx}" for slot, (kind, idx) in assign
    ) + "]"


def _cmp(compare) -> str:
    return "cmp[" + ",".join(f"F{p}=F{q}" for p, q in compare) + "]"


def _bound(bound) -> str:
    return "bound:" + ",".join(f"{pos}={_src(s)}" for pos, s in bound)


def dump_automaton(a: Automaton) -> str:
    """Stable text rendering of states, transitions and answer declarations."""
    lines = ["automaton v1"]
    init = ",".join(f"P{s}={c}" for s, c in zip(a.init_slots, a.init_params))
    lines.append(f"initial s{a.initial} [{init}]")
    for st in a.states:
        lines.append(f"state s{st.id} params={st.param_count}")
        for it in st.items:
            lines.append("  " + format_item(it, a.rules))
    for t in a.scans:
        lines.append(
            f"scan s{t.source} --{t.pred[0]}/{t.pattern}[{_bound(t.bound)}]--> s{t.target} "
            f"{_assign(t.assign)} {_cmp(t.compare)}{_when(t.when)}"
        )
    for t in a.completions:
        lines.append(
            f"complete s{t.source} --{t.channel}[{_bound(t.bound)}]--> s{t.target} "
            f"{_assign(t.assign)} {_cmp(t.compare)}{_when(t.when)}"
        )
    for d in a.answers:
        lines.append(
            f"ans {d.pred[0]}/{d.pattern} from s{d.state} "
            f"proj[{','.join(_src(x) for x in d.proj)}] {_guards(d.guards)}"
        )
    return "\n".join(lines) + "\n"


def _state_atom(sid: int, k: int, subst=None) -> Atom:
    subst = subst or {}
    return Atom(f"s{sid}", tuple(subst.get(i, Var(f"X{i}")) for i in range(k)))


def emit_rewritten_program(a: Automaton) -> Program:
    """States become predicates s<i>/k, transitions become rules.

    Bottom-up evaluation of the result yields the same goal answers as
    running the automaton.
    """
    states = a.states
    rules = []
    init = {slot: c for slot, c in zip(a.init_slots, a.init_params)}
    rules.append(Rule(_state_atom(a.initial, states[a.initial].param_count, init)))

    for t in (*a.scans, *a.completions):
        name = t.pred[0] if t.kind == "scan" else channel_name(t.pred[0], t.pattern)
        for guards in t.when or ((),):
            subst = _guard_substitution(guards)
            if subst is None:
                continue
            args: list = [Var(f"F{pos}") for pos in range(len(t.pattern))]
            for pos, src in t.bound:
                args[pos] = src if isinstance(src, Const) else subst.get(src, Var(f"X{src}"))
            for pos, first in t.compare:
                args[pos] = args[first]
            head_args = [
                subst.get(idx, Var(f"X{idx}")) if kind == "p" else args[idx]
                for _, (kind, idx) in t.assign
            ]
            rules.append(
                Rule(
                    Atom(f"s{t.target}", tuple(head_args)),
                    (
                        _state_atom(t.source, states[t.source].param_count, subst),
                        Atom(name, tuple(args)),
                    ),
                )
            )
    for d in a.answers:
        subst = _guard_substitution(d.guards)
        if subst is None:
            continue
        head = Atom(
            channel_name(d.pred[0], d.pattern),
            tuple(x if isinstance(x, Const) else subst.get(x, Var(f"X{x}")) for x in d.proj),
        )
        rules.append(Rule(head, (_state_atom(d.state, states[d.state].param_count, subst),)))
    m = a.goal_arity
    query = Atom(channel_name(GOAL_PRED, "f" * m), tuple(Var(f"V{i}") for i in range(m)))
    return Program(tuple(a.edb), tuple(dict.fromkeys(rules)), query)


def _guard_substitution(guards):
    """Slot -> term map realising the guard equalities; None if they can never hold."""
    parent: dict = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    fixed: dict = {}
    for a, b in guards:
        ra = find(a)
        if isinstance(b, Const):
            if fixed.setdefault(ra, b) is not b:
                return None
            continue
        rb = find(b)
        if ra == rb:
            continue
        lo, hi = min(ra, rb), max(ra, rb)
        parent[hi] = lo
        if hi in fixed:
            if fixed.setdefault(lo, fixed[hi]) is not fixed[hi]:
                return None
    subst = {}
    for x in {s for g in guards for s in g if not isinstance(s, Const)}:
        r = find(x)
        subst[x] = fixed.get(r, Var(f"X{r}"))
    return subst
