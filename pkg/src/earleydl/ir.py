"""Datalog abstract syntax: terms, atoms, rules, programs, plus static validation."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Tuple, Union

PredKey = Tuple[str, int]


class Const:
    """An interned data constant.

    Two constants are the same object iff their printable names are equal, so
    equality and hashing fall back to identity.
    """

    __slots__ = ("name",)
    _table: dict = {}
    _lock = threading.Lock()

    def __new__(cls, name: str) -> "Const":
        obj = cls._table.get(name)
        if obj is None:
            with cls._lock:
                obj = cls._table.get(name)
                if obj is None:
                    obj = object.__new__(cls)
                    object.__setattr__(obj, "name", str(name))
                    cls._table[name] = obj
        return obj

    def __setattr__(self, key, value):
        raise AttributeError("Const is immutable")

    def __reduce__(self):
        return (Const, (self.name,))

    def __lt__(self, other: "Const") -> bool:
        return self.name < other.name

    def __le__(self, other: "Const") -> bool:
        return self.name <= other.name

    def __gt__(self, other: "Const") -> bool:
        return self.name > other.name

    def __ge__(self, other: "Const") -> bool:
        return self.name >= other.name

    def __repr__(self) -> str:
        return f"Const({self.name!r})"

    def __str__(self) -> str:
        return format_const(self.name)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Const, Var]


def is_plain_const(name: str) -> bool:
    if not name:
        return False
    if not (name[0].islower() or name[0].isdigit()) or not name[0].isascii():
        return False
    return all(ch.isascii() and (ch.isalnum() or ch == "_") for ch in name)


def format_const(name: str) -> str:
    if is_plain_const(name):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


@dataclass(frozen=True)
class Atom:
    name: str
    args: Tuple[Term, ...] = ()

    @property
    def pred(self) -> PredKey:
        return (self.name, len(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[Var]:
        for t in self.args:
            if isinstance(t, Var):
                yield t

    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self.args)

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(str(t) for t in self.args)})"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: Tuple[Atom, ...] = ()

    def variables(self) -> list:
        """Variables in first-occurrence order, head first."""
        seen: dict = {}
        for atom in (self.head, *self.body):
            for v in atom.variables():
                seen.setdefault(v, None)
        return list(seen)

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}."


@dataclass(frozen=True)
class Program:
    edb: Tuple[PredKey, ...] = ()
    rules: Tuple[Rule, ...] = ()
    query: Optional[Atom] = None

    @property
    def edb_set(self) -> frozenset:
        return frozenset(self.edb)

    def idb_preds(self) -> set:
        preds = {r.head.pred for r in self.rules}
        for r in self.rules:
            preds.update(a.pred for a in r.body if a.pred not in self.edb_set)
        if self.query is not None and self.query.pred not in self.edb_set:
            preds.add(self.query.pred)
        return preds

    def rules_for(self, pred: PredKey) -> list:
        return [r for r in self.rules if r.head.pred == pred]

    def with_query(self, query: Atom) -> "Program":
        return Program(self.edb, self.rules, query)

    def query_variables(self) -> list:
        return [t for t in self.query.args if isinstance(t, Var)] if self.query else []

    def query_constants(self) -> list:
        return [t for t in self.query.args if isinstance(t, Const)] if self.query else []

    def __str__(self) -> str:
        from .syntax import print_program

        return print_program(self)


@dataclass(frozen=True)
class Violation:
    rule_index: Optional[int]
    message: str

    def __str__(self) -> str:
        where = "query" if self.rule_index is None else f"rule {self.rule_index}"
        return f"{where}: {self.message}"


def validate_program(p: Program) -> list:
    """Return every invariant violation of `p`; an empty list means valid."""
    out = []
    edb = p.edb_set
    names_by_kind: dict = {}
    for name, arity in edb:
        names_by_kind.setdefault(name, set()).add(arity)
    for i, r in enumerate(p.rules):
        if r.head.pred in edb:
            out.append(Violation(i, f"EDB predicate {_pk(r.head.pred)} defined by rule"))
        body_vars = {v for a in r.body for v in a.variables()}
        for v in dict.fromkeys(r.head.variables()):
            if v not in body_vars:
                out.append(Violation(i, f"head variable {v} not bound in body"))
    if p.query is None:
        out.append(Violation(None, "program has no query"))
    else:
        q = p.query
        if q.pred in edb:
            out.append(Violation(None, f"query predicate {_pk(q.pred)} is EDB"))
        qvars = list(q.variables())
        dup = sorted({v.name for v in qvars if qvars.count(v) > 1})
        for name in dup:
            out.append(Violation(None, f"query variable {name} repeated"))
    return out


def _pk(pred: PredKey) -> str:
    return f"{pred[0]}/{pred[1]}"


def pred_str(pred: PredKey) -> str:
    return _pk(pred)


def rename_rule(rule: Rule, suffix: str) -> Rule:
    """Rename every variable of `rule` apart by appending `suffix`."""
    m = {v: Var(v.name + suffix) for v in rule.variables()}

    def tr(a: Atom) -> Atom:
        return Atom(a.name, tuple(m.get(t, t) if isinstance(t, Var) else t for t in a.args))

    return Rule(tr(rule.head), tuple(tr(a) for a in rule.body))


def dependency_reachable(p: Program, start: PredKey) -> set:
    """Predicates reachable from `start` through rule bodies."""
    seen = {start}
    todo = [start]
    while todo:
        cur = todo.pop()
        for r in p.rules:
            if r.head.pred != cur:
                continue
            for a in r.body:
                if a.pred not in seen:
                    seen.add(a.pred)
                    todo.append(a.pred)
    return seen


def consts(names: Iterable[str]) -> tuple:
    return tuple(Const(n) for n in names)
