"""Extensional fact storage with per-binding-pattern hash indexes and lookup counters."""

from __future__ import annotations

import csv
import threading
from collections import Counter
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Tuple

from .ir import Const, PredKey, pred_str
from .syntax import ParseError, parse_facts


class FactLoadError(ValueError):
    pass


class UnknownPredicate(KeyError):
    def __str__(self) -> str:
        return f"unknown EDB predicate {self.args[0]}"


class Fact(NamedTuple):
    pred: PredKey
    args: Tuple[Const, ...]

    def __str__(self) -> str:
        if not self.args:
            return self.pred[0]
        return f"{self.pred[0]}({','.join(str(a) for a in self.args)})"


def check_pattern(pattern: str, arity: int) -> None:
    if len(pattern) != arity or set(pattern) - {"b", "f"}:
        raise ValueError(f"binding pattern {pattern!r} does not fit arity {arity}")


class FactStore:
    """Immutable-after-construction set of ground EDB facts.

    Indexes are built lazily, one per (predicate, pattern), keyed by the values
    at the bound positions.  Every `lookup` call bumps the predicate's counter.
    """

    def __init__(self, facts_by_pred: dict):
        self._facts = {}
        for pred, rows in facts_by_pred.items():
            self._facts[pred] = tuple(
                Fact(pred, args) for args in sorted(set(map(tuple, rows)), key=_sort_key)
            )
        self._indexes: dict = {}
        self._index_lock = threading.Lock()
        self._counts: Counter = Counter()
        self._count_lock = threading.Lock()

    @classmethod
    def from_facts(cls, decls: Iterable[PredKey], facts: Iterable) -> "FactStore":
        """Build from `(name, args)` pairs; args may be strings or Consts."""
        by_pred: dict = {tuple(d): [] for d in decls}
        for name, args in facts:
            args = tuple(a if isinstance(a, Const) else Const(str(a)) for a in args)
            pred = (name, len(args))
            if pred not in by_pred:
                raise UnknownPredicate(pred_str(pred))
            by_pred[pred].append(args)
        return cls(by_pred)

    @property
    def predicates(self) -> list:
        return sorted(self._facts)

    def facts(self, pred: PredKey) -> tuple:
        try:
            return self._facts[pred]
        except KeyError:
            raise UnknownPredicate(pred_str(pred)) from None

    def __len__(self) -> int:
        return sum(len(v) for v in self._facts.values())

    def __contains__(self, fact) -> bool:
        pred, args = fact
        return Fact(pred, tuple(args)) in self._index(pred, "b" * pred[1]).get(tuple(args), ())

    def _index(self, pred: PredKey, pattern: str) -> dict:
        key = (pred, pattern)
        idx = self._indexes.get(key)
        if idx is None:
            facts = self.facts(pred)
            positions = [i for i, c in enumerate(pattern) if c == "b"]
            idx = {}
            for f in facts:
                idx.setdefault(tuple(f.args[i] for i in positions), []).append(f)
            with self._index_lock:
                idx = self._indexes.setdefault(key, idx)
        return idx

    def lookup(self, pred: PredKey, pattern: str, bound_values: Sequence = ()) -> list:
        """Facts of `pred` agreeing with `bound_values` at the 'b' positions of `pattern`.

        Results come back sorted by argument tuple.
        """
        if pred not in self._facts:
            raise UnknownPredicate(pred_str(pred))
        check_pattern(pattern, pred[1])
        if len(bound_values) != pattern.count("b"):
            raise ValueError(f"pattern {pattern!r} needs {pattern.count('b')} bound values")
        with self._count_lock:
            self._counts[pred] += 1
        if "b" not in pattern:
            return list(self._facts[pred])
        return list(self._index(pred, pattern).get(tuple(bound_values), ()))

    def lookup_count(self, pred: PredKey) -> int:
        return self._counts[pred]

    def lookup_counts(self) -> dict:
        with self._count_lock:
            return {p: self._counts[p] for p in self._facts}

    def total_lookups(self) -> int:
        with self._count_lock:
            return sum(self._counts.values())

    def reset_counters(self) -> None:
        with self._count_lock:
            self._counts.clear()


def _sort_key(args):
    return tuple(a.name for a in args)


def load_facts(sources: Iterable, decls: Iterable[PredKey]) -> FactStore:
    """Load `.dl` fact files and `<predicate>.csv` files into one deduplicated store."""
    decls = [tuple(d) for d in decls]
    by_pred: dict = {d: [] for d in decls}
    arities_by_name: dict = {}
    for name, arity in decls:
        arities_by_name.setdefault(name, set()).add(arity)
    for src in sources:
        path = Path(src)
        if path.suffix.lower() == ".csv":
            _load_csv(path, by_pred, arities_by_name)
        else:
            _load_dl(path, by_pred)
    return FactStore(by_pred)


def _load_csv(path: Path, by_pred: dict, arities_by_name: dict) -> None:
    name = path.stem
    arities = arities_by_name.get(name)
    if not arities:
        raise FactLoadError(f"{path}: unknown predicate {name!r} (no EDB declaration)")
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            fields = [f.strip() for f in row]
            if any(f == "" for f in fields):
                raise FactLoadError(f"{path}:{lineno}: malformed row (empty field)")
            if len(fields) not in arities:
                declared = ", ".join(pred_str((name, a)) for a in sorted(arities))
                raise FactLoadError(
                    f"{path}:{lineno}: arity mismatch: row has {len(fields)} fields, "
                    f"declared {declared}"
                )
            by_pred[(name, len(fields))].append(tuple(Const(f) for f in fields))


def _load_dl(path: Path, by_pred: dict) -> None:
    try:
        facts = parse_facts(path.read_text(encoding="utf-8"), str(path))
    except ParseError as e:
        raise FactLoadError(str(e)) from e
    for atom, lineno in facts:
        if atom.pred not in by_pred:
            same_name = [p for p in by_pred if p[0] == atom.name]
            if same_name:
                raise FactLoadError(
                    f"{path}:{lineno}: arity mismatch: {pred_str(atom.pred)} but "
                    f"{', '.join(pred_str(p) for p in same_name)} declared"
                )
            raise FactLoadError(f"{path}:{lineno}: unknown predicate {pred_str(atom.pred)}")
        by_pred[atom.pred].append(atom.args)
