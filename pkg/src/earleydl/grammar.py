"""Context-free grammars as Datalog over input positions.

A production ``N -> X1 ... Xk`` becomes ``n(I0,Ik) :- x1(I0,I1), ..., xk(I(k-1),Ik)``.
Terminals are single characters read from the EDB relation ``tok_<t>/2``;
the input string contributes ``tok_<t>(i, i+1)`` for each character and
``pos(i)`` for every position ``0..len``.  An empty alternative becomes
``n(I,I) :- pos(I)`` so the rule stays range restricted.

Grammar text, one production group per line::

    S -> a S b | .
    # comments and blank lines are ignored

``.`` (or ``ε``) alone denotes the empty alternative.  A line starting with
``|`` continues the previous head.  Symbols that head no production are
terminals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Tuple

from .ir import Atom, Const, Program, Rule, Var
from .store import FactStore

EPSILON_MARKS = (".", "ε")
POS = ("pos", 1)

_PLAIN = re.compile(r"[a-z0-9][A-Za-z0-9_]*\Z")


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Grammar:
    start: str
    productions: Tuple[Tuple[str, Tuple[str, ...]], ...]

    @property
    def nonterminals(self) -> tuple:
        return tuple(dict.fromkeys(h for h, _ in self.productions))

    @property
    def terminals(self) -> tuple:
        heads = set(self.nonterminals)
        seen: dict = {}
        for _, rhs in self.productions:
            for sym in rhs:
                if sym not in heads:
                    seen.setdefault(sym, None)
        return tuple(seen)


@dataclass
class Encoding:
    program: Program
    store: FactStore
    facts: list
    nonterminal_preds: dict
    terminal_preds: dict


def parse_grammar(text: str) -> Grammar:
    prods = []
    head = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("|"):
            if head is None:
                raise GrammarError(f"line {lineno}: '|' continuation without a head")
            body = line[1:]
        else:
            if "->" not in line:
                raise GrammarError(f"line {lineno}: expected 'N -> symbols'")
            lhs, body = line.split("->", 1)
            head = lhs.strip()
            if not head or len(head.split()) != 1:
                raise GrammarError(f"line {lineno}: bad left-hand side {lhs.strip()!r}")
        for alt in body.split("|"):
            syms = alt.split()
            if len(syms) == 1 and syms[0] in EPSILON_MARKS:
                syms = []
            elif not syms:
                raise GrammarError(f"line {lineno}: empty alternative (write '.' for epsilon)")
            elif any(s in EPSILON_MARKS for s in syms):
                raise GrammarError(f"line {lineno}: epsilon mark mixed with symbols")
            prods.append((head, tuple(syms)))
    if not prods:
        raise GrammarError("empty grammar")
    g = Grammar(prods[0][0], tuple(prods))
    for t in g.terminals:
        if len(t) != 1:
            raise GrammarError(
                f"unknown symbol {t!r}: heads no production and is not a single character"
            )
    return g


def nonterminal_name(sym: str) -> str:
    name = "".join(c if re.match(r"[a-z0-9_]", c) else "_" + _escape(c) for c in sym.lower())
    if not _PLAIN.match(name):
        name = "n_" + name
    return name


def terminal_name(ch: str) -> str:
    return "tok_" + (ch if re.match(r"[a-z0-9]\Z", ch) else _escape(ch))


def _escape(ch: str) -> str:
    return f"x{ord(ch):x}"


def _reserved(name: str) -> bool:
    return (
        name in ("goal", "pos")
        or name.startswith(("ans_", "tok_"))
        or re.match(r"s\d+\Z", name) is not None
    )


def grammar_program(g: Grammar, length: int) -> Tuple[Program, dict, dict]:
    """The recognizer program for inputs of `length` characters.

    Returns (program, nonterminal -> predicate name, terminal -> predicate name).
    """
    nts: dict = {}
    owners: dict = {}
    for n in g.nonterminals:
        name = nonterminal_name(n)
        if _reserved(name):
            raise GrammarError(f"nonterminal {n!r} maps to reserved predicate {name!r}")
        if name in owners:
            raise GrammarError(f"nonterminals {owners[name]!r} and {n!r} both map to {name!r}")
        owners[name] = n
        nts[n] = name
    toks = {t: terminal_name(t) for t in g.terminals}
    rules = []
    for head, rhs in g.productions:
        if not rhs:
            rules.append(Rule(Atom(nts[head], (Var("I"), Var("I"))), (Atom(POS[0], (Var("I"),)),)))
            continue
        body = []
        for k, sym in enumerate(rhs):
            name = nts.get(sym) or toks[sym]
            body.append(Atom(name, (Var(f"I{k}"), Var(f"I{k + 1}"))))
        rules.append(Rule(Atom(nts[head], (Var("I0"), Var(f"I{len(rhs)}"))), tuple(body)))
    edb = tuple((name, 2) for name in toks.values()) + (POS,)
    query = Atom(nts[g.start], (Const("0"), Const(str(length))))
    return Program(edb, tuple(rules), query), nts, toks


def input_facts(g: Grammar, text: str) -> list:
    """EDB facts for `text`; characters that are not terminals of `g` get no token fact."""
    toks = {t: terminal_name(t) for t in g.terminals}
    facts = []
    for i, ch in enumerate(text):
        if ch in toks:
            facts.append((toks[ch], (Const(str(i)), Const(str(i + 1)))))
    facts.extend((POS[0], (Const(str(i)),)) for i in range(len(text) + 1))
    return facts


def encode(g: Grammar, text: str) -> Encoding:
    program, nts, toks = grammar_program(g, len(text))
    facts = input_facts(g, text)
    return Encoding(program, FactStore.from_facts(program.edb, facts), facts, nts, toks)


def facts_text(facts) -> str:
    return "".join(f"{Atom(name, args)}.\n" for name, args in facts)
