"""Concrete `.dl` syntax: a hand-written tokenizer/parser and the canonical printer.

Grammar::

    program := (decl | clause | query)*
    decl    := ".edb" NAME "/" INT "."
    clause  := atom (":-" atom ("," atom)*)? "."
    query   := "?-" atom "."
    atom    := NAME "(" term ("," term)* ")" | NAME

Constants start with a lowercase letter or a digit, or are quoted with `'`.
Variables start with an uppercase letter or `_`; a lone `_` is anonymous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .ir import Atom, Const, Program, Rule, Var, pred_str


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int, source: str = "<input>"):
        self.line = line
        self.column = column
        self.source = source
        self.message = message
        super().__init__(f"{source}:{line}:{column}: {message}")


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<edb>\.edb(?![A-Za-z0-9_]))
  | (?P<implies>:-)
  | (?P<query>\?-)
  | (?P<quoted>'(?:[^'\\\n]|\\.)*')
  | (?P<name>[a-z0-9][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<punct>[().,/])
    """,
    re.VERBOSE,
)


def tokenize(text: str, source: str = "<input>") -> List[Token]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, source)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "punct":
            toks.append(Token(m.group(), m.group(), line, col))
        elif kind not in ("ws", "comment"):
            toks.append(Token(kind, m.group(), line, col))
        pos = m.end()
    toks.append(Token("eof", "", line, len(text) - line_start + 1))
    return toks


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


class _Parser:
    def __init__(self, text: str, source: str):
        self.toks = tokenize(text, source)
        self.i = 0
        self.source = source
        self._anon = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, self.source)

    def expect(self, kind: str) -> Token:
        tok = self.tok
        if tok.kind != kind:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {kind!r} but found {found}")
        self.i += 1
        return tok

    def accept(self, kind: str) -> Optional[Token]:
        if self.tok.kind == kind:
            self.i += 1
            return self.toks[self.i - 1]
        return None

    def term(self, anon_ok: bool):
        tok = self.tok
        if tok.kind == "name":
            self.i += 1
            return Const(tok.text)
        if tok.kind == "quoted":
            self.i += 1
            return Const(_unquote(tok.text))
        if tok.kind == "var":
            self.i += 1
            if tok.text == "_":
                if not anon_ok:
                    raise self.error("anonymous variable '_' only allowed in rule bodies", tok)
                self._anon += 1
                return Var(f"_\0{self._anon}")
            return Var(tok.text)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"expected a term but found {found}")

    def atom(self, anon_ok: bool) -> Atom:
        name = self.expect("name")
        if not (name.text[0].isalpha()):
            raise self.error(f"predicate name must start with a letter: {name.text!r}", name)
        args = []
        if self.accept("("):
            args.append(self.term(anon_ok))
            while self.accept(","):
                args.append(self.term(anon_ok))
            self.expect(")")
        return Atom(name.text, tuple(args))

    def parse(self):
        """Yield ('edb', key, tok) | ('rule', Rule, tok) | ('query', Atom, tok) items."""
        while self.tok.kind != "eof":
            start = self.tok
            if self.accept("edb"):
                name = self.expect("name")
                self.expect("/")
                arity_tok = self.expect("name")
                if not arity_tok.text.isdigit():
                    raise self.error("arity must be a non-negative integer", arity_tok)
                self.expect(".")
                yield "edb", (name.text, int(arity_tok.text)), start
            elif self.accept("query"):
                q = self.atom(anon_ok=False)
                self.expect(".")
                yield "query", q, start
            else:
                head = self.atom(anon_ok=False)
                body = []
                if self.accept("implies"):
                    body.append(self.atom(anon_ok=True))
                    while self.accept(","):
                        body.append(self.atom(anon_ok=True))
                self.expect(".")
                yield "rule", _name_anonymous(Rule(head, tuple(body))), start


def _name_anonymous(rule: Rule) -> Rule:
    """Give each anonymous variable a fresh name not clashing with the rule's own variables."""
    names = {v.name for v in rule.variables()}
    if not any("\0" in n for n in names):
        return rule
    mapping, k = {}, 0
    for v in rule.variables():
        if "\0" in v.name:
            k += 1
            while f"_A{k}" in names:
                k += 1
            mapping[v] = Var(f"_A{k}")
    def tr(a: Atom) -> Atom:
        return Atom(a.name, tuple(mapping.get(t, t) if isinstance(t, Var) else t for t in a.args))
    return Rule(tr(rule.head), tuple(tr(a) for a in rule.body))


def parse_program(text: str, source: str = "<input>") -> Program:
    """Parse `.dl` text into a Program.

    Raises ParseError on syntax errors, on a second query, and on arity
    conflicts (a name declared EDB used with an undeclared arity).
    """
    parser = _Parser(text, source)
    edb: list = []
    rules: list = []
    query = None
    for kind, item, tok in parser.parse():
        if kind == "edb":
            if item not in edb:
                edb.append(item)
        elif kind == "rule":
            rules.append((item, tok))
        else:
            if query is not None:
                raise ParseError("duplicate query", tok.line, tok.col, source)
            query = (item, tok)
    edb_names: dict = {}
    for name, arity in edb:
        edb_names.setdefault(name, set()).add(arity)
    atoms = [(a, tok) for r, tok in rules for a in (r.head, *r.body)]
    if query is not None:
        atoms.append(query)
    for a, tok in atoms:
        arities = edb_names.get(a.name)
        if arities is not None and a.arity not in arities:
            declared = ", ".join(pred_str((a.name, n)) for n in sorted(arities))
            raise ParseError(
                f"arity conflict: {pred_str(a.pred)} used but {declared} declared",
                tok.line, tok.col, source,
            )
    return Program(tuple(edb), tuple(r for r, _ in rules), query[0] if query else None)


def parse_facts(text: str, source: str = "<input>") -> list:
    """Parse a facts file: ground atoms with periods (`.edb` lines are tolerated)."""
    parser = _Parser(text, source)
    out = []
    for kind, item, tok in parser.parse():
        if kind == "edb":
            continue
        if kind == "query" or item.body:
            raise ParseError("facts file may only contain ground facts", tok.line, tok.col, source)
        if not item.head.is_ground():
            raise ParseError(f"fact {item.head} is not ground", tok.line, tok.col, source)
        out.append((item.head, tok.line))
    return out


def parse_atom(text: str) -> Atom:
    parser = _Parser(text, "<atom>")
    a = parser.atom(anon_ok=False)
    parser.accept(".")
    parser.expect("eof")
    return a


def print_program(p: Program) -> str:
    """Canonical text: EDB declarations, rules in order, query last; one clause per line."""
    lines = [f".edb {name}/{arity}." for name, arity in p.edb]
    lines.extend(str(r) for r in p.rules)
    if p.query is not None:
        lines.append(f"?- {p.query}.")
    return "\n".join(lines) + ("\n" if lines else "")
