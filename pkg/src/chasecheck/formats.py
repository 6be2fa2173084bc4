"""Parsers and serialisers for .rules, .facts, .query and .dlx files, plus JSON reports."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Tuple

from .model import (
    BOT,
    EQUALS,
    RESERVED,
    TOP,
    Atom,
    FactStore,
    Rule,
    RuleSet,
    Term,
    const,
    standardize_apart,
    var,
)

log = logging.getLogger(__name__)


class SourceSpan(NamedTuple):
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class _Tok(NamedTuple):
    kind: str
    text: str
    span: SourceSpan


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>->)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),.=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, file: str) -> List[_Tok]:
    toks: List[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        span = SourceSpan(file, line, pos - line_start + 1)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(s if kind == "punct" else kind, s, span))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", SourceSpan(file, line, pos - line_start + 1)))
    return toks


class _Parser:
    def __init__(self, text: str, file: str, allow_reserved: bool):
        self.toks = _tokenize(text, file)
        self.i = 0
        self.allow_reserved = allow_reserved
        self.arity: Dict[str, int] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[_Tok] = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{msg}, found {found}", tok.span)

    def expect(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            raise self.error(f"expected {kind!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.i += 1
            return True
        return False

    def name(self, tok: _Tok) -> str:
        n = tok.text.lstrip("?")
        if n.startswith(RESERVED) and not self.allow_reserved:
            raise ParseError(f"identifier {tok.text!r} uses the reserved prefix {RESERVED!r}", tok.span)
        return n

    def term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            self.i += 1
            return var(self.name(t))
        if t.kind == "ident":
            self.i += 1
            if self.tok.kind == "(":
                raise ParseError("function symbols are not allowed in source files", t.span)
            return const(self.name(t))
        raise self.error("expected a term")

    def atom(self) -> Atom:
        t = self.expect("ident")
        pred = self.name(t)
        args: List[Term] = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
        if pred in (TOP, BOT) and len(args) != 1:
            raise ParseError(f"{pred} is unary", t.span)
        known = self.arity.setdefault(pred, len(args))
        if known != len(args):
            raise ParseError(f"predicate {pred} used with arity {len(args)} but earlier with {known}", t.span)
        return Atom(pred, tuple(args))

    def literal(self, allow_eq: bool) -> Atom:
        # An equality starts with a term followed by "=", an atom with an identifier.
        if self.tok.kind == "var" or (self.tok.kind == "ident" and self.peek().kind == "="):
            start = self.tok
            left = self.term()
            if self.tok.kind != "=":
                raise self.error("expected '='")
            if not allow_eq:
                raise ParseError("equality atoms are not allowed here", start.span)
            self.i += 1
            return Atom(EQUALS, (left, self.term()))
        return self.atom()

    def varlist(self) -> List[Term]:
        out = [var(self.name(self.expect("var")))]
        while self.accept(","):
            out.append(var(self.name(self.expect("var"))))
        return out

    def conjunction(self, allow_eq: bool) -> List[Atom]:
        out = [self.literal(allow_eq)]
        while self.accept(","):
            out.append(self.literal(allow_eq))
        return out

    def exists_prefix(self) -> List[Term]:
        if self.tok.kind == "ident" and self.tok.text == "exists" and self.peek().kind == "var":
            self.i += 1
            vs = self.varlist()
            self.expect(".")
            return vs
        return []


def parse_rules(text: str, file: str = "<rules>", allow_reserved: bool = False) -> RuleSet:
    """Parse the .rules grammar.

    A rule with an empty body (``-> A(a) .``) is accepted; transforms turn
    ground ones into seed facts.
    """
    p = _Parser(text, file, allow_reserved)
    rules: List[Rule] = []
    while p.tok.kind != "eof":
        start = p.tok
        body = [] if p.tok.kind == "arrow" else p.conjunction(allow_eq=True)
        p.expect("arrow")
        exist = p.exists_prefix()
        head = p.conjunction(allow_eq=True)
        p.expect(".")
        rid = f"r{len(rules) + 1}"
        bvars = {v for a in body for v in a.variables()}
        for v in exist:
            if v in bvars:
                raise ParseError(f"existential variable {v} also occurs in the body", start.span)
        ex = set(exist)
        for a in head:
            if a.pred == EQUALS and any(t in ex for t in a.args):
                log.warning("%s: rule %s equates an existential variable; it is rewritten before singularisation", start.span, rid)
        rules.append(Rule(rid, tuple(body), tuple(head), tuple(exist)))
    return standardize_apart(RuleSet(tuple(rules)))


def parse_facts(text: str, file: str = "<facts>", rules: Optional[RuleSet] = None) -> FactStore:
    p = _Parser(text, file, allow_reserved=False)
    if rules is not None:
        p.arity.update(rules.predicates)
    store = FactStore()
    while p.tok.kind != "eof":
        t = p.tok
        a = p.atom()
        if not a.is_ground:
            raise ParseError(f"fact {a} is not ground", t.span)
        p.expect(".")
        store.add(a)
    return store


@dataclass(frozen=True)
class CQ:
    """``exists exist . atoms`` with free (answer) variables ``answer``."""

    answer: Tuple[Term, ...]
    exist: Tuple[Term, ...]
    atoms: Tuple[Atom, ...]

    @property
    def is_boolean(self) -> bool:
        return not self.answer

    def __str__(self) -> str:
        ex = f"exists {','.join(map(str, self.exist))} . " if self.exist else ""
        return f"ask {ex}{', '.join(map(str, self.atoms))} ."


def parse_query(text: str, file: str = "<query>") -> CQ:
    p = _Parser(text, file, allow_reserved=False)
    kw = p.expect("ident")
    if kw.text != "ask":
        raise ParseError("a query starts with 'ask'", kw.span)
    exist = p.exists_prefix()
    atoms = p.conjunction(allow_eq=False)
    p.expect(".")
    if p.tok.kind != "eof":
        raise p.error("expected end of query")
    ex = set(exist)
    answer = tuple(dict.fromkeys(v for a in atoms for v in a.variables() if v not in ex))
    return CQ(answer, tuple(exist), tuple(atoms))


def make_query(atoms: Iterable[Atom], answer: Iterable[Term] = ()) -> CQ:
    atoms = tuple(atoms)
    answer = tuple(answer)
    rest = tuple(dict.fromkeys(v for a in atoms for v in a.variables() if v not in set(answer)))
    return CQ(answer, rest, atoms)


class Role(NamedTuple):
    name: str
    inverse: bool = False

    def __str__(self) -> str:
        return f"inv({self.name})" if self.inverse else self.name


@dataclass(frozen=True)
class DlAxiom:
    """A Horn-DL axiom of one of the seven translated types.

    Operands by type: 1, 2, 4: (A, R, B); 3: (A, B, C); 5: (R, S);
    6: (R, S, T); 7: (A, a).
    """

    type: int
    operands: Tuple[Any, ...]

    def __str__(self) -> str:
        o = self.operands
        return {
            1: lambda: f"{o[0]} subclassof some {o[1]} {o[2]}",
            2: lambda: f"{o[0]} subclassof max1 {o[1]} {o[2]}",
            3: lambda: f"{o[0]} and {o[1]} subclassof {o[2]}",
            4: lambda: f"{o[0]} subclassof all {o[1]} {o[2]}",
            5: lambda: f"{o[0]} subpropertyof {o[1]}",
            6: lambda: f"{o[0]} o {o[1]} subpropertyof {o[2]}",
            7: lambda: f"{o[0]} subclassof one {o[1]}",
        }[self.type]()


_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_ROLE = rf"(?:inv\(\s*{_IDENT}\s*\)|{_IDENT})"
_DL_FORMS = [
    (1, rf"({_IDENT})\s+subclassof\s+some\s+({_ROLE})\s+({_IDENT})"),
    (2, rf"({_IDENT})\s+subclassof\s+max1\s+({_ROLE})\s+({_IDENT})"),
    (4, rf"({_IDENT})\s+subclassof\s+all\s+({_ROLE})\s+({_IDENT})"),
    (7, rf"({_IDENT})\s+subclassof\s+one\s+({_IDENT})"),
    (3, rf"({_IDENT})\s+and\s+({_IDENT})\s+subclassof\s+({_IDENT})"),
    (6, rf"({_ROLE})\s+o\s+({_ROLE})\s+subpropertyof\s+({_ROLE})"),
    (5, rf"({_ROLE})\s+subpropertyof\s+({_ROLE})"),
]
_ROLE_SLOTS = {1: (1,), 2: (1,), 4: (1,), 5: (0, 1), 6: (0, 1, 2)}


def _role(text: str) -> Role:
    m = re.fullmatch(rf"inv\(\s*({_IDENT})\s*\)", text)
    return Role(m.group(1), True) if m else Role(text)


def parse_dl_axioms(text: str, file: str = "<dlx>") -> List[DlAxiom]:
    out: List[DlAxiom] = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        for typ, pattern in _DL_FORMS:
            m = re.fullmatch(pattern, line)
            if m:
                ops = list(m.groups())
                for k in _ROLE_SLOTS.get(typ, ()):
                    ops[k] = _role(ops[k])
                for o in ops:
                    name = o.name if isinstance(o, Role) else o
                    if name.startswith(RESERVED):
                        raise ParseError(f"identifier {name!r} uses the reserved prefix", SourceSpan(file, n, col))
                out.append(DlAxiom(typ, tuple(ops)))
                break
        else:
            raise ParseError(f"unknown axiom form: {line!r}", SourceSpan(file, n, col))
    return out


def serialise_rules(rs: RuleSet) -> str:
    lines = [f"-> {a} ." for a in rs.seeds]
    lines += [str(r) for r in rs]
    return "\n".join(lines) + ("\n" if lines else "")


def serialise_facts(facts: Iterable[Atom]) -> str:
    return "".join(f"{a}.\n" for a in facts)


def _jsonable(x: Any) -> Any:
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return round(float(x), 6)
    return str(x)


def emit_report(result: Any) -> str:
    """Deterministic JSON text (sorted keys) for a verdict, a report dict, or chase stats."""
    data = result.to_dict() if hasattr(result, "to_dict") else result
    return json.dumps(_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
