"""Shared vocabulary: terms, atoms, rules, rule sets, fact stores, positions, places, markings.

Terms are hash-consed.  Building the same term twice returns the same object,
so structural equality coincides with identity and hashing is cheap.  Every
functional term caches its depth, the set of function symbols it contains,
and whether it is cyclic (some function symbol occurs below itself).
"""

from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

RESERVED = "__"

TOP = "TOP"
BOT = "BOT"
EQUALS = "="
EQ = "__Eq"
AXEQ = "__Equals"  # equality once its axioms are explicit: an ordinary predicate

CONST, VAR, FUNC = "const", "var", "func"

_EMPTY: frozenset = frozenset()


class Term:
    """An interned first-order term.

    Use :func:`const`, :func:`var` and :func:`func` rather than calling the
    class directly.
    """

    __slots__ = ("kind", "name", "args", "depth", "symbols", "cyclic", "__weakref__")

    _table: Dict[tuple, "Term"] = {}
    _lock = threading.Lock()

    kind: str
    name: str
    args: Tuple["Term", ...]
    depth: int
    symbols: frozenset
    cyclic: bool

    def __new__(cls, kind: str, name: str, args: Tuple["Term", ...] = ()):
        key = (kind, name, args)
        t = cls._table.get(key)
        if t is not None:
            return t
        t = object.__new__(cls)
        t.kind, t.name, t.args = kind, name, args
        if kind == FUNC:
            t.depth = 1 + max((a.depth for a in args), default=0)
            below = _EMPTY.union(*(a.symbols for a in args)) if args else _EMPTY
            t.cyclic = name in below or any(a.cyclic for a in args)
            t.symbols = below | {name}
        else:
            t.depth, t.symbols, t.cyclic = 0, _EMPTY, False
        with cls._lock:
            return cls._table.setdefault(key, t)

    def __reduce__(self):
        return (Term, (self.kind, self.name, self.args))

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    @property
    def is_const(self) -> bool:
        return self.kind == CONST

    @property
    def is_func(self) -> bool:
        return self.kind == FUNC

    @property
    def is_ground(self) -> bool:
        if self.kind == VAR:
            return False
        return all(a.is_ground for a in self.args)

    def variables(self) -> Iterator["Term"]:
        if self.kind == VAR:
            yield self
        for a in self.args:
            yield from a.variables()

    def subterms(self) -> Iterator["Term"]:
        yield self
        for a in self.args:
            yield from a.subterms()

    def __str__(self) -> str:
        if self.kind == VAR:
            return "?" + self.name
        if self.kind == CONST:
            return self.name
        return f"{self.name}({','.join(map(str, self.args))})"

    def __repr__(self) -> str:
        return f"Term<{self}>"

    def sort_key(self) -> tuple:
        return (self.depth, str(self))


def const(name: str) -> Term:
    return Term(CONST, name)


def var(name: str) -> Term:
    return Term(VAR, name)


def func(symbol: str, args: Sequence[Term] = ()) -> Term:
    return Term(FUNC, symbol, tuple(args))


STAR = const("*")


def term_depth(t: Term) -> int:
    """Nesting depth: 0 for constants and variables, 1 + max child depth otherwise.

    >>> term_depth(func("f", [func("g", [STAR])]))
    2
    """
    return t.depth


def is_cyclic_term(t: Term) -> bool:
    """True iff some function symbol occurs strictly below itself in ``t``."""
    return t.cyclic


class Atom(NamedTuple):
    pred: str
    args: Tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return all(a.is_ground for a in self.args)

    @property
    def is_function_free(self) -> bool:
        return not any(a.is_func for a in self.args)

    def variables(self) -> Iterator[Term]:
        for a in self.args:
            yield from a.variables()

    def substitute(self, s: Mapping[Term, Term]) -> "Atom":
        return Atom(self.pred, tuple(substitute(a, s) for a in self.args))

    def __str__(self) -> str:
        if self.pred == EQUALS:
            return f"{self.args[0]} = {self.args[1]}"
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(str, self.args))})"

    def __repr__(self) -> str:
        return f"Atom<{self}>"


def atom(pred: str, *args: Term) -> Atom:
    return Atom(pred, tuple(args))


def substitute(t: Term, s: Mapping[Term, Term]) -> Term:
    if t.kind == VAR:
        return s.get(t, t)
    if t.kind == CONST:
        return t
    return Term(FUNC, t.name, tuple(substitute(a, s) for a in t.args))


def _unique(items: Iterable[Term]) -> Tuple[Term, ...]:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True)
class Rule:
    """``body -> exists exist . head``.

    ``exist`` lists the existentially quantified variables; after
    skolemisation it is empty and head atoms may hold functional terms.
    """

    id: str
    body: Tuple[Atom, ...]
    head: Tuple[Atom, ...]
    exist: Tuple[Term, ...] = ()
    provenance: str = "user"

    @cached_property
    def body_vars(self) -> Tuple[Term, ...]:
        return _unique(v for a in self.body for v in a.variables())

    @cached_property
    def head_vars(self) -> Tuple[Term, ...]:
        return _unique(v for a in self.head for v in a.variables())

    @cached_property
    def frontier(self) -> Tuple[Term, ...]:
        hv = set(self.head_vars)
        return tuple(v for v in self.body_vars if v in hv)

    @cached_property
    def body_only(self) -> Tuple[Term, ...]:
        hv = set(self.head_vars)
        return tuple(v for v in self.body_vars if v not in hv)

    @cached_property
    def unsafe_vars(self) -> Tuple[Term, ...]:
        bv, ex = set(self.body_vars), set(self.exist)
        return tuple(v for v in self.head_vars if v not in bv and v not in ex)

    @cached_property
    def variables(self) -> Tuple[Term, ...]:
        return _unique(itertools.chain(self.body_vars, self.head_vars, self.exist))

    @property
    def is_generating(self) -> bool:
        """Has existential variables, or (once skolemised) functional head terms."""
        return bool(self.exist) or any(t.is_func for a in self.head for t in a.args)

    @cached_property
    def predicates(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(a.pred for a in itertools.chain(self.body, self.head)))

    def rename(self, s: Mapping[Term, Term], new_id: Optional[str] = None) -> "Rule":
        return Rule(
            new_id or self.id,
            tuple(a.substitute(s) for a in self.body),
            tuple(a.substitute(s) for a in self.head),
            tuple(s.get(v, v) for v in self.exist),
            self.provenance,
        )

    def replace(self, **changes) -> "Rule":
        fields = dict(id=self.id, body=self.body, head=self.head, exist=self.exist, provenance=self.provenance)
        fields.update(changes)
        return Rule(**fields)

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        head = ", ".join(map(str, self.head))
        ex = f"exists {','.join(map(str, self.exist))} . " if self.exist else ""
        return f"{body} -> {ex}{head} ."


class Signature(NamedTuple):
    predicates: Dict[str, int]
    constants: Tuple[Term, ...]
    functions: Tuple[str, ...]


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class RuleSet:
    """An ordered list of rules plus seed facts (realised empty-body rules)."""

    rules: Tuple[Rule, ...] = ()
    seeds: Tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "seeds", tuple(dict.fromkeys(self.seeds)))

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __getitem__(self, i):
        return self.rules[i]

    def rule(self, rid: str) -> Rule:
        for r in self.rules:
            if r.id == rid:
                return r
        raise KeyError(rid)

    @cached_property
    def signature(self) -> Signature:
        preds: Dict[str, int] = {}
        consts: Dict[Term, None] = {}
        fns: Dict[str, None] = {}
        atoms = itertools.chain((a for r in self.rules for a in itertools.chain(r.body, r.head)), self.seeds)
        for a in atoms:
            known = preds.setdefault(a.pred, a.arity)
            if known != a.arity:
                raise ArityError(f"predicate {a.pred} used with arities {known} and {a.arity}")
            for t in a.args:
                for s in t.subterms():
                    if s.is_const:
                        consts[s] = None
                    elif s.is_func:
                        fns[s.name] = None
        return Signature(preds, tuple(consts), tuple(fns))

    @property
    def predicates(self) -> Dict[str, int]:
        return self.signature.predicates

    @cached_property
    def body_constants(self) -> Tuple[Term, ...]:
        return _unique(t for r in self.rules for a in r.body for t in a.args if t.is_const)

    @cached_property
    def has_equality(self) -> bool:
        return any(a.pred == EQUALS for r in self.rules for a in itertools.chain(r.body, r.head))

    def with_rules(self, rules: Iterable[Rule], seeds: Iterable[Atom] = ()) -> "RuleSet":
        return RuleSet(tuple(self.rules) + tuple(rules), tuple(self.seeds) + tuple(seeds))

    def __str__(self) -> str:
        return "\n".join(map(str, self.rules))


def positions_of(w: Term, r: Rule, side: str) -> "set[Position]":
    """Positions where ``w`` is a direct argument on ``side`` ("body" or "head")."""
    if w not in r.variables:
        raise KeyError(f"variable {w} does not occur in rule {r.id}")
    atoms = r.body if side == "body" else r.head
    return {Position(a.pred, i + 1) for a in atoms for i, t in enumerate(a.args) if t is w}


_SUFFIX = re.compile(r"^(.*?)(_\d+)?$")


def standardize_apart(rs: RuleSet) -> RuleSet:
    """Rename variables so that no variable name occurs in two rules."""
    taken = {v.name for r in rs for v in r.variables}
    seen: set = set()
    counter = itertools.count(1)
    out: List[Rule] = []
    for r in rs:
        s = {}
        for v in r.variables:
            if v.name in seen:
                stem = _SUFFIX.match(v.name).group(1) or "v"
                while True:
                    cand = f"{stem}_{next(counter)}"
                    if cand not in taken:
                        break
                taken.add(cand)
                s[v] = var(cand)
                seen.add(cand)
            else:
                seen.add(v.name)
        out.append(r.rename(s) if s else r)
    return RuleSet(tuple(out), rs.seeds)


def freeze(conjunction: Iterable[Atom], prefix: str = "__c") -> "FactStore":
    """Ground a function-free conjunction by mapping each variable to a fresh constant."""
    store = FactStore()
    s: Dict[Term, Term] = {}
    for a in conjunction:
        for t in a.args:
            if t.is_func:
                raise ValueError(f"cannot freeze functional term {t}")
            if t.is_var and t not in s:
                s[t] = const(f"{prefix}{len(s) + 1}")
        store.add(a.substitute(s))
    return store


class Position(NamedTuple):
    pred: str
    index: int  # 1-based

    def __str__(self) -> str:
        return f"{self.pred}|{self.index}"


class Place(NamedTuple):
    atom: Atom
    index: int  # 1-based

    def __str__(self) -> str:
        return f"<{self.atom},{self.index}>"


@dataclass(frozen=True)
class Marking:
    """For each rule, the one body occurrence (atom index, argument index) kept per variable.

    Indices are 0-based.  ``choices`` maps rule id to ``((var name, (i, k)), ...)``.
    """

    choices: Tuple[Tuple[str, Tuple[Tuple[str, Tuple[int, int]], ...]], ...]

    @cached_property
    def _map(self) -> Dict[str, Dict[str, Tuple[int, int]]]:
        return {rid: dict(m) for rid, m in self.choices}

    def for_rule(self, rid: str) -> Dict[str, Tuple[int, int]]:
        return self._map.get(rid, {})

    def validate(self, rs: RuleSet) -> None:
        for r in rs:
            m = self.for_rule(r.id)
            for v in r.body_vars:
                if v.name not in m:
                    raise ValueError(f"rule {r.id}: variable {v} is not marked")
                i, k = m[v.name]
                if not (0 <= i < len(r.body) and 0 <= k < len(r.body[i].args)) or r.body[i].args[k] is not v:
                    raise ValueError(f"rule {r.id}: marked occurrence does not hold {v}")

    def __str__(self) -> str:
        parts = []
        for rid, m in self.choices:
            parts.append(rid + "{" + ", ".join(f"{v}@{i}.{k}" for v, (i, k) in m) + "}")
        return " ".join(parts)


class FactStore:
    """Insertion-ordered set of ground atoms with per-predicate and per-argument indexes.

    Each fact remembers the chase step that added it; the chase uses this
    for semi-naive evaluation.
    """

    __slots__ = ("_facts", "_by_pred", "_by_arg")

    def __init__(self, facts: Iterable[Atom] = ()):
        self._facts: Dict[Atom, int] = {}
        self._by_pred: Dict[str, List[Atom]] = {}
        self._by_arg: Dict[Tuple[str, int, Term], List[Atom]] = {}
        for f in facts:
            self.add(f)

    def add(self, fact: Atom, step: int = 0) -> bool:
        if fact in self._facts:
            return False
        if not fact.is_ground:
            raise ValueError(f"non-ground fact {fact}")
        self._facts[fact] = step
        self._by_pred.setdefault(fact.pred, []).append(fact)
        for i, t in enumerate(fact.args):
            self._by_arg.setdefault((fact.pred, i, t), []).append(fact)
        return True

    def update(self, facts: Iterable[Atom], step: int = 0) -> int:
        return sum(self.add(f, step) for f in facts)

    def __contains__(self, fact) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def step_of(self, fact: Atom) -> int:
        return self._facts[fact]

    def with_pred(self, pred: str) -> List[Atom]:
        return self._by_pred.get(pred, [])

    def with_arg(self, pred: str, i: int, t: Term) -> List[Atom]:
        return self._by_arg.get((pred, i, t), [])

    def predicates(self) -> List[str]:
        return list(self._by_pred)

    def terms(self) -> Dict[Term, None]:
        out: Dict[Term, None] = {}
        for f in self._facts:
            for t in f.args:
                for s in t.subterms():
                    out[s] = None
        return out

    @property
    def constants(self) -> List[Term]:
        return [t for t in self.terms() if t.is_const]

    def copy(self) -> "FactStore":
        new = FactStore()
        new._facts = dict(self._facts)
        new._by_pred = {k: list(v) for k, v in self._by_pred.items()}
        new._by_arg = {k: list(v) for k, v in self._by_arg.items()}
        return new

    def as_set(self) -> frozenset:
        return frozenset(self._facts)

    def __repr__(self) -> str:
        return f"FactStore({len(self)} facts)"
