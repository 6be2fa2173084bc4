"""First-order unification with occurs check."""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Tuple

from .model import FUNC, VAR, Atom, Term, var

Subst = Dict[Term, Term]


def walk(t: Term, s: Subst) -> Term:
    while t.kind == VAR and t in s:
        t = s[t]
    return t


def resolve(t: Term, s: Subst) -> Term:
    """Apply ``s`` exhaustively."""
    t = walk(t, s)
    if t.kind == FUNC:
        return Term(FUNC, t.name, tuple(resolve(a, s) for a in t.args))
    return t


def _occurs(v: Term, t: Term, s: Subst) -> bool:
    t = walk(t, s)
    if t is v:
        return True
    return t.kind == FUNC and any(_occurs(v, a, s) for a in t.args)


def unify_terms(a: Term, b: Term, s: Subst) -> bool:
    """Extend ``s`` in place to unify ``a`` and ``b``; False on failure (``s`` may be partly extended).

    >>> from chasecheck.model import const, func
    >>> s = {}
    >>> unify_terms(func("f", [var("x")]), func("f", [const("a")]), s), s[var("x")]
    (True, Term<a>)
    >>> unify_terms(var("x"), func("f", [var("x")]), {})
    False
    """
    stack = [(a, b)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a, s), walk(b, s)
        if a is b:
            continue
        if a.kind == VAR:
            if _occurs(a, b, s):
                return False
            s[a] = b
        elif b.kind == VAR:
            if _occurs(b, a, s):
                return False
            s[b] = a
        elif a.kind == FUNC and b.kind == FUNC and a.name == b.name and len(a.args) == len(b.args):
            stack.extend(zip(a.args, b.args))
        else:
            return False
    return True


def unify_atoms(a: Atom, b: Atom, s: Optional[Subst] = None) -> Optional[Subst]:
    """MGU of two atoms (extending ``s``), or None."""
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    s = dict(s or {})
    for x, y in zip(a.args, b.args):
        if not unify_terms(x, y, s):
            return None
    return s


def unify_all(pairs: Iterable[Tuple[Atom, Atom]], s: Optional[Subst] = None) -> Optional[Subst]:
    s = dict(s or {})
    for a, b in pairs:
        if a.pred != b.pred or len(a.args) != len(b.args):
            return None
        for x, y in zip(a.args, b.args):
            if not unify_terms(x, y, s):
                return None
    return s


def rename_atom(a: Atom, suffix: str) -> Atom:
    return Atom(a.pred, tuple(_rename(t, suffix) for t in a.args))


def _rename(t: Term, suffix: str) -> Term:
    if t.kind == VAR:
        return var(t.name + suffix)
    if t.kind == FUNC:
        return Term(FUNC, t.name, tuple(_rename(a, suffix) for a in t.args))
    return t
