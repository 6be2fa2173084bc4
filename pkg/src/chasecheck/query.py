"""Certain answers to conjunctive queries by materialisation."""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, FrozenSet, Optional, Set, Tuple, Union

from .api import prepare
from .chase import FIXPOINT, ChaseConfig, ChaseOutcome, chase, match_conjunction
from .formats import CQ
from .graphs import InapplicableError
from .model import BOT, EQ, EQUALS, Atom, FactStore, Marking, Rule, RuleSet, Term
from .transforms import _singularise_rule, align_instance, axiomatise, enumerate_markings, first_marking, singularise


class _All:
    """Every tuple is an answer: the input is unsatisfiable."""

    def __repr__(self) -> str:
        return "ALL"


ALL = _All()

Answers = Union[FrozenSet[Tuple[Term, ...]], _All]


class ChaseLimitError(RuntimeError):
    pass


_H = "__H"


def _run(rs: RuleSet, instance: FactStore, cfg: Optional[ChaseConfig]) -> ChaseOutcome:
    out = chase(rs, instance, cfg or ChaseConfig(max_depth=100))
    if out.status != FIXPOINT:
        raise ChaseLimitError(f"chase stopped before a fixpoint ({out.limit or out.status})")
    return out


def _inconsistent(store: FactStore) -> bool:
    return bool(store.with_pred(BOT))


def answer(
    rs: RuleSet,
    instance: FactStore,
    q: CQ,
    equality: str = "none",
    marking: Optional[Marking] = None,
    cfg: Optional[ChaseConfig] = None,
    top: str = "minimal",
) -> Answers:
    """Answer tuples (over constants, ordered as ``q.answer``), or ALL when the input is unsatisfiable.

    ``equality`` is ``none``, ``axiomatize`` or ``sing``; in ``sing`` mode
    ``marking`` defaults to the first reduced marking.
    """
    prep = prepare(rs, top)
    extra = {f.pred: len(f.args) for f in instance}
    extra.update((a.pred, len(a.args)) for a in q.atoms)
    if equality in ("none", "axiomatize"):
        if equality == "none" and (prep.has_equality or any(a.pred == EQUALS for a in prep.seeds)):
            raise InapplicableError("the rules use equality; answer with equality='axiomatize' or 'sing'")
        target = axiomatise(prep, top, extra) if equality == "axiomatize" else prep
        store = _run(target, align_instance(instance, target), cfg).store
        if _inconsistent(store):
            return ALL
        out = set()
        for s in match_conjunction(q.atoms, store):
            row = tuple(s[v] for v in q.answer)
            if all(t.is_const for t in row):
                out.add(row)
        return frozenset(out)
    if equality != "sing":
        raise ValueError(f"unknown equality mode {equality!r}")
    m = marking or first_marking(prep)
    srs = singularise(prep, m, extra)
    store = _run(srs, align_instance(instance, srs), cfg).store
    if _inconsistent(store):
        return ALL
    head = Atom(_H, tuple(q.answer))
    r = Rule("query", tuple(q.atoms), (head,))
    sq = _singularise_rule(r, first_marking(RuleSet((r,))).for_rule("query"))
    consts: Dict[Term, Set[Term]] = {}

    def equal_constants(t: Term) -> Set[Term]:
        if t not in consts:
            found = {f.args[1] for f in store.with_arg(EQ, 0, t) if f.args[1].is_const}
            if t.is_const:
                found.add(t)
            consts[t] = found
        return consts[t]

    out = set()
    for s in match_conjunction(sq.body, store):
        rows = [()]
        for v in q.answer:
            rows = [row + (c,) for row in rows for c in equal_constants(s[v])]
        out.update(rows)
    return frozenset(out)
