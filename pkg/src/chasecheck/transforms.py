"""Rule-to-rule constructions used by the checkers and the chase."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .formats import DlAxiom, Role
from .model import (
    AXEQ,
    BOT,
    EQ,
    EQUALS,
    RESERVED,
    STAR,
    TOP,
    Atom,
    FactStore,
    Marking,
    Rule,
    RuleSet,
    Term,
    const,
    func,
    standardize_apart,
    var,
)

S_PRED, D_PRED, C_PRED = "__S", "__D", "__C"


def _vars(prefix: str, n: int) -> List[Term]:
    return [var(f"{prefix}{i}") for i in range(1, n + 1)]


def _is_reserved(name: str) -> bool:
    return name.startswith(RESERVED)


# --- top / safety ---------------------------------------------------------


def top_rules(predicates: Dict[str, int]) -> List[Rule]:
    """``P(x1..xn) -> TOP(x1), ..., TOP(xn)`` for every predicate other than TOP and equality."""
    out = []
    for p, n in predicates.items():
        if p in (TOP, EQUALS) or n == 0:
            continue
        xs = _vars("t", n)
        out.append(Rule(f"top:{p}", (Atom(p, tuple(xs)),), tuple(Atom(TOP, (x,)) for x in xs), (), "top-axiom"))
    return out


def _uses_top(rs: RuleSet) -> bool:
    return any(p in (TOP, BOT) for p in rs.predicates)


def augment_top(rs: RuleSet, mode: str = "minimal") -> RuleSet:
    """Make every rule safe and, when needed, add the rules populating TOP.

    ``minimal`` adds the TOP rules only when TOP or BOT occurs; ``full``
    always adds them.  Ground rules with empty bodies become seed facts.
    """
    if mode not in ("minimal", "full"):
        raise ValueError(f"unknown top mode {mode!r}")
    rules: List[Rule] = []
    seeds = list(rs.seeds)
    for r in rs:
        if r.provenance == "top-axiom":
            continue
        if not r.body and not r.exist and all(a.is_ground for a in r.head):
            seeds.extend(r.head)
            continue
        if r.unsafe_vars:
            r = r.replace(body=r.body + tuple(Atom(TOP, (v,)) for v in r.unsafe_vars))
        rules.append(r)
    out = RuleSet(tuple(rules), tuple(seeds))
    if mode == "full" or _uses_top(out):
        out = RuleSet(out.rules + tuple(top_rules(out.predicates)), out.seeds)
    return standardize_apart(out)


# --- equality -------------------------------------------------------------


def eliminate_body_equality(rs: RuleSet) -> RuleSet:
    """Remove body equalities by substitution; constant pairs go through a fresh O_a predicate."""
    rules: List[Rule] = []
    seeds = list(rs.seeds)
    for r in rs:
        while True:
            k = next((i for i, a in enumerate(r.body) if a.pred == EQUALS), None)
            if k is None:
                break
            s, t = r.body[k].args
            rest = r.body[:k] + r.body[k + 1 :]
            if s.is_var or t.is_var:
                old, new = (s, t) if s.is_var else (t, s)
                r = r.replace(body=rest).rename({old: new})
            elif s is t:
                r = r.replace(body=rest)
            else:
                o = f"__O_{s.name}"
                seeds.append(Atom(o, (s,)))
                r = r.replace(body=rest[:k] + (Atom(o, (t,)),) + rest[k:])
        rules.append(r)
    return RuleSet(tuple(rules), tuple(seeds))


def equality_axioms(rs: RuleSet, extra: Optional[Dict[str, int]] = None) -> RuleSet:
    """Reflexivity (guarded by TOP), symmetry, transitivity and replacement rules; empty without equality.

    The axioms speak about ``AXEQ``, the ordinary predicate that stands in
    for equality once it is axiomatised.  ``extra`` names predicates that
    occur only in facts or queries but still need replacement rules.
    """
    if not (rs.has_equality or any(a.pred in (EQUALS, AXEQ) for a in rs.seeds) or AXEQ in rs.predicates):
        return RuleSet()
    x, x1, x2, x3 = var("x"), var("x1"), var("x2"), var("x3")
    rules = [
        Rule("eq:refl", (Atom(TOP, (x,)),), (Atom(AXEQ, (x, x)),), (), "equality-axiom"),
        Rule("eq:sym", (Atom(AXEQ, (x1, x2)),), (Atom(AXEQ, (x2, x1)),), (), "equality-axiom"),
        Rule("eq:trans", (Atom(AXEQ, (x1, x2)), Atom(AXEQ, (x2, x3))), (Atom(AXEQ, (x1, x3)),), (), "equality-axiom"),
    ]
    for p, n in {**(extra or {}), **rs.predicates}.items():
        if p in (EQUALS, AXEQ):
            continue
        for i in range(n):
            xs = _vars("u", n)
            y = var("w")
            ys = xs[:i] + [y] + xs[i + 1 :]
            rules.append(
                Rule(
                    f"eq:rep:{p}:{i + 1}",
                    (Atom(p, tuple(xs)), Atom(AXEQ, (xs[i], y))),
                    (Atom(p, tuple(ys)),),
                    (),
                    "equality-axiom",
                )
            )
    return standardize_apart(RuleSet(tuple(rules)))


def _rename_pred(atoms: Iterable[Atom], old: str, new: str) -> Tuple[Atom, ...]:
    return tuple(Atom(new, a.args) if a.pred == old else a for a in atoms)


def _missing(rs: RuleSet, extra: Optional[Dict[str, int]]) -> Dict[str, int]:
    return {p: n for p, n in (extra or {}).items() if p not in rs.predicates}


def axiomatise(rs: RuleSet, top: str = "minimal", extra: Optional[Dict[str, int]] = None) -> RuleSet:
    """``rs`` with equality turned into an ordinary predicate, plus its axioms and the TOP rules they need."""
    ax = equality_axioms(rs, extra)
    if not ax.rules:
        return rs
    rules = tuple(r.replace(body=_rename_pred(r.body, EQUALS, AXEQ), head=_rename_pred(r.head, EQUALS, AXEQ)) for r in rs)
    out = augment_top(RuleSet(rules + ax.rules, _rename_pred(rs.seeds, EQUALS, AXEQ)), top)
    return standardize_apart(out.with_rules(top_rules(_missing(out, extra))))


def align_instance(inst: FactStore, rs: RuleSet) -> FactStore:
    """Rename equality facts of ``inst`` to the predicate ``rs`` uses for equality (axiomatised or singularised)."""
    target = AXEQ if AXEQ in rs.predicates else EQ if EQ in rs.predicates else None
    if target is None or not inst.with_pred(EQUALS):
        return inst
    return FactStore(Atom(target, f.args) if f.pred == EQUALS else f for f in inst)


# --- skolemisation ------------------------------------------------------------


def skolem_symbol(rid: str, i: int) -> str:
    return f"__f_{rid}_{i}"


def skolemise_rule(r: Rule) -> Rule:
    if not r.exist:
        return r
    s = {y: func(skolem_symbol(r.id, i), r.frontier) for i, y in enumerate(r.exist, 1)}
    return Rule(r.id, r.body, tuple(a.substitute(s) for a in r.head), (), r.provenance)


def skolemise(rs: RuleSet) -> Tuple[RuleSet, Dict[Tuple[str, Term], str]]:
    """Replace each existential ``y_i`` of rule ``r`` by ``f_r_i(frontier)``."""
    smap = {(r.id, y): skolem_symbol(r.id, i) for r in rs for i, y in enumerate(r.exist, 1)}
    return RuleSet(tuple(skolemise_rule(r) for r in rs), rs.seeds), smap


# --- critical instance ----------------------------------------------------------


def critical_instance(rs: RuleSet, include_equality: bool = False, literal: bool = False) -> FactStore:
    """All facts over the predicates of ``rs`` built from its body constants and ``*``.

    Predicates with the reserved prefix (normalisation, MFA/MSA auxiliaries,
    singularisation) cannot occur in input instances and are skipped unless
    ``literal`` is set.
    """
    consts = [c for c in rs.body_constants if literal or not _is_reserved(c.name)]
    consts.append(STAR)
    store = FactStore()
    for p, n in rs.predicates.items():
        if p in (EQUALS, AXEQ, EQ):
            if not include_equality:
                continue
        elif _is_reserved(p) and not literal:
            continue
        for args in itertools.product(consts, repeat=n):
            store.add(Atom(p, args))
    return store


# --- normalisation ------------------------------------------------------------


def _ordered_vars(atoms: Iterable[Atom]) -> List[Term]:
    return list(dict.fromkeys(v for a in atoms for v in a.variables()))


def _canonical(atoms: Sequence[Atom], interface: Sequence[Term]) -> tuple:
    names = {v: f"i{k}" for k, v in enumerate(interface)}
    for v in _ordered_vars(atoms):
        names.setdefault(v, f"o{len(names)}")
    return tuple((a.pred, tuple(names.get(t, t) for t in a.args)) for a in atoms)


class NormalisationError(ValueError):
    pass


@dataclass
class Normaliser:
    """Head and body normalisation steps with optional structure sharing.

    With sharing on, a split whose defining conjunction is isomorphic (same
    atoms in the same order, same interface order) to an earlier one reuses
    that fresh predicate and omits its defining rule.
    """

    share: bool = True
    registry: Dict[tuple, str] = field(default_factory=dict)
    counter: int = 0

    def _fresh(self, key: tuple) -> Tuple[str, bool]:
        if self.share and key in self.registry:
            return self.registry[key], True
        self.counter += 1
        name = f"__Q{self.counter}"
        self.registry.setdefault(key, name)
        return name, False

    def head_step(self, r: Rule, psi1: Sequence[int]) -> Tuple[Rule, Optional[Rule]]:
        idx = set(psi1)
        if not idx <= set(range(len(r.head))):
            raise NormalisationError(f"split {sorted(idx)} is out of range for rule {r.id}")
        p1 = [a for i, a in enumerate(r.head) if i in idx]
        p2 = [a for i, a in enumerate(r.head) if i not in idx]
        if not p1 or not p2:
            raise NormalisationError("both parts of a head split must be nonempty")
        ex, fr = set(r.exist), set(r.frontier)
        v2 = set(_ordered_vars(p2))
        v1 = _ordered_vars(p1)
        interface = [v for v in v1 if v in fr or (v in ex and v in v2)]
        inner = [v for v in v1 if v in ex and v not in v2]
        name, reused = self._fresh(("head", _canonical(p1, interface), len(interface)))
        q = Atom(name, tuple(interface))
        keep_ex = tuple(v for v in r.exist if v in v2 or v in interface)
        first = Rule(r.id + "a", r.body, (q,) + tuple(p2), keep_ex, r.provenance)
        if reused:
            return first, None
        return first, Rule(f"def:{name}", (q,), tuple(p1), tuple(inner), "normalisation")

    def body_step(self, r: Rule, phi1: Sequence[int]) -> Tuple[Rule, Optional[Rule]]:
        idx = set(phi1)
        if not idx <= set(range(len(r.body))):
            raise NormalisationError(f"split {sorted(idx)} is out of range for rule {r.id}")
        p1 = [a for i, a in enumerate(r.body) if i in idx]
        p2 = [a for i, a in enumerate(r.body) if i not in idx]
        if not p1:
            raise NormalisationError("the extracted body part must be nonempty")
        fr = set(r.frontier)
        v2 = set(_ordered_vars(p2))
        interface = [v for v in _ordered_vars(p1) if v in fr or v in v2]
        name, reused = self._fresh(("body", _canonical(p1, interface), len(interface)))
        q = Atom(name, tuple(interface))
        first = Rule(r.id + "a", (q,) + tuple(p2), r.head, r.exist, r.provenance)
        if reused:
            return first, None
        return first, Rule(f"def:{name}", tuple(p1), (q,), (), "normalisation")


def normalise_head_step(r: Rule, psi1: Sequence[int], normaliser: Optional[Normaliser] = None):
    return (normaliser or Normaliser()).head_step(r, psi1)


def normalise_body_step(r: Rule, phi1: Sequence[int], normaliser: Optional[Normaliser] = None):
    return (normaliser or Normaliser()).body_step(r, phi1)


# --- MFA / MSA ----------------------------------------------------------------


def f_pred(rid: str, i: int) -> str:
    return f"__F_{rid}_{i}"


def _provenance_rules(fpreds: List[str], tag: str) -> List[Rule]:
    x1, x2, x3 = var("a1"), var("a2"), var("a3")
    out = [
        Rule("aux:S", (Atom(S_PRED, (x1, x2)),), (Atom(D_PRED, (x1, x2)),), (), tag),
        Rule("aux:D", (Atom(D_PRED, (x1, x2)), Atom(S_PRED, (x2, x3))), (Atom(D_PRED, (x1, x3)),), (), tag),
    ]
    for f in fpreds:
        out.append(
            Rule(f"aux:C:{f}", (Atom(f, (x1,)), Atom(D_PRED, (x1, x2)), Atom(f, (x2,))), (Atom(C_PRED, ()),), (), tag)
        )
    return out


def _track(rs: RuleSet, summarise: bool) -> RuleSet:
    tag = "MSA-aux" if summarise else "MFA-aux"
    rules: List[Rule] = []
    fpreds: List[str] = []
    for r in rs:
        if not r.exist:
            rules.append(r)
            continue
        extra = []
        for i, y in enumerate(r.exist, 1):
            f = f_pred(r.id, i)
            fpreds.append(f)
            extra.append(Atom(f, (y,)))
            extra.extend(Atom(S_PRED, (x, y)) for x in r.frontier)
        r = r.replace(head=r.head + tuple(extra))
        if summarise:
            s = {y: const(f"__c_{r.id}_{i}") for i, y in enumerate(r.exist, 1)}
            r = r.replace(head=tuple(a.substitute(s) for a in r.head), exist=())
        rules.append(r)
    return standardize_apart(RuleSet(tuple(rules) + tuple(_provenance_rules(fpreds, tag)), rs.seeds))


def mfa_transform(rs: RuleSet) -> RuleSet:
    """Heads record the provenance of each existential value via F and S; D is the transitive closure of S; C flags a repeat."""
    return _track(rs, summarise=False)


def msa_transform(rs: RuleSet) -> RuleSet:
    """As :func:`mfa_transform` but each existential becomes a fresh constant, so the result is datalog."""
    return _track(rs, summarise=True)


# --- singularisation ------------------------------------------------------------


def rewrite_existential_equalities(rs: RuleSet) -> RuleSet:
    """Replace each head equality mentioning an existential with a fresh binary atom plus a rule deriving the equality."""
    rules: List[Rule] = []
    extra: List[Rule] = []
    for r in rs:
        ex = set(r.exist)
        head = list(r.head)
        changed = False
        for k, a in enumerate(head):
            if a.pred == EQUALS and any(t in ex for t in a.args):
                p = f"__Y_{r.id}_{k + 1}"
                head[k] = Atom(p, a.args)
                x1, x2 = var("e1"), var("e2")
                extra.append(Rule(f"eqy:{r.id}:{k + 1}", (Atom(p, (x1, x2)),), (Atom(EQUALS, (x1, x2)),), (), r.provenance))
                changed = True
        rules.append(r.replace(head=tuple(head)) if changed else r)
    if not extra:
        return rs
    return standardize_apart(RuleSet(tuple(rules) + tuple(extra), rs.seeds))


def _occurrences(r: Rule) -> Dict[Term, List[Tuple[int, int]]]:
    occ: Dict[Term, List[Tuple[int, int]]] = {}
    for i, a in enumerate(r.body):
        for k, t in enumerate(a.args):
            if t.is_var:
                occ.setdefault(t, []).append((i, k))
    return occ


def relevant_variables(r: Rule) -> List[Term]:
    """Variables occurring more than once in the body and in some non-equality head atom."""
    occ = _occurrences(r)
    in_head = {v for a in r.head if a.pred != EQUALS for v in a.variables()}
    return [v for v, o in occ.items() if len(o) > 1 and v in in_head]


class MarkingError(ValueError):
    pass


def _check_no_body_equality(rs: RuleSet) -> None:
    for r in rs:
        if any(a.pred == EQUALS for a in r.body):
            raise ValueError(f"rule {r.id} has an equality in its body; eliminate body equalities first")


def enumerate_markings(rs: RuleSet, reduced: bool = True) -> Iterator[Marking]:
    """Markings in a fixed order: rules in order, variables by name, occurrences in order.

    With ``reduced``, only relevant variables range over all occurrences;
    every other variable keeps its first occurrence.
    """
    rs = rewrite_existential_equalities(rs)
    per_rule = []
    for r in rs:
        occ = _occurrences(r)
        rel = set(relevant_variables(r)) if reduced else set(occ)
        names = sorted(occ, key=lambda v: v.name)
        options = [[(v.name, o) for o in (occ[v] if v in rel else occ[v][:1])] for v in names]
        per_rule.append([(r.id, tuple(c)) for c in itertools.product(*options)])
    for combo in itertools.product(*per_rule):
        yield Marking(tuple(combo))


def count_markings(rs: RuleSet, reduced: bool = True) -> int:
    rs = rewrite_existential_equalities(rs)
    total = 1
    for r in rs:
        occ = _occurrences(r)
        rel = set(relevant_variables(r)) if reduced else set(occ)
        for v in occ:
            if v in rel:
                total *= len(occ[v])
    return total


def first_marking(rs: RuleSet) -> Marking:
    return next(enumerate_markings(rs, reduced=True))


def _singularise_rule(r: Rule, m: Dict[str, Tuple[int, int]], rid: Optional[str] = None) -> Rule:
    occ = _occurrences(r)
    for v, o in occ.items():
        if v.name not in m:
            if len(o) > 1:
                raise MarkingError(f"rule {r.id}: variable {v} has no marked occurrence")
        elif m[v.name] not in o:
            raise MarkingError(f"rule {r.id}: marked occurrence {m[v.name]} does not hold {v}")
    taken = {v.name for v in r.variables}
    fresh = (f"s{n}" for n in itertools.count(1))
    body: List[Atom] = []
    extra: List[Atom] = []
    for i, a in enumerate(r.body):
        args = []
        for k, t in enumerate(a.args):
            marked = t.is_var and m.get(t.name, occ[t][0]) == (i, k)
            if marked:
                args.append(t)
                continue
            name = next(n for n in fresh if n not in taken)
            taken.add(name)
            z = var(name)
            args.append(z)
            extra.append(Atom(EQ, (t, z)))
        body.append(Atom(a.pred, tuple(args)))
    head = tuple(Atom(EQ, a.args) if a.pred == EQUALS else a for a in r.head)
    return Rule(rid or r.id, tuple(body) + tuple(extra), head, r.exist, r.provenance)


def _eq_rules() -> List[Rule]:
    x, x1, x2, x3 = var("q"), var("q1"), var("q2"), var("q3")
    return [
        Rule("sing:refl", (Atom(TOP, (x,)),), (Atom(EQ, (x, x)),), (), "singularisation"),
        Rule("sing:sym", (Atom(EQ, (x1, x2)),), (Atom(EQ, (x2, x1)),), (), "singularisation"),
        Rule("sing:trans", (Atom(EQ, (x1, x2)), Atom(EQ, (x2, x3))), (Atom(EQ, (x1, x3)),), (), "singularisation"),
    ]


def _finish_sing(rules: List[Rule], seeds: Sequence[Atom], extra: Optional[Dict[str, int]] = None) -> RuleSet:
    seeds = tuple(Atom(EQ, a.args) if a.pred == EQUALS else a for a in seeds)
    body = RuleSet(tuple(r for r in rules if r.provenance != "top-axiom") + tuple(_eq_rules()), seeds)
    preds = {**_missing(body, extra), **body.predicates}
    return standardize_apart(RuleSet(body.rules + tuple(top_rules(preds)), body.seeds))


def singularise(rs: RuleSet, m: Marking, extra: Optional[Dict[str, int]] = None) -> RuleSet:
    """Equality becomes the ordinary predicate Eq; every unmarked body occurrence is de-aliased through Eq.

    Variables with a single body occurrence need not be listed in ``m``.
    ``extra`` lists predicates used only by facts or queries; they get TOP rules too.
    """
    _check_no_body_equality(rs)
    rs = rewrite_existential_equalities(rs)
    rules = [_singularise_rule(r, m.for_rule(r.id)) for r in rs if r.provenance != "top-axiom"]
    return _finish_sing(rules, rs.seeds, extra)


def sing_union(rs: RuleSet) -> RuleSet:
    """Union of the singularisations over the reduced marking family, rules renamed apart."""
    _check_no_body_equality(rs)
    rs = rewrite_existential_equalities(rs)
    rules: List[Rule] = []
    for r in rs:
        if r.provenance == "top-axiom":
            continue
        occ = _occurrences(r)
        rel = sorted(relevant_variables(r), key=lambda v: v.name)
        fixed = {v.name: o[0] for v, o in occ.items() if v not in rel}
        choices = [[(v.name, o) for o in occ[v]] for v in rel]
        combos = list(itertools.product(*choices))
        for n, c in enumerate(combos, 1):
            rid = r.id if len(combos) == 1 else f"{r.id}~{n}"
            rules.append(_singularise_rule(r, {**fixed, **dict(c)}, rid))
    return _finish_sing(rules, rs.seeds)


# --- description logic ----------------------------------------------------------


def _role_atom(role: Role, s: Term, t: Term) -> Atom:
    return Atom(role.name, (t, s) if role.inverse else (s, t))


def _concept(name: str, t: Term) -> Atom:
    return Atom(name, (t,))


def dl_translate(axioms: Sequence[DlAxiom]) -> RuleSet:
    """One rule per axiom following the standard Horn-DL to rule mapping; ``inv(R)(s,t)`` is ``R(t,s)``."""
    x, y, z, x1, x2 = var("x"), var("y"), var("z"), var("x1"), var("x2")
    rules: List[Rule] = []
    for n, ax in enumerate(axioms, 1):
        o = ax.operands
        rid = f"r{n}"
        if ax.type == 1:
            r = Rule(rid, (_concept(o[0], x),), (_role_atom(o[1], x, y), _concept(o[2], y)), (y,))
        elif ax.type == 2:
            body = (
                _concept(o[0], z),
                _role_atom(o[1], z, x1),
                _concept(o[2], x1),
                _role_atom(o[1], z, x2),
                _concept(o[2], x2),
            )
            r = Rule(rid, body, (Atom(EQUALS, (x1, x2)),))
        elif ax.type == 3:
            r = Rule(rid, (_concept(o[0], x), _concept(o[1], x)), (_concept(o[2], x),))
        elif ax.type == 4:
            r = Rule(rid, (_concept(o[0], z), _role_atom(o[1], z, x)), (_concept(o[2], x),))
        elif ax.type == 5:
            r = Rule(rid, (_role_atom(o[0], x1, x2),), (_role_atom(o[1], x1, x2),))
        elif ax.type == 6:
            r = Rule(rid, (_role_atom(o[0], x1, z), _role_atom(o[1], z, x2)), (_role_atom(o[2], x1, x2),))
        elif ax.type == 7:
            r = Rule(rid, (_concept(o[0], x),), (Atom(EQUALS, (x, const(o[1]))),))
        else:
            raise ValueError(f"unknown axiom type {ax.type}")
        rules.append(r)
    return standardize_apart(RuleSet(tuple(rules)))
