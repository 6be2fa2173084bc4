"""The rule dependency relation, dependency partitions, and the per-component combinator."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from .model import Atom, Rule, RuleSet, Term, const, substitute
from .transforms import skolemise_rule
from .unify import rename_atom, resolve, unify_terms
from .verdict import ACYCLIC, NOT_ACYCLIC, UNKNOWN, Verdict


@dataclass(frozen=True)
class DependencyWitness:
    """``instance`` with substitutions for both rules showing that the first rule can newly enable the second."""

    instance: Tuple[Atom, ...]
    sigma1: Tuple[Tuple[str, str], ...]
    sigma2: Tuple[Tuple[str, str], ...]

    def __str__(self) -> str:
        inst = ", ".join(map(str, self.instance))
        s1 = ", ".join(f"{k}->{v}" for k, v in self.sigma1)
        s2 = ", ".join(f"{k}->{v}" for k, v in self.sigma2)
        return f"I={{{inst}}} s1=[{s1}] s2=[{s2}]"


_SUFFIX = "'"


def _rename_rule(r: Rule) -> Rule:
    return Rule(r.id, tuple(rename_atom(a, _SUFFIX) for a in r.body), tuple(rename_atom(a, _SUFFIX) for a in r.head), (), r.provenance)


def rule_depends(r1: Rule, r2: Rule, new_condition: bool = True) -> Optional[DependencyWitness]:
    """A witness that ``r1`` can newly enable a productive application of ``r2``, or None.

    Searches canonical witnesses: each body atom of ``r2`` is either part of
    the instance or produced by a head atom of the skolemised ``r1`` (at
    least one must be); the pairing is unified, leftover variables are
    frozen to fresh constants, and the conditions are checked on the
    resulting sets.  Setting ``new_condition`` to False drops the
    requirement that ``r2`` derive something new.
    """
    s1 = skolemise_rule(r1)
    s2 = _rename_rule(skolemise_rule(r2))
    body2 = list(s2.body)
    options = [[h for h in s1.head if h.pred == b.pred and len(h.args) == len(b.args)] for b in body2]
    if not body2 or not any(options):
        return None
    vars1 = list(dict.fromkeys(v for a in s1.body + s1.head for v in a.variables()))
    vars2 = list(dict.fromkeys(v for a in s2.body + s2.head for v in a.variables()))

    def leaf(theta: Dict[Term, Term], choice: List[Optional[Atom]]) -> Optional[DependencyWitness]:
        frozen: Dict[Term, Term] = {}
        final: Dict[Term, Term] = {}
        for v in vars1 + vars2:
            t = resolve(v, theta)
            for u in t.variables():
                if u not in frozen:
                    frozen[u] = const(f"__k{len(frozen) + 1}")
            final[v] = substitute(t, frozen)
        inst = [a.substitute(final) for a in s1.body]
        inst += [b.substitute(final) for b, c in zip(body2, choice) if c is None]
        if any(not a.is_function_free for a in inst):
            return None
        iset = set(inst)
        phi2 = [b.substitute(final) for b in body2]
        if all(a in iset for a in phi2):
            return None
        if new_condition:
            derived = iset | {h.substitute(final) for h in s1.head}
            if all(h.substitute(final) in derived for h in s2.head):
                return None
        return DependencyWitness(
            tuple(dict.fromkeys(inst)),
            tuple((str(v), str(final[v])) for v in vars1),
            tuple((str(v)[: -len(_SUFFIX)], str(final[v])) for v in vars2),
        )

    def search(k: int, theta: Dict[Term, Term], choice: List[Optional[Atom]], used: bool):
        if k == len(body2):
            return leaf(theta, choice) if used else None
        b = body2[k]
        for h in [None] + options[k]:
            if h is None:
                # Leaving the atom to the instance is only useful if a later atom can still pair with a head.
                if not used and not any(options[k + 1 :]):
                    continue
                w = search(k + 1, theta, choice + [None], used)
            else:
                t2 = dict(theta)
                if not all(unify_terms(x, y, t2) for x, y in zip(b.args, h.args)):
                    continue
                w = search(k + 1, t2, choice + [h], True)
            if w is not None:
                return w
        return None

    return search(0, {}, [], False)


@dataclass
class DependencyGraph:
    graph: nx.DiGraph
    components: List[List[str]]
    witnesses: Dict[Tuple[str, str], DependencyWitness] = field(default_factory=dict)

    def depends(self, a: str, b: str) -> bool:
        return self.graph.has_edge(a, b)

    def is_trivial(self, comp: Sequence[str]) -> bool:
        """A single rule that does not depend on itself."""
        return len(comp) == 1 and not self.graph.has_edge(comp[0], comp[0])

    @property
    def acyclic(self) -> bool:
        return all(self.is_trivial(c) for c in self.components)

    def to_dot(self) -> str:
        lines = ["digraph deps {"]
        lines += [f'  "{v}";' for v in self.graph.nodes]
        lines += [f'  "{a}" -> "{b}";' for a, b in self.graph.edges]
        lines.append("}")
        return "\n".join(lines)


def dependency_graph(rs: RuleSet, new_condition: bool = True) -> DependencyGraph:
    """All pairwise dependencies and the strongly connected components in dependency order.

    Components come in topological order: a rule in a later component
    never enables a rule in an earlier one.
    """
    g = nx.DiGraph()
    ids = [r.id for r in rs]
    g.add_nodes_from(ids)
    wit: Dict[Tuple[str, str], DependencyWitness] = {}
    for r1, r2 in itertools.product(rs, repeat=2):
        w = rule_depends(r1, r2, new_condition)
        if w is not None:
            g.add_edge(r1.id, r2.id)
            wit[(r1.id, r2.id)] = w
    order = {rid: k for k, rid in enumerate(ids)}
    cond = nx.condensation(g)
    members = {c: sorted(cond.nodes[c]["members"], key=order.get) for c in cond.nodes}
    topo = nx.lexicographical_topological_sort(cond, key=lambda c: order[members[c][0]])
    return DependencyGraph(g, [members[c] for c in topo], wit)


def dependency_partition(rs: RuleSet, new_condition: bool = True) -> List[List[str]]:
    return dependency_graph(rs, new_condition).components


def check_with_dependencies(
    rs: RuleSet,
    base: Optional[Callable[[RuleSet], Verdict]],
    name: str,
    deps: Optional[DependencyGraph] = None,
) -> Verdict:
    """Accept iff every dependency component is a lone non-self-dependent rule or passes ``base``.

    ``base=None`` gives the plain acyclic-dependency check.
    """
    deps = deps or dependency_graph(rs)
    unknown = None
    checked = 0
    for comp in deps.components:
        if deps.is_trivial(comp):
            continue
        if base is None:
            return Verdict(name, NOT_ACYCLIC, {"kind": "component", "rules": comp})
        sub = RuleSet(tuple(rs.rule(rid) for rid in comp), rs.seeds)
        v = base(sub)
        checked += 1
        if v.outcome == NOT_ACYCLIC:
            return Verdict(name, NOT_ACYCLIC, {"kind": "component", "rules": comp, "inner": v.witness}, v.stats)
        if v.outcome == UNKNOWN and unknown is None:
            unknown = (comp, v)
    if unknown is not None:
        comp, v = unknown
        return Verdict(name, UNKNOWN, {"kind": "component", "rules": comp, "inner": v.witness}, v.stats)
    return Verdict(name, ACYCLIC, None, {"components": len(deps.components), "checked": checked})
