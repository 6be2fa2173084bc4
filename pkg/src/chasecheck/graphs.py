"""Position- and place-based acyclicity analyses: WA, JA, SWA, FD, AR and Gamma-acyclicity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .model import EQUALS, Atom, Place, Position, Rule, RuleSet, Term
from .transforms import skolemise_rule
from .unify import rename_atom, unify_atoms
from .verdict import Verdict, verdict


class InapplicableError(ValueError):
    """The notion is undefined for this rule set (for example, equality is present)."""


def require_equality_free(rs: RuleSet, notion: str) -> None:
    if rs.has_equality:
        raise InapplicableError(f"{notion} is only defined for equality-free rule sets; resolve equality first")


def all_positions(rs: RuleSet) -> List[Position]:
    return [Position(p, i) for p, n in rs.predicates.items() if p != EQUALS for i in range(1, n + 1)]


def _pos(atoms: Iterable[Atom], v: Term) -> List[Position]:
    out: Dict[Position, None] = {}
    for a in atoms:
        if a.pred == EQUALS:
            continue
        for i, t in enumerate(a.args, 1):
            if t is v:
                out[Position(a.pred, i)] = None
    return list(out)


def pos_body(r: Rule, v: Term) -> List[Position]:
    return _pos(r.body, v)


def pos_head(r: Rule, v: Term) -> List[Position]:
    return _pos(r.head, v)


# --- graph helpers ------------------------------------------------------------


@dataclass
class PositionGraph:
    vertices: List[Position]
    special: Dict[Tuple[Position, Position], bool] = field(default_factory=dict)

    def add(self, u: Position, v: Position, is_special: bool) -> None:
        self.special[(u, v)] = self.special.get((u, v), False) or is_special

    def nx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        for (u, v), s in self.special.items():
            g.add_edge(u, v, special=s)
        return g

    def restrict(self, keep: Set[Position]) -> "PositionGraph":
        g = PositionGraph([v for v in self.vertices if v in keep])
        for (u, v), s in self.special.items():
            if u in keep and v in keep:
                g.special[(u, v)] = s
        return g

    def dangerous_cycle(self) -> Optional[List[Position]]:
        """A cycle through a special edge, as a vertex list, or None."""
        g = self.nx()
        comp = _component_index(g)
        for (u, v), s in self.special.items():
            if s and (u == v or comp[u] == comp[v]):
                back = nx.shortest_path(g, v, u)
                return [u] + back
        return None

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.vertices:
            lines.append(f'  "{v}";')
        for (u, v), s in self.special.items():
            style = ' [style=dashed,label="*"]' if s else ""
            lines.append(f'  "{u}" -> "{v}"{style};')
        lines.append("}")
        return "\n".join(lines)


def _component_index(g: nx.DiGraph) -> Dict:
    comp = {}
    for k, c in enumerate(nx.strongly_connected_components(g)):
        for v in c:
            comp[v] = k
    return comp


def _cyclic_nodes(g: nx.DiGraph) -> Set:
    out: Set = set()
    for c in nx.strongly_connected_components(g):
        if len(c) > 1:
            out |= c
        else:
            (v,) = c
            if g.has_edge(v, v):
                out.add(v)
    return out


def find_cycle(g: nx.DiGraph) -> Optional[list]:
    """Some directed cycle (vertex list, first vertex repeated at the end), or None."""
    for c in sorted(nx.strongly_connected_components(g), key=lambda c: sorted(map(str, c))):
        if len(c) == 1:
            (v,) = c
            if g.has_edge(v, v):
                return [v, v]
            continue
        start = min(c, key=str)
        edges = nx.find_cycle(g.subgraph(c), source=start)
        return [e[0] for e in edges] + [edges[-1][1]]
    return None


# --- WA -------------------------------------------------------------------------


def wa_graph(rs: RuleSet) -> PositionGraph:
    """Regular edges body->head for frontier variables, special edges body->existential positions.

    Equality atoms are ignored.
    """
    g = PositionGraph(all_positions(rs))
    for r in rs:
        targets = [q for y in r.exist for q in pos_head(r, y)]
        for x in r.frontier:
            heads = pos_head(r, x)
            for p in pos_body(r, x):
                for q in heads:
                    g.add(p, q, False)
                for q in targets:
                    g.add(p, q, True)
    return g


def wa_check(rs: RuleSet) -> Verdict:
    cyc = wa_graph(rs).dangerous_cycle()
    return verdict("wa", cyc is None, {"kind": "cycle", "cycle": [str(p) for p in cyc or []]})


# --- JA -------------------------------------------------------------------------


def _existentials(rs: RuleSet) -> List[Tuple[Rule, Term]]:
    return [(r, y) for r in rs for y in r.exist]


class _PosIndex:
    """Per-rule PosB/PosH of frontier variables, cached for the fixpoints."""

    def __init__(self, rs: RuleSet):
        self.items = [(r, x, frozenset(pos_body(r, x)), pos_head(r, x)) for r in rs for x in r.frontier]


def ja_move(y: Term, r: Rule, rs: RuleSet, index: Optional[_PosIndex] = None) -> Set[Position]:
    """Least set containing PosH(y) and closed under propagation through frontier variables."""
    index = index or _PosIndex(rs)
    move = set(pos_head(r, y))
    changed = True
    while changed:
        changed = False
        for _, _, pb, ph in index.items:
            if pb <= move and not move.issuperset(ph):
                move.update(ph)
                changed = True
    return move


def _label(r: Rule, y: Term) -> str:
    return f"{r.id}:{y}"


def ja_graph(rs: RuleSet) -> Tuple[nx.DiGraph, Dict[str, Set[Position]]]:
    index = _PosIndex(rs)
    ex = _existentials(rs)
    moves = {_label(r, y): ja_move(y, r, rs, index) for r, y in ex}
    g = nx.DiGraph()
    g.add_nodes_from(moves)
    for r1, y1 in ex:
        mv = moves[_label(r1, y1)]
        for r2, y2 in ex:
            if any(mv.issuperset(pos_body(r2, x)) for x in r2.frontier if pos_head(r2, x)):
                g.add_edge(_label(r1, y1), _label(r2, y2))
    return g, moves


def ja_check(rs: RuleSet) -> Verdict:
    require_equality_free(rs, "JA")
    g, _ = ja_graph(rs)
    cyc = find_cycle(g)
    return verdict("ja", cyc is None, {"kind": "cycle", "cycle": cyc})


# --- SWA ------------------------------------------------------------------------


class _Places:
    def __init__(self, rs: RuleSet):
        self.rs = rs
        self.sk = {r.id: skolemise_rule(r) for r in rs}
        self._unifiable: Dict[Tuple[Atom, Atom], bool] = {}

    def in_(self, r: Rule, w: Term) -> List[Place]:
        return [Place(a, i) for a in r.body for i, t in enumerate(a.args, 1) if t is w]

    def out(self, r: Rule, w: Term) -> List[Place]:
        sk = self.sk[r.id]
        return [
            Place(ska, i)
            for a, ska in zip(r.head, sk.head)
            if a.pred != EQUALS
            for i, t in enumerate(a.args, 1)
            if t is w
        ]

    def unifiable(self, a: Atom, b: Atom) -> bool:
        key = (a, b)
        hit = self._unifiable.get(key)
        if hit is None:
            hit = self._unifiable[key] = unify_atoms(a, rename_atom(b, "'")) is not None
        return hit

    def covers(self, big: Iterable[Place], small: Iterable[Place]) -> bool:
        big = list(big)
        return all(any(i == j and self.unifiable(a, b) for b, j in big) for a, i in small)


def covers(big: Iterable[Place], small: Iterable[Place]) -> bool:
    """Every place in ``small`` unifies (after renaming apart) with a place in ``big`` at the same index."""
    return _Places(RuleSet()).covers(big, small)


def swa_move(w: Term, r: Rule, rs: RuleSet, places: Optional[_Places] = None) -> List[Place]:
    places = places or _Places(rs)
    move: Dict[Place, None] = dict.fromkeys(places.out(r, w))
    pending = [(r2, x, places.in_(r2, x), places.out(r2, x)) for r2 in rs for x in r2.frontier]
    changed = True
    while changed:
        changed = False
        rest = []
        for item in pending:
            _, _, inn, out = item
            if places.covers(move, inn):
                for p in out:
                    if p not in move:
                        move[p] = None
                        changed = True
            else:
                rest.append(item)
        pending = rest
    return list(move)


def swa_graph(rs: RuleSet) -> nx.DiGraph:
    places = _Places(rs)
    g = nx.DiGraph()
    g.add_nodes_from(r.id for r in rs)
    moves = {(r.id, y): swa_move(y, r, rs, places) for r, y in _existentials(rs)}
    for r, y in _existentials(rs):
        mv = moves[(r.id, y)]
        for r2 in rs:
            if g.has_edge(r.id, r2.id):
                continue
            if any(places.covers(mv, places.in_(r2, x)) for x in r2.frontier):
                g.add_edge(r.id, r2.id)
    return g


def swa_check(rs: RuleSet) -> Verdict:
    require_equality_free(rs, "SWA")
    cyc = find_cycle(swa_graph(rs))
    return verdict("swa", cyc is None, {"kind": "cycle", "cycle": cyc})


# --- FD -------------------------------------------------------------------------


def _recursion(rs: RuleSet) -> Callable[[Position, Position], bool]:
    g = wa_graph(rs).nx()
    comp = _component_index(g)
    cyclic = _cyclic_nodes(g)

    def recursive(p: Position, q: Position) -> bool:
        return comp.get(p) is not None and comp.get(p) == comp.get(q) and p in cyclic

    return recursive


def fd_positions(rs: RuleSet, witness: Optional[list] = None) -> Set[Position]:
    """Greatest set of finite-domain positions."""
    recursive = _recursion(rs)
    fd = set(all_positions(rs))
    changed = True
    while changed:
        changed = False
        for r in rs:
            fr = set(r.frontier)
            ex = set(r.exist)
            for a in r.head:
                if a.pred == EQUALS:
                    continue
                for i, t in enumerate(a.args, 1):
                    p = Position(a.pred, i)
                    if p not in fd:
                        continue
                    if t in fr:
                        bad = not any(q in fd for q in pos_body(r, t))
                    elif t in ex:
                        bad = any(
                            not any(q in fd and not recursive(q, p) for q in pos_body(r, x)) for x in r.frontier
                        )
                    else:
                        continue
                    if bad:
                        fd.discard(p)
                        changed = True
                        if witness is not None and not witness:
                            witness.append((p, r.id))
    return fd


def fd_check(rs: RuleSet) -> Verdict:
    require_equality_free(rs, "FD")
    w: list = []
    fd = fd_positions(rs, w)
    ok = len(fd) == len(all_positions(rs))
    wit = {"kind": "position", "position": str(w[0][0]), "rule": w[0][1]} if w else None
    return verdict("fd", ok, wit)


# --- AR -------------------------------------------------------------------------


def ar_ranking(rs: RuleSet, strict: bool = False, overflow: Optional[list] = None) -> Optional[Dict[Position, int]]:
    """The least argument ranking, or None when none exists.

    Only frontier variables constrain existential positions unless ``strict``,
    in which case every universally quantified variable does.
    """
    positions = all_positions(rs)
    alpha = {p: 0 for p in positions}
    bound = len(positions)
    cons = []
    for r in rs:
        for x in r.frontier:
            cons.append((pos_body(r, x), pos_head(r, x), 0))
        guards = r.body_vars if strict else r.frontier
        for y in r.exist:
            heads = pos_head(r, y)
            for x in guards:
                cons.append((pos_body(r, x), heads, 1))
    changed = True
    while changed:
        changed = False
        for body, heads, inc in cons:
            if not body:
                continue
            need = min(alpha[q] for q in body) + inc
            for p in heads:
                if alpha[p] < need:
                    alpha[p] = need
                    changed = True
                    if need > bound:
                        if overflow is not None:
                            overflow.append(p)
                        return None
    return alpha


def verify_ranking(rs: RuleSet, alpha: Dict[Position, int], strict: bool = False) -> bool:
    """Check both ranking conditions literally, rule by rule."""
    if any(v < 0 for v in alpha.values()) or set(alpha) != set(all_positions(rs)):
        return False
    for r in rs:
        universal = r.body_vars if strict else r.frontier
        for x in r.frontier:
            for p in pos_head(r, x):
                if not any(alpha[p] >= alpha[q] for q in pos_body(r, x)):
                    return False
        for y in r.exist:
            for p in pos_head(r, y):
                for x in universal:
                    if not any(alpha[p] > alpha[q] for q in pos_body(r, x)):
                        return False
    return True


def ar_check(rs: RuleSet, strict: bool = False) -> Verdict:
    require_equality_free(rs, "AR")
    over: list = []
    alpha = ar_ranking(rs, strict, over)
    if alpha is None:
        return verdict("ar", False, {"kind": "overflow", "position": str(over[0]) if over else None})
    v = verdict("ar", True)
    return v.with_(witness={"kind": "ranking", "ranking": {str(p): n for p, n in alpha.items()}})


# --- Gamma-acyclicity -----------------------------------------------------------


def safe_positions(rs: RuleSet, on_cycle: Set[str]) -> Set[Position]:
    """Least fixpoint above the finite-domain positions.

    ``on_cycle`` holds the ids of rules lying on a cycle of the rule
    dependency relation.
    """
    safe = fd_positions(rs)
    sk = {r.id: skolemise_rule(r) for r in rs}
    candidates = [p for p in all_positions(rs) if p not in safe]
    changed = True
    while changed:
        changed = False
        for p in candidates:
            if p in safe:
                continue
            ok = True
            for r in rs:
                heads = [a for a in sk[r.id].head if a.pred == p.pred]
                if not heads or r.id not in on_cycle:
                    continue
                for a in heads:
                    for x in a.args[p.index - 1].variables():
                        if not any(q in safe for q in pos_body(r, x)):
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if ok:
                safe.add(p)
                changed = True
    return safe


def gamma_check(rs: RuleSet, depends: Optional[nx.DiGraph] = None) -> Verdict:
    require_equality_free(rs, "Gamma-acyclicity")
    if depends is None:
        from .dependencies import dependency_graph

        depends = dependency_graph(rs).graph
    on_cycle = set(_cyclic_nodes(depends))
    safe = safe_positions(rs, on_cycle)
    pg = wa_graph(rs).restrict(set(all_positions(rs)) - safe)
    cyc = pg.dangerous_cycle()
    v = verdict("ga", cyc is None, {"kind": "cycle", "cycle": [str(p) for p in cyc or []]})
    return v.with_(stats={"safe": sorted(map(str, safe))})
