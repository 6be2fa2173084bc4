"""Entry points: ``check`` one notion, or run the whole ``taxonomy`` and cross-check the lattice."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import networkx as nx

from .chase import CYCLIC, FIXPOINT, STOPPED, ChaseConfig, ChaseOutcome, chase
from .dependencies import DependencyGraph, check_with_dependencies, dependency_graph
from .graphs import InapplicableError, ar_check, fd_check, gamma_check, ja_check, swa_check, wa_check
from .model import EQUALS, Atom, FactStore, RuleSet
from .transforms import (
    C_PRED,
    align_instance,
    augment_top,
    axiomatise,
    critical_instance,
    eliminate_body_equality,
    enumerate_markings,
    mfa_transform,
    msa_transform,
    sing_union,
    singularise,
)
from .verdict import ACYCLIC, NOT_ACYCLIC, UNKNOWN, Verdict

NOTIONS = ("wa", "ja", "swa", "agrd", "fd", "ar", "ga", "msa", "mfa")
EQUALITY_MODES = ("none", "axiomatize", "sing-union", "sing-some", "sing-all")
SING_NOTIONS = ("ja", "msa", "mfa")
CHAIN = ("wa", "fd", "ar", "ja", "swa", "msa", "mfa")

_C = Atom(C_PRED, ())


@dataclass
class CheckRequest:
    notion: str
    dep: bool = False
    instance: Optional[FactStore] = None
    equality: str = "none"
    chase: ChaseConfig = field(default_factory=ChaseConfig)
    top: str = "minimal"
    mfa_route: str = "detect"  # or "transform": chase the MFA transform and look for C
    sing_all_shortcut: bool = True  # sing-all with JA is decided by WA on the original set
    ar_strict: bool = False
    weak_dependencies: bool = False  # drop the "derives something new" condition
    equality_facts: bool = False  # put equality facts into the critical instance

    def __post_init__(self):
        if self.notion not in NOTIONS:
            raise ValueError(f"unknown notion {self.notion!r}")
        if self.equality not in EQUALITY_MODES:
            raise ValueError(f"unknown equality mode {self.equality!r}")
        if self.mfa_route not in ("detect", "transform"):
            raise ValueError(f"unknown MFA route {self.mfa_route!r}")

    @property
    def mode(self) -> str:
        return "universal" if self.instance is None else "instance"


def prepare(rs: RuleSet, top: str = "minimal") -> RuleSet:
    """Eliminate body equalities, then make rules safe (adding TOP rules where needed)."""
    return augment_top(eliminate_body_equality(rs), top)


def _has_equality(rs: RuleSet) -> bool:
    return rs.has_equality or any(a.pred == EQUALS for a in rs.seeds)


# --- chase-based notions --------------------------------------------------------


def _chase_stats(out: ChaseOutcome) -> dict:
    terms = out.store.terms()
    return {
        "facts": len(out.store),
        "terms": len(terms),
        "depth": out.stats.max_term_depth,
        "steps": out.stats.steps,
        "elapsedMs": round(out.stats.elapsed * 1000, 3),
    }


def _unknown(notion: str, out: ChaseOutcome) -> Verdict:
    return Verdict(notion, UNKNOWN, {"kind": "limit", "limit": out.limit}, _chase_stats(out))


def msa_check(
    rs: RuleSet,
    instance: Optional[FactStore] = None,
    cfg: Optional[ChaseConfig] = None,
    axiomatize: bool = False,
    equality_facts: bool = False,
    top: str = "minimal",
) -> Verdict:
    """Chase the (datalog) MSA transform and report whether C is derived."""
    inst = instance if instance is not None else critical_instance(rs, include_equality=equality_facts)
    t = msa_transform(rs)
    if axiomatize:
        t = axiomatise(t, top)
    inst = align_instance(inst, t)
    base = cfg or ChaseConfig()
    out = chase(t, inst, replace(base, stop_on=(_C,), detect_cyclic=False, max_depth=None))
    if out.status == STOPPED:
        return Verdict("msa", NOT_ACYCLIC, {"kind": "derivation", "fact": C_PRED.lstrip("_")}, _chase_stats(out))
    if out.status != FIXPOINT:
        return _unknown("msa", out)
    return Verdict("msa", ACYCLIC, None, _chase_stats(out))


def mfa_check(
    rs: RuleSet,
    instance: Optional[FactStore] = None,
    cfg: Optional[ChaseConfig] = None,
    axiomatize: bool = False,
    route: str = "detect",
    equality_facts: bool = False,
    top: str = "minimal",
) -> Verdict:
    """Skolem chase watching for a cyclic term (default), or chase the MFA transform and look for C."""
    inst = instance if instance is not None else critical_instance(rs, include_equality=equality_facts)
    base = cfg or ChaseConfig()
    if route == "detect":
        target = axiomatise(rs, top) if axiomatize else rs
        out = chase(target, align_instance(inst, target), replace(base, detect_cyclic=True))
        if out.status == CYCLIC:
            wit = {"kind": "cyclic-term", "term": str(out.cyclic_term), "firing": str(out.cyclic_firing)}
            return Verdict("mfa", NOT_ACYCLIC, wit, _chase_stats(out))
    else:
        t = mfa_transform(rs)
        if axiomatize:
            t = axiomatise(t, top)
        out = chase(t, align_instance(inst, t), replace(base, stop_on=(_C,), detect_cyclic=False))
        if out.status == STOPPED:
            return Verdict("mfa", NOT_ACYCLIC, {"kind": "derivation", "fact": C_PRED.lstrip("_")}, _chase_stats(out))
    if out.status != FIXPOINT:
        return _unknown("mfa", out)
    return Verdict("mfa", ACYCLIC, None, _chase_stats(out))


# --- dispatch -------------------------------------------------------------------


class _Context:
    """Lazily computed dependency graph shared by all checks over one rule set."""

    def __init__(self, rs: RuleSet, weak: bool):
        self.rs = rs
        self.weak = weak
        self._deps: Optional[DependencyGraph] = None

    @property
    def deps(self) -> DependencyGraph:
        if self._deps is None:
            self._deps = dependency_graph(self.rs, new_condition=not self.weak)
        return self._deps

    def sub_deps(self, sub: RuleSet) -> nx.DiGraph:
        return self.deps.graph.subgraph([r.id for r in sub]).copy()


def _base(notion: str, req: CheckRequest, ctx: _Context, axiomatize: bool) -> Callable[[RuleSet], Verdict]:
    if notion == "wa":
        return wa_check
    if notion == "ja":
        return ja_check
    if notion == "swa":
        return swa_check
    if notion == "fd":
        return fd_check
    if notion == "ar":
        return lambda s: ar_check(s, strict=req.ar_strict)
    if notion == "ga":
        return lambda s: gamma_check(s, depends=ctx.sub_deps(s))
    if notion == "agrd":
        return lambda s: check_with_dependencies(s, None, "agrd", ctx.deps if s is ctx.rs else None)
    if notion == "msa":
        return lambda s: msa_check(s, req.instance, req.chase, axiomatize, req.equality_facts, req.top)
    if notion == "mfa":
        return lambda s: mfa_check(s, req.instance, req.chase, axiomatize, req.mfa_route, req.equality_facts, req.top)
    raise ValueError(notion)


def _run(rs: RuleSet, notion: str, req: CheckRequest, axiomatize: bool = False, ctx: Optional[_Context] = None) -> Verdict:
    ctx = ctx if ctx is not None and ctx.rs is rs else _Context(rs, req.weak_dependencies)
    base = _base(notion, req, ctx, axiomatize)
    if req.dep and notion != "agrd":
        return check_with_dependencies(rs, base, notion, ctx.deps)
    return base(rs)


def _name(req: CheckRequest) -> str:
    return f"{req.notion}-dep" if req.dep and req.notion != "agrd" else req.notion


def check(req: CheckRequest, rs: RuleSet) -> Verdict:
    start = time.perf_counter()
    v = _check(req, rs)
    stats = dict(v.stats)
    stats.setdefault("elapsedMs", round((time.perf_counter() - start) * 1000, 3))
    return replace(v, notion=_name(req), mode=req.mode, equality=req.equality, stats=stats)


def _check(req: CheckRequest, rs: RuleSet) -> Verdict:
    prep = prepare(rs, req.top)
    eq = req.equality
    has_eq = _has_equality(prep)
    if eq == "none":
        if has_eq and req.notion != "wa":
            raise InapplicableError(f"{req.notion} needs equality to be resolved (axiomatize or sing-*)")
        return _run(prep, req.notion, req)
    if eq == "axiomatize":
        if req.notion in ("msa", "mfa") and not req.dep:
            # axioms go in after the transform so replacement also covers F, S and D
            return _run(prep, req.notion, req, axiomatize=has_eq)
        return _run(axiomatise(prep, req.top), req.notion, req)
    if eq == "sing-union":
        return _run(sing_union(prep), req.notion, req)
    if eq == "sing-all" and req.notion == "ja" and req.sing_all_shortcut and not req.dep:
        v = wa_check(prep)
        return replace(v, notion="ja", stats={**v.stats, "shortcut": "wa"})
    return _sing_search(prep, req, any_marking=(eq == "sing-some"))


def _sing_search(prep: RuleSet, req: CheckRequest, any_marking: bool) -> Verdict:
    unknown: Optional[Tuple[str, Verdict]] = None
    last: Optional[Tuple[str, Verdict]] = None
    tried = 0
    for m in enumerate_markings(prep, reduced=True):
        tried += 1
        v = _run(singularise(prep, m), req.notion, req)
        if v.outcome == UNKNOWN:
            unknown = unknown or (str(m), v)
            continue
        if any_marking and v.acyclic:
            return replace(v, witness={"kind": "marking", "marking": str(m)}, stats={**v.stats, "markings": tried})
        if not any_marking and not v.acyclic:
            wit = {"kind": "marking", "marking": str(m), "inner": v.witness}
            return replace(v, witness=wit, stats={**v.stats, "markings": tried})
        last = (str(m), v)
    if unknown is not None:
        m, v = unknown
        return Verdict(req.notion, UNKNOWN, {"kind": "marking", "marking": m, "inner": v.witness}, {**v.stats, "markings": tried})
    outcome = NOT_ACYCLIC if any_marking else ACYCLIC
    stats = {**(last[1].stats if last else {}), "markings": tried}
    wit = {"kind": "markings", "count": tried} if any_marking else None
    return Verdict(req.notion, outcome, wit, stats)


# --- taxonomy -------------------------------------------------------------------

IMPLICATIONS: List[Tuple[str, str]] = (
    [(a, b) for a, b in zip(CHAIN, CHAIN[1:])]
    + [("fd", "ga"), ("agrd", "ga")]
    + [(x, f"{x}-dep") for x in NOTIONS if x != "agrd"]
    + [("mfa-dep", "mfa")]
    + [("agrd", f"{x}-dep") for x in NOTIONS if x != "agrd"]
    + [(f"{a}-dep", f"{b}-dep") for a, b in zip(CHAIN, CHAIN[1:])]
    + [("ga-dep", "ar-dep")]
)


@dataclass
class Taxonomy:
    verdicts: Dict[str, Verdict]
    violations: List[Tuple[str, str]]

    def outcome(self, name: str) -> Optional[str]:
        v = self.verdicts.get(name)
        return v.outcome if v else None

    def to_dict(self) -> dict:
        return {
            "verdicts": {k: v.outcome for k, v in self.verdicts.items()},
            "violations": [f"{a} => {b}" for a, b in self.violations],
        }


def lattice_violations(verdicts: Dict[str, Verdict]) -> List[Tuple[str, str]]:
    bad = []
    for a, b in IMPLICATIONS:
        va, vb = verdicts.get(a), verdicts.get(b)
        if va and vb and va.outcome == ACYCLIC and vb.outcome == NOT_ACYCLIC:
            bad.append((a, b))
    return bad


def taxonomy(
    rs: RuleSet,
    equality: str = "none",
    instance: Optional[FactStore] = None,
    cfg: Optional[ChaseConfig] = None,
    top: str = "minimal",
    dep: bool = True,
) -> Taxonomy:
    """Every applicable notion (and its per-component variant) plus a lattice consistency check."""
    prep = prepare(rs, top)
    has_eq = _has_equality(prep)
    req = CheckRequest("wa", instance=instance, equality=equality, chase=cfg or ChaseConfig(), top=top)
    verdicts: Dict[str, Verdict] = {}

    def record(name: str, v: Verdict) -> None:
        verdicts[name] = replace(v, notion=name, mode=req.mode, equality=equality)

    if equality in ("sing-some", "sing-all"):
        record("wa", wa_check(prep))
        for n in SING_NOTIONS:
            record(n, check(replace(req, notion=n, sing_all_shortcut=False), rs))
        return Taxonomy(verdicts, [])
    if equality == "none" and has_eq:
        record("wa", wa_check(prep))
        return Taxonomy(verdicts, [])
    if equality == "axiomatize":
        target = axiomatise(prep, top)
    elif equality == "sing-union":
        target = sing_union(prep)
    else:
        target = prep
    ctx = _Context(target, False)
    for n in NOTIONS:
        r = replace(req, notion=n, dep=False)
        if n in ("msa", "mfa") and equality == "axiomatize":
            record(n, _run(prep, n, r, axiomatize=has_eq))
        else:
            record(n, _run(target, n, r, ctx=ctx))
        if dep and n != "agrd":
            record(f"{n}-dep", _run(target, n, replace(r, dep=True), ctx=ctx))
    return Taxonomy(verdicts, lattice_violations(verdicts))
