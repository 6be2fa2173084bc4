"""Skolem chase with the two-phase (datalog first, then functional) discipline.

Each step is computed set-at-a-time: all matches are taken against the
store as it stood at the start of the step, and the new facts are added
together.  Matching is semi-naive: a rule only considers matches that use
at least one fact added since that rule's phase last ran, which gives the
same steps as naive evaluation.
"""

from __future__ import annotations

import bisect
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .model import FUNC, VAR, Atom, FactStore, Rule, RuleSet, Term, substitute
from .transforms import skolemise_rule

Subst = Dict[Term, Term]

FIXPOINT = "fixpoint"
CYCLIC = "cyclic-term"
LIMIT = "limit-exceeded"
STOPPED = "stopped"


@dataclass
class ChaseConfig:
    max_facts: Optional[int] = None
    max_depth: Optional[int] = None
    max_steps: Optional[int] = None
    time_limit: Optional[float] = None
    detect_cyclic: bool = False
    stop_on: Tuple[Atom, ...] = ()
    trace: bool = False

    def __post_init__(self):
        for name in ("max_facts", "max_depth", "max_steps", "time_limit"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class ChaseStats:
    steps: int = 0
    facts: int = 0
    max_term_depth: int = 0
    firings: Dict[str, int] = field(default_factory=dict)
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "facts": self.facts,
            "depth": self.max_term_depth,
            "firings": dict(sorted(self.firings.items())),
        }


@dataclass
class Firing:
    step: int
    rule: str
    subst: Tuple[Tuple[str, str], ...]
    new: Tuple[Atom, ...]

    def __str__(self) -> str:
        s = ", ".join(f"{k}->{v}" for k, v in self.subst)
        return f"step {self.step}: {self.rule} [{s}] + {', '.join(map(str, self.new))}"


@dataclass
class ChaseOutcome:
    status: str
    store: FactStore
    stats: ChaseStats
    initial: int = 0
    generated: int = 0
    cyclic_term: Optional[Term] = None
    cyclic_firing: Optional[Firing] = None
    limit: Optional[str] = None
    trace: List[Firing] = field(default_factory=list)

    @property
    def is_fixpoint(self) -> bool:
        return self.status == FIXPOINT


# --- matching -------------------------------------------------------------------


def _match_term(p: Term, g: Term, s: Subst) -> bool:
    """Extend ``s`` in place so that ``p`` instantiates to ground ``g``."""
    if p.kind == VAR:
        b = s.get(p)
        if b is None:
            s[p] = g
            return True
        return b is g
    if p.kind != FUNC:
        return p is g
    if g.kind != FUNC or g.name != p.name or len(g.args) != len(p.args):
        return False
    return all(_match_term(a, b, s) for a, b in zip(p.args, g.args))


def _bound(t: Term, s: Subst) -> Optional[Term]:
    if t.kind == VAR:
        return s.get(t)
    if t.kind == FUNC:
        if all(_bound(a, s) is not None for a in t.args):
            return substitute(t, s)
        return None
    return t


class _Window:
    """Facts of one predicate with step in (lo, hi]; ``None`` bounds are open."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Optional[int], hi: Optional[int]):
        self.lo, self.hi = lo, hi

    def admits(self, step: int) -> bool:
        return (self.lo is None or step > self.lo) and (self.hi is None or step <= self.hi)


def _candidates(a: Atom, store: FactStore, s: Subst, w: Optional[_Window], steps: Dict[str, List[int]]):
    best: Optional[List[Atom]] = None
    for i, t in enumerate(a.args):
        g = _bound(t, s)
        if g is not None:
            lst = store.with_arg(a.pred, i, g)
            if best is None or len(lst) < len(best):
                best = lst
                if not best:
                    break
    if best is not None:
        return best, True
    lst = store.with_pred(a.pred)
    if w is not None and w.lo is not None:
        # Facts are stored in step order, so the delta is a suffix.
        st = steps.get(a.pred)
        if st is None:
            st = steps[a.pred] = [store.step_of(f) for f in lst]
        return lst[bisect.bisect_right(st, w.lo) :], w.hi is not None
    return lst, w is not None


def _match(
    atoms: List[Atom],
    windows: List[Optional[_Window]],
    store: FactStore,
    s: Subst,
    steps: Dict[str, List[int]],
) -> Iterator[Subst]:
    if not atoms:
        yield s
        return
    # most constrained atom first
    pick, pick_c, pick_f = 0, None, True
    for j, a in enumerate(atoms):
        c, f = _candidates(a, store, s, windows[j], steps)
        if pick_c is None or len(c) < len(pick_c):
            pick, pick_c, pick_f = j, c, f
            if not c:
                return
    a, w = atoms[pick], windows[pick]
    rest = atoms[:pick] + atoms[pick + 1 :]
    rest_w = windows[:pick] + windows[pick + 1 :]
    for fact in pick_c:
        if fact.pred != a.pred or len(fact.args) != len(a.args):
            continue
        if pick_f and w is not None and not w.admits(store.step_of(fact)):
            continue
        s2 = dict(s)
        if all(_match_term(p, g, s2) for p, g in zip(a.args, fact.args)):
            yield from _match(rest, rest_w, store, s2, steps)


def match_conjunction(atoms: Sequence[Atom], store: FactStore, subst: Optional[Mapping[Term, Term]] = None) -> Iterator[Subst]:
    """All substitutions mapping ``atoms`` into ``store`` (deterministic order)."""
    atoms = list(atoms)
    yield from _match(atoms, [None] * len(atoms), store, dict(subst or {}), {})


def _semi_naive(body: Sequence[Atom], store: FactStore, last: int, steps) -> Iterator[Subst]:
    """Matches of ``body`` using at least one fact with step > ``last``."""
    if last < 0:
        yield from _match(list(body), [None] * len(body), store, {}, steps)
        return
    n = len(body)
    for k in range(n):
        windows = [_Window(None, last) if j < k else (_Window(last, None) if j == k else None) for j in range(n)]
        yield from _match(list(body), windows, store, {}, steps)


def apply_rule(r: Rule, store: FactStore) -> Dict[Atom, None]:
    """Head instances over all body matches that are not yet in ``store``."""
    r = skolemise_rule(r)
    new: Dict[Atom, None] = {}
    for s in match_conjunction(r.body, store):
        for h in r.head:
            f = h.substitute(s)
            if f not in store:
                new[f] = None
    return new


# --- the chase ------------------------------------------------------------------


class _Stop(Exception):
    def __init__(self, status, **info):
        self.status, self.info = status, info


def _is_functional(r: Rule) -> bool:
    return any(t.kind == FUNC for a in r.head for t in a.args)


def chase(rs: RuleSet, instance: Optional[FactStore] = None, cfg: Optional[ChaseConfig] = None) -> ChaseOutcome:
    cfg = cfg or ChaseConfig()
    start = time.perf_counter()
    store = instance.copy() if instance is not None else FactStore()
    initial = len(store)
    store.update(rs.seeds, 0)
    rules = [skolemise_rule(r) for r in rs]
    phases = ([r for r in rules if not _is_functional(r)], [r for r in rules if _is_functional(r)])
    last = [-1, -1]
    stats = ChaseStats(firings={r.id: 0 for r in rules})
    stats.max_term_depth = max((t.depth for f in store for t in f.args), default=0)
    trace: List[Firing] = []
    generated = 0
    step = 0
    stop_on = set(cfg.stop_on)

    def check_time():
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            raise _Stop(LIMIT, limit="time")

    def run_phase(phase: int) -> Dict[Atom, None]:
        new: Dict[Atom, None] = {}
        steps_cache: Dict[str, List[int]] = {}
        for r in phases[phase]:
            check_time()
            if not r.body:
                matches: Iterable[Subst] = [{}] if last[phase] < 0 else []
            else:
                matches = _semi_naive(r.body, store, last[phase], steps_cache)
            for s in matches:
                stats.firings[r.id] += 1
                fresh = []
                for h in r.head:
                    f = h.substitute(s)
                    if f in store or f in new:
                        continue
                    for t in f.args:
                        if t.kind != FUNC:
                            continue
                        if cfg.detect_cyclic and t.cyclic:
                            firing = Firing(step + 1, r.id, _show(s), (f,))
                            raise _Stop(CYCLIC, term=t, firing=firing)
                        if cfg.max_depth is not None and t.depth > cfg.max_depth:
                            raise _Stop(LIMIT, limit="depth")
                    new[f] = None
                    fresh.append(f)
                if fresh:
                    if cfg.trace:
                        trace.append(Firing(step + 1, r.id, _show(s), tuple(fresh)))
                    if cfg.max_facts is not None and len(store) + len(new) > cfg.max_facts:
                        raise _Stop(LIMIT, limit="facts")
        return new

    status, info = FIXPOINT, {}
    try:
        if stop_on & set(store):
            raise _Stop(STOPPED)
        while True:
            if cfg.max_steps is not None and step >= cfg.max_steps:
                raise _Stop(LIMIT, limit="steps")
            new = run_phase(0)
            last[0] = step
            phase = 0
            if not new:
                new = run_phase(1)
                last[1] = step
                phase = 1
            if not new:
                break
            step += 1
            store.update(new, step)
            if phase:
                generated += len(new)
            stats.max_term_depth = max(stats.max_term_depth, max((t.depth for f in new for t in f.args), default=0))
            if stop_on and any(f in stop_on for f in new):
                raise _Stop(STOPPED)
    except _Stop as e:
        status, info = e.status, e.info
    stats.steps = step
    stats.facts = len(store)
    stats.elapsed = time.perf_counter() - start
    return ChaseOutcome(
        status,
        store,
        stats,
        initial=initial,
        generated=generated,
        cyclic_term=info.get("term"),
        cyclic_firing=info.get("firing"),
        limit=info.get("limit"),
        trace=trace,
    )


def _show(s: Mapping[Term, Term]) -> Tuple[Tuple[str, str], ...]:
    return tuple(sorted((str(k), str(v)) for k, v in s.items()))


# --- metrics --------------------------------------------------------------------


class NotAFixpoint(ValueError):
    pass


def ontology_depth(outcome: ChaseOutcome) -> int:
    """Maximal function-symbol nesting depth over the terms of a completed chase."""
    if not outcome.is_fixpoint:
        raise NotAFixpoint(f"chase ended with status {outcome.status}")
    return max((t.depth for f in outcome.store for t in f.args), default=0)


@dataclass(frozen=True)
class Metrics:
    generated_size: Fraction
    materialisation_size: Fraction

    def to_dict(self) -> dict:
        return {"generatedSize": self.generated_size, "materialisationSize": self.materialisation_size}


def materialisation_metrics(before: FactStore, outcome: ChaseOutcome) -> Metrics:
    """Generated size (facts from generating rules per input fact) and materialisation size (output per input fact)."""
    if not outcome.is_fixpoint:
        raise NotAFixpoint(f"chase ended with status {outcome.status}")
    n = len(before)
    if n == 0:
        raise ZeroDivisionError("metrics are undefined for an empty input instance")
    return Metrics(Fraction(outcome.generated, n), Fraction(len(outcome.store), n))
