import itertools
import random
from fractions import Fraction

import pytest

from conftest import load_golden
from gen import random_instance, random_ruleset

import chasecheck as cc
from chasecheck.chase import (
    CYCLIC, FIXPOINT, LIMIT, STOPPED, ChaseConfig, NotAFixpoint, _is_functional, apply_rule, chase,
    match_conjunction, materialisation_metrics, ontology_depth,
)
from chasecheck.formats import parse_facts, parse_rules
from chasecheck.model import AXEQ, STAR, Atom, FactStore, RuleSet, const, func, var
from chasecheck.transforms import C_PRED, axiomatise, critical_instance, mfa_transform, skolemise_rule

a, b, c = const("a"), const("b"), const("c")
x, y = var("x"), var("y")


def shown(atoms):
    return {str(f) for f in atoms}


# --- matching -------------------------------------------------------------------------

def test_match_single_atom():
    store = FactStore([Atom("A", (a,)), Atom("A", (b,))])
    assert len(list(match_conjunction([Atom("A", (x,))], store))) == 2


def test_match_join_against_brute_force():
    store = parse_facts("R(a,b). R(b,a). R(c,c).")
    body = [Atom("R", (x, y)), Atom("R", (y, x))]
    got = {(s[x], s[y]) for s in match_conjunction(body, store)}
    assert got == {(a, b), (b, a), (c, c)}
    brute = {(u, v) for u, v in itertools.product([a, b, c], repeat=2)
             if all(f.substitute({x: u, y: v}) in store for f in body)}
    assert got == brute


def test_match_is_deterministic_and_respects_seed_substitution():
    store = parse_facts("R(a,b). R(b,a). R(c,c).")
    body = [Atom("R", (x, y))]
    assert [dict(s) for s in match_conjunction(body, store)] == [dict(s) for s in match_conjunction(body, store)]
    assert [s[y] for s in match_conjunction(body, store, {x: b})] == [a]


def test_match_functional_patterns():
    f = func("f", [a])
    store = FactStore([Atom("P", (f,)), Atom("P", (a,))])
    got = list(match_conjunction([Atom("P", (func("f", [x]),))], store))
    assert got == [{x: a}]


def test_rule_r2_blocked_on_generated_term():
    rs = load_golden("generating_chain")
    out = chase(cc.prepare(rs), critical_instance(rs))
    f_star = func("__f_r1_1", [STAR])
    assert Atom("R", (f_star, func("__f_r3_1", [f_star]))) in out.store
    assert not list(match_conjunction(rs.rule("r2").body, out.store, {var("x2"): f_star}))


# --- rule application -----------------------------------------------------------------

def test_apply_tracked_rule():
    rs = load_golden("generating_chain")
    r = mfa_transform(rs).rule("r1")
    new = apply_rule(r, critical_instance(rs))
    fs = "__f_r1_1(*)"
    assert shown(new) == {f"R(*,{fs})", f"B({fs})", f"__F_r1_1({fs})", f"__S(*,{fs})"}


def test_apply_rule_satisfied_head():
    r = parse_rules("A(?x) -> B(?x) .").rules[0]
    assert apply_rule(r, parse_facts("A(a). B(a).")) == {}


def test_apply_functional_dependency_under_axioms():
    ax = axiomatise(load_golden("functional_role"))
    r = ax.rule("r2")
    fs = func("__f_r1_1", [STAR])
    store = FactStore([Atom("R", (STAR, fs)), Atom("R", (STAR, STAR))])
    assert Atom(AXEQ, (STAR, fs)) in apply_rule(r, store)


# --- chase ----------------------------------------------------------------------------

def test_chase_example_table_and_depth():
    rs = load_golden("generating_chain")
    out = chase(cc.prepare(rs), critical_instance(rs))
    assert out.status == FIXPOINT and len(out.store) == 13
    assert ontology_depth(out) == 2
    mfa = chase(mfa_transform(rs), critical_instance(rs))
    assert len(mfa.store) == 23 and ontology_depth(mfa) == 2
    assert C_PRED not in mfa.store.predicates()


def test_chase_empty_rules():
    inst = parse_facts("A(a). R(a,b).")
    out = chase(RuleSet(), inst)
    assert out.is_fixpoint and out.store.as_set() == inst.as_set()
    assert len(inst) == 2  # the input is not modified


def test_seeds_injected():
    out = chase(cc.prepare(parse_rules("-> A(a) .\nA(?x) -> B(?x) .")))
    assert shown(out.store) == {"A(a)", "B(a)"}


def test_cyclic_detection_and_limits():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y), A(?y) .")
    inst = parse_facts("A(a).")
    out = chase(rs, inst, ChaseConfig(detect_cyclic=True))
    assert out.status == CYCLIC and out.cyclic_term.cyclic
    assert out.cyclic_firing.rule == "r1"
    assert chase(rs, inst, ChaseConfig(max_depth=5)).limit == "depth"
    assert chase(rs, inst, ChaseConfig(max_facts=20)).limit == "facts"
    lim = chase(rs, inst, ChaseConfig(max_steps=3))
    assert lim.status == LIMIT and lim.limit == "steps" and lim.stats.steps == 3
    assert chase(rs, inst, ChaseConfig(time_limit=0.05, max_depth=10**6)).status == LIMIT
    with pytest.raises(ValueError):
        ChaseConfig(max_facts=0)


def test_stop_on():
    rs = parse_rules("A(?x) -> B(?x) .\nB(?x) -> C(?x) .")
    out = chase(rs, parse_facts("A(a)."), ChaseConfig(stop_on=(Atom("B", (a,)),)))
    assert out.status == STOPPED and Atom("C", (a,)) not in out.store


def test_ontology_depth_requires_fixpoint():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y), A(?y) .")
    out = chase(rs, parse_facts("A(a)."), ChaseConfig(max_steps=2))
    with pytest.raises(NotAFixpoint):
        ontology_depth(out)
    assert ontology_depth(chase(load_golden("datalog_cycle"), parse_facts("A(a)."))) == 0


def test_metrics():
    before = parse_facts("A(a).")
    out = chase(parse_rules("A(?x) -> B(?x) ."), before)
    m = materialisation_metrics(before, out)
    assert m.materialisation_size == 2 and m.generated_size == 0
    out = chase(parse_rules("A(?x) -> exists ?y . R(?x,?y) ."), before)
    m = materialisation_metrics(before, out)
    assert m.generated_size == Fraction(1) and m.materialisation_size == 2
    assert m.to_dict() == {"generatedSize": Fraction(1), "materialisationSize": Fraction(2)}
    with pytest.raises(ZeroDivisionError):
        materialisation_metrics(FactStore(), chase(RuleSet(), FactStore()))


# --- properties -----------------------------------------------------------------------

def _random_runs(seed, n=120):
    rng = random.Random(seed)
    for _ in range(n):
        rs = random_ruleset(rng, (1, 4), max_body=2, max_head=2, max_vars=3)
        inst = random_instance(rng)
        yield rs, inst, chase(rs, inst, ChaseConfig(max_depth=4, max_facts=3000, trace=True))


def test_two_phase_discipline_and_monotonicity():
    for rs, inst, out in _random_runs(1):
        functional = {r.id for r in rs if _is_functional(skolemise_rule(r))}
        by_step = {}
        for f in out.trace:
            by_step.setdefault(f.step, set()).add(f.rule in functional)
        assert all(len(kinds) == 1 for kinds in by_step.values())
        assert inst.as_set() <= out.store.as_set()
        steps = [out.store.step_of(f) for f in out.store]
        assert steps == sorted(steps)


def test_fixpoint_soundness():
    for rs, _, out in _random_runs(2):
        if out.is_fixpoint:
            assert all(not apply_rule(r, out.store) for r in rs)


def test_rule_order_independence():
    for rs, inst, out in _random_runs(3, 80):
        rev = chase(RuleSet(tuple(reversed(rs.rules))), inst, ChaseConfig(max_depth=4, max_facts=3000))
        if out.is_fixpoint:
            assert rev.store.as_set() == out.store.as_set()


def test_datalog_bound():
    rng = random.Random(9)
    for _ in range(150):
        rs = random_ruleset(rng, (1, 5), existential=0.0, constants=0.3)
        inst = random_instance(rng)
        out = chase(rs, inst)
        preds = dict(rs.predicates)
        preds.update((f.pred, len(f.args)) for f in inst)
        consts = set(rs.signature.constants) | set(inst.constants)
        assert out.is_fixpoint
        assert len(out.store) <= len(preds) * max(1, len(consts)) ** max(preds.values())


def test_c_follows_cyclic_term_quickly():
    rng = random.Random(10)
    seen = 0
    for _ in range(300):
        rs = random_ruleset(rng, (1, 4), max_body=2, max_head=2, max_vars=3)
        t = mfa_transform(cc.prepare(rs))
        ci = critical_instance(rs)
        first = chase(t, ci, ChaseConfig(detect_cyclic=True, max_facts=20000))
        if first.status != CYCLIC:
            continue
        seen += 1
        k = first.cyclic_firing.step
        later = chase(t, ci, ChaseConfig(stop_on=(Atom(C_PRED, ()),), max_facts=50000))
        assert later.status == STOPPED
        assert later.stats.steps <= k + 4
    assert seen > 10
