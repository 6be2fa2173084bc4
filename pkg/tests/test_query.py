import random

import pytest

from conftest import load_golden
from gen import random_instance, random_query, random_ruleset
from oracles import BoundExceeded, certain_answers

from chasecheck.chase import ChaseConfig
from chasecheck.formats import parse_facts, parse_query, parse_rules
from chasecheck.graphs import InapplicableError
from chasecheck.model import RuleSet, const
from chasecheck.query import ALL, ChaseLimitError, answer
from chasecheck.transforms import enumerate_markings

a, b = const("a"), const("b")


def test_functional_role_sing_mode():
    rs = load_golden("functional_role")
    q = parse_query("ask exists ?y . R(a,?y) .")
    assert answer(rs, parse_facts("A(a). B(a)."), q, equality="sing") == {()}
    assert answer(rs, parse_facts("A(a). B(a)."), q, equality="axiomatize") == {()}


def test_sing_answers_independent_of_marking():
    rs = load_golden("functional_role")
    inst = parse_facts("A(a). B(a). R(a,b). R(a,a).")
    q = parse_query("ask R(?x,?y) .")
    cfg = ChaseConfig(max_depth=6)
    results = set()
    for m in enumerate_markings(rs):
        try:
            results.add(answer(rs, inst, q, equality="sing", marking=m, cfg=cfg))
        except ChaseLimitError:
            continue  # some markings do not terminate on this set
    # R is functional, so R(a,b) and R(a,a) force a = b
    assert results == {frozenset({(a, a), (a, b), (b, a), (b, b)})}


def test_verbatim_fact_match():
    q = parse_query("ask R(?x,?y) .")
    assert answer(RuleSet(), parse_facts("R(a,b)."), q) == {(a, b)}


def test_nulls_are_not_answers():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y) .")
    inst = parse_facts("A(a).")
    assert answer(rs, inst, parse_query("ask R(?x,?y) .")) == frozenset()
    assert answer(rs, inst, parse_query("ask exists ?y . R(?x,?y) .")) == {(a,)}


def test_inconsistency_gives_everything():
    rs = parse_rules("A(?x), B(?x) -> BOT(?x) .")
    q = parse_query("ask R(?x,?y) .")
    assert answer(rs, parse_facts("A(a). B(a)."), q) is ALL
    assert answer(rs, parse_facts("A(a). B(b)."), q) == frozenset()


def test_equality_requires_a_mode():
    rs = load_golden("functional_role")
    q = parse_query("ask A(?x) .")
    with pytest.raises(InapplicableError):
        answer(rs, parse_facts("A(a)."), q)
    with pytest.raises(ValueError):
        answer(RuleSet(), parse_facts("A(a)."), q, equality="rewrite")


def test_chase_limit_raises():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y), A(?y) .")
    with pytest.raises(ChaseLimitError):
        answer(rs, parse_facts("A(a)."), parse_query("ask A(?x) ."), cfg=ChaseConfig(max_depth=4))


def test_modes_agree_without_equality():
    rng = random.Random(61)
    for _ in range(150):
        rs = random_ruleset(rng, (1, 3), max_body=2, max_head=2, max_vars=3, existential=0.3)
        inst, q = random_instance(rng), random_query(rng)
        cfg = ChaseConfig(max_depth=4, max_facts=3000)
        try:
            plain = answer(rs, inst, q, cfg=cfg)
        except ChaseLimitError:
            continue
        assert answer(rs, inst, q, equality="axiomatize", cfg=cfg) == plain
        assert answer(rs, inst, q, equality="sing", cfg=cfg) == plain


def test_monotone_in_the_instance():
    rng = random.Random(62)
    for _ in range(150):
        rs = random_ruleset(rng, (1, 3), max_body=2, max_head=2, max_vars=3, existential=0.3)
        small, more, q = random_instance(rng), random_instance(rng), random_query(rng)
        big = parse_facts(" ".join(f"{f}." for f in list(small) + list(more)))
        cfg = ChaseConfig(max_depth=4, max_facts=3000)
        try:
            lo, hi = answer(rs, small, q, cfg=cfg), answer(rs, big, q, cfg=cfg)
        except ChaseLimitError:
            continue
        if lo is not ALL:
            assert hi is ALL or lo <= hi


def test_empty_rules_match_oracle():
    rng = random.Random(63)
    for _ in range(200):
        inst, q = random_instance(rng, max_facts=6), random_query(rng)
        want = certain_answers(RuleSet(), list(inst), q.answer, q.atoms)
        assert answer(RuleSet(), inst, q) == want


def test_equality_sets_match_oracle():
    rng = random.Random(64)
    checked = 0
    for _ in range(120):
        rs = random_ruleset(rng, (1, 3), max_body=2, max_head=2, max_vars=3, equality=0.3, existential=0.2)
        inst, q = random_instance(rng), random_query(rng)
        try:
            want = certain_answers(rs, list(inst), q.answer, q.atoms, bound=4, max_facts=1500)
        except BoundExceeded:
            continue
        got = answer(rs, inst, q, equality="axiomatize", cfg=ChaseConfig(max_facts=20000))
        assert got == want
        checked += 1
    assert checked > 30
