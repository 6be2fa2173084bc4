import random

import pytest

from conftest import load_golden
from gen import random_ruleset
from oracles import depends_brute

import chasecheck as cc
from chasecheck.api import CheckRequest, check
from chasecheck.dependencies import check_with_dependencies, dependency_graph, dependency_partition, rule_depends
from chasecheck.graphs import InapplicableError, fd_check, wa_check
from chasecheck.model import RuleSet


def test_datalog_chain_dependency_witness():
    rs = load_golden("datalog_cycle")
    w = rule_depends(rs.rule("r1"), rs.rule("r2"))
    assert w is not None
    assert [a.pred for a in w.instance] == ["A"]
    assert str(w).startswith("I={A(")


def test_no_self_dependency_through_fresh_values():
    r = load_golden("self_dependency_free").rule("r1")
    assert rule_depends(r, r) is None
    assert check(CheckRequest("agrd"), load_golden("self_dependency_free")).acyclic


def test_new_derivation_condition():
    rs = load_golden("new_derivation_matters")
    assert rule_depends(rs.rule("r3"), rs.rule("r1")) is None
    assert rule_depends(rs.rule("r3"), rs.rule("r1"), new_condition=False) is not None
    assert rule_depends(rs.rule("r1"), rs.rule("r2")) is not None
    assert dependency_graph(rs).acyclic
    assert not dependency_graph(rs, new_condition=False).acyclic
    assert not check(CheckRequest("agrd", weak_dependencies=True), rs).acyclic


def test_partitions():
    assert dependency_partition(load_golden("new_derivation_matters")) == [["r1"], ["r2"], ["r3"]]
    assert dependency_partition(load_golden("datalog_cycle")) == [["r1", "r2", "r3"]]
    assert not dependency_graph(load_golden("datalog_cycle")).acyclic
    assert dependency_partition(RuleSet()) == []


def test_partition_order_and_dot():
    rng = random.Random(26)
    for _ in range(100):
        rs = random_ruleset(rng)
        g = dependency_graph(rs)
        where = {rid: k for k, comp in enumerate(g.components) for rid in comp}
        assert sorted(where) == sorted(r.id for r in rs)
        for a, b in g.graph.edges:
            assert where[a] <= where[b]
        assert all(set(w) for w in g.witnesses)
    dot = dependency_graph(load_golden("datalog_cycle")).to_dot()
    assert '"r1" -> "r2";' in dot


def test_per_component_combinator():
    rs = load_golden("finite_domain")
    g = dependency_graph(rs)
    assert g.depends("r1", "r2") and g.depends("r2", "r1")
    assert not check_with_dependencies(rs, wa_check, "wa-dep").acyclic
    assert check_with_dependencies(rs, fd_check, "fd-dep").acyclic
    assert check_with_dependencies(load_golden("self_dependency_free"), None, "agrd").acyclic
    assert not check_with_dependencies(load_golden("datalog_cycle"), None, "agrd").acyclic


def test_inapplicable_base():
    with pytest.raises(InapplicableError):
        check(CheckRequest("ja", dep=True), load_golden("functional_role"))


def test_brute_force_agreement_both_variants():
    rng = random.Random(23)
    for _ in range(300):
        r1, r2 = random_ruleset(rng, (2, 2), max_body=3, max_head=3, max_vars=3).rules
        assert (rule_depends(r1, r2) is not None) == depends_brute(r1, r2)
        assert (rule_depends(r1, r2, False) is not None) == depends_brute(r1, r2, False)


def test_dependency_variants_on_random_sets():
    rng = random.Random(27)
    for _ in range(150):
        rs = random_ruleset(rng, (1, 4), max_body=2, max_head=2, max_vars=3)
        agrd = dependency_graph(rs).acyclic
        for notion in ("wa", "ja", "fd", "ar", "msa", "mfa"):
            plain = check(CheckRequest(notion), rs)
            dep = check(CheckRequest(notion, dep=True), rs)
            if plain.acyclic:
                assert dep.acyclic, notion
            if agrd:
                assert dep.acyclic, notion
            if notion == "mfa" and plain.known and dep.known:
                assert plain.outcome == dep.outcome
