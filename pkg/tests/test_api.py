import json
import random
import time
from dataclasses import replace

import pytest

from conftest import GOLDEN, load_golden
from gen import random_ruleset

import chasecheck as cc
from chasecheck.api import IMPLICATIONS, CheckRequest, check, lattice_violations, taxonomy
from chasecheck.chase import ChaseConfig
from chasecheck.formats import parse_facts, parse_rules
from chasecheck.graphs import InapplicableError, wa_check

EXPECTED = json.loads((GOLDEN / "expected.json").read_text())
CASES = [(name, mode, notion, want)
         for name, modes in sorted(EXPECTED.items())
         for mode, cells in modes.items()
         for notion, want in cells.items()]


def _request(mode, notion, **kw):
    base, dep = (notion[:-4], True) if notion.endswith("-dep") else (notion, False)
    return CheckRequest(base, dep=dep, equality=mode, **kw)


@pytest.mark.parametrize("name,mode,notion,want", CASES, ids=[f"{n}-{m}-{k}" for n, m, k, _ in CASES])
def test_golden_verdict(name, mode, notion, want):
    rs = load_golden(name)
    start = time.perf_counter()
    v = check(_request(mode, notion), rs)
    assert time.perf_counter() - start < 1.0
    assert v.notion == notion
    assert v.known and v.acyclic is want, v.witness


# --- single checks ----------------------------------------------------------------------

def test_generating_chain_msa_and_ja():
    rs = load_golden("generating_chain")
    assert check(CheckRequest("msa"), rs).acyclic
    ja = check(CheckRequest("ja"), rs)
    assert ja.outcome == cc.NOT_ACYCLIC and ja.witness["kind"] == "cycle"


def test_summarising_too_coarse_routes_agree():
    rs = load_golden("summarising_too_coarse")
    assert not check(CheckRequest("msa"), rs).acyclic
    detect = check(CheckRequest("mfa"), rs)
    transform = check(CheckRequest("mfa", mfa_route="transform"), rs)
    assert detect.acyclic and transform.acyclic


def test_mfa_witnesses_per_route():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y), A(?y) .")
    d = check(CheckRequest("mfa"), rs)
    t = check(CheckRequest("mfa", mfa_route="transform"), rs)
    assert d.witness["kind"] == "cyclic-term" and t.witness["kind"] == "derivation"
    assert not d.acyclic and not t.acyclic


def test_functional_role_modes():
    rs = load_golden("functional_role")
    assert not check(CheckRequest("mfa", equality="axiomatize"), rs).acyclic
    some = check(CheckRequest("ja", equality="sing-some"), rs)
    assert some.acyclic and some.witness["kind"] == "marking"
    every = check(CheckRequest("msa", equality="sing-all"), rs)
    assert not every.acyclic and every.witness["kind"] == "marking" and every.stats["markings"] >= 1


def test_equality_needs_a_mode():
    rs = load_golden("functional_role")
    for n in ("ja", "msa", "mfa", "fd"):
        with pytest.raises(InapplicableError):
            check(CheckRequest(n), rs)
    assert check(CheckRequest("wa"), rs).known


def test_invalid_requests():
    with pytest.raises(ValueError):
        CheckRequest("xa")
    with pytest.raises(ValueError):
        CheckRequest("ja", equality="rewrite")
    with pytest.raises(ValueError):
        CheckRequest("mfa", mfa_route="guess")


def test_limits_give_unknown():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y), A(?y) .")
    v = check(CheckRequest("msa", chase=ChaseConfig(max_steps=1)), rs)
    assert v.outcome == cc.UNKNOWN and not v.known
    assert v.witness == {"kind": "limit", "limit": "steps"}
    v = check(CheckRequest("mfa", mfa_route="transform", chase=ChaseConfig(max_facts=3)), rs)
    assert v.outcome == cc.UNKNOWN


def test_instance_mode():
    rs = parse_rules("A(?x) -> exists ?y . R(?x,?y) .\nR(?x,?y) -> exists ?z . R(?y,?z) .")
    assert not check(CheckRequest("mfa"), rs).acyclic
    # without any A or R facts nothing fires
    inst = parse_facts("B(a).")
    v = check(CheckRequest("mfa", instance=inst), rs)
    assert v.acyclic and v.mode != check(CheckRequest("mfa"), rs).mode
    assert check(CheckRequest("msa", instance=inst), rs).acyclic


def test_elapsed_recorded():
    v = check(CheckRequest("wa"), load_golden("finite_domain"))
    assert v.stats["elapsedMs"] >= 0


def test_sing_all_shortcut_matches_search():
    rng = random.Random(52)
    seen = 0
    for _ in range(150):
        rs = random_ruleset(rng, (1, 4), max_body=2, max_head=2, max_vars=3, equality=0.3)
        fast = check(CheckRequest("ja", equality="sing-all"), rs)
        slow = check(CheckRequest("ja", equality="sing-all", sing_all_shortcut=False), rs)
        assert fast.stats.get("shortcut") == "wa"
        assert fast.outcome == slow.outcome
        seen += 1
    assert seen == 150


# --- taxonomy ---------------------------------------------------------------------------

def test_taxonomy_finite_domain():
    t = taxonomy(load_golden("finite_domain"))
    assert t.outcome("wa") == cc.NOT_ACYCLIC and t.outcome("fd") == cc.ACYCLIC
    assert t.outcome("fd-dep") == cc.ACYCLIC and not t.violations
    d = t.to_dict()
    assert set(d) == {"verdicts", "violations"} and d["verdicts"]["msa"] == cc.ACYCLIC


def test_taxonomy_ranking_not_gamma():
    t = taxonomy(load_golden("ranking_not_gamma"))
    assert t.outcome("ar") == cc.ACYCLIC and t.outcome("ga") == cc.NOT_ACYCLIC
    assert t.outcome("ja") == cc.ACYCLIC and not t.violations


def test_taxonomy_components():
    t = taxonomy(load_golden("components_weakly_acyclic"))
    assert t.outcome("wa-dep") == cc.ACYCLIC and t.outcome("ga") == cc.NOT_ACYCLIC
    assert t.outcome("wa") == cc.NOT_ACYCLIC
    assert "agrd-dep" not in t.verdicts


def test_taxonomy_with_equality():
    rs = load_golden("functional_role")
    assert set(taxonomy(rs).verdicts) == {"wa"}
    t = taxonomy(rs, equality="sing-some")
    assert set(t.verdicts) == {"wa", "ja", "msa", "mfa"}
    assert all(t.outcome(n) == cc.ACYCLIC for n in ("ja", "msa", "mfa"))
    t = taxonomy(rs, equality="axiomatize")
    assert t.outcome("mfa") == cc.NOT_ACYCLIC and not t.violations


def test_lattice_violation_detection():
    t = taxonomy(load_golden("generating_chain"))
    forged = dict(t.verdicts)
    forged["ja"] = replace(forged["ja"], outcome=cc.ACYCLIC)
    assert ("ja", "swa") in lattice_violations(forged)
    assert ("msa", "mfa") in IMPLICATIONS and ("swa", "msa") in IMPLICATIONS


def test_chase_notions_on_random_sets():
    rng = random.Random(55)
    for _ in range(200):
        rs = random_ruleset(rng, (1, 4), max_body=2, max_head=2, max_vars=3)
        swa, msa, mfa = (check(CheckRequest(n), rs) for n in ("swa", "msa", "mfa"))
        if swa.acyclic:
            assert msa.acyclic
        if msa.acyclic:
            assert mfa.acyclic
        for route in ("transform",):
            other = check(CheckRequest("mfa", mfa_route=route), rs)
            if mfa.known and other.known:
                assert other.outcome == mfa.outcome


def test_sing_modes_on_random_sets():
    rng = random.Random(56)
    for _ in range(80):
        rs = random_ruleset(rng, (1, 3), max_body=2, max_head=2, max_vars=3, equality=0.3)
        for n in ("ja", "msa", "mfa"):
            every = check(CheckRequest(n, equality="sing-all", sing_all_shortcut=False), rs)
            some = check(CheckRequest(n, equality="sing-some"), rs)
            if every.acyclic:
                assert some.acyclic, n
        if check(CheckRequest("ja", equality="sing-union"), rs).acyclic:
            assert wa_check(cc.prepare(rs)).acyclic
