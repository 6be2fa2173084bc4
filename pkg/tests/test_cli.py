import io
import json
import subprocess
import sys

import pytest

from conftest import GOLDEN

from chasecheck.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def golden(name):
    return GOLDEN / f"{name}.rules"


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p
    return write


# --- exit codes -------------------------------------------------------------------------

def test_exit_codes(files):
    assert run("check", golden("generating_chain"), "--notion", "msa")[0] == 0
    assert run("check", golden("generating_chain"), "--notion", "ja")[0] == 1
    loop = files("loop.rules", "A(?x) -> exists ?y . R(?x,?y), A(?y) .\n")
    assert run("check", loop, "--notion", "msa", "--max-facts", "5")[0] == 2
    assert run("check", loop, "--notion", "bogus")[0] == 64
    assert run()[0] == 64
    assert run("check", files("missing.txt", "x").parent / "nope.rules", "--notion", "wa")[0] == 64
    code, _, err = run("check", files("bad.rules", "A(?x) -> B(?x)\n"), "--notion", "wa")
    assert code == 65 and "bad.rules:" in err
    assert run("check", golden("functional_role"), "--notion", "ja")[0] == 64


def test_taxonomy_violation_exit_is_internal(monkeypatch):
    import chasecheck.cli as cli
    from chasecheck.api import Taxonomy
    monkeypatch.setattr(cli, "taxonomy", lambda *a, **k: Taxonomy({}, [("wa", "fd")]))
    code, out, _ = run("taxonomy", golden("finite_domain"))
    assert code == 70 and "LATTICE VIOLATION: wa acyclic but fd not" in out


# --- check ------------------------------------------------------------------------------

def test_check_outputs():
    code, out, _ = run("check", golden("generating_chain"), "--notion", "ja", "--json")
    d = json.loads(out)
    assert code == 1 and d["verdict"] == "not-acyclic"
    assert d["witness"]["cycle"] == ["r1:?y1", "r1:?y1"]
    assert d["stats"]["elapsedMs"] is None
    code, out, _ = run("check", golden("generating_chain"), "--notion", "msa")
    assert code == 0 and "acyclic" in out


def test_check_json_is_deterministic():
    outs = {run("check", golden("summarising_too_coarse"), "--notion", "mfa", "--json")[1] for _ in range(3)}
    assert len(outs) == 1
    timed = json.loads(run("check", golden("summarising_too_coarse"), "--notion", "mfa", "--json", "--timing")[1])
    assert timed["stats"]["elapsedMs"] is not None


def test_check_with_equality_mode_and_trace():
    code, out, _ = run("check", golden("functional_role"), "--notion", "mfa", "--equality", "sing-some")
    assert code == 0
    code, out, _ = run("check", golden("generating_chain"), "--notion", "mfa", "--trace")
    assert code == 0 and "# " in out


def test_check_instance(files):
    inst = files("i.facts", "B(a).\n")
    rules = files("g.rules", "A(?x) -> exists ?y . R(?x,?y), A(?y) .\n")
    assert run("check", rules, "--notion", "mfa")[0] == 1
    assert run("check", rules, "--notion", "mfa", "--instance", inst)[0] == 0


def test_taxonomy_json():
    code, out, _ = run("taxonomy", golden("finite_domain"), "--json")
    d = json.loads(out)
    assert code == 0 and d["verdicts"]["fd"] == "acyclic" and d["verdicts"]["wa"] == "not-acyclic"
    assert d["violations"] == []
    assert "wa-dep" not in json.loads(run("taxonomy", golden("finite_domain"), "--json", "--no-dep")[1])["verdicts"]


# --- chase, stats, query ----------------------------------------------------------------

def test_chase_command(files):
    facts = files("f.facts", "A(a).\n")
    rules = files("r.rules", "A(?x) -> exists ?y . R(?x,?y) .\n")
    code, out, _ = run("chase", rules, facts, "--json", "--facts-out")
    d = json.loads(out)
    assert code == 0 and d["status"] == "fixpoint"
    assert d["facts"] == ["A(a)", "R(a,__f_r1_1(a))"]
    code, out, _ = run("chase", rules, facts, "--facts-out")
    assert "R(a,__f_r1_1(a)) ." in out and "status: fixpoint" in out
    loop = files("loop.rules", "A(?x) -> exists ?y . R(?x,?y), A(?y) .\n")
    assert run("chase", loop, facts, "--max-steps", "3")[0] == 2


def test_stats_fields():
    code, out, _ = run("stats", golden("generating_chain"), "--json")
    s = json.loads(out)["stats"]
    assert code == 0 and s["depth"] == 2 and s["facts"] == 13
    assert {"generatedSize", "materialisationSize", "before", "new", "generated"} <= set(s)
    assert s["elapsedMs"] is None
    code, out, _ = run("stats", golden("generating_chain"))
    assert "depth: 2" in out and "materialisationSize:" in out


def test_query_command(files):
    rules = files("r.rules", "A(?x) -> exists ?y . R(?x,?y) .\n")
    facts = files("f.facts", "A(a). R(b,c).\n")
    q = files("q.cq", "ask R(?x,?y) .\n")
    code, out, _ = run("query", rules, facts, q)
    assert code == 0 and out == "b\tc\n"
    boolean = files("b.cq", "ask exists ?y . R(a,?y) .\n")
    assert run("query", rules, facts, boolean)[1] == "true\n"
    d = json.loads(run("query", rules, facts, boolean, "--json")[1])
    assert d["boolean"] is True and d["answers"] == [[]]
    bot = files("bot.rules", "A(?x) -> BOT(?x) .\n")
    assert "inconsistent" in run("query", bot, facts, q)[1]


def test_query_sing(files):
    facts = files("f.facts", "A(a). B(a).\n")
    q = files("q.cq", "ask exists ?y . R(a,?y) .\n")
    code, out, _ = run("query", golden("functional_role"), facts, q, "--equality", "sing")
    assert code == 0 and out == "true\n"


# --- translate, corpus ------------------------------------------------------------------

def test_translate(files, tmp_path):
    dl = files("o.dlx", "A subclassof some R A\n")
    code, out, _ = run("translate", dl)
    assert code == 0 and "exists" in out
    target = tmp_path / "o.rules"
    assert run("translate", dl, "-o", target)[0] == 0
    assert target.read_text() == out
    code, out, _ = run("translate", dl, "--check", "mfa")
    assert code == 1 and "not-acyclic" in out


def test_corpus_golden_directory():
    code, out, _ = run("corpus", GOLDEN, "--json")
    d = json.loads(out)
    assert code == 0 and d["errors"] == 0
    assert len(d["files"]) == 12
    without = d["groups"]["withoutEquality"]["<100"]
    assert without["total"] == 11
    assert d["groups"]["withEquality"]["<100"]["total"] == 1
    assert sum(d["depthHistogram"].values()) >= 1


def test_corpus_empty_and_errors(tmp_path, files):
    empty = tmp_path / "empty"
    empty.mkdir()
    d = json.loads(run("corpus", empty, "--json")[1])
    assert d["files"] == [] and d["errors"] == 0
    files("good.rules", "A(?x) -> B(?x) .\n")
    files("broken.rules", "A(?x) -> \n")
    assert run("corpus", tmp_path)[0] == 65
    code, out, _ = run("corpus", tmp_path, "--keep-going", "--json")
    d = json.loads(out)
    assert code == 0 and d["errors"] == 1
    assert [e["file"] for e in d["files"]] == ["broken.rules", "good.rules"]
    assert run("corpus", tmp_path / "good.rules")[0] == 64


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "chasecheck", "check", str(golden("datalog_cycle")), "--notion", "wa"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "acyclic" in r.stdout
