"""The ``chasecheck`` command line."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TextIO

from .api import EQUALITY_MODES, NOTIONS, CheckRequest, check, prepare, taxonomy
from .chase import FIXPOINT, ChaseConfig, chase, materialisation_metrics, ontology_depth
from .formats import ParseError, emit_report, parse_dl_axioms, parse_facts, parse_query, parse_rules, serialise_rules
from .graphs import InapplicableError
from .model import ArityError, FactStore, RuleSet
from .query import ALL, ChaseLimitError, answer
from .transforms import align_instance, axiomatise, critical_instance, dl_translate
from .verdict import ACYCLIC, NOT_ACYCLIC, UNKNOWN, Verdict

EXIT_OK, EXIT_NOT_ACYCLIC, EXIT_UNKNOWN = 0, 1, 2
EXIT_USAGE, EXIT_PARSE, EXIT_INTERNAL = 64, 65, 70

_EXIT = {ACYCLIC: EXIT_OK, NOT_ACYCLIC: EXIT_NOT_ACYCLIC, UNKNOWN: EXIT_UNKNOWN}

G_RULE_BUCKETS = ((100, "<100"), (1000, "100-1K"), (5000, "1K-5K"), (12000, "5K-12K"), (160000, "12K-160K"), (None, ">=160K"))
DEPTH_BUCKETS = ((5, "<5"), (10, "5-9"), (71, "10-70"), (None, ">70"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _bucket(n: int, buckets) -> str:
    for bound, label in buckets:
        if bound is None or n < bound:
            return label
    raise AssertionError


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_rules(path: str) -> RuleSet:
    text = _read(path)
    if path.endswith(".dlx"):
        return dl_translate(parse_dl_axioms(text, path))
    return parse_rules(text, path)


def _load_facts(path: Optional[str], rs: RuleSet) -> Optional[FactStore]:
    return None if path is None else parse_facts(_read(path), path, rules=rs)


def _chase_config(a) -> ChaseConfig:
    return ChaseConfig(
        max_facts=a.max_facts,
        max_depth=a.max_depth,
        time_limit=a.timeout,
        trace=getattr(a, "trace", False),
    )


def _strip_timing(d: dict, keep: bool) -> dict:
    if not keep and isinstance(d.get("stats"), dict):
        d["stats"]["elapsedMs"] = None
    return d


def _limits(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-facts", type=int, default=None, metavar="N")
    p.add_argument("--max-depth", type=int, default=None, metavar="N")
    p.add_argument("--timeout", type=float, default=None, metavar="SECS")
    p.add_argument("--top", choices=("minimal", "full"), default="minimal")
    p.add_argument("--timing", action="store_true", help="report wall-clock times (makes JSON output nondeterministic)")


def _build() -> argparse.ArgumentParser:
    p = _Parser(prog="chasecheck", description="Skolem chase and acyclicity checks for existential rules.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    c = sub.add_parser("check", help="decide one acyclicity notion")
    c.add_argument("rules")
    c.add_argument("--notion", choices=NOTIONS, required=True)
    c.add_argument("--dep", action="store_true", help="apply the notion per dependency component")
    c.add_argument("--equality", choices=EQUALITY_MODES, default="none")
    c.add_argument("--instance", metavar="FILE", help="facts file (default: the critical instance)")
    c.add_argument("--json", action="store_true")
    c.add_argument("--trace", action="store_true")
    c.add_argument("--mfa-route", choices=("detect", "transform"), default="detect")
    c.add_argument("--strict-ranking", action="store_true", help="argument ranking over all body variables")
    c.add_argument("--weak-dependencies", action="store_true")
    _limits(c)

    t = sub.add_parser("taxonomy", help="run every notion and cross-check the containment lattice")
    t.add_argument("rules")
    t.add_argument("--equality", choices=EQUALITY_MODES, default="none")
    t.add_argument("--instance", metavar="FILE")
    t.add_argument("--no-dep", action="store_true")
    t.add_argument("--json", action="store_true")
    _limits(t)

    ch = sub.add_parser("chase", help="run the skolem chase")
    ch.add_argument("rules")
    ch.add_argument("facts", nargs="?", help="facts file (default: the critical instance)")
    ch.add_argument("--equality", choices=("none", "axiomatize"), default="none")
    ch.add_argument("--max-steps", type=int, default=None, metavar="N")
    ch.add_argument("--json", action="store_true")
    ch.add_argument("--trace", action="store_true")
    ch.add_argument("--facts-out", action="store_true", help="print the resulting facts")
    _limits(ch)

    q = sub.add_parser("query", help="certain answers to a conjunctive query")
    q.add_argument("rules")
    q.add_argument("facts")
    q.add_argument("query")
    q.add_argument("--equality", choices=("none", "axiomatize", "sing"), default="none")
    q.add_argument("--json", action="store_true")
    _limits(q)

    tr = sub.add_parser("translate", help="translate Horn-DL axioms to rules")
    tr.add_argument("dlx")
    tr.add_argument("-o", "--output", metavar="FILE")
    tr.add_argument("--check", choices=NOTIONS, metavar="NOTION", help="also check the translated rules")
    tr.add_argument("--equality", choices=EQUALITY_MODES, default="axiomatize")
    tr.add_argument("--json", action="store_true")
    _limits(tr)

    st = sub.add_parser("stats", help="materialisation metrics")
    st.add_argument("rules")
    st.add_argument("facts", nargs="?")
    st.add_argument("--json", action="store_true")
    _limits(st)

    co = sub.add_parser("corpus", help="taxonomy over a directory of .rules/.dlx files")
    co.add_argument("dir")
    co.add_argument("--keep-going", action="store_true", help="collect per-file errors and continue")
    co.add_argument("--equality", choices=EQUALITY_MODES, default="axiomatize")
    co.add_argument("--json", action="store_true")
    _limits(co)
    return p


# --- commands -------------------------------------------------------------------


def _print_verdict(v: Verdict, out: TextIO) -> None:
    out.write(f"{v.notion:<10} {v.mode:<9} {v.equality:<10} {v.outcome}\n")
    if v.witness:
        out.write(f"  witness: {json.dumps(v.witness, sort_keys=True, default=str)}\n")


def cmd_check(a, out: TextIO) -> int:
    rs = _load_rules(a.rules)
    req = CheckRequest(
        a.notion,
        dep=a.dep,
        instance=_load_facts(a.instance, rs),
        equality=a.equality,
        chase=_chase_config(a),
        top=a.top,
        mfa_route=a.mfa_route,
        ar_strict=a.strict_ranking,
        weak_dependencies=a.weak_dependencies,
    )
    v = check(req, rs)
    if a.json:
        out.write(emit_report(_strip_timing(v.to_dict(), a.timing)))
    else:
        _print_verdict(v, out)
    if a.trace and a.notion in ("msa", "mfa") and a.equality in ("none", "axiomatize"):
        prep = prepare(rs, a.top)
        target = axiomatise(prep, a.top) if a.equality == "axiomatize" else prep
        inst = req.instance if req.instance is not None else critical_instance(prep)
        o = chase(target, align_instance(inst, target), replace(req.chase, trace=True, detect_cyclic=True))
        for f in o.trace:
            out.write(f"# {f}\n")
    return _EXIT[v.outcome]


def cmd_taxonomy(a, out: TextIO) -> int:
    rs = _load_rules(a.rules)
    tx = taxonomy(rs, a.equality, _load_facts(a.instance, rs), _chase_config(a), a.top, dep=not a.no_dep)
    if a.json:
        out.write(emit_report(tx.to_dict()))
    else:
        for name, v in tx.verdicts.items():
            out.write(f"{name:<10} {v.outcome}\n")
        for x, y in tx.violations:
            out.write(f"LATTICE VIOLATION: {x} acyclic but {y} not\n")
    return EXIT_INTERNAL if tx.violations else EXIT_OK


def _prepared(rs: RuleSet, a) -> RuleSet:
    prep = prepare(rs, a.top)
    return axiomatise(prep, a.top) if getattr(a, "equality", "none") == "axiomatize" else prep


def cmd_chase(a, out: TextIO) -> int:
    rs = _load_rules(a.rules)
    target = _prepared(rs, a)
    inst = _load_facts(a.facts, rs)
    inst = critical_instance(target) if inst is None else align_instance(inst, target)
    cfg = replace(_chase_config(a), max_steps=a.max_steps)
    if cfg.max_depth is None:
        cfg = replace(cfg, max_depth=100)
    o = chase(target, inst, cfg)
    report = {
        "status": o.status,
        "limit": o.limit,
        "stats": {**o.stats.to_dict(), "terms": len(o.store.terms()), "generated": o.generated,
                  "elapsedMs": round(o.stats.elapsed * 1000, 3) if a.timing else None},
    }
    if a.json:
        if a.facts_out:
            report["facts"] = sorted(str(f) for f in o.store)
        out.write(emit_report(report))
    else:
        if a.trace:
            for f in o.trace:
                out.write(f"{f}\n")
        if a.facts_out:
            for f in o.store:
                out.write(f"{f} .\n")
        out.write(f"status: {o.status}{' (' + o.limit + ')' if o.limit else ''}\n")
        out.write(f"facts: {len(o.store)}  steps: {o.stats.steps}  depth: {o.stats.max_term_depth}\n")
    return EXIT_OK if o.status == FIXPOINT else EXIT_UNKNOWN


def cmd_query(a, out: TextIO) -> int:
    rs = _load_rules(a.rules)
    inst = _load_facts(a.facts, rs)
    q = parse_query(_read(a.query), a.query)
    cfg = _chase_config(a)
    if cfg.max_depth is None:
        cfg = replace(cfg, max_depth=100)
    try:
        res = answer(rs, inst, q, a.equality, cfg=cfg, top=a.top)
    except ChaseLimitError as e:
        out.write(f"unknown: {e}\n")
        return EXIT_UNKNOWN
    if res is ALL:
        rows = "ALL"
    else:
        rows = sorted([str(t) for t in row] for row in res)
    if a.json:
        out.write(emit_report({"query": str(q), "answers": rows, "boolean": q.is_boolean}))
    elif rows == "ALL":
        out.write("inconsistent: every tuple is an answer\n")
    elif q.is_boolean:
        out.write("true\n" if rows else "false\n")
    else:
        for r in rows:
            out.write("\t".join(r) + "\n")
    return EXIT_OK


def cmd_translate(a, out: TextIO) -> int:
    rs = dl_translate(parse_dl_axioms(_read(a.dlx), a.dlx))
    text = serialise_rules(rs)
    if a.output:
        Path(a.output).write_text(text, encoding="utf-8")
    elif not a.check:
        out.write(text)
    if not a.check:
        return EXIT_OK
    equality = a.equality if rs.has_equality else "none"
    v = check(CheckRequest(a.check, equality=equality, chase=_chase_config(a), top=a.top), rs)
    if a.json:
        out.write(emit_report(_strip_timing(v.to_dict(), a.timing)))
    else:
        _print_verdict(v, out)
    return _EXIT[v.outcome]


def cmd_stats(a, out: TextIO) -> int:
    rs = _load_rules(a.rules)
    target = _prepared(rs, replace_ns(a, equality="axiomatize" if rs.has_equality else "none"))
    before = _load_facts(a.facts, rs)
    before = critical_instance(target) if before is None else align_instance(before, target)
    cfg = _chase_config(a)
    if cfg.max_depth is None:
        cfg = replace(cfg, max_depth=100)
    o = chase(target, before, cfg)
    if o.status != FIXPOINT:
        out.write(f"unknown: chase stopped ({o.limit or o.status})\n")
        return EXIT_UNKNOWN
    m = materialisation_metrics(before, o)
    stats = {
        "facts": len(o.store),
        "terms": len(o.store.terms()),
        "depth": ontology_depth(o),
        "steps": o.stats.steps,
        "elapsedMs": round(o.stats.elapsed * 1000, 3) if a.timing else None,
        "generatedSize": m.generated_size,
        "materialisationSize": m.materialisation_size,
        "before": len(before),
        "new": len(o.store) - len(before),
        "generated": o.generated,
    }
    if a.json:
        out.write(emit_report({"stats": stats}))
    else:
        for k in ("before", "new", "generated", "depth"):
            out.write(f"{k}: {stats[k]}\n")
        out.write(f"generatedSize: {float(m.generated_size):.3f}\n")
        out.write(f"materialisationSize: {float(m.materialisation_size):.3f}\n")
    return EXIT_OK


def replace_ns(ns: argparse.Namespace, **changes) -> argparse.Namespace:
    d = vars(ns).copy()
    d.update(changes)
    return argparse.Namespace(**d)


def _corpus_file(path: Path, a) -> dict:
    rs = _load_rules(str(path))
    g = sum(1 for r in rs if r.is_generating)
    eq = a.equality if rs.has_equality else "none"
    tx = taxonomy(rs, eq, None, _chase_config(a), a.top)
    entry = {"file": path.name, "gRules": g, "equality": rs.has_equality, "verdicts": tx.to_dict()["verdicts"],
             "violations": tx.to_dict()["violations"]}
    mfa = tx.verdicts.get("mfa")
    if mfa is not None and mfa.acyclic:
        prep = prepare(rs, a.top)
        target = axiomatise(prep, a.top) if rs.has_equality else prep
        o = chase(target, critical_instance(target), replace(_chase_config(a), max_depth=None))
        if o.status == FIXPOINT:
            entry["depth"] = ontology_depth(o)
    return entry


def cmd_corpus(a, out: TextIO) -> int:
    root = Path(a.dir)
    if not root.is_dir():
        raise UsageError(f"{a.dir} is not a directory")
    files = sorted(p for p in root.iterdir() if p.suffix in (".rules", ".dlx"))
    threads = max(1, int(os.environ.get("CHASECHECK_THREADS", "1") or 1))

    def one(p: Path) -> dict:
        try:
            return _corpus_file(p, a)
        except (ParseError, ArityError, InapplicableError, UsageError) as e:
            if not a.keep_going:
                raise
            return {"file": p.name, "error": str(e)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(one, files))
    else:
        entries = [one(p) for p in files]

    groups: Dict[str, Dict[str, Dict[str, int]]] = {}
    depths: Dict[str, int] = {}
    for e in entries:
        if "error" in e:
            continue
        side = "withEquality" if e["equality"] else "withoutEquality"
        row = groups.setdefault(side, {}).setdefault(_bucket(e["gRules"], G_RULE_BUCKETS), {"total": 0, "msa": 0, "ja": 0, "wa": 0})
        row["total"] += 1
        for n in ("msa", "ja", "wa"):
            row[n] += e["verdicts"].get(n) == ACYCLIC
        if "depth" in e:
            b = _bucket(e["depth"], DEPTH_BUCKETS)
            depths[b] = depths.get(b, 0) + 1
    report = {
        "files": entries,
        "groups": groups,
        "depthHistogram": depths,
        "errors": sum(1 for e in entries if "error" in e),
    }
    if a.json:
        out.write(emit_report(report))
    else:
        for e in entries:
            if "error" in e:
                out.write(f"{e['file']}: ERROR {e['error']}\n")
            else:
                acyc = [n for n, o in e["verdicts"].items() if o == ACYCLIC]
                out.write(f"{e['file']}: G-rules={e['gRules']} acyclic: {' '.join(acyc) or '-'}\n")
        for side, rows in groups.items():
            for label, row in rows.items():
                out.write(f"{side} {label}: total={row['total']} msa={row['msa']} ja={row['ja']} wa={row['wa']}\n")
    violated = any(e.get("violations") for e in entries)
    return EXIT_INTERNAL if violated else EXIT_OK


_COMMANDS: Dict[str, Callable] = {
    "check": cmd_check,
    "taxonomy": cmd_taxonomy,
    "chase": cmd_chase,
    "query": cmd_query,
    "translate": cmd_translate,
    "stats": cmd_stats,
    "corpus": cmd_corpus,
}


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _build()
    try:
        a = parser.parse_args(argv)
        if a.cmd is None:
            raise UsageError("a command is required")
        return _COMMANDS[a.cmd](a, out)
    except UsageError as e:
        err.write(f"chasecheck: usage error: {e}\n")
        return EXIT_USAGE
    except (ParseError, ArityError) as e:
        err.write(f"chasecheck: parse error: {e}\n")
        return EXIT_PARSE
    except (InapplicableError, ValueError) as e:
        err.write(f"chasecheck: usage error: {e}\n")
        return EXIT_USAGE
    except Exception as e:  # pragma: no cover - last-resort reporting
        err.write(f"chasecheck: internal error: {type(e).__name__}: {e}\n")
        return EXIT_INTERNAL
