"""Skolem chase, acyclicity checks for existential rules, and query answering by materialisation."""

from .api import NOTIONS, EQUALITY_MODES, CheckRequest, Taxonomy, check, prepare, taxonomy
from .chase import ChaseConfig, ChaseOutcome, chase, materialisation_metrics, match_conjunction, ontology_depth
from .dependencies import DependencyGraph, dependency_graph, dependency_partition, rule_depends
from .formats import ParseError, emit_report, parse_dl_axioms, parse_facts, parse_query, parse_rules
from .graphs import InapplicableError
from .model import Atom, FactStore, Position, Rule, RuleSet, Term, const, func, var
from .query import ALL, answer
from .transforms import critical_instance, dl_translate, msa_transform, mfa_transform, singularise
from .verdict import ACYCLIC, NOT_ACYCLIC, UNKNOWN, Verdict

__version__ = "0.1.0"

__all__ = [
    "ACYCLIC", "ALL", "Atom", "ChaseConfig", "ChaseOutcome", "CheckRequest", "DependencyGraph",
    "EQUALITY_MODES", "FactStore", "InapplicableError", "NOTIONS", "NOT_ACYCLIC", "ParseError",
    "Position", "Rule", "RuleSet", "Taxonomy", "Term", "UNKNOWN", "Verdict", "answer", "chase",
    "check", "const", "critical_instance", "dependency_graph", "dependency_partition", "dl_translate",
    "emit_report", "func", "match_conjunction", "materialisation_metrics", "mfa_transform",
    "msa_transform", "ontology_depth", "parse_dl_axioms", "parse_facts", "parse_query",
    "parse_rules", "prepare", "rule_depends", "singularise", "taxonomy", "var",
]
