"""Graph programs with hypergraph values, graph-grammar types and a type verifier."""
from .canon import canonical_key, congruent, normalize
from .errors import (
    DepthExceeded, EliminationIncomplete, FuelExhausted, InfiniteDescentViolation, LgtError,
    ParseError, PreconditionViolation, Stuck, TypingError,
)
from .evaluator import evaluate, graph_substitute, step
from .grammar import Grammar, ProductionRule, eliminate_fusions, generate
from .matcher import match_checked, match_template
from .syntax import parse_expr, parse_goal, parse_program, parse_type, pretty_print, show_value
from .typecheck import TypingContext, check_template, type_of_expr
from .verifier import check_graph

__all__ = [
    "DepthExceeded", "EliminationIncomplete", "FuelExhausted", "Grammar",
    "InfiniteDescentViolation", "LgtError", "ParseError", "PreconditionViolation",
    "ProductionRule", "Stuck", "TypingContext", "TypingError", "canonical_key",
    "check_graph", "check_template", "congruent", "eliminate_fusions", "evaluate",
    "generate", "graph_substitute", "match_checked", "match_template", "normalize",
    "parse_expr", "parse_goal", "parse_program", "parse_type", "pretty_print",
    "show_value", "step", "type_of_expr",
]
