import re

from helpers import PROGRAMS, program
from lgt.dot import expr_to_dot, graph_to_dot, trace_to_dot
from lgt.evaluator import evaluate
from lgt.graph import NULL
from lgt.syntax import parse_expr


def nodes(text):
    return re.findall(r'^\s*"?[\w]+"? \[(.*)\];$', text, re.M)


def test_single_cons_cell():
    d = graph_to_dot(parse_expr("cons(1, Y, X)"))
    assert d.startswith("digraph G {")
    boxes = [n for n in nodes(d) if "shape=box" in n]
    diamonds = [n for n in nodes(d) if "shape=diamond" in n]
    assert len(boxes) == 2 and len(diamonds) == 2
    assert any('label="cons"' in b for b in boxes) and any('label="1"' in b for b in boxes)
    assert {re.search(r'label="(\w+)"', n).group(1) for n in diamonds} == {"X", "Y"}


def test_empty_graph_has_no_nodes():
    d = graph_to_dot(NULL)
    assert d == "digraph G {\n}\n"
    assert "->" not in d


def test_fusion_is_drawn_as_a_dot():
    d = graph_to_dot(parse_expr("X >< Y"))
    assert "dir=none" in d


def test_output_is_deterministic():
    g = parse_expr("nu A B. (cons(A, B, X), 1(A), cons(C, Y, B), 2(C))")
    assert graph_to_dot(g) == graph_to_dot(g)
    e = program(PROGRAMS / "append.lgt").main
    assert expr_to_dot(e) == expr_to_dot(e)


def test_trace_has_one_graph_per_state():
    r = evaluate(program(PROGRAMS / "append.lgt").main, trace=True)
    d = trace_to_dot(r.trace)
    assert d.count("digraph") == len(r.trace) == 4
    assert "Rd-Beta" in d
