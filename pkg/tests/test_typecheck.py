import pytest

from helpers import CORPUS, PROGRAMS, declared_result, grammar, program
from lgt.errors import TypingError
from lgt.evaluator import evaluate
from lgt.grammar import Grammar
from lgt.syntax import parse_expr, parse_type, pretty_print
from lgt.typecheck import TypingContext, check_template, type_of_expr
from lgt.verifier import check_graph


def test_function_elements_in_a_difference_list():
    ctx = TypingContext.parse("$succ[Z1] : (nat(X) -> nat(X))(Z1)")
    g = grammar("nodes_fn")
    e = parse_expr("cons($succ, Y, X)")
    assert check_template(ctx, g, e, parse_type("nodes(Y, X)"))
    assert type_of_expr(ctx, g, e) == parse_type("nodes(Y, X)")
    # the plain nat grammar has no function elements
    assert not check_template(ctx, grammar("nodes"), e, parse_type("nodes(Y, X)"))


def test_variable_rule():
    ctx = TypingContext.parse("$x[Y, X] : nodes(Y, X)")
    assert type_of_expr(ctx, grammar("nodes"), parse_expr("$x[Y, X]")) == parse_type("nodes(Y, X)")


def test_variable_rule_renames_links():
    ctx = TypingContext.parse("$x[Y, X] : nodes(Y, X)")
    assert type_of_expr(ctx, grammar("nodes"), parse_expr("$x[B, A]")) == parse_type("nodes(B, A)")


def test_typed_pop():
    p = program(PROGRAMS / "typed_pop.lgt")
    ty = type_of_expr({}, Grammar(p.rules), p.main)
    assert pretty_print(ty) == "(nodes(Y, X) -> nodes(Y, X))(Z)"


def test_typed_append():
    p = program(PROGRAMS / "typed_append.lgt")
    ty = type_of_expr({}, Grammar(p.rules), p.main)
    assert pretty_print(ty) == "(nodes(Y, X) -> nodes(Y, X) -> nodes(Y, X))(Z)"


def test_undefined_type_is_an_error():
    p = program(PROGRAMS / "bad_append.lgt")
    with pytest.raises(TypingError) as e:
        type_of_expr({}, Grammar(p.rules), p.main)
    assert "nat/2" in str(e.value)


def test_unannotated_parameter_is_an_error():
    with pytest.raises(TypingError):
        type_of_expr({}, grammar("nodes"), parse_expr(r"(\ $x[Y, X]. $x[Y, X])(Z)"))


def test_unbound_context_is_an_error():
    with pytest.raises(TypingError):
        type_of_expr({}, grammar("nodes"), parse_expr("$x[Y, X]"))


def test_application_domain_mismatch():
    nodes = grammar("nodes")
    f = r"(\ $x[X]:nat(X). $x[X])(Z)"
    assert type_of_expr({}, nodes, parse_expr(f + " zero(X)")) == parse_type("nat(X)")
    with pytest.raises(TypingError):
        type_of_expr({}, nodes, parse_expr(f + " (X >< Y)"))


def test_case_branches_must_agree():
    nodes = grammar("nodes")
    e = parse_expr(
        r"(\ $x[Y, X]:nodes(Y, X). case $x[Y, X] of "
        r"nu Z1 Z2. ($y[Z1, X]:nodes(Z1, X), cons(Z2, Y, Z1), $z[Z2]:nat(Z2)) -> $z[X] "
        r"| otherwise -> $x[Y, X])(Z)")
    with pytest.raises(TypingError):
        type_of_expr({}, nodes, e)


def test_ill_typed_body_is_rejected():
    nodes = grammar("nodes")
    # the body puts a list where an element belongs
    e = parse_expr(r"(\ $x[Y, X]:nodes(Y, X). cons($x, Y, X))(Z)")
    with pytest.raises(TypingError):
        type_of_expr({}, nodes, e)


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.lgt")), ids=lambda p: p.name)
def test_corpus_is_well_typed_and_preserves_types(path):
    p = program(path)
    g = Grammar(p.rules)
    want = parse_type(declared_result(path))
    assert type_of_expr({}, g, p.main) == want
    r = evaluate(p.main, g)
    assert check_graph(r.value, want, g)
