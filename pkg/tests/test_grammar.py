import pytest

from helpers import grammar
from lgt.canon import canonical_key, congruent, embed
from lgt.errors import EliminationIncomplete
from lgt.grammar import (
    Grammar, ProductionRule, check_root_constraints, collapse_names, eliminate_fusions,
    generate, validate_grammar, validate_rule,
)
from lgt.graph import Atom, TyVar, free_names, subst_links
from lgt.syntax import parse_expr, parse_type, parse_type_defs

STARTS = {
    "nat": "nat(X)",
    "nodes": "nodes(Y, X)",
    "dbl": "nodes(F', B, B', F)",
    "skip": "nodes(Y, X)",
    "lltree": "lltree(L, R, X)",
    "thtree": "thtree(L, R, X)",
}


def rule(text):
    (r,) = parse_type_defs("type " + text + ";")
    return r


def keys(graphs):
    return {canonical_key(c) for c in graphs}


def test_validate_rule():
    assert validate_rule(rule("nodes(Y, X) -> X >< Y")) == []
    assert validate_rule(rule("nat(X) -> succ(nat, X)")) == []
    assert "free link Y not in head" in validate_rule(rule("bad(X) -> p(X, Y)"))
    head = Atom(TyVar("bad"), ("X", "X"))
    assert validate_rule(ProductionRule(head, parse_expr("p(X)")))


def test_validate_grammar_flags_undefined_types():
    g = Grammar(parse_type_defs("type t(X) -> zero(X); t(X) -> nu A B. (p(A, B, X), t(A, B));"))
    assert any("t/2" in m for m in validate_grammar(g))


@pytest.mark.parametrize("name", sorted(STARTS))
def test_paper_grammars_satisfy_root_constraints(name):
    assert check_root_constraints(grammar(name)) == []
    assert validate_grammar(grammar(name)) == []


def test_two_constructors_violate_root_constraints():
    g = Grammar(parse_type_defs("type t(X) -> nu Y. (p(Y, X), q(Y));"))
    assert check_root_constraints(g)


def test_generate_small_depths():
    nat = grammar("nat")
    assert generate(nat, parse_type("nat(X)"), 0) == set()
    two = generate(nat, parse_type("nat(X)"), 2)
    assert keys(two) == keys([parse_expr("zero(X)"), parse_expr("succ(zero, X)")])
    nodes = grammar("nodes")
    assert keys(generate(nodes, parse_type("nodes(Y, X)"), 1)) == {canonical_key(parse_expr("X >< Y"))}


def test_generated_graphs_are_terminal_and_have_head_links():
    nodes = grammar("nodes")
    for c in generate(nodes, parse_type("nodes(Y, X)"), 6):
        assert c.free == {"X", "Y"}
        assert all(not hasattr(n, "ty") for n, _ in c.atoms)


@pytest.mark.parametrize("name", sorted(STARTS))
def test_generate_is_monotone(name):
    g, s = grammar(name), parse_type(STARTS[name])
    prev = set()
    for d in range(6):
        cur = keys(generate(g, s, d))
        assert prev <= cur
        prev = cur


def test_generated_members_are_graphs_of_the_grammar():
    nodes = grammar("nodes")
    got = keys(generate(nodes, parse_type("nodes(Y, X)"), 5))
    assert canonical_key(parse_expr("cons(zero, cons(zero, Y), X)")) in got
    assert canonical_key(parse_expr("cons(succ(zero), Y, X)")) in got
    assert canonical_key(parse_expr("cons(zero, X, Y)")) not in got


def test_eliminated_nodes_grammar_shape():
    g, start = eliminate_fusions(grammar("nodes"), parse_type("nodes(Y, X)"))
    assert start.name.name == "nodes_⋈"
    by = {}
    for r in g:
        by.setdefault(r.name, []).append(r)
    assert len(by["nodes_⋈"]) == 3 and len(by["nodes'"]) == 2
    assert sum(1 for r in by["nodes_⋈"] if congruent(r.rhs, parse_expr("X >< Y"))) == 1


def test_nat_is_unchanged_by_elimination():
    g, start = eliminate_fusions(grammar("nat"), parse_type("nat(X)"))
    assert start == parse_type("nat(X)")
    assert {(r.head, r.rhs) for r in g} == {(r.head, r.rhs) for r in grammar("nat")}


@pytest.mark.parametrize("name", sorted(STARTS))
def test_elimination_preserves_language(name):
    g, s = grammar(name), parse_type(STARTS[name])
    e, s2 = eliminate_fusions(g, s)
    for d in range(6):
        assert keys(generate(g, s, d)) == keys(generate(e, s2, d)), d


def test_collapse_names_restores_user_types():
    e, _ = eliminate_fusions(grammar("nodes"), parse_type("nodes(Y, X)"))
    names = {r.name for r in collapse_names(e)}
    assert names == {"nat", "nodes"}


def test_elimination_failure_is_reported():
    # inlining t's fusion into s joins two free links of s
    g = Grammar(parse_type_defs(
        "type t(Y, X) -> X >< Y; t(Y, X) -> c(t(Y), X); type s(A, B, X) -> p(A, B, X), t(A, B);"))
    assert check_root_constraints(g) == []
    with pytest.raises(EliminationIncomplete):
        eliminate_fusions(g, parse_type("s(A, B, X)"))


def test_production_rule_instantiation():
    r = rule("nodes(Y, X) -> cons(nat, nodes(Y), X)")
    inst = r.instantiate(("B", "A"))
    assert free_names(inst) == {"A", "B"}
    assert congruent(inst, subst_links(r.rhs, [("Y", "B"), ("X", "A")]))
    assert isinstance(r, ProductionRule) and r.arity == 2


def test_embed_of_generated_graph_round_trips():
    for c in generate(grammar("lltree"), parse_type("lltree(L, R, X)"), 5):
        assert canonical_key(embed(c)) == canonical_key(c)
