import pytest

from helpers import PROGRAMS, grammar, program
from lgt.canon import congruent
from lgt.errors import FuelExhausted, Stuck
from lgt.evaluator import Stepped, Value, evaluate, format_trace, graph_substitute, step
from lgt.graph import Case, Ctx, Lam, free_functors
from lgt.syntax import parse_expr


def run(text, rules=None, **kw):
    return evaluate(parse_expr(text), rules, **kw)


def test_append_golden():
    r = evaluate(program(PROGRAMS / "append.lgt").main, trace=True)
    assert congruent(r.value, parse_expr("cons(1, cons(2, Y), X)"))
    assert [rule for rule, _ in r.trace] == ["init", "Rd-Beta", "Rd-Ctx", "Rd-Beta"]


def test_pop_golden():
    r = evaluate(program(PROGRAMS / "pop.lgt").main)
    assert congruent(r.value, parse_expr("cons(1, Y, X)"))


def test_pop_on_empty_list_takes_otherwise():
    pop = r"(\ $x[Y, X]. case $x[Y, X] of $y[cons($z, Y), X] -> $y[Y, X] | otherwise -> $x[Y, X])(Z)"
    r = run(pop + " (X >< Y)")
    assert congruent(r.value, parse_expr("X >< Y"))


def test_values_do_not_step():
    assert isinstance(step(parse_expr("cons(1, Y, X)")), Value)


def test_unbound_context_is_stuck():
    s = step(parse_expr("$x[X]"))
    assert isinstance(s, Stuck)
    with pytest.raises(Stuck):
        run("$x[X]")


def test_applying_a_non_function_is_stuck():
    with pytest.raises(Stuck):
        run("a(Z) b(X)")


def test_link_mismatch_is_stuck():
    with pytest.raises(Stuck):
        run(r"(\ $x[X]. $x[X])(Z) b(Y)")


def test_fuel():
    with pytest.raises(FuelExhausted) as e:
        evaluate(program(PROGRAMS / "diverging.lgt").main, fuel=100)
    assert "fuel exhausted after 100 steps" in str(e.value)


def test_step_labels():
    s = step(parse_expr(r"(\ $x[X]. $x[X])(Z) a(X)"))
    assert isinstance(s, Stepped) and s.rule == "Rd-Beta"
    s = step(parse_expr("case a(X) of b(X) -> a(X) | otherwise -> c(X)"))
    assert s.rule == "Rd-Case2" and s.expr == parse_expr("c(X)")
    s = step(parse_expr("case a(X) of a(X) -> b(X) | otherwise -> c(X)"))
    assert s.rule == "Rd-Case1" and s.expr == parse_expr("b(X)")


def test_format_trace():
    r = evaluate(program(PROGRAMS / "append.lgt").main, trace=True)
    lines = format_trace(r.trace)
    assert len(lines) == 3 and all(" ⊢ " in line for line in lines)


# ---------------------------------------------------------------------------
# graph substitution


def test_substitution_replaces_free_occurrences():
    e = parse_expr("cons(1, $y[Y], X)")
    out = graph_substitute(e, parse_expr("cons(2, Y, X)"), Ctx("y", ("Y", "X")))
    assert congruent(out, parse_expr("cons(1, cons(2, Y), X)"))


def test_substitution_respects_shadowing():
    lam = parse_expr(r"(\ $x[X]. $x[X])(Z)")
    assert graph_substitute(lam, parse_expr("a(X)"), Ctx("x", ("X",))) == lam


def test_substitution_avoids_capture_by_parameter():
    # substituting $y := $x[X] under a binder for $x must rename the binder
    lam = parse_expr(r"(\ $x[X]. ($x[X], $y[X]))(Z)")
    out = graph_substitute(lam, parse_expr("$x[X]"), Ctx("y", ("X",)))
    assert isinstance(out.name, Lam)
    assert out.name.param.name != "x"
    assert ("x", 1) in free_functors(out)


def test_substitution_avoids_capture_by_pattern():
    e = parse_expr("case a(X) of $x[X] -> ($x[X], $y[X]) | otherwise -> $y[X]")
    out = graph_substitute(e, parse_expr("$x[X]"), Ctx("y", ("X",)))
    assert isinstance(out, Case)
    assert ("x", 1) in free_functors(out)
    assert out.pattern != e.pattern


def test_substitution_stops_at_pattern_binder():
    e = parse_expr("case a(X) of $y[X] -> $y[X] | otherwise -> $y[X]")
    out = graph_substitute(e, parse_expr("b(X)"), Ctx("y", ("X",)))
    assert out.then == e.then
    assert out.other == parse_expr("b(X)")


def test_typed_pop_uses_types():
    nodes = grammar("nodes")
    prog = program(PROGRAMS / "typed_pop.lgt")
    from lgt.graph import App
    r = evaluate(App(prog.main, parse_expr("cons(zero, cons(succ(zero), Y), X)")), nodes)
    assert congruent(r.value, parse_expr("cons(zero, Y, X)"))
