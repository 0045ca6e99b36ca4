import io

import pytest

from helpers import PROGRAMS, TYPES
from lgt.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def test_run_append():
    code, out, _ = run("run", PROGRAMS / "append.lgt")
    assert code == 0 and out.strip() == "cons(1, cons(2, Y), X)"


def test_run_pop():
    code, out, _ = run("run", PROGRAMS / "pop.lgt")
    assert code == 0 and out.strip() == "cons(1, Y, X)"


def test_run_trace_prints_steps_then_value():
    code, out, _ = run("run", "--trace", PROGRAMS / "append.lgt")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 4 and lines[-1] == "cons(1, cons(2, Y), X)"


def test_fuel_exhaustion():
    code, _, err = run("run", "--fuel", 100, PROGRAMS / "diverging.lgt")
    assert code == 1 and "fuel exhausted after 100 steps" in err


def test_typecheck_typed_programs():
    code, out, _ = run("typecheck", PROGRAMS / "typed_pop.lgt")
    assert code == 0 and out.strip() == "(nodes(Y, X) -> nodes(Y, X))(Z)"
    code, out, _ = run("typecheck", PROGRAMS / "typed_append.lgt")
    assert code == 0 and out.strip() == "(nodes(Y, X) -> nodes(Y, X) -> nodes(Y, X))(Z)"


def test_typecheck_undefined_type():
    code, _, err = run("typecheck", PROGRAMS / "bad_append.lgt")
    assert code == 1 and "TypingError" in err


def test_verify_goal_file():
    code, out, _ = run("verify", PROGRAMS / "concat.goal.lgt")
    assert code == 0 and out.strip() == "ACCEPT"


@pytest.mark.parametrize("goal,code,verdict", [
    ("X >< Y : nodes(Y, X)", 0, "ACCEPT"),
    ("zero(X) : nodes(Y, X)", 1, "REJECT"),
])
def test_verify_inline_goals(goal, code, verdict):
    got, out, _ = run("verify", "--types", TYPES / "nodes.lgt", "--goal", goal)
    assert got == code and out.splitlines()[0] == verdict


def test_verify_explain_reports_deepest_failure():
    code, out, _ = run("verify", "--types", TYPES / "lltree.lgt", "--explain", "--goal",
                       "nu Y. (node(L, $t[Y, R]:lltree, X), leaf($n:nat, L, Y)) : lltree(L, R, X)")
    assert code == 1 and "deepest failing obligation" in out


def test_oracle_agrees():
    code, out, _ = run("verify", "--types", TYPES / "nodes.lgt", "--with-oracle", 4,
                       "--goal", "cons(zero, Y, X) : nodes(Y, X)")
    assert code == 0 and "oracle: agrees" in out
    code, out, _ = run("verify", "--types", TYPES / "nodes.lgt", "--with-oracle", 4,
                       "--goal", "cons(zero, X, Y) : nodes(Y, X)")
    assert code == 1 and "oracle: agrees, not generated" in out


def test_oracle_skips_templates():
    code, out, _ = run("verify", PROGRAMS / "concat.goal.lgt", "--with-oracle", 3)
    assert code == 0 and "skipped" in out


def test_types_file_overrides_with_warning():
    code, out, err = run("typecheck", "--types", TYPES / "nodes.lgt", PROGRAMS / "typed_pop.lgt")
    assert code == 0 and "warning" in err and "nodes" in err


def test_usage_errors():
    assert run("frobnicate")[0] == 2
    assert run("run", PROGRAMS / "missing.lgt")[0] == 2
    assert run("verify", "--types", TYPES / "nodes.lgt")[0] == 2


def test_parse_error(tmp_path):
    f = tmp_path / "bad.lgt"
    f.write_text("cons(A, B")
    code, _, err = run("run", f)
    assert code == 2 and "parse error" in err


def test_stuck_program(tmp_path):
    f = tmp_path / "stuck.lgt"
    f.write_text("$x[X]")
    code, _, err = run("run", f)
    assert code == 1 and "stuck" in err


def test_dot_trace_count():
    code, out, _ = run("dot", "--trace", PROGRAMS / "append.lgt")
    assert code == 0 and out.count("digraph") == 4
