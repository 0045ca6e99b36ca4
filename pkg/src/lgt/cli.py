"""``lgt run|typecheck|verify|dot``: command-line front end."""
from __future__ import annotations

import argparse
import sys

from .errors import FuelExhausted, LgtError, ParseError, Stuck
from .grammar import Grammar, validate_grammar

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lgt", description="Run, type-check and verify graph programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_file=True):
        if needs_file:
            p.add_argument("input", help="program file (.lgt)")
        else:
            p.add_argument("input", nargs="?", help="file with type blocks and an optional goal")
        p.add_argument("--types", metavar="PATH", help="separate file of type definitions")
        p.add_argument("--depth", type=_positive, default=64, help="verifier depth guard")

    p = sub.add_parser("run", help="evaluate a program")
    common(p)
    p.add_argument("--fuel", type=_positive, default=1_000_000, help="maximum reduction steps")
    p.add_argument("--trace", action="store_true", help="print every reduction step")

    p = sub.add_parser("typecheck", help="print the type of a program")
    common(p)

    p = sub.add_parser("verify", help="check a goal 'T : type(X...)'")
    common(p, needs_file=False)
    p.add_argument("--goal", help="goal text; overrides a goal in the input file")
    p.add_argument("--with-oracle", type=_positive, metavar="N", dest="oracle",
                   help="cross-check context-free goals against the generated language up to depth N")
    p.add_argument("--explain", action="store_true", help="print the proof log or the deepest failure")

    p = sub.add_parser("dot", help="render the program's graph (or its trace) as DOT")
    common(p)
    p.add_argument("--fuel", type=_positive, default=1_000_000)
    p.add_argument("--trace", action="store_true", help="one digraph per reduction state")
    return ap


# ---------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise _UsageError(f"cannot read {path}: {e.strerror or e}")


def _merge_types(own, path, err) -> Grammar:
    from .syntax import parse_type_defs
    if not path:
        return Grammar(own)
    extra = parse_type_defs(_read(path))
    theirs = {r.name for r in extra}
    clash = sorted({r.name for r in own} & theirs)
    if clash:
        print(f"warning: {path} redefines {', '.join(clash)}; using its definitions", file=err)
    return Grammar([r for r in own if r.name not in theirs] + list(extra))


def _grammar_ok(g: Grammar, err) -> bool:
    problems = validate_grammar(g)
    for msg in problems:
        print(f"type error: {msg}", file=err)
    return not problems


def _load_program(args, err):
    from .syntax import parse_program
    prog = parse_program(_read(args.input))
    g = _merge_types(prog.rules, args.types, err)
    if prog.main is None:
        raise _UsageError(f"{args.input} has no main expression")
    return prog.main, g


def cmd_run(args, out, err) -> int:
    from .evaluator import evaluate, format_trace
    from .syntax import show_value
    main, g = _load_program(args, err)
    if not _grammar_ok(g, err):
        return EXIT_DOMAIN
    try:
        run = evaluate(main, g, fuel=args.fuel, trace=args.trace, depth=args.depth)
    except FuelExhausted as e:
        print(f"error: {e}", file=err)
        return EXIT_DOMAIN
    except Stuck as e:
        print(f"error: stuck: {e}", file=err)
        return EXIT_DOMAIN
    if args.trace:
        for line in format_trace(run.trace):
            print(line, file=out)
    print(show_value(run.value), file=out)
    return EXIT_OK


def cmd_typecheck(args, out, err) -> int:
    from .syntax import pretty_print
    from .typecheck import type_of_expr
    main, g = _load_program(args, err)
    if not _grammar_ok(g, err):
        return EXIT_DOMAIN
    ty = type_of_expr({}, g, main)
    print(pretty_print(ty), file=out)
    return EXIT_OK


def cmd_verify(args, out, err) -> int:
    from .syntax import parse_goal, parse_goal_file
    own, goal = ([], None) if args.input is None else parse_goal_file(_read(args.input))
    if args.goal is not None:
        goal = parse_goal(args.goal)
    if goal is None:
        raise _UsageError("no goal: pass --goal or put one after the type blocks")
    g = _merge_types(own, args.types, err)
    if not len(g):
        raise _UsageError("no type definitions: supply them in the input file or with --types")
    if not _grammar_ok(g, err):
        return EXIT_DOMAIN
    template, ty = goal
    verdict = _verify(template, ty, g, args, out)
    if args.oracle is not None:
        return _oracle(template, ty, g, args.oracle, verdict, out)
    return EXIT_OK if verdict else EXIT_DOMAIN


def _verify(template, ty, g, args, out) -> bool:
    from .verifier import check_graph
    log: list | None = [] if args.explain else None
    ok = check_graph(template, ty, g, depth=args.depth, explain=log)
    print("ACCEPT" if ok else "REJECT", file=out)
    for line in log or ():
        print(line, file=out)
    return ok


def _oracle(template, ty, g, depth, verdict, out) -> int:
    from .canon import canonical_key
    from .graph import contexts, expand_term_notation, is_value
    from .grammar import generate
    t = expand_term_notation(template)
    if contexts(t) or not is_value(t) or _has_lambda(t):
        print("oracle: skipped (goal has graph contexts or abstractions)", file=out)
        return EXIT_OK if verdict else EXIT_DOMAIN
    lang = {canonical_key(c) for c in generate(g, ty, depth)}
    member = canonical_key(t) in lang
    if member and not verdict:
        print(f"oracle: DISAGREES, the graph is generated within depth {depth}", file=out)
        return EXIT_DOMAIN
    if member:
        print(f"oracle: agrees, generated within depth {depth}", file=out)
    elif verdict:
        print(f"oracle: not generated within depth {depth} (inconclusive for a deeper graph)", file=out)
    else:
        print(f"oracle: agrees, not generated within depth {depth}", file=out)
    return EXIT_OK if verdict else EXIT_DOMAIN


def _has_lambda(t) -> bool:
    from .graph import Lam, atoms_of
    return any(isinstance(a.name, Lam) for a in atoms_of(t))


def cmd_dot(args, out, err) -> int:
    from .dot import expr_to_dot, graph_to_dot, trace_to_dot
    from .evaluator import evaluate
    from .graph import is_template
    main, g = _load_program(args, err)
    if args.trace:
        run = evaluate(main, g, fuel=args.fuel, trace=True, depth=args.depth)
        out.write(trace_to_dot(run.trace))
    elif is_template(main):
        out.write(graph_to_dot(main))
    else:
        out.write(expr_to_dot(evaluate(main, g, fuel=args.fuel, depth=args.depth).value))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "typecheck": cmd_typecheck, "verify": cmd_verify, "dot": cmd_dot}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out, err)
    except ParseError as e:
        print(f"parse error: {e}", file=err)
        return EXIT_USAGE
    except _UsageError as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE
    except LgtError as e:
        kind = type(e).__name__
        print(f"error: {kind}: {e}", file=err)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
