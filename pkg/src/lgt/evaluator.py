"""Graph substitution and the call-by-value small-step semantics."""
from __future__ import annotations

from dataclasses import dataclass, field

from .canon import absorb, flatten
from .errors import FuelExhausted, Stuck
from .graph import (
    App, Atom, Case, Ctx, Lam, Mol, Null, Nu, contexts, expand_expr, free_functors,
    fresh_ctx, free_names, is_template, is_value, subst_links,
)
from .matcher import match_checked, match_template

DEFAULT_FUEL = 1_000_000

# ---------------------------------------------------------------------------
# graph substitution e[T / x[X...]]


def graph_substitute(e, t, ctx: Ctx):
    """Replace free occurrences of context ``ctx`` (formals ``ctx.links``) in ``e`` by ``t``."""
    return _gsub(expand_expr(e), t, ctx.functor, tuple(ctx.links), free_functors(t))


def _gsub(e, t, functor, formals, ff_t):
    if isinstance(e, Ctx):
        if e.functor == functor:
            return subst_links(t, list(zip(formals, e.links)))
        return e
    if isinstance(e, Null):
        return e
    if isinstance(e, Atom):
        name = e.name
        if isinstance(name, Lam):
            param, body = name.param, name.body
            if param.functor == functor:
                return e
            if param.functor in ff_t:
                param, body = _rename_functor(param, body)
            name = Lam(param, _gsub(body, t, functor, formals, ff_t))
        args = tuple(a if isinstance(a, str) else _gsub(a, t, functor, formals, ff_t) for a in e.args)
        return Atom(name, args)
    if isinstance(e, Mol):
        return Mol(_gsub(e.left, t, functor, formals, ff_t), _gsub(e.right, t, functor, formals, ff_t))
    if isinstance(e, Nu):
        return Nu(e.link, _gsub(e.body, t, functor, formals, ff_t))
    if isinstance(e, App):
        return App(_gsub(e.fun, t, functor, formals, ff_t), _gsub(e.arg, t, functor, formals, ff_t))
    if isinstance(e, Case):
        scrut = _gsub(e.scrutinee, t, functor, formals, ff_t)
        other = _gsub(e.other, t, functor, formals, ff_t)
        pat, then = e.pattern, e.then
        bound = {c.functor for c in contexts(pat)}
        if functor in bound:
            return Case(scrut, pat, then, other)
        for c in contexts(pat):
            if c.functor in ff_t:
                pat, then = _rename_pattern_ctx(pat, then, c)
        return Case(scrut, pat, _gsub(then, t, functor, formals, ff_t), other)
    raise TypeError(f"not an expression: {e!r}")


def _rename_functor(param: Ctx, body):
    new = Ctx(fresh_ctx(), param.links, param.ann)
    return new, _gsub_rename(body, param.functor, new.name)


def _rename_pattern_ctx(pat, then, c: Ctx):
    name = fresh_ctx()
    return _gsub_rename(pat, c.functor, name), _gsub_rename(then, c.functor, name)


def _gsub_rename(e, functor, new_name):
    """Rename free occurrences of a context functor (a context-for-context substitution)."""
    if isinstance(e, Ctx):
        return Ctx(new_name, e.links, e.ann) if e.functor == functor else e
    if isinstance(e, Null):
        return e
    if isinstance(e, Atom):
        name = e.name
        if isinstance(name, Lam) and name.param.functor != functor:
            name = Lam(name.param, _gsub_rename(name.body, functor, new_name))
        args = tuple(a if isinstance(a, str) else _gsub_rename(a, functor, new_name) for a in e.args)
        return Atom(name, args)
    if isinstance(e, Mol):
        return Mol(_gsub_rename(e.left, functor, new_name), _gsub_rename(e.right, functor, new_name))
    if isinstance(e, Nu):
        return Nu(e.link, _gsub_rename(e.body, functor, new_name))
    if isinstance(e, App):
        return App(_gsub_rename(e.fun, functor, new_name), _gsub_rename(e.arg, functor, new_name))
    if isinstance(e, Case):
        bound = {c.functor for c in contexts(e.pattern)}
        then = e.then if functor in bound else _gsub_rename(e.then, functor, new_name)
        return Case(_gsub_rename(e.scrutinee, functor, new_name), e.pattern, then,
                    _gsub_rename(e.other, functor, new_name))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# small-step reduction


@dataclass(frozen=True)
class Stepped:
    expr: object
    rule: str


@dataclass(frozen=True)
class Value:
    graph: object


def as_abstraction(g) -> Atom | None:
    """The abstraction atom ``g`` is congruent to, if it is a single one."""
    atoms, n = flatten(g)
    atoms, n, _ = absorb(atoms, n)
    if len(atoms) == 1 and isinstance(atoms[0][0], Lam) and n == 0:
        return Atom(atoms[0][0], atoms[0][1])
    return None


def step(e, rules=None, depth: int = 64):
    """One reduction step.  Returns Stepped, Value or a Stuck instance."""
    try:
        return _step(e, rules, depth)
    except Stuck as s:
        return s


def _step(e, rules, depth):
    if is_template(e):
        if is_value(e):
            return Value(e)
        names = ", ".join(f"${c.name}" for c in contexts(e))
        raise Stuck(f"unbound graph context {names}", e)
    if isinstance(e, App):
        if not is_value(e.fun):
            inner = _step(e.fun, rules, depth)
            return Stepped(App(inner.expr, e.arg), "Rd-Ctx")
        if not is_value(e.arg):
            inner = _step(e.arg, rules, depth)
            return Stepped(App(e.fun, inner.expr), "Rd-Ctx")
        lam = as_abstraction(e.fun)
        if lam is None:
            raise Stuck("application of a graph that is not an abstraction", e.fun)
        param, body = lam.name.param, lam.name.body
        if free_names(e.arg) != frozenset(param.links):
            raise Stuck(
                f"argument free links {sorted(free_names(e.arg))} differ from "
                f"parameter links {list(param.links)}", e.arg)
        return Stepped(_gsub(body, e.arg, param.functor, tuple(param.links), free_functors(e.arg)),
                       "Rd-Beta")
    if isinstance(e, Case):
        if not is_value(e.scrutinee):
            inner = _step(e.scrutinee, rules, depth)
            return Stepped(Case(inner.expr, e.pattern, e.then, e.other), "Rd-Ctx")
        ctxs = contexts(e.pattern)
        if ctxs and all(c.ann is not None for c in ctxs):
            theta = match_checked(e.scrutinee, e.pattern, rules or (), depth=depth)
        else:
            theta = next(iter(match_template(e.scrutinee, e.pattern)), None)
        if theta is None:
            return Stepped(e.other, "Rd-Case2")
        out = e.then
        for c in _expanded_ctxs(e.pattern):
            b = theta[c.functor]
            out = _gsub(out, b.graph, c.functor, tuple(b.formals), free_functors(b.graph))
        return Stepped(out, "Rd-Case1")
    raise TypeError(f"not an expression: {e!r}")


def _expanded_ctxs(pat):
    from .graph import expand_term_notation
    return contexts(expand_term_notation(pat))


@dataclass
class Run:
    value: object
    steps: int
    trace: list = field(default_factory=list)


def evaluate(e, rules=None, fuel: int = DEFAULT_FUEL, trace: bool = False, depth: int = 64) -> Run:
    """Run ``e`` to a value, recording (rule, expression) pairs when ``trace`` is set."""
    cur = expand_expr(e)
    log = []
    if trace:
        log.append(("init", cur))
    for n in range(fuel + 1):
        r = step(cur, rules, depth)
        if isinstance(r, Value):
            return Run(r.graph, n, log)
        if isinstance(r, Stuck):
            raise r
        if n == fuel:
            break
        cur = r.expr
        if trace:
            log.append((r.rule, cur))
    raise FuelExhausted(fuel)


def eval_expr(e, rules=None, fuel: int = DEFAULT_FUEL):
    return evaluate(e, rules, fuel).value


def format_trace(log) -> list[str]:
    from .syntax import pretty_print
    return [f"{rule} ⊢ {pretty_print(expr)}" for rule, expr in log if rule != "init"]
