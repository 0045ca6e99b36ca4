"""Expression-level typing: variables, abstractions, application and case."""
from __future__ import annotations

import itertools

from .errors import TypingError
from .graph import (
    App, Atom, Case, Ctx, Lam, Mol, Nu, TyArrow, TyVar, contexts,
    expand_expr, expand_term_notation, free_names, is_template, subst_links,
)


class TypingContext:
    """Maps context functors to (formal links, type atom over those links)."""

    def __init__(self, entries=None):
        self._map: dict = dict(entries or {})

    def bind(self, ctx: Ctx, ty: Atom) -> "TypingContext":
        out = dict(self._map)
        out[ctx.functor] = (tuple(ctx.links), ty)
        return TypingContext(out)

    def lookup(self, ctx: Ctx) -> Atom | None:
        entry = self._map.get(ctx.functor)
        if entry is None:
            return None
        formals, ty = entry
        return subst_links(ty, list(zip(formals, ctx.links)))

    def __contains__(self, functor) -> bool:
        return functor in self._map

    def __len__(self) -> int:
        return len(self._map)

    @classmethod
    def parse(cls, text: str) -> "TypingContext":
        """``$x[X] : t(X), $y[Y] : u(Y)``, entries separated by ``;`` or newlines."""
        from .syntax import parse_expr, parse_type
        ctx = cls()
        for part in text.replace("\n", ";").split(";"):
            part = part.strip()
            if not part:
                continue
            lhs, _, rhs = part.partition(" : ")
            c = parse_expr(lhs.strip())
            if not isinstance(c, Ctx) or not rhs:
                raise TypingError(f"bad typing context entry {part!r}")
            ctx = ctx.bind(c, parse_type(rhs.strip()))
        return ctx


def _as_context(ctx) -> TypingContext:
    if isinstance(ctx, TypingContext):
        return ctx
    return TypingContext(ctx or {})


# ---------------------------------------------------------------------------
# annotated graphs


def to_annotated(g, ctx, rules):
    """Contexts become holes, abstraction atoms become arrow placeholders."""
    from .verifier import hole
    ctx = _as_context(ctx)
    g = expand_term_notation(g)

    def walk(t):
        if isinstance(t, Ctx):
            ty = ctx.lookup(t) if t.functor in ctx else t.ann
            if ty is None:
                raise TypingError(f"graph context ${t.name}/{len(t.links)} has no type", t)
            if isinstance(ty.name, TyArrow):
                return Atom(ty.name, tuple(ty.args))
            return hole(ty)
        if isinstance(t, Atom):
            if isinstance(t.name, Lam):
                ty = type_of_expr(ctx, rules, t)
                return Atom(ty.name, tuple(t.args))
            return t
        if isinstance(t, Mol):
            return Mol(walk(t.left), walk(t.right))
        if isinstance(t, Nu):
            return Nu(t.link, walk(t.body))
        return t

    return walk(g)


def check_template(ctx, rules, t, goal: Atom) -> bool:
    """Does template ``t`` have type ``goal`` for every graph its contexts may stand for?"""
    from .verifier import check_graph
    ctx = _as_context(ctx)
    if isinstance(goal.name, TyArrow):
        try:
            return _types_equal(type_of_expr(ctx, rules, t), goal)
        except TypingError:
            return False
    return check_graph(t, goal, rules, ctx_types=ctx)


def _types_equal(a: Atom, b: Atom) -> bool:
    return a == b


# ---------------------------------------------------------------------------
# expressions


def type_of_expr(ctx, rules, e) -> Atom:
    from .grammar import Grammar
    ctx = _as_context(ctx)
    e = expand_expr(e)
    g = rules if isinstance(rules, Grammar) else Grammar(rules)
    for c in _all_contexts(e):
        if c.ann is not None:
            _check_defined(g, c.ann, c)
    return _type(ctx, g, e)


def _check_defined(g, ty: Atom, where):
    if isinstance(ty.name, TyArrow):
        _check_defined(g, ty.name.dom, where)
        _check_defined(g, ty.name.cod, where)
    elif not g.defines(ty):
        raise TypingError(f"type {ty.name.name}/{len(ty.args)} used by ${where.name} "
                          f"is not defined", where)


def _all_contexts(e):
    if isinstance(e, Ctx):
        yield e
    elif isinstance(e, Atom):
        if isinstance(e.name, Lam):
            yield e.name.param
            yield from _all_contexts(e.name.body)
        for a in e.args:
            if not isinstance(a, str):
                yield from _all_contexts(a)
    elif isinstance(e, Mol):
        yield from _all_contexts(e.left)
        yield from _all_contexts(e.right)
    elif isinstance(e, Nu):
        yield from _all_contexts(e.body)
    elif isinstance(e, App):
        yield from _all_contexts(e.fun)
        yield from _all_contexts(e.arg)
    elif isinstance(e, Case):
        for part in (e.scrutinee, e.pattern, e.then, e.other):
            yield from _all_contexts(part)


def _type(ctx: TypingContext, rules, e) -> Atom:
    if isinstance(e, Ctx):
        ty = ctx.lookup(e)
        if ty is None:
            ty = e.ann
        if ty is None:
            raise TypingError(f"unbound graph context ${e.name}/{len(e.links)}", e)
        return ty
    if isinstance(e, Atom) and isinstance(e.name, Lam):
        param, body = e.name.param, e.name.body
        if param.ann is None:
            raise TypingError(f"parameter ${param.name} of an abstraction has no type annotation", e)
        cod = _type(ctx.bind(param, param.ann), rules, body)
        return Atom(TyArrow(param.ann, cod), tuple(e.args))
    if isinstance(e, App):
        fun = e.fun
        if isinstance(fun, Atom) and isinstance(fun.name, Lam) and fun.name.param.ann is None:
            # let-sugar: the bound expression fixes the parameter's type
            arg_ty = _type(ctx, rules, e.arg)
            param = fun.name.param
            if frozenset(_type_links(arg_ty)) != frozenset(param.links):
                raise TypingError(f"type {_show(arg_ty)} does not fit ${param.name}"
                                  f"[{', '.join(param.links)}]", e)
            return _type(ctx.bind(param, arg_ty), rules, fun.name.body)
        fty = _type(ctx, rules, fun)
        if not isinstance(fty.name, TyArrow):
            raise TypingError(f"applying a graph of type {_show(fty)}, which is not a function", e)
        dom, cod = fty.name.dom, fty.name.cod
        if is_template(e.arg) and not isinstance(dom.name, TyArrow):
            if not check_template(ctx, rules, e.arg, dom):
                raise TypingError(f"argument does not have type {_show(dom)}", e.arg)
        else:
            aty = _type(ctx, rules, e.arg)
            if not _types_equal(aty, dom):
                raise TypingError(f"argument has type {_show(aty)}, expected {_show(dom)}", e.arg)
        return cod
    if isinstance(e, Case):
        _type(ctx, rules, e.scrutinee)
        inner = ctx
        for c in contexts(e.pattern):
            if c.ann is None:
                raise TypingError(f"graph context ${c.name} in a case pattern has no type annotation", e)
            inner = inner.bind(c, c.ann)
        then_ty = _type(inner, rules, e.then)
        other_ty = _type(ctx, rules, e.other)
        if not _types_equal(then_ty, other_ty):
            raise TypingError(f"case branches have types {_show(then_ty)} and {_show(other_ty)}", e)
        return then_ty
    if is_template(e):
        return infer_template(ctx, rules, e)
    raise TypingError(f"cannot type {e!r}", e)


def _type_links(ty: Atom) -> tuple:
    return tuple(ty.args)


def infer_template(ctx, rules, t) -> Atom:
    """Search the grammar's types (and link orders) for one the template has."""
    from .grammar import Grammar
    from .verifier import check_graph
    g = rules if isinstance(rules, Grammar) else Grammar(rules)
    ctx = _as_context(ctx)
    fn = sorted(free_names(t))
    annotated = to_annotated(t, ctx, g)
    for name in sorted(g.names()):
        if g.arity(name) != len(fn):
            continue
        for perm in itertools.permutations(fn):
            goal = Atom(TyVar(name), perm)
            if check_graph(annotated, goal, g):
                return goal
    raise TypingError(f"no type of the grammar fits the graph {_show_expr(t)}", t)


def _show(ty) -> str:
    from .syntax import pretty_print
    return pretty_print(ty)


def _show_expr(e) -> str:
    from .syntax import pretty_print
    return pretty_print(e)
