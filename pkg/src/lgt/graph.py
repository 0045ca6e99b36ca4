"""Graph terms, templates and expressions, plus the basic operations on them.

Links are plain strings. Everything is an immutable dataclass, so terms can be
hashed, shared between threads and used as dictionary keys.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import LgtError

# ---------------------------------------------------------------------------
# atom names


@dataclass(frozen=True)
class Con:
    """Constructor name (also integers, which are opaque nullary constructors)."""
    name: str


@dataclass(frozen=True)
class FusionName:
    pass


FUSION = FusionName()


@dataclass(frozen=True)
class Lam:
    """Abstraction used as an atom name: ``(\\ param . body)``."""
    param: "Ctx"
    body: "Expr"


@dataclass(frozen=True)
class TyVar:
    name: str


@dataclass(frozen=True)
class TyArrow:
    """Arrow type; ``dom`` and ``cod`` are type atoms carrying their own links."""
    dom: "Atom"
    cod: "Atom"


@dataclass(frozen=True)
class Hole:
    """Placeholder for an unknown graph of a given type (used by the verifier)."""
    ident: int
    ty: Union[TyVar, TyArrow]


AtomName = Union[Con, FusionName, Lam, TyVar, TyArrow, Hole]

# ---------------------------------------------------------------------------
# graphs, templates, expressions


@dataclass(frozen=True)
class Null:
    pass


NULL = Null()


@dataclass(frozen=True)
class Atom:
    name: AtomName
    # before term-notation expansion an argument may be a nested Atom or Ctx
    args: tuple

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class Mol:
    left: "Template"
    right: "Template"


@dataclass(frozen=True)
class Nu:
    link: str
    body: "Template"


@dataclass(frozen=True)
class Ctx:
    """Graph context ``$name[links]`` with an optional type annotation."""
    name: str
    links: tuple
    ann: Atom | None = None

    @property
    def functor(self) -> tuple[str, int]:
        return (self.name, len(self.links))


@dataclass(frozen=True)
class Case:
    scrutinee: "Expr"
    pattern: "Template"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class App:
    fun: "Expr"
    arg: "Expr"


# argument tuple of a type annotation written without links; it stands for the
# links of the annotated context
INHERIT = ("*",)

Template = Union[Null, Atom, Mol, Nu, Ctx]
Graph = Template
Expr = Union[Null, Atom, Mol, Nu, Ctx, Case, App]
TEMPLATE_TYPES = (Null, Atom, Mol, Nu, Ctx)


def is_type_name(name) -> bool:
    return isinstance(name, (TyVar, TyArrow))


def type_atom(name: str, *links: str) -> Atom:
    return Atom(TyVar(name), tuple(links))


def arrow_atom(dom: Atom, cod: Atom, *links: str) -> Atom:
    return Atom(TyArrow(dom, cod), tuple(links))


def fusion(x: str, y: str) -> Atom:
    return Atom(FUSION, (x, y))


def con(name: str, *links: str) -> Atom:
    return Atom(Con(name), tuple(links))


def molecule(parts: Iterable[Template]) -> Template:
    """Right-nested molecule of ``parts``; the empty molecule is ``Null``."""
    parts = list(parts)
    if not parts:
        return NULL
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Mol(p, out)
    return out


def nus(links: Iterable[str], body: Template) -> Template:
    for x in reversed(list(links)):
        body = Nu(x, body)
    return body


def flatten_mol(t: Template) -> list[Template]:
    if isinstance(t, Mol):
        return flatten_mol(t.left) + flatten_mol(t.right)
    if isinstance(t, Null):
        return []
    return [t]


# ---------------------------------------------------------------------------
# fresh names


class FreshNames:
    """Monotone, thread-safe supply of link names the parser can never produce."""

    def __init__(self, prefix: str = "#"):
        self._prefix = prefix
        self._counter = itertools.count()
        self._lock = threading.Lock()

    def __call__(self) -> str:
        with self._lock:
            return f"{self._prefix}{next(self._counter)}"


fresh = FreshNames("#")
fresh_ctx = FreshNames("%")


# ---------------------------------------------------------------------------
# free names and link substitution


def free_names(g: Template) -> frozenset[str]:
    if isinstance(g, Null):
        return frozenset()
    if isinstance(g, Atom):
        out: set[str] = set()
        for a in g.args:
            out |= free_names(a) if not isinstance(a, str) else {a}
        return frozenset(out)
    if isinstance(g, Ctx):
        return frozenset(g.links)
    if isinstance(g, Mol):
        return free_names(g.left) | free_names(g.right)
    if isinstance(g, Nu):
        return free_names(g.body) - {g.link}
    raise TypeError(f"not a template: {g!r}")


def subst_links(g: Template, pairs) -> Template:
    """Capture-avoiding hyperlink substitution; ``pairs`` is a sequence of (from, to)."""
    pairs = tuple(pairs)
    sources = [p[0] for p in pairs]
    if len(set(sources)) != len(sources):
        raise LgtError(f"link substitution with repeated source links {sources}")
    mapping = {a: b for a, b in pairs}
    return _subst(g, mapping)


def _subst(g, mapping: dict):
    if not mapping:
        return g
    if isinstance(g, str):
        return mapping.get(g, g)
    if isinstance(g, Null):
        return g
    if isinstance(g, Atom):
        args = tuple(_subst(a, mapping) for a in g.args)
        return g if args == g.args else Atom(g.name, args)
    if isinstance(g, Ctx):
        ann = _subst(g.ann, mapping) if g.ann is not None else None
        return Ctx(g.name, tuple(mapping.get(x, x) for x in g.links), ann)
    if isinstance(g, Mol):
        return Mol(_subst(g.left, mapping), _subst(g.right, mapping))
    if isinstance(g, Nu):
        x = g.link
        if x in mapping:
            inner = {k: v for k, v in mapping.items() if k != x}
            return Nu(x, _subst(g.body, inner))
        if x not in mapping.values():
            return Nu(x, _subst(g.body, mapping))
        # capture: rename the binder first
        w = fresh()
        body = _subst(g.body, {x: w})
        return Nu(w, _subst(body, mapping))
    raise TypeError(f"not a template: {g!r}")


# ---------------------------------------------------------------------------
# term notation


def expand_term_notation(t: Template) -> Template:
    """Replace nested atoms and contexts in argument positions by fresh ν-links."""
    if isinstance(t, (Null, str)):
        return t
    if isinstance(t, Mol):
        return Mol(expand_term_notation(t.left), expand_term_notation(t.right))
    if isinstance(t, Nu):
        return Nu(t.link, expand_term_notation(t.body))
    if isinstance(t, Atom):
        name = t.name
        if isinstance(name, Lam):
            name = Lam(name.param, expand_expr(name.body))
        return _expand_args(name, t.args, lambda n, a: Atom(n, a))
    if isinstance(t, Ctx):
        ann = t.ann

        def build(n, a):
            if ann is not None and ann.args == INHERIT:
                return Ctx(n, a, Atom(ann.name, a))
            return Ctx(n, a, ann)
        return _expand_args(t.name, t.links, build)
    raise TypeError(f"not a template: {t!r}")


def _expand_args(name, args, build):
    plain: list[str] = []
    binders: list[str] = []
    children: list[Template] = []
    for a in args:
        if isinstance(a, str):
            plain.append(a)
            continue
        y = fresh()
        binders.append(y)
        plain.append(y)
        children.append(expand_term_notation(attach_link(a, y)))
    head = build(name, tuple(plain))
    if not binders:
        return head
    return nus(binders, molecule([head] + children))


def attach_link(t, link: str):
    """Append ``link`` as the last argument of a nested atom or context."""
    if isinstance(t, Atom):
        if t.args == INHERIT:
            return Atom(t.name, (link,))
        return Atom(t.name, t.args + (link,))
    if isinstance(t, Ctx):
        ann = None
        if t.ann is not None:
            if t.ann.args == INHERIT or len(t.ann.args) == len(t.links) + 1:
                ann = t.ann
            else:
                ann = attach_link(t.ann, link)
        return Ctx(t.name, t.links + (link,), ann)
    raise LgtError(f"cannot nest {t!r} in an argument position")


def expand_expr(e: Expr) -> Expr:
    if isinstance(e, Case):
        return Case(expand_expr(e.scrutinee), expand_term_notation(e.pattern),
                    expand_expr(e.then), expand_expr(e.other))
    if isinstance(e, App):
        return App(expand_expr(e.fun), expand_expr(e.arg))
    return expand_term_notation(e)


def is_expanded(t) -> bool:
    if isinstance(t, Atom):
        return all(isinstance(a, str) for a in t.args)
    if isinstance(t, Ctx):
        return all(isinstance(a, str) for a in t.links)
    if isinstance(t, Mol):
        return is_expanded(t.left) and is_expanded(t.right)
    if isinstance(t, Nu):
        return is_expanded(t.body)
    return True


# ---------------------------------------------------------------------------
# free functors


def free_functors(e: Expr) -> frozenset[tuple[str, int]]:
    if isinstance(e, Case):
        return (free_functors(e.scrutinee)
                | (free_functors(e.then) - free_functors(e.pattern))
                | free_functors(e.other))
    if isinstance(e, App):
        return free_functors(e.fun) | free_functors(e.arg)
    if isinstance(e, Ctx):
        return frozenset({e.functor})
    if isinstance(e, Atom):
        out = frozenset()
        if isinstance(e.name, Lam):
            out = free_functors(e.name.body) - {e.name.param.functor}
        for a in e.args:
            if not isinstance(a, str):
                out |= free_functors(a)
        return out
    if isinstance(e, Mol):
        return free_functors(e.left) | free_functors(e.right)
    if isinstance(e, Nu):
        return free_functors(e.body)
    if isinstance(e, Null):
        return frozenset()
    raise TypeError(f"not an expression: {e!r}")


def contexts(t: Template) -> list[Ctx]:
    """Graph contexts occurring in a template, left to right (not inside abstractions)."""
    if isinstance(t, Ctx):
        return [t]
    if isinstance(t, Mol):
        return contexts(t.left) + contexts(t.right)
    if isinstance(t, Nu):
        return contexts(t.body)
    if isinstance(t, Atom):
        return [c for a in t.args if not isinstance(a, str) for c in contexts(a)]
    return []


def atoms_of(t: Template) -> list[Atom]:
    if isinstance(t, Atom):
        return [t]
    if isinstance(t, Mol):
        return atoms_of(t.left) + atoms_of(t.right)
    if isinstance(t, Nu):
        return atoms_of(t.body)
    return []


def is_template(e) -> bool:
    return isinstance(e, TEMPLATE_TYPES)


def is_value(e) -> bool:
    """A template with no graph contexts anywhere outside abstraction bodies."""
    return is_template(e) and not contexts(e)
