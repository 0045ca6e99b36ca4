"""Concrete syntax: lexer, recursive-descent parser and pretty-printer.

Surface conventions: links start with an uppercase letter (or ``_``),
constructor and type names with a lowercase letter or are integer literals,
graph contexts are written ``$x[X,Y]``.  See README for the full grammar.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .graph import (
    FUSION, INHERIT, NULL, App, Atom, Case, Con, Ctx, FusionName, Lam, Mol, Null, Nu,
    TyArrow, TyVar, contexts, is_template,
)


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<arrow>->)
  | (?P<fuse>><)
  | (?P<ctx>\$[a-z][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[()\[\],.:;|\\=])
""", re.VERBOSE)

KEYWORDS = {"nu", "case", "of", "otherwise", "let", "in", "type"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    pos: int = 0


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind != "ws":
            if kind == "ident":
                if tok in KEYWORDS:
                    kind = "kw"
                elif tok[0].isupper() or tok[0] == "_":
                    kind = "link"
                else:
                    kind = "name"
            out.append(Token(kind, tok, line, col, pos))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1, pos))
    return out


@dataclass(frozen=True)
class Program:
    rules: tuple
    main: object = None


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.type_mode = False

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "eof"

    def error(self, msg: str):
        t = self.tok
        found = t.text or "end of input"
        raise ParseError(f"{msg} (found {found!r})", t.line, t.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "eof":
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {what}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def links(self, close: str) -> tuple:
        out = []
        if self.at(close):
            self.i += 1
            return ()
        while True:
            out.append(self.expect_kind("link", "a link name").text)
            if self.accept(close):
                break
            self.expect(",")
        if len(set(out)) != len(out):
            self.error(f"repeated link in {out}")
        return tuple(out)

    # -- programs and type definitions
    def program(self) -> Program:
        rules = []
        while self.at("type", "kw"):
            self.i += 1
            rules.append(self.rule())
            while self.looks_like_rule():
                rules.append(self.rule())
        main = None
        if self.tok.kind != "eof":
            main = self.expr()
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")
        return Program(tuple(resolve_rules(rules)), main)

    def looks_like_rule(self) -> bool:
        if self.tok.kind != "name":
            return False
        j = self.i + 1
        if self.toks[j].text == "->":
            return True
        if self.toks[j].text != "(":
            return False
        while self.toks[j].kind != "eof" and self.toks[j].text != ")":
            j += 1
        return self.toks[j + 1].text == "->"

    def type_defs(self) -> list:
        rules = []
        while self.tok.kind != "eof":
            self.accept("type")
            rules.append(self.rule())
        return resolve_rules(rules)

    def rule(self):
        from .grammar import ProductionRule
        name = self.expect_kind("name", "a type name").text
        links = self.links(")") if self.accept("(") else ()
        self.expect("->")
        old = self.type_mode
        self.type_mode = True
        rhs = self.expr()
        self.type_mode = old
        if not is_template(rhs):
            self.error("the right-hand side of a production must be a graph")
        self.expect(";")
        return ProductionRule(Atom(TyVar(name), links), rhs)

    # -- types
    def type_atom(self) -> Atom:
        if self.accept("("):
            parts = [self.type_atom()]
            while self.accept("->"):
                parts.append(self.type_atom())
            self.expect(")")
            if len(parts) < 2:
                self.error("expected '->' in an arrow type")
            links = self.links(")") if self.at("(") and self._advance() else INHERIT
            parts = [Atom(p.name, ()) if p.args == INHERIT else p for p in parts]
            out = parts[-1]
            for dom in reversed(parts[:-1]):
                out = Atom(TyArrow(dom, out), links)
            return out
        name = self.tok
        if name.kind not in ("name", "int"):
            self.error("expected a type")
        self.i += 1
        links = self.links(")") if self.accept("(") else INHERIT
        return Atom(TyVar(name.text), links)

    def _advance(self) -> bool:
        self.i += 1
        return True

    # -- expressions
    def expr(self):
        t = self.tok
        if t.kind == "kw" and t.text == "case":
            self.i += 1
            scrut = self.expr()
            self.expect("of")
            pat = self.expr()
            if not is_template(pat):
                self.error("a case pattern must be a graph template")
            check_pattern(pat, self)
            self.expect("->")
            then = self.expr()
            self.expect("|")
            self.expect("otherwise")
            self.expect("->")
            other = self.expr()
            return Case(scrut, pat, then, other)
        if t.kind == "kw" and t.text == "let":
            self.i += 1
            c = self.context()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            body = self.expr()
            return App(Atom(Lam(c, body), ()), bound)
        if t.text == "\\" and t.kind == "punct":
            return self.lam_atom(())
        return self.molecule()

    def molecule(self):
        parts = [self.unit()]
        while self.accept(","):
            parts.append(self.unit())
        if len(parts) == 1:
            return parts[0]
        for p in parts:
            if not is_template(p):
                self.error("only graphs can be composed with ','")
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Mol(p, out)
        return out

    def unit(self):
        if self.at("nu", "kw"):
            self.i += 1
            names = [self.expect_kind("link", "a link name").text]
            while self.tok.kind == "link":
                names.append(self.tok.text)
                self.i += 1
            self.expect(".")
            body = self.molecule()
            if not is_template(body):
                self.error("'nu' must bind a graph")
            for x in reversed(names):
                body = Nu(x, body)
            return body
        if self.at("case", "kw") or self.at("let", "kw") or self.at("\\"):
            return self.expr()
        return self.application()

    def application(self):
        fun = self.prim()
        while self.starts_prim():
            fun = App(fun, self.prim())
        return fun

    def starts_prim(self) -> bool:
        t = self.tok
        if t.kind in ("link", "name", "int", "ctx"):
            return True
        return t.kind == "punct" and t.text == "("

    def prim(self):
        t = self.tok
        if t.kind == "link":
            self.i += 1
            self.expect("><")
            y = self.expect_kind("link", "a link name").text
            return Atom(FUSION, (t.text, y))
        if t.kind in ("name", "int"):
            return self.atom()
        if t.kind == "ctx":
            return self.context()
        if t.text == "(":
            if self.peek().text == ")":
                self.i += 2
                return NULL
            if self.type_mode:
                save = self.i
                try:
                    return self.type_atom()
                except ParseError:
                    self.i = save
            self.i += 1
            if self.at("\\"):
                return self.lam_atom(None)
            inner = self.expr()
            self.expect(")")
            return inner
        self.error("expected an expression")

    def lam_atom(self, links):
        """Parse ``\\ params . body``; with ``links is None`` we are inside parentheses."""
        self.expect("\\")
        params = [self.context()]
        while self.tok.kind == "ctx":
            params.append(self.context())
        self.expect(".")
        body = self.expr()
        if links is None:
            self.expect(")")
            links = self.link_suffix()
        for p in reversed(params[1:]):
            body = Atom(Lam(p, body), links)
        return Atom(Lam(params[0], body), links)

    def link_suffix(self) -> tuple:
        # "(A, B)" directly after an abstraction gives its links; "()" is an argument
        if not self.at("("):
            return ()
        j = self.i + 1
        if self.toks[j].kind != "link":
            return ()
        while self.toks[j].kind == "link" and self.toks[j + 1].text == ",":
            j += 2
        if self.toks[j].kind == "link" and self.toks[j + 1].text == ")":
            self.i += 1
            return self.links(")")
        return ()

    def atom(self):
        name = self.tok.text
        self.i += 1
        args = ()
        if self.at("("):
            self.i += 1
            args = self.args(")")
        return Atom(Con(name), args)

    def args(self, close: str) -> tuple:
        out = []
        if self.accept(close):
            return ()
        while True:
            out.append(self.arg())
            if self.accept(close):
                break
            self.expect(",")
        plain = [a for a in out if isinstance(a, str)]
        if len(set(plain)) != len(plain) and close == "]":
            self.error(f"repeated link in context arguments {plain}")
        return tuple(out)

    def arg(self):
        t = self.tok
        if t.kind == "link":
            self.i += 1
            return t.text
        if t.kind in ("name", "int"):
            return self.atom()
        if t.kind == "ctx":
            return self.context()
        if t.text == "(":
            if self.type_mode:
                return self.type_atom()
            self.i += 1
            if self.at("\\"):
                return self.lam_atom(None)
        self.error("expected a link or a nested atom")

    def context(self) -> Ctx:
        t = self.expect_kind("ctx", "a graph context")
        links = self.args("]") if self.accept("[") else ()
        ann = None
        if self.accept(":"):
            ann = self.type_atom()
        return Ctx(t.text[1:], links, ann)


def check_pattern(pat, parser=None):
    for a in _all_atoms(pat):
        if isinstance(a.name, Lam):
            msg = "abstraction atoms are not allowed in case patterns"
            if parser is not None:
                parser.error(msg)
            raise ParseError(msg)
    names = [c.name for c in contexts(pat)]
    if len(set(names)) != len(names):
        msg = f"a graph context occurs twice in a pattern: {names}"
        if parser is not None:
            parser.error(msg)
        raise ParseError(msg)


def _all_atoms(t):
    if isinstance(t, Atom):
        yield t
        for a in t.args:
            if not isinstance(a, str):
                yield from _all_atoms(a)
    elif isinstance(t, Ctx):
        for a in t.links:
            if not isinstance(a, str):
                yield from _all_atoms(a)
    elif isinstance(t, Mol):
        yield from _all_atoms(t.left)
        yield from _all_atoms(t.right)
    elif isinstance(t, Nu):
        yield from _all_atoms(t.body)


def resolve_rules(rules):
    """Names defined by some rule head are types; every other name is a constructor."""
    from .grammar import ProductionRule
    arity: dict = {}
    for r in rules:
        n, k = r.head.name.name, len(r.head.args)
        if arity.setdefault(n, k) != k:
            raise ParseError(f"type {n} is used with arities {arity[n]} and {k}")
    types = set(arity)
    return [ProductionRule(r.head, _resolve(r.rhs, types)) for r in rules]


def _resolve(t, types):
    if isinstance(t, str) or t is None:
        return t
    if isinstance(t, Atom):
        name = t.name
        if isinstance(name, Con) and name.name in types:
            name = TyVar(name.name)
        return Atom(name, tuple(_resolve(a, types) for a in t.args))
    if isinstance(t, Mol):
        return Mol(_resolve(t.left, types), _resolve(t.right, types))
    if isinstance(t, Nu):
        return Nu(t.link, _resolve(t.body, types))
    return t


# ---------------------------------------------------------------------------
# public entry points


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_type_defs(text: str) -> list:
    return _Parser(text).type_defs()


def parse_expr(text: str):
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    return e


def parse_template(text: str):
    e = parse_expr(text)
    if not is_template(e):
        raise ParseError("expected a graph template")
    return e


def parse_type(text: str) -> Atom:
    p = _Parser(text)
    t = p.type_atom()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    if t.args == INHERIT:
        t = Atom(t.name, ())
    return t


def parse_goal_file(text: str):
    """Type blocks followed by an optional goal ``<template> : <type>``."""
    p = _Parser(text)
    rules = []
    while p.at("type", "kw"):
        p.i += 1
        rules.append(p.rule())
        while p.looks_like_rule():
            rules.append(p.rule())
    rules = resolve_rules(rules)
    if p.tok.kind == "eof":
        return rules, None
    rest = text[p.tok.pos:]
    try:
        return rules, parse_goal(rest)
    except ParseError as e:
        raise ParseError(f"{e} (in the goal starting at line {p.tok.line})") from None


def parse_goal(text: str):
    """Parse ``<template> : <type atom>``, splitting at the last top-level colon."""
    depth = 0
    split = -1
    for k, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == ":" and depth == 0:
            split = k
    if split < 0:
        raise ParseError("a goal has the form '<template> : <type>'")
    return parse_template(text[:split]), parse_type(text[split + 1:])


# ---------------------------------------------------------------------------
# pretty printing

_LINK_RE = re.compile(r"[A-Z_][A-Za-z0-9_']*$")


def pretty_print(term) -> str:
    if isinstance(term, Program):
        lines = [f"type {pretty_print(r.head)} -> {_pp(r.rhs, 0)};" for r in term.rules]
        if term.main is not None:
            lines.append(pretty_print(term.main))
        return "\n".join(lines)
    if hasattr(term, "head") and hasattr(term, "rhs"):
        return f"{pretty_print(term.head)} -> {pretty_print(term.rhs)}"
    return _pp(_printable(term), 0)


def _printable(term):
    """Rename links the parser could not read back (fresh ``#n`` names)."""
    names = set()
    _collect_links(term, names)
    bad = sorted(n for n in names if not _LINK_RE.match(n))
    if not bad:
        return term
    taken = set(names)
    mapping = {}
    k = 0
    for b in bad:
        while f"_{k}" in taken:
            k += 1
        mapping[b] = f"_{k}"
        taken.add(mapping[b])
    return _rename_all(term, mapping)


def _collect_links(t, acc):
    if isinstance(t, str):
        acc.add(t)
    elif isinstance(t, Atom):
        if isinstance(t.name, Lam):
            _collect_links(t.name.param, acc)
            _collect_links(t.name.body, acc)
        elif isinstance(t.name, TyArrow):
            _collect_links(t.name.dom, acc)
            _collect_links(t.name.cod, acc)
        if t.args != INHERIT:
            for a in t.args:
                _collect_links(a, acc)
    elif isinstance(t, Ctx):
        for a in t.links:
            _collect_links(a, acc)
        if t.ann is not None:
            _collect_links(t.ann, acc)
    elif isinstance(t, Mol):
        _collect_links(t.left, acc)
        _collect_links(t.right, acc)
    elif isinstance(t, Nu):
        acc.add(t.link)
        _collect_links(t.body, acc)
    elif isinstance(t, Case):
        for part in (t.scrutinee, t.pattern, t.then, t.other):
            _collect_links(part, acc)
    elif isinstance(t, App):
        _collect_links(t.fun, acc)
        _collect_links(t.arg, acc)


def _rename_all(t, m):
    if isinstance(t, str):
        return m.get(t, t)
    if isinstance(t, Atom):
        name = t.name
        if isinstance(name, Lam):
            name = Lam(_rename_all(name.param, m), _rename_all(name.body, m))
        elif isinstance(name, TyArrow):
            name = TyArrow(_rename_all(name.dom, m), _rename_all(name.cod, m))
        args = t.args if t.args == INHERIT else tuple(_rename_all(a, m) for a in t.args)
        return Atom(name, args)
    if isinstance(t, Ctx):
        ann = _rename_all(t.ann, m) if t.ann is not None else None
        return Ctx(t.name, tuple(_rename_all(a, m) for a in t.links), ann)
    if isinstance(t, Mol):
        return Mol(_rename_all(t.left, m), _rename_all(t.right, m))
    if isinstance(t, Nu):
        return Nu(m.get(t.link, t.link), _rename_all(t.body, m))
    if isinstance(t, Case):
        return Case(*(_rename_all(p, m) for p in (t.scrutinee, t.pattern, t.then, t.other)))
    if isinstance(t, App):
        return App(_rename_all(t.fun, m), _rename_all(t.arg, m))
    return t


# precedence levels: 0 anything, 1 molecule unit, 2 application, 3 primary
def _pp(e, level: int) -> str:
    if isinstance(e, Null):
        return "()"
    if isinstance(e, Atom):
        return _pp_atom(e)
    if isinstance(e, Ctx):
        s = "$" + e.name
        if e.links:
            s += "[" + ", ".join(_pp_arg(a) for a in e.links) + "]"
        if e.ann is not None:
            s += ":" + _pp_type(e.ann)
        return s
    if isinstance(e, Mol):
        left = _pp(e.left, 1)
        if isinstance(e.left, (Mol, Nu)):
            left = f"({_pp(e.left, 0)})"
        right = _pp(e.right, 0) if isinstance(e.right, (Mol, Nu)) else _pp(e.right, 1)
        s = f"{left}, {right}"
        return f"({s})" if level >= 1 else s
    if isinstance(e, Nu):
        s = f"nu {e.link}. {_pp(e.body, 0)}"
        return f"({s})" if level >= 1 else s
    if isinstance(e, App):
        s = f"{_pp_app_part(e.fun, 2)} {_pp_app_part(e.arg, 3)}"
        return f"({s})" if level >= 3 else s
    if isinstance(e, Case):
        s = (f"case {_pp(e.scrutinee, 0)} of {_pp(e.pattern, 0)} -> "
             f"{_pp(e.then, 1)} | otherwise -> {_pp(e.other, 0)}")
        return f"({s})" if level >= 1 else s
    raise TypeError(f"cannot print {e!r}")


def _pp_app_part(e, level: int) -> str:
    # a bare nullary name followed by "(" would read as an argument list
    if isinstance(e, Atom) and isinstance(e.name, Con) and not e.args:
        return e.name.name + "()"
    return _pp(e, level)


def _pp_atom(a: Atom) -> str:
    name = a.name
    if isinstance(name, FusionName):
        return f"{_pp_arg(a.args[0])} >< {_pp_arg(a.args[1])}"
    if isinstance(name, (TyVar, TyArrow)):
        return _pp_type(a)
    if isinstance(name, Lam):
        params = []
        body = name.body
        params.append(_pp(name.param, 0))
        s = f"(\\ {' '.join(params)}. {_pp(body, 0)})"
        if a.args:
            s += "(" + ", ".join(_pp_arg(x) for x in a.args) + ")"
        return s
    s = name.name
    if a.args:
        s += "(" + ", ".join(_pp_arg(x) for x in a.args) + ")"
    return s


def _pp_arg(a) -> str:
    if isinstance(a, str):
        return a
    return _pp(a, 3)


def _pp_type(t: Atom) -> str:
    if isinstance(t.name, TyArrow):
        parts = [t.name.dom]
        cod = t.name.cod
        # (a -> (b -> c)(Z))(Z) is written (a -> b -> c)(Z)
        while isinstance(cod.name, TyArrow) and cod.args == t.args and t.args != INHERIT:
            parts.append(cod.name.dom)
            cod = cod.name.cod
        parts.append(cod)
        s = "(" + " -> ".join(_pp_type(p) for p in parts) + ")"
        if t.args != INHERIT:
            s += "(" + ", ".join(t.args) + ")"
        return s
    if t.args == INHERIT:
        return t.name.name
    if not t.args:
        return t.name.name + "()"
    return f"{t.name.name}({', '.join(_pp_arg(a) for a in t.args)})"


# ---------------------------------------------------------------------------
# re-sugaring values for display


def resugar(g):
    """Rebuild term notation for a value: a local link used once as the last
    argument of a constructor and once elsewhere becomes a nested argument."""
    from .canon import normalize
    c = normalize(g)
    taken = set(c.free)
    names = []
    k = 0
    for _ in range(c.nlocal):
        while f"L{k}" in taken:
            k += 1
        names.append(f"L{k}")
        k += 1
    uses: dict = {}
    for idx, (name, args) in enumerate(c.atoms):
        for pos, a in enumerate(args):
            if isinstance(a, int):
                uses.setdefault(a, []).append((idx, pos))
    parent: dict = {}   # child atom index -> (parent index, position, link)
    for link, occ in uses.items():
        if len(occ) != 2:
            continue
        (i1, p1), (i2, p2) = occ
        for (ci, cp), (pi, pp) in (((i1, p1), (i2, p2)), ((i2, p2), (i1, p1))):
            child = c.atoms[ci]
            if (isinstance(child[0], (Con, Lam)) and cp == len(child[1]) - 1 and ci != pi
                    and ci not in parent):
                parent[ci] = (pi, pp, link)
                break
    # break cycles: walk up from every atom; if we return to it, cut the edge
    for start in list(parent):
        seen = {start}
        cur = parent.get(start)
        while cur is not None:
            if cur[0] in seen:
                del parent[start]
                break
            seen.add(cur[0])
            cur = parent.get(cur[0])
    nested_links = {v[2] for v in parent.values()}
    children: dict = {}
    for ci, (pi, pp, link) in parent.items():
        children[(pi, pp)] = ci

    def build(idx):
        name, args = c.atoms[idx]
        out = []
        limit = len(args) - 1 if idx in parent else len(args)
        for pos in range(limit):
            a = args[pos]
            if (idx, pos) in children:
                out.append(build(children[(idx, pos)]))
            elif isinstance(a, int):
                out.append(names[a])
            else:
                out.append(a)
        return Atom(name, tuple(out))

    tops = [build(i) for i in range(len(c.atoms)) if i not in parent]
    body = NULL
    if tops:
        body = tops[-1]
        for t in reversed(tops[:-1]):
            body = Mol(t, body)
    for link in reversed([l for l in range(c.nlocal) if l not in nested_links]):
        body = Nu(names[link], body)
    return body


def show_value(g) -> str:
    return pretty_print(resugar(g))
