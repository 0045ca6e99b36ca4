"""Graphviz DOT rendering of graphs, expressions and reduction traces."""
from __future__ import annotations

from .canon import CtxName, normalize
from .graph import (
    App, Case, Con, FusionName, Hole, Lam, TyArrow, TyVar, expand_term_notation, is_template,
)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _label(name) -> str:
    from .syntax import pretty_print
    if isinstance(name, Con):
        return name.name
    if isinstance(name, CtxName):
        return "$" + name.name
    if isinstance(name, Lam):
        from .graph import Atom
        return pretty_print(Atom(name, ()))
    if isinstance(name, TyVar):
        return name.name
    if isinstance(name, Hole):
        return _label(name.ty) + "?"
    if isinstance(name, TyArrow):
        return "->"
    return str(name)


def _body(g, prefix: str, indent: str) -> list[str]:
    c = normalize(expand_term_notation(g))
    lines = []
    for f in sorted(c.free):
        lines.append(f"{indent}{_quote(prefix + 'F_' + f)} [shape=diamond, label={_quote(f)}];")
    for k in range(c.nlocal):
        lines.append(f"{indent}{prefix}l{k} [shape=point];")

    def link_node(a):
        return _quote(prefix + "F_" + a) if isinstance(a, str) else f"{prefix}l{a}"

    for i, (name, args) in enumerate(c.atoms):
        node = f"{prefix}a{i}"
        if isinstance(name, FusionName):
            lines.append(f"{indent}{node} [shape=circle, style=filled, fillcolor=black, "
                         f"width=0.08, label=\"\"];")
            for a in args:
                lines.append(f"{indent}{node} -> {link_node(a)} [dir=none];")
            continue
        lines.append(f"{indent}{node} [shape=box, label={_quote(_label(name))}];")
        many = len(args) > 1
        for p, a in enumerate(args, 1):
            port = f", taillabel=\"{p}\"" if many else ""
            lines.append(f"{indent}{node} -> {link_node(a)} [dir=none{port}];")
    return lines


def graph_to_dot(g, name: str = "G") -> str:
    """One digraph for a graph or template; node names follow its canonical form."""
    lines = [f"digraph {name} {{"]
    lines += _body(g, "", "  ")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _parts(e, role: str, out: list):
    if is_template(e):
        out.append((role, e))
    elif isinstance(e, App):
        _parts(e.fun, "function", out)
        _parts(e.arg, "argument", out)
    elif isinstance(e, Case):
        _parts(e.scrutinee, "scrutinee", out)
        out.append(("pattern", e.pattern))
        _parts(e.then, "then", out)
        _parts(e.other, "otherwise", out)
    else:
        raise TypeError(f"not an expression: {e!r}")


def expr_to_dot(e, name: str = "G", label: str | None = None) -> str:
    """An expression drawn as one cluster per graph operand, left to right."""
    if is_template(e) and label is None:
        return graph_to_dot(e, name)
    parts: list = []
    _parts(e, "graph", parts)
    lines = [f"digraph {name} {{"]
    if label is not None:
        lines.append(f"  label={_quote(label)};")
    if len(parts) == 1 and parts[0][0] == "graph":
        lines += _body(parts[0][1], "", "  ")
    else:
        for k, (role, part) in enumerate(parts):
            lines.append(f"  subgraph cluster_{k} {{")
            lines.append(f"    label={_quote(role)};")
            lines += _body(part, f"c{k}_", "    ")
            lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def trace_to_dot(log) -> str:
    """One digraph per state of an evaluation log of (rule, expression) pairs."""
    out = []
    for n, (rule, e) in enumerate(log):
        out.append(expr_to_dot(e, f"step{n}", label=f"{n}: {rule}"))
    return "".join(out)
