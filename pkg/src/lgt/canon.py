"""Canonical forms for graphs and the structural-congruence decision procedure.

``normalize`` flattens molecules, pulls every binder to the front, absorbs
fusions that touch a local link and drops unused binders.  What remains is a
multiset of atoms over local link ids ``0..n-1`` and free link names.  The
local ids are then relabelled canonically (colour refinement plus
individualisation), so two graphs are congruent exactly when their canonical
forms are equal.  ``congruent`` decides the same question by a separate route,
a backtracking search for a bijection between local links.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .graph import (
    FUSION, Atom, Case, App, Con, Ctx, FusionName, Hole, Lam, Mol, Null, Nu,
    TyArrow, TyVar, fresh, molecule, nus,
)

Link = Union[int, str]


@dataclass(frozen=True)
class CtxName:
    """A graph context seen as an atom; ``ann`` keeps the annotation positionally."""
    name: str
    ann: object = None  # (type name, positions of the context links) or None


@dataclass(frozen=True)
class CanonicalGraph:
    atoms: tuple  # sorted tuple of (AtomName, args); args are int (local) or str (free)
    nlocal: int
    free: frozenset

    def __len__(self) -> int:
        return len(self.atoms)


# ---------------------------------------------------------------------------
# atom-name keys


def name_key(name) -> str:
    """A string that orders atom names and equates abstractions up to renaming."""
    return _name_key(name)


@lru_cache(maxsize=65536)
def _name_key(name) -> str:
    if isinstance(name, Con):
        return "c:" + name.name
    if isinstance(name, FusionName):
        return "f:"
    if isinstance(name, TyVar):
        return "t:" + name.name
    if isinstance(name, TyArrow):
        return "a:" + repr((name.dom, name.cod))
    if isinstance(name, Hole):
        return f"h:{name.ident}:{_name_key(name.ty)}"
    if isinstance(name, CtxName):
        return f"x:{name.name}:{name.ann!r}"
    if isinstance(name, Lam):
        return "l:" + repr(alpha_normal_lam(name))
    raise TypeError(f"unknown atom name {name!r}")


def alpha_normal_lam(lam: Lam) -> Lam:
    """Rename every link and bound context inside an abstraction canonically."""
    r = _Renamer()
    return r.lam(lam, {}, {})


class _Renamer:
    def __init__(self):
        self.links = 0
        self.ctxs = 0
        self.loose: dict[str, str] = {}

    def link(self, x: str, env: dict) -> str:
        if x in env:
            return env[x]
        if x not in self.loose:
            self.loose[x] = self.new_link()
        return self.loose[x]

    def new_link(self) -> str:
        self.links += 1
        return f"_{self.links}"

    def new_ctx(self) -> str:
        self.ctxs += 1
        return f"~{self.ctxs}"

    def lam(self, lam: Lam, env: dict, cenv: dict) -> Lam:
        p = lam.param
        env2 = dict(env)
        new_links = []
        for x in p.links:
            env2[x] = self.new_link()
            new_links.append(env2[x])
        cname = self.new_ctx()
        cenv2 = dict(cenv)
        cenv2[p.functor] = cname
        ann = self.tmpl(p.ann, env2, cenv) if p.ann is not None else None
        param = Ctx(cname, tuple(new_links), ann)
        return Lam(param, self.expr(lam.body, env2, cenv2))

    def expr(self, e, env, cenv):
        if isinstance(e, Case):
            scrut = self.expr(e.scrutinee, env, cenv)
            cenv2 = dict(cenv)
            from .graph import contexts
            for c in contexts(e.pattern):
                cenv2[c.functor] = self.new_ctx()
            pat = self.tmpl(e.pattern, env, cenv2)
            return Case(scrut, pat, self.expr(e.then, env, cenv2), self.expr(e.other, env, cenv))
        if isinstance(e, App):
            return App(self.expr(e.fun, env, cenv), self.expr(e.arg, env, cenv))
        return self.tmpl(e, env, cenv)

    def tmpl(self, t, env, cenv):
        if isinstance(t, str):
            return self.link(t, env)
        if isinstance(t, Null):
            return t
        if isinstance(t, Atom):
            name = t.name
            if isinstance(name, Lam):
                name = self.lam(name, env, cenv)
            elif isinstance(name, TyArrow):
                name = TyArrow(self.tmpl(name.dom, env, cenv), self.tmpl(name.cod, env, cenv))
            return Atom(name, tuple(self.tmpl(a, env, cenv) for a in t.args))
        if isinstance(t, Ctx):
            name = cenv.get(t.functor, t.name)
            ann = self.tmpl(t.ann, env, cenv) if t.ann is not None else None
            return Ctx(name, tuple(self.link(x, env) for x in t.links), ann)
        if isinstance(t, Mol):
            return Mol(self.tmpl(t.left, env, cenv), self.tmpl(t.right, env, cenv))
        if isinstance(t, Nu):
            env2 = dict(env)
            env2[t.link] = self.new_link()
            return Nu(env2[t.link], self.tmpl(t.body, env2, cenv))
        raise TypeError(f"not a template: {t!r}")


# ---------------------------------------------------------------------------
# flattening and fusion absorption


def ctx_atom_name(c: Ctx) -> CtxName:
    ann = None
    if c.ann is not None:
        pos = tuple(c.links.index(x) if x in c.links else x for x in c.ann.args)
        ann = (name_key(c.ann.name), pos)
    return CtxName(c.name, ann)


def flatten(g) -> tuple[list, int]:
    """Prenex form: a list of (name, args) over local ints and free names."""
    atoms: list = []
    counter = [0]

    def walk(t, env):
        if isinstance(t, Null):
            return
        if isinstance(t, Atom):
            args = []
            for a in t.args:
                if not isinstance(a, str):
                    raise _Nested
                args.append(env.get(a, a))
            atoms.append((t.name, tuple(args)))
        elif isinstance(t, Ctx):
            if not all(isinstance(a, str) for a in t.links):
                raise _Nested
            atoms.append((ctx_atom_name(t), tuple(env.get(a, a) for a in t.links)))
        elif isinstance(t, Mol):
            walk(t.left, env)
            walk(t.right, env)
        elif isinstance(t, Nu):
            env2 = dict(env)
            env2[t.link] = counter[0]
            counter[0] += 1
            walk(t.body, env2)
        else:
            raise TypeError(f"not a graph: {t!r}")

    try:
        walk(g, {})
    except _Nested:
        from .graph import expand_term_notation
        atoms.clear()
        counter[0] = 0
        walk(expand_term_notation(g), {})
    return atoms, counter[0]


class _Nested(Exception):
    """Raised when a nested argument needs term-notation expansion first."""


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _link_order(x) -> tuple:
    return (0, x, 0) if isinstance(x, str) else (1, "", x)


def absorb(atoms: list, nlocal: int) -> tuple[list, int, frozenset]:
    """Absorb fusions into link identities; returns (atoms, nlocal, free names).

    Local ids in the result are numbered by first use but are not canonical.
    Fusions between free links survive as a star from the least name in each
    fusion class, plus one self-fusion per surplus fusion in that class.
    """
    uf = _UnionFind()
    edges: dict = {}
    plain = []
    for name, args in atoms:
        for a in args:
            uf.find(a)
        if isinstance(name, FusionName):
            uf.union(args[0], args[1])
        else:
            plain.append((name, args))
    fusions = [args for name, args in atoms if isinstance(name, FusionName)]
    members: dict = {}
    for x in list(uf.parent):
        members.setdefault(uf.find(x), []).append(x)
    for args in fusions:
        r = uf.find(args[0])
        edges[r] = edges.get(r, 0) + 1
    used_by_plain = {uf.find(a) for _, args in plain for a in args}
    rep: dict = {}
    out_fusions = []
    dangling = []
    for root, ms in members.items():
        frees = sorted(m for m in ms if isinstance(m, str))
        locs = sorted(m for m in ms if isinstance(m, int))
        r = frees[0] if frees else locs[0]
        for m in ms:
            rep[m] = r
        if frees:
            for f in frees[1:]:
                out_fusions.append((FUSION, (frees[0], f)))
            loops = edges.get(root, 0) - len(locs) - (len(frees) - 1)
            out_fusions.extend([(FUSION, (frees[0], frees[0]))] * loops)
            if len(frees) == 1 and loops == 0 and root not in used_by_plain:
                # νB.C⋈B with C nowhere else: no rule removes the fusion
                dangling.append(frees[0])
    renum: dict = {}
    result = []
    for name, args in plain:
        new = []
        for a in args:
            r = rep.get(a, a)
            if isinstance(r, int):
                if r not in renum:
                    renum[r] = len(renum)
                r = renum[r]
            new.append(r)
        result.append((name, tuple(new)))
    result.extend(out_fusions)
    for f in dangling:
        result.append((FUSION, (f, len(renum))))
        renum[("dangling", f)] = len(renum)
    free = set()
    for _, args in result:
        free.update(a for a in args if isinstance(a, str))
    return result, len(renum), frozenset(free)


# ---------------------------------------------------------------------------
# canonical labelling


def _enc(a, labels) -> tuple:
    return (0, a, 0) if isinstance(a, str) else (1, "", labels[a])


def _refine(atoms, keys, colors: list[int]) -> list[int]:
    n = len(colors)
    while True:
        sigs = [[colors[i]] for i in range(n)]
        occ: list[list] = [[] for _ in range(n)]
        for (name, args), k in zip(atoms, keys):
            enc = tuple((0, a, 0) if isinstance(a, str) else (1, "", colors[a]) for a in args)
            for pos, a in enumerate(args):
                if isinstance(a, int):
                    occ[a].append((k, pos, enc))
        for i in range(n):
            sigs[i].append(tuple(sorted(occ[i])))
        ranked = sorted(set(tuple(s) for s in sigs))
        index = {s: j for j, s in enumerate(ranked)}
        new = [index[tuple(s)] for s in sigs]
        if len(ranked) == len(set(colors)):
            return new
        colors = new


def _encode(atoms, keys, labels) -> tuple:
    return tuple(sorted((k, tuple(_enc(a, labels) for a in args))
                        for (name, args), k in zip(atoms, keys)))


def canonical_labels(atoms: list, nlocal: int) -> list[int]:
    keys = [name_key(n) for n, _ in atoms]
    best: list = [None, None]

    def search(colors):
        colors = _refine(atoms, keys, colors)
        if len(set(colors)) == nlocal:
            code = _encode(atoms, keys, colors)
            if best[0] is None or code < best[0]:
                best[0], best[1] = code, list(colors)
            return
        cells: dict = {}
        for i, c in enumerate(colors):
            cells.setdefault(c, []).append(i)
        target = min((c for c in cells if len(cells[c]) > 1), key=lambda c: (len(cells[c]), c))
        for v in cells[target]:
            # individualise v: it gets the lowest colour within its cell
            new = [2 * c + (0 if c == target and i == v else 1 if c == target else 0)
                   for i, c in enumerate(colors)]
            search(new)

    if nlocal == 0:
        return []
    search([0] * nlocal)
    return best[1]


def normalize(g) -> CanonicalGraph:
    atoms, n = flatten(g)
    atoms, n, free = absorb(atoms, n)
    return canonicalize(atoms, n, free)


def canonicalize(atoms: list, nlocal: int, free: frozenset) -> CanonicalGraph:
    labels = canonical_labels(atoms, nlocal)
    relabelled = [(name, tuple(labels[a] if isinstance(a, int) else a for a in args))
                  for name, args in atoms]
    relabelled.sort(key=lambda na: (name_key(na[0]), tuple(_link_order(a) for a in na[1])))
    return CanonicalGraph(tuple(relabelled), nlocal, frozenset(free))


def canonical_key(g) -> tuple:
    c = g if isinstance(g, CanonicalGraph) else normalize(g)
    return (tuple((name_key(n), tuple(_link_order(a) for a in args)) for n, args in c.atoms),
            c.nlocal)


def embed(c: CanonicalGraph, prefix: str | None = None):
    """Turn a canonical form back into a graph term with fresh local names."""
    names = [fresh() if prefix is None else f"{prefix}{i}" for i in range(c.nlocal)]
    parts = [Atom(name, tuple(names[a] if isinstance(a, int) else a for a in args))
             for name, args in c.atoms]
    return nus(names, molecule(parts))


# ---------------------------------------------------------------------------
# congruence by bijection search


def congruent(g1, g2) -> bool:
    a1, n1 = flatten(g1)
    a1, n1, f1 = absorb(a1, n1)
    a2, n2 = flatten(g2)
    a2, n2, f2 = absorb(a2, n2)
    return bijection_exists((a1, n1, f1), (a2, n2, f2))


def bijection_exists(left, right) -> bool:
    a1, n1, f1 = left
    a2, n2, f2 = right
    if n1 != n2 or f1 != f2 or len(a1) != len(a2):
        return False
    k1 = [name_key(n) for n, _ in a1]
    k2 = [name_key(n) for n, _ in a2]
    if sorted(zip(k1, (len(a) for _, a in a1))) != sorted(zip(k2, (len(a) for _, a in a2))):
        return False
    # most constrained atoms first: those with rare names
    counts: dict = {}
    for k in k1:
        counts[k] = counts.get(k, 0) + 1
    order = sorted(range(len(a1)), key=lambda i: (counts[k1[i]], k1[i]))
    used = [False] * len(a2)
    fwd: dict = {}
    bwd: dict = {}

    def extend(args1, args2, is_fusion):
        options = [args2]
        if is_fusion and args2[0] != args2[1]:
            options.append((args2[1], args2[0]))
        for cand in options:
            added = []
            ok = True
            for x, y in zip(args1, cand):
                if isinstance(x, str) or isinstance(y, str):
                    if x != y:
                        ok = False
                        break
                    continue
                if x in fwd:
                    if fwd[x] != y:
                        ok = False
                        break
                elif y in bwd:
                    ok = False
                    break
                else:
                    fwd[x] = y
                    bwd[y] = x
                    added.append(x)
            if ok:
                yield
            for x in added:
                del bwd[fwd[x]]
                del fwd[x]

    def go(depth):
        if depth == len(order):
            return True
        i = order[depth]
        name1, args1 = a1[i]
        for j in range(len(a2)):
            if used[j] or k2[j] != k1[i] or len(a2[j][1]) != len(args1):
                continue
            used[j] = True
            for _ in extend(args1, a2[j][1], isinstance(name1, FusionName)):
                if go(depth + 1):
                    used[j] = False
                    return True
            used[j] = False
        return False

    return go(0)
