"""Matching a value graph against a template, modulo structural congruence."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .canon import CtxName, absorb, canonical_key, canonicalize, congruent, flatten, name_key
from .graph import (
    Atom, Ctx, FusionName, Mol, Nu, expand_term_notation, fusion, molecule,
    nus, subst_links,
)


@dataclass(frozen=True)
class Binding:
    graph: object
    formals: tuple

    def instantiate(self, links) -> object:
        return subst_links(self.graph, list(zip(self.formals, links)))


class GroundSubstitution:
    """Ordered map from context functors ``(name, arity)`` to bindings."""

    def __init__(self, items=()):
        self._items = tuple(items)
        self._map = dict(self._items)

    def __getitem__(self, key) -> Binding:
        if isinstance(key, str):
            for (name, _), b in self._items:
                if name == key:
                    return b
            raise KeyError(key)
        return self._map[key]

    def __contains__(self, key) -> bool:
        try:
            self[key]
            return True
        except KeyError:
            return False

    def __iter__(self):
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._items)

    def items(self):
        return self._items

    def key(self) -> tuple:
        return tuple((f, canonical_key(b.graph), b.formals) for f, b in self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroundSubstitution) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        from .syntax import pretty_print
        inner = ", ".join(f"${n}[{', '.join(b.formals)}] := {pretty_print(b.graph)}"
                          for (n, _), b in self._items)
        return "{" + inner + "}"


def apply_substitution(t, theta: GroundSubstitution):
    """Replace every context of template ``t`` by its binding."""
    return _apply(expand_term_notation(t), theta)


def _apply(t, theta):
    if isinstance(t, Ctx):
        b = theta._map.get(t.functor)
        return t if b is None else b.instantiate(t.links)
    if isinstance(t, Mol):
        return Mol(_apply(t.left, theta), _apply(t.right, theta))
    if isinstance(t, Nu):
        return Nu(t.link, _apply(t.body, theta))
    return t


# ---------------------------------------------------------------------------
# preparation shared with the brute-force oracle


@dataclass
class Problem:
    g_atoms: list          # absorbed, canonical order; args: int local / str free
    g_nlocal: int
    g_free: frozenset
    t_atoms: list          # absorbed template atoms without contexts
    t_ctxs: list           # (Ctx as written after expansion, absorbed args)
    t_nlocal: int
    t_free: frozenset
    template: object       # expanded template


def prepare(g, t) -> Problem | None:
    t = expand_term_notation(t)
    g = expand_term_notation(g)
    ga, gn = flatten(g)
    ga, gn, gf = absorb(ga, gn)
    gc = canonicalize(ga, gn, gf)
    ta, tn = flatten(t)
    ta, tn, tf = absorb(ta, tn)
    if tf != gf:
        return None
    ctx_nodes = _ctx_nodes(t)
    plain, ctxs = [], []
    k = 0
    for name, args in ta:
        if isinstance(name, CtxName):
            ctxs.append((name, args))
        else:
            plain.append((name, args))
    # absorb keeps atom order, so contexts line up with their occurrences
    paired = []
    for node, (name, args) in zip(ctx_nodes, ctxs):
        paired.append((node, args))
        k += 1
    plain.sort(key=lambda na: (name_key(na[0]), len(na[1])))
    return Problem(list(gc.atoms), gc.nlocal, gc.free, plain, paired, tn, tf, t)


def _ctx_nodes(t) -> list:
    out = []

    def walk(x):
        if isinstance(x, Ctx):
            out.append(x)
        elif isinstance(x, Mol):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, Nu):
            walk(x.body)
    walk(t)
    return out


def build_binding(ctx: Ctx, images: tuple, atoms: list, internal: set) -> Binding:
    """Assemble the graph bound to ``ctx`` from g atoms.

    ``images[i]`` is the g link the i-th formal stands for; ``internal`` are the
    g-local links private to these atoms.
    """
    formals = tuple(ctx.links)
    rep: dict = {}
    groups: dict = {}
    for f, s in zip(formals, images):
        groups.setdefault(s, []).append(f)
        rep.setdefault(s, f)
    names = {}
    for s in sorted(internal, key=str):
        names[s] = f"#b{s}"
    parts = []
    used = set()
    for name, args in atoms:
        new = []
        for a in args:
            if a in rep:
                new.append(rep[a])
                used.add(rep[a])
            else:
                new.append(names[a])
        parts.append(Atom(name, tuple(new)))
    for s, fs in groups.items():
        for f in fs[1:]:
            parts.append(fusion(fs[0], f))
        if len(fs) == 1 and fs[0] not in used:
            parts.append(fusion(fs[0], fs[0]))
    bound = [names[s] for s in sorted(internal, key=str)]
    return Binding(_fresh_locals(nus(bound, molecule(parts))), formals)


def _fresh_locals(g):
    from .graph import fresh
    if isinstance(g, Nu):
        w = fresh()
        return Nu(w, subst_links(_fresh_locals(g.body), [(g.link, w)]))
    return g


# ---------------------------------------------------------------------------
# the matcher


def match_template(g, t) -> Iterator[GroundSubstitution]:
    """All ground substitutions θ with ``g ≡ tθ``, deterministic order, no duplicates."""
    p = prepare(g, t)
    if p is None:
        return
    seen: set = set()
    for theta in _candidates(p):
        k = theta.key()
        if k in seen:
            continue
        if congruent(g_expanded(g), apply_substitution(p.template, theta)):
            seen.add(k)
            yield theta


def g_expanded(g):
    return expand_term_notation(g)


def _candidates(p: Problem):
    ga = p.g_atoms
    g_links = _links_of(ga)
    used = [False] * len(ga)
    sigma: dict = {}

    def unify(targs, gargs, added) -> bool:
        for x, y in zip(targs, gargs):
            if isinstance(x, str):
                if x != y:
                    return False
            elif x in sigma:
                if sigma[x] != y:
                    return False
            else:
                sigma[x] = y
                added.append(x)
        return True

    def assign(i):
        if i == len(p.t_atoms):
            yield from _contexts_phase(p, used, sigma, g_links)
            return
        name, targs = p.t_atoms[i]
        key = name_key(name)
        for j, (gname, gargs) in enumerate(ga):
            if used[j] or name_key(gname) != key or len(gargs) != len(targs):
                continue
            options = [gargs]
            if isinstance(name, FusionName) and gargs[0] != gargs[1]:
                options.append((gargs[1], gargs[0]))
            for opt in options:
                added: list = []
                if unify(targs, opt, added):
                    used[j] = True
                    yield from assign(i + 1)
                    used[j] = False
                for x in added:
                    del sigma[x]

    yield from assign(0)


def _links_of(atoms) -> list:
    out = []
    seen = set()
    for _, args in atoms:
        for a in args:
            if a not in seen:
                seen.add(a)
                out.append(a)
    return out


def _contexts_phase(p: Problem, used, sigma, g_links):
    ctx_locals = []
    for _, args in p.t_ctxs:
        for a in args:
            if isinstance(a, int) and a not in sigma and a not in ctx_locals:
                ctx_locals.append(a)
    rest = [ga for ga, u in zip(p.g_atoms, used) if not u]
    for combo in itertools.product(g_links, repeat=len(ctx_locals)):
        full = dict(sigma)
        full.update(zip(ctx_locals, combo))
        yield from distribute(p, rest, full)


def distribute(p: Problem, rest: list, sigma: dict):
    """Split leftover g atoms into components and hand each to a context."""
    image = {v for v in sigma.values()} | set(p.g_free)
    images = []
    for ctx, args in p.t_ctxs:
        images.append(tuple(sigma[a] if isinstance(a, int) else a for a in args))
    comps = components(rest, image)
    options = []
    for atoms, boundary, internal in comps:
        fits = [k for k, im in enumerate(images) if boundary <= set(im)]
        if not fits:
            return
        options.append(fits)
    for choice in itertools.product(*options):
        per: list = [([], set()) for _ in p.t_ctxs]
        for (atoms, _, internal), k in zip(comps, choice):
            per[k][0].extend(atoms)
            per[k][1].update(internal)
        items = []
        for (ctx, _), im, (atoms, internal) in zip(p.t_ctxs, images, per):
            items.append((ctx.functor, build_binding(ctx, im, atoms, internal)))
        yield GroundSubstitution(items)


def components(atoms: list, boundary_links: set):
    """Connected components via links outside ``boundary_links``."""
    parent = list(range(len(atoms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict = {}
    for i, (_, args) in enumerate(atoms):
        for a in args:
            if a in boundary_links:
                continue
            if a in owner:
                parent[find(i)] = find(owner[a])
            else:
                owner[a] = i
    groups: dict = {}
    for i in range(len(atoms)):
        groups.setdefault(find(i), []).append(i)
    out = []
    for idxs in sorted(groups.values()):
        sub = [atoms[i] for i in idxs]
        links = {a for _, args in sub for a in args}
        out.append((sub, links & boundary_links, links - boundary_links))
    return out


def match_checked(g, t, rules, depth: int = 64):
    """First θ (in matcher order) whose bindings all inhabit their annotations."""
    for theta in match_template(g, t):
        if all(_binding_ok(theta, ctx, rules, depth) for ctx in _ctx_nodes(expand_term_notation(t))):
            return theta
    return None


def _binding_ok(theta, ctx: Ctx, rules, depth) -> bool:
    from .verifier import check_graph
    if ctx.ann is None:
        return True
    b = theta[ctx.functor]
    goal = subst_links(ctx.ann, list(zip(ctx.links, b.formals)))
    return check_graph(b.graph, goal, rules, depth=depth)
