"""Shared test utilities: program loading, random graphs, E-rule rewriting and
a brute-force matching oracle that does not reuse the matcher's search."""
from __future__ import annotations

import itertools
import random
from pathlib import Path

from lgt.canon import CtxName, absorb, canonical_key, congruent, flatten, name_key
from lgt.grammar import Grammar
from lgt.graph import (
    FUSION, NULL, Atom, Con, Ctx, Mol, Null, Nu, expand_term_notation, free_names,
    fusion, molecule, subst_links,
)
from lgt.matcher import Binding, GroundSubstitution, apply_substitution, build_binding
from lgt.syntax import parse_program, parse_type_defs

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
TYPES = PROGRAMS / "types"
CORPUS = PROGRAMS / "corpus"


def grammar(name: str) -> Grammar:
    return Grammar(parse_type_defs((TYPES / f"{name}.lgt").read_text()))


def program(path):
    return parse_program(Path(path).read_text())


def declared_result(path) -> str:
    first = Path(path).read_text().splitlines()[0]
    assert first.startswith("// result:"), path
    return first.split(":", 1)[1].strip()


# ---------------------------------------------------------------------------
# random graphs

LINKS = ["A", "B", "C", "D", "E", "F"]
CONS = [("p", 1), ("q", 2), ("r", 3), ("s", 2), ("z", 0)]


def random_graph(rng: random.Random, max_atoms: int = 8, links=LINKS):
    n = rng.randint(0, max_atoms)
    return _gen(rng, n, links)


def _gen(rng, n, links):
    if n == 0:
        g = NULL
    elif n == 1:
        if rng.random() < 0.25:
            g = fusion(rng.choice(links), rng.choice(links))
        else:
            name, k = rng.choice(CONS)
            g = Atom(Con(name), tuple(rng.choice(links) for _ in range(k)))
    else:
        k = rng.randint(1, n - 1)
        g = Mol(_gen(rng, k, links), _gen(rng, n - k, links))
    while rng.random() < 0.3:
        g = Nu(rng.choice(links), g)
    return g


def positions(g, path=()):
    yield path, g
    if isinstance(g, Mol):
        yield from positions(g.left, path + (0,))
        yield from positions(g.right, path + (1,))
    elif isinstance(g, Nu):
        yield from positions(g.body, path + (0,))


def replace_at(g, path, new):
    if not path:
        return new
    if isinstance(g, Mol):
        if path[0] == 0:
            return Mol(replace_at(g.left, path[1:], new), g.right)
        return Mol(g.left, replace_at(g.right, path[1:], new))
    if isinstance(g, Nu):
        return Nu(g.link, replace_at(g.body, path[1:], new))
    raise ValueError(path)


_fresh = itertools.count()


def fresh_link() -> str:
    return f"W{next(_fresh)}"


def rename_some(g, x: str, new: str, rng: random.Random):
    """Rename a random subset of the free occurrences of ``x``."""
    if isinstance(g, Null):
        return g
    if isinstance(g, Atom):
        return Atom(g.name, tuple(new if a == x and rng.random() < 0.5 else a for a in g.args))
    if isinstance(g, Mol):
        return Mol(rename_some(g.left, x, new, rng), rename_some(g.right, x, new, rng))
    if isinstance(g, Nu):
        return g if g.link == x else Nu(g.link, rename_some(g.body, x, new, rng))
    raise TypeError(g)


def e_rule_rewrites(h, rng: random.Random):
    """(rule label, replacement) pairs, each a single rule instance applied at the root of ``h``."""
    out = []
    out.append(("E1", Mol(NULL, h)))
    if isinstance(h, Mol) and isinstance(h.left, Null):
        out.append(("E1", h.right))
    if isinstance(h, Mol):
        out.append(("E2", Mol(h.right, h.left)))
        if isinstance(h.right, Mol):
            out.append(("E3", Mol(Mol(h.left, h.right.left), h.right.right)))
        if isinstance(h.left, Mol):
            out.append(("E3", Mol(h.left.left, Mol(h.left.right, h.right))))
    # E6 read right to left: νX.H<Y/X> ≡ νX.(X⋈Y, H) with some Y-occurrences turned into X
    fn = sorted(free_names(h))
    if fn:
        y = rng.choice(fn)
        x = fresh_link()
        partial = rename_some(h, y, x, rng)
        out.append(("E6", Nu(x, Mol(fusion(x, y), partial))))
    if isinstance(h, Nu) and isinstance(h.body, Mol) and _is_fusion(h.body.left):
        x = h.link
        a, b = h.body.left.args
        rest = h.body.right
        if a == x and b != x and (x in free_names(rest) or b in free_names(rest)):
            out.append(("E6", Nu(x, subst_links(rest, [(x, b)]))))
    out.append(("E7", Mol(h, Nu("P", Nu("Q", fusion("P", "Q"))))))
    out.append(("E8", Mol(Nu(rng.choice(LINKS), NULL), h)))
    if isinstance(h, Nu) and isinstance(h.body, Nu):
        out.append(("E9", Nu(h.body.link, Nu(h.link, h.body.body))))
    if isinstance(h, Nu) and isinstance(h.body, Mol) and h.link not in free_names(h.body.right):
        out.append(("E10", Mol(Nu(h.link, h.body.left), h.body.right)))
    if isinstance(h, Mol) and isinstance(h.left, Nu) and h.left.link not in free_names(h.right):
        out.append(("E10", Nu(h.left.link, Mol(h.left.body, h.right))))
    if isinstance(h, Atom) and _is_fusion(h):
        out.append(("Th-sym", fusion(h.args[1], h.args[0])))
    if isinstance(h, Nu):
        y = fresh_link()
        out.append(("Th-alpha", Nu(y, subst_links(h.body, [(h.link, y)]))))
    w = fresh_link()
    out.append(("Lemma-nu", Nu(w, h)))
    return out


def _is_fusion(a) -> bool:
    return isinstance(a, Atom) and a.name == FUSION


def mutate(g, rng: random.Random):
    """Change one argument of one atom; often (not always) breaks congruence."""
    atoms = [(p, h) for p, h in positions(g) if isinstance(h, Atom) and h.args]
    if not atoms:
        return Mol(g, Atom(Con("z"), ()))
    path, a = rng.choice(atoms)
    i = rng.randrange(len(a.args))
    args = list(a.args)
    args[i] = rng.choice(LINKS)
    return replace_at(g, path, Atom(a.name, tuple(args)))


# ---------------------------------------------------------------------------
# brute-force matching oracle

def brute_force_matches(g, t) -> set:
    """Keys of every θ with g ≡ tθ, by enumerating every split of g's atoms.

    Each g atom goes to a template atom (bijectively) or to a context; every
    template-local link is mapped to some g link.  Bindings are assembled with
    the matcher's ``build_binding`` and every candidate is checked for congruence.
    """
    t = expand_term_notation(t)
    g = expand_term_notation(g)
    ga, gn = flatten(g)
    ga, gn, gf = absorb(ga, gn)
    ta, tn = flatten(t)
    ta, tn, tf = absorb(ta, tn)
    if tf != gf:
        return set()
    ctx_nodes = _ctx_nodes(t)
    plain = [(n, a) for n, a in ta if not isinstance(n, CtxName)]
    ctx_args = [a for n, a in ta if isinstance(n, CtxName)]
    g_links = sorted({a for _, args in ga for a in args}, key=str)
    t_locals = sorted({a for _, args in ta for a in args if isinstance(a, int)})
    slots = len(plain) + len(ctx_nodes)
    found = set()
    for assign in itertools.product(range(slots), repeat=len(ga)):
        if sorted(k for k in assign if k < len(plain)) != list(range(len(plain))):
            continue
        pairs = {k: ga[j] for j, k in enumerate(assign) if k < len(plain)}
        if any(name_key(plain[k][0]) != name_key(pairs[k][0]) or
               len(plain[k][1]) != len(pairs[k][1]) for k in pairs):
            continue
        for combo in itertools.product(g_links, repeat=len(t_locals)):
            sigma = dict(zip(t_locals, combo))

            def img(x):
                return sigma[x] if isinstance(x, int) else x

            if not all(_atom_fits(plain[k], pairs[k], img) for k in pairs):
                continue
            items = []
            image = set(sigma.values()) | set(gf)
            for c, (node, args) in enumerate(zip(ctx_nodes, ctx_args)):
                mine = [ga[j] for j, k in enumerate(assign) if k == len(plain) + c]
                internal = {a for _, args2 in mine for a in args2} - image
                images = tuple(img(a) for a in args)
                if any(a not in internal and a not in images for _, args2 in mine for a in args2):
                    break   # an atom reaches a link its context cannot see
                items.append((node.functor, build_binding(node, images, mine, internal)))
            else:
                theta = GroundSubstitution(items)
                if congruent(g, apply_substitution(t, theta)):
                    found.add(theta.key())
    return found



def _atom_fits(tatom, gatom, img) -> bool:
    targs = tuple(img(a) for a in tatom[1])
    if targs == gatom[1]:
        return True
    return tatom[0] == FUSION and targs == gatom[1][::-1]


def _ctx_nodes(t):
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


def random_match_pair(rng: random.Random, max_atoms: int = 6):
    """A value graph and a template carved out of it (sometimes perturbed)."""
    n = rng.randint(1, max_atoms)
    parts = []
    for _ in range(n):
        if rng.random() < 0.15:
            parts.append(fusion(rng.choice(LINKS[:4]), rng.choice(LINKS[:4])))
        else:
            name, k = rng.choice(CONS)
            parts.append(Atom(Con(name), tuple(rng.choice(LINKS[:4]) for _ in range(k))))
    local = rng.sample(LINKS[:4], rng.randint(0, 3))
    g = Nu_all(local, molecule(parts))
    nctx = rng.randint(1, 2)
    owner = [rng.randrange(nctx + 1) for _ in parts]    # nctx means "stays an atom"
    keep = [p for p, o in zip(parts, owner) if o == nctx]
    ctxs = []
    for c in range(nctx):
        mine = [p for p, o in zip(parts, owner) if o == c]
        links = sorted({a for p in mine for a in p.args})
        if rng.random() < 0.3:
            links.append(rng.choice(LINKS[:4]))
        if rng.random() < 0.2 and links:
            links.pop(rng.randrange(len(links)))
        links = sorted(set(links))
        rng.shuffle(links)
        ctxs.append(Ctx(f"x{c}", tuple(links)))
    if rng.random() < 0.2 and keep:
        keep[0] = mutate(keep[0], rng)
    t = Nu_all(local, molecule(keep + ctxs))
    return g, t


def Nu_all(links, body):
    for x in reversed(links):
        body = Nu(x, body)
    return body


def key_set(thetas) -> set:
    return {th.key() for th in thetas}


__all__ = [
    "Binding", "CORPUS", "PROGRAMS", "TYPES", "brute_force_matches", "canonical_key",
    "declared_result", "e_rule_rewrites", "grammar", "key_set", "mutate", "positions",
    "program", "random_graph", "random_match_pair", "replace_at",
]
