"""Production rules, their constraints, fusion elimination and the derivation oracle."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .canon import CanonicalGraph, absorb, canonicalize, embed, flatten, normalize
from .errors import EliminationIncomplete, LgtError
from .graph import (
    Atom, Con, Ctx, FusionName, Lam, Mol, Nu, TyArrow, TyVar,
    expand_term_notation, free_names, is_template, subst_links,
)

FUSED_SUFFIX = "_⋈"
PRIME = "'"


@dataclass(frozen=True)
class ProductionRule:
    head: Atom          # Atom(TyVar(name), links)
    rhs: object         # template without contexts; may use term notation
    # number of original rule applications this rule stands for (fusion elimination
    # folds absorbed fusion productions into their parent)
    weight: int = field(default=1, compare=False)

    @property
    def name(self) -> str:
        return self.head.name.name

    @property
    def arity(self) -> int:
        return len(self.head.args)

    def instantiate(self, links) -> object:
        """The expanded right-hand side with head links renamed to ``links``."""
        if len(links) != self.arity:
            raise LgtError(f"{self.name} expects {self.arity} links, got {len(links)}")
        body = expand_term_notation(self.rhs)
        # fresh names for every binder so separate instances never share locals
        return subst_links(_refresh(body), list(zip(self.head.args, links)))


def _refresh(t):
    from .graph import fresh
    if isinstance(t, Nu):
        w = fresh()
        return Nu(w, subst_links(_refresh(t.body), [(t.link, w)]))
    if isinstance(t, Mol):
        return Mol(_refresh(t.left), _refresh(t.right))
    return t


class Grammar:
    """An immutable set of production rules indexed by type name."""

    def __init__(self, rules=()):
        self.rules = tuple(rules)
        self._by_name: dict = {}
        self._arity: dict = {}
        for r in self.rules:
            n = r.name
            if self._arity.setdefault(n, r.arity) != r.arity:
                raise LgtError(f"type {n} is defined with arities {self._arity[n]} and {r.arity}")
            self._by_name.setdefault(n, []).append(r)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __repr__(self) -> str:
        return f"Grammar({len(self.rules)} rules over {sorted(self._by_name)})"

    def names(self) -> list[str]:
        return list(self._by_name)

    def arity(self, name: str) -> int | None:
        return self._arity.get(name)

    def rules_for(self, name: str) -> list[ProductionRule]:
        return list(self._by_name.get(name, ()))

    def defines(self, atom: Atom) -> bool:
        return isinstance(atom.name, TyVar) and self._arity.get(atom.name.name) == len(atom.args)

    def merged(self, other: "Grammar") -> "Grammar":
        return Grammar(self.rules + tuple(other.rules))


# ---------------------------------------------------------------------------
# well-formedness


def validate_rule(r: ProductionRule) -> list[str]:
    out = []
    links = r.head.args
    if len(set(links)) != len(links):
        out.append(f"{r.name}: repeated link in head {links}")
    if not is_template(r.rhs):
        return out + [f"{r.name}: right-hand side is not a graph"]
    body = expand_term_notation(r.rhs)
    for part in _walk(body):
        if isinstance(part, Ctx):
            out.append(f"{r.name}: graph context ${part.name} in a production")
        elif isinstance(part, Atom) and isinstance(part.name, Lam):
            out.append(f"{r.name}: abstraction atom in a production")
    fn = free_names(body)
    for x in sorted(fn - set(links)):
        out.append(f"free link {x} not in head")
    for x in links:
        if x not in fn:
            out.append(f"{r.name}: head link {x} does not occur in the body")
    return out


def _walk(t):
    yield t
    if isinstance(t, Mol):
        yield from _walk(t.left)
        yield from _walk(t.right)
    elif isinstance(t, Nu):
        yield from _walk(t.body)


def validate_grammar(g: Grammar) -> list[str]:
    out = []
    for r in g:
        out.extend(validate_rule(r))
        for a in _type_atoms(expand_term_notation(r.rhs)):
            if isinstance(a.name, TyVar) and g.arity(a.name.name) != len(a.args):
                out.append(f"{r.name}: type {a.name.name}/{len(a.args)} is not defined")
    return out


def _type_atoms(t) -> list[Atom]:
    return [p for p in _walk(t) if isinstance(p, Atom) and isinstance(p.name, TyVar)]


def check_root_constraints(g: Grammar) -> list[str]:
    """Each right-hand side is fusions only, or one constructor whose root is free
    plus type atoms rooted at distinct arguments of that constructor."""
    out = []
    for r in g:
        atoms, nlocal = flatten(expand_term_notation(r.rhs))
        cons = [(n, a) for n, a in atoms if isinstance(n, Con)]
        fusions = [a for n, a in atoms if isinstance(n, FusionName)]
        tvars = [(n, a) for n, a in atoms if isinstance(n, TyVar)]
        arrows = [(n, a) for n, a in atoms if isinstance(n, TyArrow)]
        label = f"{r.name}({', '.join(r.head.args)}) -> ..."
        if not cons:
            if tvars or arrows or not fusions:
                out.append(f"{label}: without a constructor the body must consist of fusions only")
            continue
        if len(cons) > 1:
            out.append(f"{label}: more than one constructor atom")
            continue
        _, cargs = cons[0]
        if not cargs or not isinstance(cargs[-1], str):
            out.append(f"{label}: the root link of the constructor must be free")
            continue
        if cargs[-1] != r.head.args[-1]:
            # the paper names both R; a different free link breaks the root traversal
            out.append(f"{label}: constructor root {cargs[-1]} is not the head root {r.head.args[-1]}")
        roots = [a[-1] for _, a in tvars + arrows if a]
        for (n, a) in tvars + arrows:
            if not a:
                out.append(f"{label}: nullary type atom has no root link")
        for x in roots:
            if x not in cargs[:-1]:
                out.append(f"{label}: type atom root {x} is not an argument of the constructor")
        if len(set(roots)) != len(roots):
            out.append(f"{label}: two type atoms share a root link")
    return out


# ---------------------------------------------------------------------------
# derivation oracle


def _flat_instance(rule: ProductionRule, args, base: int):
    """Flattened instance of ``rule`` for an atom with ``args``; locals offset by ``base``."""
    body = expand_term_notation(rule.rhs)
    ratoms, rn = flatten(body)
    sub = dict(zip(rule.head.args, args))
    out = []
    for name, a in ratoms:
        out.append((name, tuple(a_ + base if isinstance(a_, int) else sub[a_] for a_ in a)))
    return out, rn


def _expand_atom(c: CanonicalGraph, idx: int, rule: ProductionRule) -> CanonicalGraph:
    name, args = c.atoms[idx]
    inst, rn = _flat_instance(rule, args, c.nlocal)
    atoms = list(c.atoms[:idx]) + list(c.atoms[idx + 1:]) + inst
    atoms, n, free = absorb(atoms, c.nlocal + rn)
    return canonicalize(atoms, n, free)


def start_graph(start: Atom) -> CanonicalGraph:
    return normalize(start)


def generate(g: Grammar, start: Atom, depth: int) -> set[CanonicalGraph]:
    """Terminal graphs derivable from ``start`` in at most ``depth`` rule applications.

    Always rewrites the first type atom in canonical order; derivations of a
    context-free grammar commute, so this loses nothing.  Arrow atoms are
    terminal placeholders.
    """
    if not g.defines(start):
        raise LgtError(f"start symbol {start.name.name}/{len(start.args)} is not defined")
    results: set = set()
    frontier = {start_graph(start): 0}   # graph -> least cost used to reach it
    while frontier:
        nxt: dict = {}
        for c, cost in frontier.items():
            idx = next((i for i, (n, _) in enumerate(c.atoms) if isinstance(n, TyVar)), None)
            if idx is None:
                results.add(c)
                continue
            pending = sum(1 for n, _ in c.atoms if isinstance(n, TyVar))
            for rule in g.rules_for(c.atoms[idx][0].name):
                new_cost = cost + rule.weight
                if new_cost + pending - 1 > depth:
                    continue
                d = _expand_atom(c, idx, rule)
                if new_cost < nxt.get(d, depth + 1):
                    nxt[d] = new_cost
        frontier = nxt
    return results


def derive_tree(g: Grammar, start: Atom, depth: int):
    """Like :func:`generate`, but also yields the last rule used at the start atom,
    for decomposition checks: pairs (graph, rule)."""
    out = []
    for rule in g.rules_for(start.name.name):
        if rule.weight > depth:
            continue
        for c in _derive_from(g, rule, start.args, depth - rule.weight):
            out.append((c, rule))
    return out


def _derive_from(g: Grammar, rule: ProductionRule, links, budget: int):
    inst = normalize(rule.instantiate(links))
    frontier = {inst: 0}
    results = set()
    while frontier:
        nxt: dict = {}
        for c, cost in frontier.items():
            idx = next((i for i, (n, _) in enumerate(c.atoms) if isinstance(n, TyVar)), None)
            if idx is None:
                results.add(c)
                continue
            pending = sum(1 for n, _ in c.atoms if isinstance(n, TyVar))
            for r in g.rules_for(c.atoms[idx][0].name):
                nc = cost + r.weight
                if nc + pending - 1 > budget:
                    continue
                d = _expand_atom(c, idx, r)
                if nc < nxt.get(d, budget + 1):
                    nxt[d] = nc
        frontier = nxt
    return results


# ---------------------------------------------------------------------------
# fusion elimination


def _has_fusion(rule: ProductionRule) -> bool:
    atoms, _ = flatten(expand_term_notation(rule.rhs))
    return any(isinstance(n, FusionName) for n, _ in atoms)


def primed(name: str) -> str:
    return name + PRIME


def fused(name: str) -> str:
    return name + FUSED_SUFFIX


def original_name(name: str) -> str:
    if name.endswith(FUSED_SUFFIX):
        return name[: -len(FUSED_SUFFIX)]
    if name.endswith(PRIME):
        return name[: -len(PRIME)]
    return name


def eliminate_fusions(g: Grammar, start: Atom) -> tuple[Grammar, Atom]:
    """Fold fusion productions into the rules that use them.

    A type with fusion productions gets a fusion-free variant ``t'``; the start
    symbol, if it has fusion productions, becomes ``t_⋈`` which keeps them.
    """
    fusion_rules = [r for r in g if _has_fusion(r)]
    fus_types = {r.name for r in fusion_rules}
    if not fus_types:
        return g, start
    for r in fusion_rules:
        for a in _type_atoms(expand_term_notation(r.rhs)):
            if a.name.name in fus_types:
                raise EliminationIncomplete(
                    f"fusion production of {r.name} uses {a.name.name}, which also has fusion productions")

    def rename(name: str) -> str:
        return primed(name) if name in fus_types else name

    new_rules: list[ProductionRule] = []
    seen: set = set()
    for r in g:
        if r.name in fus_types and r in fusion_rules:
            continue
        head_name = rename(r.name)
        for variant, extra in _variants(r, g, fus_types, rename):
            key = (head_name, _rule_key(r.head.args, variant))
            if key in seen:
                continue
            seen.add(key)
            new_rules.append(ProductionRule(Atom(TyVar(head_name), r.head.args), variant, r.weight + extra))
    sname = start.name.name
    new_start = start
    if sname in fus_types:
        alias = fused(sname)
        for r in g.rules_for(sname):
            if r in fusion_rules:
                new_rules.append(ProductionRule(Atom(TyVar(alias), r.head.args), r.rhs, r.weight))
        for r in list(new_rules):
            if r.name == primed(sname):
                new_rules.append(ProductionRule(Atom(TyVar(alias), r.head.args), r.rhs, r.weight))
        new_start = Atom(TyVar(alias), start.args)
    return Grammar(new_rules), new_start


def _rule_key(links, body):
    from .canon import canonical_key
    return canonical_key(subst_links(body, [(x, f"\x00{i}") for i, x in enumerate(links)]))


def _variants(rule: ProductionRule, g: Grammar, fus_types: set, rename):
    """All bodies obtained by replacing any subset of fusion-capable type atoms by
    one of their fusion productions; yields (body, number of folded productions)."""
    body = expand_term_notation(rule.rhs)
    atoms, nlocal = flatten(body)
    choices = []
    for name, args in atoms:
        if isinstance(name, TyVar) and name.name in fus_types:
            opts = [("keep", None)] + [("fold", fr) for fr in g.rules_for(name.name) if _has_fusion(fr)]
            choices.append(opts)
        else:
            choices.append([("keep", None)])
    head_free = set(rule.head.args)
    for combo in itertools.product(*choices):
        out = []
        n = nlocal
        folded = 0
        for (name, args), (kind, fr) in zip(atoms, combo):
            if kind == "fold":
                inst, rn = _flat_instance(fr, args, n)
                n += rn
                folded += fr.weight
                out.extend(inst)
            elif isinstance(name, TyVar):
                out.append((TyVar(rename(name.name)), args))
            else:
                out.append((name, args))
        absorbed, n2, free = absorb(out, n)
        if any(isinstance(nm, FusionName) for nm, _ in absorbed):
            raise EliminationIncomplete(
                f"a fusion between free links survives in a variant of {rule.name}")
        if free != head_free:
            raise EliminationIncomplete(f"a variant of {rule.name} lost a head link")
        c = canonicalize(absorbed, n2, free)
        yield embed(c), folded


def collapse_names(g: Grammar) -> Grammar:
    """Map ``t'`` and ``t_⋈`` back to ``t`` (the verifier works with original names)."""
    def fix(t):
        if isinstance(t, Atom):
            name = t.name
            if isinstance(name, TyVar):
                name = TyVar(original_name(name.name))
            return Atom(name, tuple(fix(a) if not isinstance(a, str) else a for a in t.args))
        if isinstance(t, Mol):
            return Mol(fix(t.left), fix(t.right))
        if isinstance(t, Nu):
            return Nu(t.link, fix(t.body))
        return t
    out = []
    seen = set()
    for r in g:
        head = Atom(TyVar(original_name(r.name)), r.head.args)
        rhs = fix(r.rhs)
        key = (head.name.name, _rule_key(r.head.args, expand_term_notation(rhs)))
        if key in seen:
            continue
        seen.add(key)
        out.append(ProductionRule(head, rhs, r.weight))
    return Grammar(out)
