"""Automatic graph type checking by structural induction.

The checker proves ``G : a(X...)`` where G may contain holes, i.e. atoms that
stand for any graph of a given type.  It walks the goal from its root link:
annotation items (type atoms, and the constructors they are expanded into) are
matched against the target atom rooted at the same link.  Holes are split by
cases over their productions, type atoms are expanded existentially, and a
goal met before a case split is kept as an induction hypothesis for smaller
instances of itself.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

from .canon import absorb, canonicalize, embed, flatten, name_key
from .errors import (
    DepthExceeded, EliminationIncomplete, InfiniteDescentViolation, LgtError,
    PreconditionViolation,
)
from .grammar import (
    Grammar, ProductionRule, check_root_constraints, collapse_names, eliminate_fusions,
)
from .graph import (
    Atom, Con, Ctx, FusionName, Hole, Lam, TyArrow, TyVar, expand_term_notation,
)

DEFAULT_DEPTH = 64

# statistics for the descent guard; read by tests
_stats_lock = threading.Lock()
descent_stats = {"applications": 0, "violations": 0}


# ---------------------------------------------------------------------------
# link correspondence


@dataclass(frozen=True)
class LinkCorrespondence:
    locals: frozenset
    map: tuple = ()   # sorted pairs (annotation link, target link)

    def get(self, y):
        return dict(self.map).get(y)

    def assigned(self) -> set:
        return {v for _, v in self.map if v is not None}


def check_link_name(l: LinkCorrespondence, x, y):
    """Does target link ``x`` correspond to annotation link ``y``?

    Free target links must be matched by the identical name.  A local target
    link binds an unbound annotation link, or must agree with its binding.
    Injectivity is kept: a target local is never the image of two links.
    """
    m = dict(l.map)
    if x not in l.locals:
        if y == x and y not in m:
            return l
        return None
    if y in m and m[y] is not None:
        return l if m[y] == x else None
    if not _is_ann_local(y):
        return None
    if x in l.assigned():
        return None
    m[y] = x
    return LinkCorrespondence(l.locals, tuple(sorted(m.items(), key=lambda kv: str(kv))))


def _is_ann_local(y) -> bool:
    return isinstance(y, str) and y.startswith("@")


# ---------------------------------------------------------------------------
# holes


_hole_ids = itertools.count(1)
_hole_lock = threading.Lock()


def new_hole_id() -> int:
    with _hole_lock:
        return next(_hole_ids)


def hole(ty: Atom, ident: int | None = None) -> Atom:
    """A hole atom standing for any graph of type ``ty`` (with ty's links)."""
    if ident is None:
        ident = new_hole_id()
    return Atom(Hole(ident, ty.name), tuple(ty.args))


def decompose(g, hole_id: int, rule: ProductionRule):
    """Replace hole ``hole_id`` in ``g`` by the right-hand side of ``rule``,
    turning its type atoms into fresh holes; the result is normalised."""
    atoms, n = flatten(expand_term_notation(g))
    idx = next((i for i, (nm, _) in enumerate(atoms)
                if isinstance(nm, Hole) and nm.ident == hole_id), None)
    if idx is None:
        raise LgtError(f"no hole {hole_id}")
    hname, hargs = atoms[idx]
    ty = hname.ty
    if not isinstance(ty, TyVar) or ty.name != rule.name or len(hargs) != rule.arity:
        raise LgtError(f"rule for {rule.name}/{rule.arity} cannot decompose a hole of "
                       f"type {getattr(ty, 'name', ty)}/{len(hargs)}")
    inst, rn = _flat_rule(rule, hargs, n)
    inst = [(Hole(new_hole_id(), nm), a) if isinstance(nm, TyVar) else (nm, a) for nm, a in inst]
    rest = atoms[:idx] + atoms[idx + 1:] + inst
    rest, n2, free = absorb(rest, n + rn)
    return embed(canonicalize(rest, n2, free))


def _flat_rule(rule: ProductionRule, args, base: int):
    body = expand_term_notation(rule.rhs)
    ratoms, rn = flatten(body)
    sub = dict(zip(rule.head.args, args))
    return [(nm, tuple(a + base if isinstance(a, int) else sub[a] for a in ra))
            for nm, ra in ratoms], rn


# ---------------------------------------------------------------------------
# search state


@dataclass(frozen=True)
class Hyp:
    atoms: tuple        # target atoms at the time of recording
    ty: str
    args: tuple         # target links of the goal type atom
    stamp: int          # number of decompositions on the branch when recorded


@dataclass
class State:
    target: list                 # [(name, args)], args: int local / str free
    items: list                  # [(name, args, depth)], args: annotation links
    corr: LinkCorrespondence
    hyps: tuple = ()
    parents: dict = field(default_factory=dict)   # hole id -> (parent id, constructors added)
    next_local: int = 0
    decomps: int = 0
    fclass: dict = field(default_factory=dict)    # free link -> class representative

    def copy(self) -> "State":
        return State(list(self.target), list(self.items), self.corr, self.hyps,
                     dict(self.parents), self.next_local, self.decomps, dict(self.fclass))

    def same(self, x, y) -> bool:
        # occurrences of free links joined by a free fusion are interchangeable
        if x == y:
            return True
        if isinstance(x, str) and isinstance(y, str):
            return self.fclass.get(x, x) == self.fclass.get(y, y)
        return False

    def join_free_fusions(self):
        for nm, a in self.target:
            if isinstance(nm, FusionName) and all(isinstance(x, str) for x in a):
                ra, rb = self.fclass.get(a[0], a[0]), self.fclass.get(a[1], a[1])
                if ra != rb:
                    lo, hi = min(ra, rb), max(ra, rb)
                    self.fclass = {k: (lo if v == hi else v) for k, v in self.fclass.items()}
                    self.fclass.setdefault(a[0], lo)
                    self.fclass.setdefault(a[1], lo)
                    self.fclass[hi] = lo


@dataclass
class Failure:
    depth: int = -1
    message: str = ""


class Checker:
    """Proof search for one grammar."""

    def __init__(self, rules, depth: int = DEFAULT_DEPTH, trace: bool = False):
        self.grammar = rules if isinstance(rules, Grammar) else Grammar(rules)
        self.depth = depth
        self.trace = trace
        self.log: list = []
        self.failure = Failure()
        problems = check_root_constraints(self.grammar)
        if problems:
            raise PreconditionViolation("; ".join(problems))
        self.exists_rules = self._exists_rules()
        self._ann_counter = itertools.count()

    def _exists_rules(self) -> dict:
        out: dict = {}
        for name in self.grammar.names():
            k = self.grammar.arity(name)
            start = Atom(TyVar(name), tuple(f"\x01{i}" for i in range(k)))
            try:
                elim, _ = eliminate_fusions(self.grammar, start)
            except EliminationIncomplete as e:
                raise PreconditionViolation(f"fusion elimination failed: {e}") from e
            coll = collapse_names(elim)
            out[name] = [_prep_rule(r) for r in coll.rules_for(name)]
        return out

    # -- entry points
    def check(self, g, goal: Atom) -> bool:
        if not isinstance(goal.name, TyVar) or self.grammar.arity(goal.name.name) != len(goal.args):
            self._fail(0, f"type {getattr(goal.name, 'name', goal.name)}/{len(goal.args)} is not defined")
            return False
        atoms, n = flatten(expand_term_notation(g))
        atoms, n, free = absorb(atoms, n)
        if free != frozenset(goal.args):
            self._fail(0, f"free links {sorted(free)} differ from the goal's {sorted(goal.args)}")
            return False
        for nm, _ in atoms:
            if isinstance(nm, (Lam, Ctx)):
                raise LgtError("replace abstractions and contexts before checking a graph")
        state = State(list(atoms), [(goal.name, tuple(goal.args), 0)],
                      LinkCorrespondence(frozenset(range(n))), next_local=n)
        state.join_free_fusions()
        return self.solve(state)

    def fresh_ann(self) -> str:
        return f"@{next(self._ann_counter)}"

    def _fail(self, depth, msg) -> bool:
        if depth >= self.failure.depth:
            self.failure = Failure(depth, msg)
        return False

    def _note(self, depth, msg):
        if self.trace:
            self.log.append("  " * min(depth, 40) + msg)

    # -- main loop
    def solve(self, s: State) -> bool:
        while True:
            if not s.items:
                if s.target:
                    return self._fail(0, "unmatched target atoms: " + _show_atoms(s.target))
                return True
            pick = self._pick(s)
            if pick is None:
                return self._fail(0, "no annotation item has a known root: " + _show_items(s.items))
            i, kind = pick
            name, args, depth = s.items[i]
            if depth > self.depth or s.decomps > self.depth:
                raise DepthExceeded(f"proof search deeper than {self.depth}")
            if kind == "fusion":
                res = self._fusion_item(s, i)
                if res is None:
                    return False
                s = res
                continue
            root = self._resolve(s, args[-1])
            cands = [j for j, (tn, ta) in enumerate(s.target)
                     if not isinstance(tn, FusionName) and ta and ta[-1] == root]
            if not cands:
                cands = [j for j, (tn, ta) in enumerate(s.target)
                         if not isinstance(tn, FusionName) and ta and s.same(ta[-1], root)]
            if isinstance(name, TyVar):
                return self._type_item(s, i, root, cands)
            if len(cands) != 1:
                if not cands:
                    return self._fail(depth, f"nothing in the graph is rooted at {root} for "
                                      f"{_show_items([s.items[i]])}")
                return any(self._atom_item(s.copy(), i, j) for j in cands)
            res = self._atom_item_step(s, i, cands[0])
            if res is True or res is False:
                return res
            s = res

    def _resolve(self, s: State, y):
        if _is_ann_local(y):
            return s.corr.get(y)
        return y

    def _pick(self, s: State):
        best = None
        for i, (name, args, _) in enumerate(s.items):
            if isinstance(name, FusionName):
                return i, "fusion"
            if not args:
                continue
            if self._resolve(s, args[-1]) is None:
                continue
            rank = 0 if isinstance(name, (Con, TyArrow)) else 1
            if best is None or rank < best[0]:
                best = (rank, i)
        return None if best is None else (best[1], "root")

    # -- annotation fusions
    def _fusion_item(self, s: State, i: int):
        _, (a, b), depth = s.items[i]
        s = s.copy()
        del s.items[i]
        for x, y in ((a, b), (b, a)):
            if _is_ann_local(x) and s.corr.get(x) is None:
                # the fused local is just another name for the other end
                s.items = [(nm, tuple(y if z == x else z for z in ar), d) for nm, ar, d in s.items]
                return s
        ta, tb = self._resolve(s, a), self._resolve(s, b)
        if ta == tb and isinstance(ta, int):
            return s
        for j, (tn, targs) in enumerate(s.target):
            if isinstance(tn, FusionName) and set(targs) == {ta, tb} and \
                    (ta != tb or targs[0] == targs[1]):
                del s.target[j]
                return s
        self._fail(depth, f"fusion {a} >< {b} has no counterpart")
        return None

    # -- constructor / arrow items
    def _atom_item(self, s: State, i: int, j: int) -> bool:
        res = self._atom_item_step(s, i, j)
        if res is True or res is False:
            return res
        return self.solve(res)

    def _atom_item_step(self, s: State, i: int, j: int):
        name, args, depth = s.items[i]
        tname, targs = s.target[j]
        if isinstance(tname, Hole) and isinstance(tname.ty, TyVar):
            # open the hole first; every production must lead to success
            return self._split(s, j, depth, record=None)
        if name_key(tname) != name_key(name) or len(targs) != len(args):
            return self._fail(depth, f"{_show_items([s.items[i]])} does not match "
                              f"{_show_atoms([s.target[j]])}")
        corr = s.corr
        for x, y in zip(targs, args):
            corr = _link_step(s, corr, x, y)
            if corr is None:
                return self._fail(depth, f"links of {_show_atoms([s.target[j]])} do not "
                                  f"correspond to {_show_items([s.items[i]])}")
        s = s.copy()
        s.corr = corr
        del s.items[i]
        del s.target[j]
        self._note(depth, f"matched {_show_atoms([(tname, targs)])}")
        return s

    # -- type items
    def _type_item(self, s: State, i: int, root, cands) -> bool:
        if len(cands) > 1:
            # several atoms hang off one link (a thread back to an ancestor); try each
            return any(self._type_item(s.copy(), i, root, [j]) for j in cands)
        name, args, depth = s.items[i]
        j = cands[0] if cands else None
        t = s.target[j] if j is not None else None
        if t is not None and isinstance(t[0], Hole) and t[0].ty == name and len(t[1]) == len(args):
            corr = s.corr
            for x, y in zip(t[1], args):
                corr = _link_step(s, corr, x, y)
                if corr is None:
                    break
            if corr is not None:
                s2 = s.copy()
                s2.corr = corr
                del s2.items[i]
                del s2.target[j]
                self._note(depth, f"hole {_show_atoms([t])} has type {name.name}")
                return self.solve(s2)
        if t is not None:
            for s2 in self._apply_hypotheses(s, i, j):
                if self.solve(s2):
                    return True
        if t is not None and isinstance(t[0], Hole) and isinstance(t[0].ty, TyVar):
            record = None
            if len(s.items) == 1:
                targs = tuple(self._resolve(s, y) for y in args)
                if all(x is not None for x in targs):
                    record = Hyp(tuple(s.target), name.name, targs, s.decomps)
            return self._split(s, j, depth, record)
        return self._expand(s, i, t)

    def _expand(self, s: State, i: int, t) -> bool:
        name, args, depth = s.items[i]
        rules = self.exists_rules.get(name.name, [])
        for rule, root_name in rules:
            if t is None:
                if root_name is not None:
                    continue
            elif root_name is None or name_key(root_name) != name_key(t[0]):
                continue
            s2 = s.copy()
            del s2.items[i]
            s2.items[i:i] = self._instantiate(rule, args, depth + 1)
            self._note(depth, f"try {rule.name} -> {_show_rhs(rule)}")
            if self.solve(s2):
                return True
        return self._fail(depth, f"no production of {name.name} derives "
                          f"{_show_atoms([t]) if t else 'the remaining graph'}")

    def _instantiate(self, rule: ProductionRule, args, depth):
        atoms, n = flatten(expand_term_notation(rule.rhs))
        locals_ = [self.fresh_ann() for _ in range(n)]
        sub = dict(zip(rule.head.args, args))
        out = []
        for nm, a in atoms:
            out.append((nm, tuple(locals_[x] if isinstance(x, int) else sub[x] for x in a), depth))
        return out

    # -- case split on a hole
    def _split(self, s: State, j: int, depth: int, record) -> bool:
        hname, hargs = s.target[j]
        rules = self.grammar.rules_for(hname.ty.name)
        if self.grammar.arity(hname.ty.name) != len(hargs):
            return self._fail(depth, f"type {hname.ty.name}/{len(hargs)} is not defined")
        if not rules:
            return self._fail(depth, f"type {hname.ty.name} has no productions")
        hyps = s.hyps + ((record,) if record is not None else ())
        for rule in rules:
            s2 = s.copy()
            s2.hyps = hyps
            s2.decomps += 1
            del s2.target[j]
            inst, rn = _flat_rule(rule, hargs, s2.next_local)
            s2.next_local += rn
            s2.corr = LinkCorrespondence(s2.corr.locals | frozenset(range(s2.next_local - rn, s2.next_local)),
                                         s2.corr.map)
            gain = sum(1 for nm, _ in inst if isinstance(nm, Con))
            new = []
            for nm, a in inst:
                if isinstance(nm, TyVar):
                    hid = new_hole_id()
                    s2.parents[hid] = (hname.ident, gain)
                    new.append((Hole(hid, nm), a))
                else:
                    new.append((nm, a))
            s2.target.extend(new)
            if not self._absorb_target(s2):
                return self._fail(depth, f"fusion from {rule.name} cannot be absorbed")
            s2.join_free_fusions()
            self._note(depth, f"case {rule.name} for hole {_show_atoms([(hname, hargs)])}")
            if not self.solve(s2):
                return self._fail(depth, f"case {rule.name} -> {_show_rhs(rule)} of "
                                  f"{_show_atoms([(hname, hargs)])} fails")
        return True

    def _absorb_target(self, s: State) -> bool:
        while True:
            k = next((k for k, (nm, a) in enumerate(s.target)
                      if isinstance(nm, FusionName) and (isinstance(a[0], int) or isinstance(a[1], int))),
                     None)
            if k is None:
                return True
            _, (a, b) = s.target.pop(k)
            if a == b:
                continue
            old, new = (a, b) if isinstance(a, int) else (b, a)
            s.target = [(nm, tuple(new if x == old else x for x in ar)) for nm, ar in s.target]
            m = [(y, new if x == old else x) for y, x in s.corr.map]
            s.corr = LinkCorrespondence(s.corr.locals, tuple(m))

    # -- induction hypotheses
    def _apply_hypotheses(self, s: State, i: int, j: int):
        name, args, depth = s.items[i]
        for h in s.hyps:
            if h.ty != name.name or len(h.args) != len(args):
                continue
            yield from self._embed_hyp(s, i, j, h)

    def _embed_hyp(self, s: State, i: int, j: int, h: Hyp):
        name, args, depth = s.items[i]
        phi: dict = {}
        pending = []     # annotation links to bind to the image of a hypothesis link
        for hx, y in zip(h.args, args):
            x = self._resolve(s, y)
            if x is None:
                pending.append((y, hx))
            else:
                if hx in phi and phi[hx] != x:
                    return
                phi[hx] = x
        hatoms = list(h.atoms)
        root = h.args[-1]
        hatoms.sort(key=lambda a: 0 if a[1] and a[1][-1] == root else 1)
        used = [False] * len(s.target)

        def go(k, phi, mapping):
            if k == len(hatoms):
                yield dict(phi), list(mapping)
                return
            hn, ha = hatoms[k]
            for t_idx, (tn, ta) in enumerate(s.target):
                if used[t_idx] or len(ta) != len(ha):
                    continue
                if k == 0 and t_idx != j:
                    continue
                if isinstance(hn, Hole):
                    if not isinstance(tn, Hole) or tn.ty != hn.ty:
                        continue
                    if not self._descends(s, tn.ident, hn.ident):
                        continue
                elif name_key(hn) != name_key(tn):
                    continue
                new_phi = dict(phi)
                ok = True
                for hx, tx in zip(ha, ta):
                    if hx in new_phi:
                        if new_phi[hx] != tx:
                            ok = False
                            break
                    else:
                        if tx in new_phi.values():
                            ok = False
                            break
                        new_phi[hx] = tx
                if not ok:
                    continue
                used[t_idx] = True
                mapping.append((hn, t_idx))
                yield from go(k + 1, new_phi, mapping)
                mapping.pop()
                used[t_idx] = False

        for phi2, mapping in go(0, phi, []):
            image = {t_idx for _, t_idx in mapping}
            inner = {v for hx, v in phi2.items() if hx not in h.args}
            if any(not isinstance(v, int) for v in inner):
                continue
            rest_links = _links([a for k, a in enumerate(s.target) if k not in image])
            if inner & rest_links:
                continue
            visible = {v for _, v in s.corr.map if v is not None}
            if inner & visible:
                continue
            strict = [(hn.ident, s.target[t_idx][0].ident) for hn, t_idx in mapping
                      if isinstance(hn, Hole) and s.target[t_idx][0].ident != hn.ident]
            if not strict:
                continue
            self._descent_guard(s, strict, h)
            corr = s.corr
            for y, hx in pending:
                corr = check_link_name(corr, phi2[hx], y) if hx in phi2 else None
                if corr is None:
                    break
            if corr is None:
                continue
            s2 = s.copy()
            s2.corr = corr
            del s2.items[i]
            s2.target = [a for k, a in enumerate(s.target) if k not in image]
            self._note(depth, f"induction hypothesis for {h.ty}")
            yield s2

    def _descends(self, s: State, child: int, ancestor: int) -> bool:
        while True:
            if child == ancestor:
                return True
            if child not in s.parents:
                return False
            child = s.parents[child][0]

    def _descent_guard(self, s: State, strict, h: Hyp):
        """A hypothesis may only be used on a goal that lost at least one atom."""
        shrink = 0
        for anc, child in strict:
            c = child
            while c != anc:
                parent, gain = s.parents[c]
                shrink += gain
                c = parent
        with _stats_lock:
            descent_stats["applications"] += 1
            if shrink <= 0 or s.decomps <= h.stamp:
                descent_stats["violations"] += 1
        if shrink <= 0 or s.decomps <= h.stamp:
            raise InfiniteDescentViolation(
                f"hypothesis for {h.ty} applied to a goal that is not smaller")


def _link_step(s: State, corr: LinkCorrespondence, x, y):
    y2 = corr.get(y) if _is_ann_local(y) else y
    if isinstance(x, str) and isinstance(y2, str) and x != y2 and s.same(x, y2):
        # both ends of a free fusion; the fusion itself is matched separately
        return corr
    return check_link_name(corr, x, y)


def _prep_rule(rule: ProductionRule):
    """Pair a rule with the name of the atom at its root (None for fusion-only bodies)."""
    atoms, _ = flatten(expand_term_notation(rule.rhs))
    root = rule.head.args[-1] if rule.head.args else None
    for nm, a in atoms:
        if not isinstance(nm, FusionName) and a and a[-1] == root:
            return rule, nm
    return rule, None


def _links(atoms) -> set:
    return {x for _, a in atoms for x in a}


def _show_atoms(atoms) -> str:
    parts = []
    for nm, a in atoms:
        parts.append(f"{_show_name(nm)}({', '.join(map(_show_link, a))})")
    return ", ".join(parts)


def _show_items(items) -> str:
    return _show_atoms([(nm, a) for nm, a, _ in items])


def _show_link(x) -> str:
    return f"_{x}" if isinstance(x, int) else str(x)


def _show_name(nm) -> str:
    from .syntax import pretty_print
    if isinstance(nm, Hole):
        return f"<{_show_name(nm.ty)}#{nm.ident}>"
    if isinstance(nm, FusionName):
        return "><"
    if isinstance(nm, TyArrow):
        return pretty_print(Atom(nm, ()))
    return getattr(nm, "name", "λ")


def _show_rhs(rule) -> str:
    from .syntax import pretty_print
    return pretty_print(rule.rhs)


# ---------------------------------------------------------------------------
# public entry points


_cache_lock = threading.Lock()
_checkers: dict = {}


def checker_for(rules, depth: int = DEFAULT_DEPTH) -> Checker:
    g = rules if isinstance(rules, Grammar) else Grammar(rules)
    key = (tuple((r.head, r.rhs) for r in g), depth)
    with _cache_lock:
        c = _checkers.get(key)
    if c is None:
        c = Checker(g, depth)
        with _cache_lock:
            _checkers[key] = c
    return c


def check_graph(g, goal: Atom, rules, depth: int = DEFAULT_DEPTH, ctx_types=None,
                explain: list | None = None) -> bool:
    """Does the annotated graph ``g`` have type ``goal``?

    Contexts become holes of their annotated (or ``ctx_types``) type and
    abstraction atoms become placeholders of their arrow type.
    """
    from .typecheck import to_annotated
    base = checker_for(rules, depth)
    c = Checker.__new__(Checker)
    c.__dict__.update(base.__dict__)
    c.log = []
    c.failure = Failure()
    c.trace = explain is not None
    c._ann_counter = itertools.count()
    target = to_annotated(g, ctx_types or {}, rules)
    ok = c.check(target, goal)
    if explain is not None:
        explain.extend(c.log)
        if not ok and c.failure.message:
            explain.append("deepest failing obligation: " + c.failure.message)
    return ok
