"""Projecting rules, projection-closed derivations and the contracting class."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

from .gemb import GembStep, apply_step, perm_eq, perm_eq_witness
from .rewriting import Rule, Trs, is_subterm_rule
from .terms import (
    App,
    Position,
    Term,
    TermError,
    Var,
    count_var,
    format_position,
    is_linear,
    iter_subterms,
    match,
    positions,
    subterm_at,
    substitute,
    variables,
)


@dataclass(frozen=True)
class ProjectingWitness:
    rule: int
    renaming: tuple[tuple[str, str], ...]
    guarded: Term
    variable: str

    def __str__(self) -> str:
        return f"projecting rule {self.rule + 1} over {self.guarded} leading to {self.variable}"


def find_projecting_rule(trs: Trs, t: Term, x: str) -> ProjectingWitness | None:
    """First rule that is a variant of t' -> x with t' a superterm of ``t``."""
    if count_var(x, t) != 1:
        raise TermError(f"{x} must occur exactly once in {t}")
    for i, rule in enumerate(trs.rules):
        w = _projects(rule, i, t, x)
        if w is not None:
            return w
    return None


def _projects(rule: Rule, index: int, t: Term, x: str) -> ProjectingWitness | None:
    if not isinstance(rule.rhs, Var):
        return None
    v = rule.rhs.name
    if count_var(v, rule.lhs) != 1:
        return None
    for q in positions(rule.lhs):
        sub = subterm_at(rule.lhs, q)
        if isinstance(sub, Var):
            continue
        rho = match(sub, t)
        if rho is None or rho.get(v, Var(v)) != Var(x):
            continue
        full = {name: rho.get(name, Var(name)) for name in variables(sub)}
        if not all(isinstance(b, Var) for b in full.values()):
            continue
        if len({b.name for b in full.values()}) != len(full):
            continue  # a variant needs an injective renaming
        return ProjectingWitness(index, tuple(sorted((k, b.name) for k, b in full.items())), t, x)
    return None


def validate_projecting(trs: Trs, w: ProjectingWitness) -> bool:
    """Re-check a witness against its rule."""
    if not 0 <= w.rule < len(trs.rules) or count_var(w.variable, w.guarded) != 1:
        return False
    return _projects(trs.rules[w.rule], w.rule, w.guarded, w.variable) is not None


# ---------------------------------------------------------------------------
# projection-closed derivations


@dataclass
class BranchA:
    position: Position
    pattern: Term  # linearized l|p
    renaming: dict[str, str]  # pattern variable -> original variable
    steps: list[GembStep]
    terms: list[Term]
    witnesses: list[tuple[int, ProjectingWitness]] = field(default_factory=list)

    def describe(self) -> list[str]:
        lines = [f"p = {format_position(self.position)}, g = {self.pattern}"]
        lines += [f"{s} => {t}" for s, t in zip(self.steps, self.terms)]
        lines += [f"step {k + 1} uses {w}" for k, w in self.witnesses]
        return lines


@dataclass
class BranchB:
    root_order: tuple[int, ...]
    leaf_map: dict[str, str]
    witnesses: list[ProjectingWitness] = field(default_factory=list)

    def describe(self) -> list[str]:
        lines = [f"root order {list(self.root_order)}, leaf map {self.leaf_map}"]
        return lines + [str(w) for w in self.witnesses]


def linearize(t: Term) -> tuple[Term, dict[str, str]]:
    """Rename every variable occurrence apart (X1, X2, ... left to right)."""
    mapping: dict[str, str] = {}
    counter = 0

    def walk(s: Term) -> Term:
        nonlocal counter
        if isinstance(s, Var):
            counter += 1
            name = f"X{counter}"
            mapping[name] = s.name
            return Var(name)
        return App(s.fn, [walk(a) for a in s.args]) if s.args else s

    return walk(t), mapping


def _closed_steps(trs: Trs, t: Term):
    """Steps of rules 1, 2, 4 whose schema variables are instantiated by variables.

    Yields (next term, step, obligations) where obligations maps each variable
    that needs a projecting rule if it survives to its witness (or None).
    """
    for p in positions(t):
        node = subterm_at(t, p)
        if not isinstance(node, App) or not node.args:
            continue
        args = node.args
        all_vars = all(isinstance(a, Var) for a in args)
        for i, a in enumerate(args):
            if all_vars:
                step = GembStep(1, p, node.fn, i + 1)
                yield apply_step(t, step), step, {a.name: _witness(trs, node, a.name)}
                step = GembStep(2, p, node.fn, i + 1)
                yield apply_step(t, step), step, {}
            elif isinstance(a, App) and all(
                isinstance(b, Var) for k, b in enumerate(args) if k != i
            ) and all(isinstance(z, Var) for z in a.args):
                step = GembStep(4, p, node.fn, i + 1, a.fn)
                obligations = {z.name: _witness(trs, a, z.name) for z in a.args}
                yield apply_step(t, step), step, obligations


def _witness(trs: Trs, t: Term, x: str) -> ProjectingWitness | None:
    if count_var(x, t) != 1:
        return None
    return find_projecting_rule(trs, t, x)


def _well_formed(t: Term, trs: Trs) -> bool:
    return trs.signature.well_formed(t)


def check_projection_closed_derivation(
    trs: Trs, g: Term, target: Term, max_states: int = 200_000
) -> tuple[list[GembStep], list[Term], list[tuple[int, ProjectingWitness]]] | None:
    """A non-empty projection-closed derivation from linear ``g`` to ``target``."""
    if not is_linear(g):
        raise TermError(f"derivation start {g} must be linear")
    return _search(trs, g, lambda d: d == target, target.size, max_states)


def _search(trs: Trs, g: Term, accept, min_size: int, max_states: int):
    start = (g, frozenset())
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        term, doomed = state
        for nxt, step, obligations in _closed_steps(trs, term):
            if nxt.size < min_size:
                continue
            new_doomed = doomed | {x for x, w in obligations.items() if w is None}
            key = (nxt, frozenset(new_doomed))
            if key in parent:
                continue
            parent[key] = (state, step, obligations)
            if len(parent) > max_states:
                raise TermError(f"projection-closed search exceeded {max_states} states")
            if (
                nxt.size == min_size
                and not (variables(nxt) & new_doomed)
                and _well_formed(nxt, trs)
                and accept(nxt)
            ):
                return _unwind(parent, key)
            queue.append(key)
    return None


def _unwind(parent: dict, key):
    steps, terms, obls = [], [], []
    while parent[key] is not None:
        prev, step, obligations = parent[key]
        steps.append(step)
        terms.append(key[0])
        obls.append(obligations)
        key = prev
    steps.reverse()
    terms.reverse()
    obls.reverse()
    survivors = variables(terms[-1])
    witnesses = [
        (k, w) for k, ob in enumerate(obls) for x, w in sorted(ob.items()) if x in survivors and w is not None
    ]
    return steps, terms, witnesses


def _branch_a(trs: Trs, rule: Rule) -> BranchA | None:
    r = rule.rhs
    if r.depth != 1:
        return None
    for p in positions(rule.lhs):
        sub = subterm_at(rule.lhs, p)
        if isinstance(sub, Var) or sub.size <= r.size:
            continue
        g, sigma = linearize(sub)
        back = {k: Var(v) for k, v in sigma.items()}
        found = _search(trs, g, lambda d: substitute(d, back) == r, r.size, 200_000)
        if found is not None:
            steps, terms, witnesses = found
            return BranchA(p, g, sigma, steps, terms, witnesses)
    return None


# ---------------------------------------------------------------------------
# projection-closed permutative equality


def _shallow_vars(t: Term) -> set[str]:
    """Variables occurring at depth at most 1."""
    out = {t.name} if isinstance(t, Var) else set()
    if isinstance(t, App):
        out |= {a.name for a in t.args if isinstance(a, Var)}
    return out


def check_projection_closed_perm_eq(trs: Trs, l: Term, r: Term) -> BranchB | None:
    """Certificate that l = r is a projection-closed permutative equality."""
    w = perm_eq_witness(l, r)
    if w is None:
        raise TermError(f"{l} and {r} are not permutatively equal")
    order, leaf_map = w
    if not isinstance(l, App) or not isinstance(r, App):
        return BranchB(order, leaf_map)
    shallow = _shallow_vars(l)
    guards = [a for a in l.args if isinstance(a, App)]
    witnesses: list[ProjectingWitness] = []
    for ri in r.args:
        if ri in l.args:
            continue
        for x in sorted(variables(ri)):
            if x in shallow:
                continue
            found = None
            for lj in guards:
                if count_var(x, lj) == 1:
                    found = find_projecting_rule(trs, lj, x)
                    if found is not None:
                        break
            if found is None:
                return None
            if found not in witnesses:
                witnesses.append(found)
    return BranchB(order, leaf_map, witnesses)


def _branch_b(trs: Trs, rule: Rule) -> BranchB | None:
    l, r = rule.lhs, rule.rhs
    if l.depth != 2 or r.depth != 2 or not perm_eq(l, r):
        return None
    return check_projection_closed_perm_eq(trs, l, r)


# ---------------------------------------------------------------------------
# class checks


@dataclass
class RuleCertificate:
    index: int
    kind: str  # "subterm" | "branch-A" | "branch-B" | "none"
    detail: BranchA | BranchB | None = None

    def describe(self) -> list[str]:
        return self.detail.describe() if self.detail is not None else []


@dataclass
class ContractingReport:
    rules: list[RuleCertificate]

    @property
    def holds(self) -> bool:
        return all(c.kind != "none" for c in self.rules)

    @property
    def first_failure(self) -> int | None:
        return next((c.index for c in self.rules if c.kind == "none"), None)


def certify_rule(trs: Trs, index: int) -> RuleCertificate:
    rule = trs.rules[index]
    if is_subterm_rule(rule):
        return RuleCertificate(index, "subterm")
    b = _branch_b(trs, rule)
    if b is not None:
        return RuleCertificate(index, "branch-B", b)
    a = _branch_a(trs, rule)
    if a is not None:
        return RuleCertificate(index, "branch-A", a)
    return RuleCertificate(index, "none")


@lru_cache(maxsize=256)
def check_contracting(trs: Trs) -> ContractingReport:
    return ContractingReport([certify_rule(trs, i) for i in range(len(trs.rules))])


def check_strictly_contracting(trs: Trs) -> bool:
    if not all(r.lhs.depth > r.rhs.depth for r in trs.rules):
        return False
    return check_contracting(trs).holds


def validate_certificate(trs: Trs, cert: RuleCertificate) -> bool:
    """Replay a rule certificate clause by clause."""
    rule = trs.rules[cert.index]
    if cert.kind == "subterm":
        return is_subterm_rule(rule)
    if cert.kind == "branch-B":
        b = cert.detail
        if rule.lhs.depth != 2 or rule.rhs.depth != 2 or not perm_eq(rule.lhs, rule.rhs):
            return False
        again = check_projection_closed_perm_eq(trs, rule.lhs, rule.rhs)
        return again is not None and all(validate_projecting(trs, w) for w in b.witnesses)
    if cert.kind == "branch-A":
        a = cert.detail
        back = {k: Var(v) for k, v in a.renaming.items()}
        if not is_linear(a.pattern) or substitute(a.pattern, back) != subterm_at(rule.lhs, a.position):
            return False
        if not a.steps:
            return False
        t = a.pattern
        needed: list[tuple[int, str, Term]] = []
        for k, step in enumerate(a.steps):
            if step.tag not in (1, 2, 4):
                return False
            node = subterm_at(t, step.position)
            i = step.index - 1
            others = [b for j, b in enumerate(node.args) if j != i]
            if not all(isinstance(b, Var) for b in others):
                return False
            child = node.args[i]
            if step.tag == 4:
                if not isinstance(child, App) or not all(isinstance(z, Var) for z in child.args):
                    return False
                needed += [(k, z.name, child) for z in child.args]
            elif not isinstance(child, Var):
                return False
            elif step.tag == 1:
                needed.append((k, child.name, node))
            t = apply_step(t, step)
            if t != a.terms[k]:
                return False
        if not trs.signature.well_formed(t) or substitute(t, back) != rule.rhs or rule.rhs.depth != 1:
            return False
        survivors = variables(t)
        have = {(k, w.variable): w for k, w in a.witnesses}
        for k, x, guarded in needed:
            if x not in survivors:
                continue
            w = have.get((k, x))
            if w is None or w.guarded != guarded or not validate_projecting(trs, w):
                return False
        return True
    return False


def missing_projections(trs: Trs, index: int) -> list[str]:
    """Suggestions only: guarded variables of a failing rule without any projecting rule."""
    rule = trs.rules[index]
    out = []
    for s in iter_subterms(rule.lhs):
        if isinstance(s, App) and s != rule.lhs:
            for x in sorted(variables(s)):
                if count_var(x, s) == 1 and x in variables(rule.rhs) and find_projecting_rule(trs, s, x) is None:
                    out.append(f"no projecting rule over {s} leading to {x}")
    return sorted(set(out))


__all__ = [
    "BranchA",
    "BranchB",
    "ContractingReport",
    "ProjectingWitness",
    "RuleCertificate",
    "check_contracting",
    "check_projection_closed_derivation",
    "check_projection_closed_perm_eq",
    "check_strictly_contracting",
    "find_projecting_rule",
    "linearize",
    "missing_projections",
    "validate_certificate",
]
