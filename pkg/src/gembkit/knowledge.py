"""Frames, graph-embedded subterms, frame saturation and the knowledge problems."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

from .contracting import check_contracting
from .gemb import gst as gst_term
from .rewriting import DEFAULT_BUDGET, Trs, check_convergent, nf, trs_size
from .terms import (
    App,
    Signature,
    Term,
    TermError,
    Var,
    constants,
    is_ground,
    iter_subterms,
    match_into,
    sort_key,
    substitute,
    symbols,
    variables,
)

DEFAULT_GST_CAP = 50_000
FRESH_NAME = "fresh0"


class KnowledgeError(TermError):
    """Bad frame, non-ground target or unmet theory-class precondition."""


@dataclass(frozen=True)
class Frame:
    """nu restricted . {var -> ground term}."""

    restricted: frozenset[str]
    bindings: tuple[tuple[str, Term], ...]
    name: str = "phi"

    def __post_init__(self) -> None:
        object.__setattr__(self, "restricted", frozenset(self.restricted))
        object.__setattr__(self, "bindings", tuple(self.bindings))
        names = [x for x, _ in self.bindings]
        if len(names) != len(set(names)):
            raise KnowledgeError(f"frame {self.name} binds a variable twice")
        for x, t in self.bindings:
            if not is_ground(t):
                raise KnowledgeError(f"frame binding {x} = {t} is not ground")
        clash = set(names) & self.names
        if clash:
            raise KnowledgeError(f"frame variables {sorted(clash)} clash with names")

    @classmethod
    def of(cls, restricted: Iterable[str], bindings: Mapping[str, Term], name: str = "phi") -> Frame:
        return cls(frozenset(restricted), tuple(bindings.items()), name)

    @property
    def sigma(self) -> dict[str, Term]:
        return dict(self.bindings)

    @property
    def domain(self) -> list[str]:
        return [x for x, _ in self.bindings]

    @property
    def names(self) -> frozenset[str]:
        out: set[str] = set()
        for _, t in self.bindings:
            out |= constants(t)
        return frozenset(out)

    @property
    def free_names(self) -> frozenset[str]:
        """fn(phi): names of the bound terms that are not restricted."""
        return self.names - self.restricted

    def apply(self, recipe: Term) -> Term:
        return substitute(recipe, self.sigma)

    def __str__(self) -> str:
        body = ", ".join(f"{x} -> {t}" for x, t in self.bindings)
        return f"nu {{{', '.join(sorted(self.restricted))}}}.{{{body}}}"


def normalize_frame(frame: Frame, trs: Trs, budget: int = DEFAULT_BUDGET) -> Frame:
    return Frame(frame.restricted, tuple((x, nf(t, trs, budget)) for x, t in frame.bindings), frame.name)


def working_signature(trs: Trs, terms: Iterable[Term] = ()) -> Signature:
    """The theory signature extended by every name occurring in ``terms``."""
    extra: dict[str, int] = {}
    for t in terms:
        for s in iter_subterms(t):
            if isinstance(s, App) and s.fn not in trs.signature:
                if s.args:
                    raise KnowledgeError(f"undeclared function symbol {s.fn}")
                extra[s.fn] = 0
    return trs.signature.extend(extra)


def gst_frame(frame: Frame, trs: Trs, cap: int = DEFAULT_GST_CAP) -> set[Term]:
    sig = working_signature(trs, [t for _, t in frame.bindings])
    out: set[Term] = set()
    for _, t in frame.bindings:
        out |= gst_term(t, sig, cap)
        if len(out) > cap:
            raise KnowledgeError(f"graph-embedded subterm set exceeded the cap of {cap} terms")
    return out


def check_recipe(recipe: Term, frame: Frame, signature: Signature) -> None:
    """Raise unless ``recipe`` uses frame variables, public symbols and public names only."""
    for s in iter_subterms(recipe):
        if isinstance(s, Var):
            if s.name not in frame.sigma:
                raise KnowledgeError(f"recipe variable {s.name} is not a frame variable")
        elif not s.args:
            if s.fn in frame.restricted:
                raise KnowledgeError(f"recipe uses restricted name {s.fn}")
            if s.fn in signature.private:
                raise KnowledgeError(f"recipe uses private name {s.fn}")
        elif s.fn in signature.private:
            raise KnowledgeError(f"recipe uses private symbol {s.fn}")


# ---------------------------------------------------------------------------
# saturation


@dataclass(frozen=True)
class Entry:
    term: Term
    recipe: Term
    provenance: str  # "initial-range" | "initial-name" | "rule1" | "rule2(<rule>, |C|=k)"


def recipe_key(t: Term) -> tuple:
    return sort_key(t)


@dataclass
class SaturationState:
    trs: Trs
    frame: Frame
    c_r: int
    fresh: str
    signature: Signature
    gst: frozenset[Term]
    entries: dict[Term, Entry] = field(default_factory=dict)
    alternatives: set[Term] = field(default_factory=set)

    # -- public material -------------------------------------------------
    def public_symbol(self, f: str) -> bool:
        return f not in self.signature.private and f not in self.frame.restricted

    def public_name(self, c: str) -> bool:
        return c not in self.frame.restricted and c not in self.signature.private

    @property
    def sat(self) -> set[Term]:
        return set(self.entries)

    def sorted_entries(self) -> list[Entry]:
        return sorted(self.entries.values(), key=lambda e: sort_key(e.term))

    # -- minimal constructions over sat ------------------------------------
    def cost_table(self) -> _CostTable:
        return _CostTable(self)


class _CostTable:
    """Cheapest public context (plus recipe) building a term over sat and names."""

    def __init__(self, state: SaturationState) -> None:
        self.state = state
        self.memo: dict[Term, tuple[float, Term | None]] = {}

    def best(self, t: Term) -> tuple[float, Term | None]:
        hit = self.memo.get(t)
        if hit is not None:
            return hit
        st = self.state
        options: list[tuple[float, tuple, Term]] = []
        e = st.entries.get(t)
        if e is not None:
            options.append((1, recipe_key(e.recipe), e.recipe))
        if isinstance(t, App):
            if not t.args:
                if st.public_name(t.fn):
                    options.append((1, recipe_key(t), t))
            elif st.public_symbol(t.fn):
                parts = [self.best(a) for a in t.args]
                if all(c < math.inf for c, _ in parts):
                    r = App(t.fn, [p for _, p in parts])
                    options.append((1 + sum(c for c, _ in parts), recipe_key(r), r))
        if not options:
            res: tuple[float, Term | None] = (math.inf, None)
        else:
            c, _, r = min(options, key=lambda o: (o[0], o[1]))
            res = (c, r)
        self.memo[t] = res
        return res

    def cost(self, t: Term) -> float:
        return self.best(t)[0]

    def recipe(self, t: Term) -> Term | None:
        return self.best(t)[1]


def _skeleton(pat: Term, binding: dict, budget: int, st: SaturationState, by_root: dict) -> Iterator:
    """Ways of covering ``pat`` with context nodes and sat-filled holes.

    Yields (plan, binding, cost); variable leaves are left as ("var", x) with a
    provisional cost of 1 and priced once every variable is bound.
    """
    if budget < 1:
        return
    if isinstance(pat, Var):
        yield ("var", pat.name), binding, 1
        return
    for m in by_root.get(pat.fn, ()):
        b = match_into(pat, m, binding)
        if b is not None:
            yield ("hole", m), b, 1
    if not st.public_symbol(pat.fn):
        return
    if not pat.args:
        if st.public_name(pat.fn):
            yield ("node", pat.fn, ()), binding, 1
        return
    if 1 + len(pat.args) > budget:
        return
    for plans, b, c in _cover_args(pat.args, 0, binding, budget - 1, st, by_root):
        yield ("node", pat.fn, tuple(plans)), b, 1 + c


def _cover_args(pats, i, binding, budget, st, by_root) -> Iterator:
    if i == len(pats):
        yield [], binding, 0
        return
    rest = len(pats) - i - 1
    for plan, b, c in _skeleton(pats[i], binding, budget - rest, st, by_root):
        for plans, b2, c2 in _cover_args(pats, i + 1, b, budget - c, st, by_root):
            yield [plan] + plans, b2, c + c2


def _plan_vars(plan) -> list[str]:
    if plan[0] == "var":
        return [plan[1]]
    if plan[0] == "node":
        return [x for p in plan[2] for x in _plan_vars(p)]
    return []


def _plan_recipe(plan, binding, costs: _CostTable) -> Term:
    kind = plan[0]
    if kind == "hole":
        return costs.state.entries[plan[1]].recipe
    if kind == "var":
        r = costs.recipe(binding[plan[1]])
        assert r is not None
        return r
    return App(plan[1], [_plan_recipe(p, binding, costs) for p in plan[2]])


def small_context_redexes(st: SaturationState, costs: _CostTable, budget: int) -> Iterator[tuple[int, Term, Term, int]]:
    """Root redexes C[M1..Ml] with |C| <= budget over sat; yields (rule, M, recipe, |C|)."""
    by_root: dict[str, list[Term]] = {}
    for m in sorted(st.entries, key=sort_key):
        if isinstance(m, App):
            by_root.setdefault(m.fn, []).append(m)
    pool = sorted((t for t in st.gst if costs.cost(t) <= budget), key=sort_key)
    fresh = App(st.fresh, ())
    for index, rule in enumerate(st.trs.rules):
        rhs_vars = variables(rule.rhs)
        for plan, binding, cost in _skeleton(rule.lhs, {}, budget, st, by_root):
            leaves = _plan_vars(plan)
            unbound = sorted(set(leaves) - set(binding))
            open_r = [x for x in unbound if x in rhs_vars]
            base = dict(binding)
            for x in unbound:
                if x not in rhs_vars:
                    base[x] = fresh
            for values in itertools.product(pool, repeat=len(open_r)):
                b = dict(base)
                b.update(zip(open_r, values))
                total = cost + sum(costs.cost(b[x]) - 1 for x in leaves)
                if total > budget:
                    continue
                m = substitute(rule.rhs, b)
                yield index, m, _plan_recipe(plan, b, costs), int(total)


def saturate(
    frame: Frame,
    trs: Trs,
    *,
    gst_cap: int = DEFAULT_GST_CAP,
    fresh: str = FRESH_NAME,
    budget: int = DEFAULT_BUDGET,
    max_alternatives: int = 5_000,
) -> SaturationState:
    """Least set containing the frame's range and free names, closed under both rules."""
    frame = normalize_frame(frame, trs, budget)
    sig = working_signature(trs, [t for _, t in frame.bindings])
    if fresh in sig or fresh in frame.sigma:
        raise KnowledgeError(f"fresh name {fresh} already in use")
    st = SaturationState(trs, frame, trs_size(trs), fresh, sig, frozenset(gst_frame(frame, trs, gst_cap)))

    def offer(term: Term, recipe: Term, provenance: str) -> bool:
        old = st.entries.get(term)
        if old is None or recipe_key(recipe) < recipe_key(old.recipe):
            st.entries[term] = Entry(term, recipe, provenance)
            return True
        return False

    for x, t in frame.bindings:
        offer(t, Var(x), "initial-range")
    for c in sorted(frame.free_names):
        offer(App(c, ()), App(c, ()), "initial-name")

    changed = True
    while changed:
        changed = False
        costs = st.cost_table()
        for g in sorted(st.gst, key=sort_key):
            if isinstance(g, App) and g.args and st.public_symbol(g.fn) and all(a in st.entries for a in g.args):
                recipe = App(g.fn, [st.entries[a].recipe for a in g.args])
                if len(st.alternatives) < max_alternatives:
                    st.alternatives.add(recipe)
                changed |= offer(g, recipe, "rule1")
        costs = st.cost_table()
        found = list(small_context_redexes(st, costs, st.c_r))
        for index, m, recipe, size in found:
            if len(st.alternatives) < max_alternatives:
                st.alternatives.add(recipe)
            if m in st.gst:
                changed |= offer(m, recipe, f"rule2(rule {index + 1}, |C|={size})")
    return st


# ---------------------------------------------------------------------------
# deduction


@lru_cache(maxsize=256)
def theory_class(trs: Trs) -> tuple[bool, str]:
    """(holds, verdict text) for the contracting-convergent precondition."""
    contracting = check_contracting(trs).holds
    conv = check_convergent(trs).verdict
    ok = contracting and conv == "yes"
    return ok, f"contracting={'yes' if contracting else 'no'}, convergent={conv}"


def _require_class(trs: Trs, force: bool) -> bool:
    ok, text = theory_class(trs)
    if not ok and not force:
        raise KnowledgeError(f"theory is not certified contracting convergent ({text}); rerun with force")
    return not ok


def deduce_empty(state: SaturationState, t: Term) -> Term | None:
    """Recipe for ``t`` (in normal form) from sat, public names and public symbols."""
    return state.cost_table().recipe(t)


@dataclass
class Deduction:
    target: Term
    normal_target: Term
    recipe: Term | None
    heuristic: bool
    state: SaturationState

    @property
    def deducible(self) -> bool:
        return self.recipe is not None


def deduce(
    frame: Frame,
    trs: Trs,
    t: Term,
    *,
    force: bool = False,
    state: SaturationState | None = None,
    **options,
) -> Deduction:
    if not is_ground(t):
        raise KnowledgeError(f"deduction target {t} is not ground")
    clash = constants(t) & set(frame.domain)
    if clash:
        raise KnowledgeError(f"target names {sorted(clash)} clash with frame variables")
    heuristic = _require_class(trs, force)
    budget = options.get("budget", DEFAULT_BUDGET)
    st = state if state is not None else saturate(frame, trs, **options)
    target = nf(t, trs, budget)
    recipe = deduce_empty(st, target)
    if recipe is not None:
        check_recipe(recipe, st.frame, st.signature)
        if nf(st.frame.apply(recipe), trs, budget) != target:
            raise AssertionError(f"unsound recipe {recipe} for {target}")
    return Deduction(t, target, recipe, heuristic, st)


# ---------------------------------------------------------------------------
# static equivalence


@dataclass
class StaticEquivalence:
    equivalent: bool
    witness: tuple[Term, Term] | None = None
    holds_in: str | None = None  # name of the frame where the witness equation holds
    heuristic: bool = False
    candidates: int = 0

    @property
    def equation(self) -> str | None:
        if self.witness is None:
            return None
        return f"{self.witness[0]} = {self.witness[1]}"


def _candidate_recipes(states: list[SaturationState], names: set[str], bound: int) -> list[Term]:
    base: set[Term] = set()
    for st in states:
        base |= {Var(x) for x in st.frame.domain}
        base |= {e.recipe for e in st.entries.values()}
    base |= {App(c, ()) for c in names}
    cands = set(base)
    for st in states:
        cands |= st.alternatives
    sig = states[0].signature
    ordered = sorted(base, key=sort_key)
    for f, k in sorted(sig.arities.items()):
        if k == 0 or f in sig.private:
            continue
        for args in itertools.product(ordered, repeat=k):
            cands.add(App(f, args))
    return sorted((c for c in cands if c.size <= bound), key=sort_key)


def static_equivalent(
    phi: Frame,
    psi: Frame,
    trs: Trs,
    *,
    force: bool = False,
    context_bound: int | None = None,
    budget: int = DEFAULT_BUDGET,
    **options,
) -> StaticEquivalence:
    if sorted(phi.domain) != sorted(psi.domain):
        raise KnowledgeError(f"frames have different domains: {phi.domain} vs {psi.domain}")
    heuristic = _require_class(trs, force)
    bound = context_bound if context_bound is not None else trs_size(trs) ** 2
    s1 = saturate(phi, trs, budget=budget, **options)
    s2 = saturate(psi, trs, budget=budget, **options)
    shared_sig = s1.signature.union(s2.signature)
    s1.signature = s2.signature = shared_sig
    names = (
        (phi.free_names | psi.free_names | {s1.fresh})
        | {c for c in trs.signature.constants if c not in trs.signature.private}
    ) - phi.restricted - psi.restricted
    cands = _candidate_recipes([s1, s2], set(names), bound)
    values = []
    for c in cands:
        values.append((c, nf(s1.frame.apply(c), trs, budget), nf(s2.frame.apply(c), trs, budget)))
    best: tuple | None = None
    for first, second, label in ((1, 2, phi.name), (2, 1, psi.name)):
        groups: dict[Term, list[tuple[Term, Term]]] = {}
        for c, v1, v2 in values:
            key, other = (v1, v2) if first == 1 else (v2, v1)
            groups.setdefault(key, []).append((c, other))
        for members in groups.values():
            if len({o for _, o in members}) < 2:
                continue
            for (a, oa), (b, ob) in itertools.combinations(members, 2):
                if oa == ob:
                    continue
                big, small = (a, b) if sort_key(a) > sort_key(b) else (b, a)
                key = (a.size + b.size, str(big), str(small))
                if best is None or key < best[0]:
                    best = (key, (big, small), label)
    if best is None:
        return StaticEquivalence(True, heuristic=heuristic, candidates=len(cands))
    return StaticEquivalence(False, best[1], best[2], heuristic, len(cands))


# ---------------------------------------------------------------------------
# cap problem


@dataclass
class CapSolution:
    cap: Term
    assignment: dict[str, Term]
    recipe: Term


def cap_solve(trs: Trs, terms: list[Term], secret: str, *, budget: int = DEFAULT_BUDGET, force: bool = False, **options) -> CapSolution | None:
    """Cap term extracting ``secret`` from ``terms``, via deduction in nu{secret}.sigma."""
    private_funcs = sorted(f for f in trs.signature.private if trs.signature.arities[f] > 0)
    if private_funcs:
        raise KnowledgeError(f"intruder repertoire is incomplete: private symbols {private_funcs}")
    if not terms:
        raise KnowledgeError("the cap problem needs at least one term")
    if not any(secret in constants(t) for t in terms):
        raise KnowledgeError(f"no term contains the secret {secret}")
    used = set().union(*(symbols(r.lhs) | symbols(r.rhs) for r in trs.rules))
    if secret in used:
        raise KnowledgeError(f"the secret {secret} occurs in the rewrite system")
    frame = Frame(frozenset({secret}), tuple((f"x{i}", t) for i, t in enumerate(terms, 1)), "cap")
    d = deduce(frame, trs, App(secret, ()), budget=budget, force=force, **options)
    if d.recipe is None:
        return None
    st = d.state
    counter = itertools.count(1)
    assignment: dict[str, Term] = {}

    def to_cap(r: Term) -> Term:
        if isinstance(r, Var) or (isinstance(r, App) and r.fn == st.fresh):
            name = f"Y{next(counter)}"
            assignment[name] = frame.sigma[r.name] if isinstance(r, Var) else terms[0]
            return Var(name)
        return App(r.fn, [to_cap(a) for a in r.args]) if r.args else r

    cap = to_cap(d.recipe)
    if nf(substitute(cap, assignment), trs, budget) != App(secret, ()):
        raise AssertionError(f"cap term {cap} does not yield {secret}")
    return CapSolution(cap, assignment, d.recipe)


# ---------------------------------------------------------------------------
# brute-force recipe enumeration (independent oracle)


@dataclass
class RecipeTable:
    """Every value reachable by a recipe of size <= ``max_size`` with its smallest recipe."""

    values: dict[Term, Term]
    max_size: int
    truncated: bool = False

    def lookup(self, t: Term) -> Term | None:
        return self.values.get(t)


def enumerate_recipes(
    frame: Frame,
    trs: Trs,
    max_size: int = 7,
    extra_names: Iterable[str] = (),
    fresh: str = FRESH_NAME,
    budget: int = DEFAULT_BUDGET,
    max_values: int = 2_000_000,
) -> RecipeTable:
    """Bottom-up enumeration of recipes by size, deduplicated by normal form."""
    frame = normalize_frame(frame, trs, budget)
    sig = working_signature(trs, [t for _, t in frame.bindings])
    names = (set(sig.constants) | set(extra_names) | {fresh}) - frame.restricted - sig.private
    funcs = sorted((f, a) for f, a in sig.arities.items() if a > 0 and f not in sig.private)
    # Arguments are already normal, so only a root redex needs rewriting.
    defined = trs.defined_symbols
    values: dict[Term, Term] = {}
    by_size: dict[int, list[tuple[Term, Term]]] = {}
    level: list[tuple[Term, Term]] = []
    leaves = [(Var(x), t) for x, t in frame.bindings] + [(App(c, ()), App(c, ())) for c in sorted(names)]
    for recipe, value in leaves:
        if value not in values:
            values[value] = recipe
            level.append((recipe, value))
    by_size[1] = level
    truncated = False
    for n in range(2, max_size + 1):
        level = []
        for f, k in funcs:
            for split in _splits(n - 1, k):
                pools = [by_size.get(s, []) for s in split]
                if any(not p for p in pools):
                    continue
                for combo in itertools.product(*pools):
                    value = App(f, [v for _, v in combo])
                    if f in defined:
                        hit = trs.root_step(value)
                        if hit is not None:
                            value = nf(hit[2], trs, budget)
                    if value in values:
                        continue
                    recipe = App(f, [r for r, _ in combo])
                    values[value] = recipe
                    level.append((recipe, value))
                    if len(values) > max_values:
                        truncated = True
                        break
                if truncated:
                    break
            if truncated:
                break
        by_size[n] = level
        if truncated:
            break
    return RecipeTable(values, max_size, truncated)


def _splits(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _splits(total - first, parts - 1):
            yield (first,) + rest
