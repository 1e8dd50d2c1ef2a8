"""Finite-variant, layering, permutative-theory and combination diagnostics."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from .contracting import check_contracting, check_strictly_contracting
from .knowledge import Frame, KnowledgeError
from .rewriting import Rule, Trs, check_convergent, is_subterm_rule, trs_size
from .terms import (
    App,
    Position,
    Signature,
    Term,
    TermError,
    Var,
    arity_map,
    constants,
    format_position,
    is_ground,
    match,
    match_into,
    positions,
    rename,
    replace_at,
    sort_key,
    subterm_at,
    substitute,
    symbol_counts,
    symbols,
    unify,
    variables,
)

DEFAULT_CLOSURE_BOUND = 5
DECOMPOSITION_CAP = 2**12


# ---------------------------------------------------------------------------
# finite variant property


@dataclass
class FvpReport:
    verdict: str  # "yes" | "not-applicable"
    reasons: list[str] = field(default_factory=list)


def fvp_sufficient(trs: Trs) -> FvpReport:
    """Strictly contracting, convergent, and every rhs a variable or constructor-rooted."""
    reasons = []
    if not check_strictly_contracting(trs):
        reasons.append("not strictly contracting")
    conv = check_convergent(trs)
    if conv.verdict != "yes":
        reasons.append(f"convergence verdict is {conv.verdict}")
    for i, rule in enumerate(trs.rules):
        r = rule.rhs
        if isinstance(r, App) and not trs.is_constructor(r.fn):
            reasons.append(f"rule {i + 1} rhs is rooted by defined symbol {r.fn}")
    return FvpReport("yes" if not reasons else "not-applicable", reasons)


@dataclass
class ForwardClosure:
    status: str  # "closed" | "unknown"
    rules: list[Rule]
    iterations: int


def _instance_of(general: Rule, specific: Rule) -> bool:
    sigma = match_into(general.lhs, specific.lhs)
    return sigma is not None and match_into(general.rhs, specific.rhs, sigma) is not None


def forward_closure_bounded(trs: Trs, bound: int = DEFAULT_CLOSURE_BOUND) -> ForwardClosure:
    """Iterate forward overlaps (rhs narrowed by lhs at non-variable positions)."""
    closure = list(trs.rules)
    frontier = list(trs.rules)
    for iteration in range(1, bound + 1):
        new: list[Rule] = []
        for rule in frontier:
            for j, other in enumerate(trs.rules):
                o = other.renamed(f"'{j}")
                for p in positions(rule.rhs):
                    sub = subterm_at(rule.rhs, p)
                    if isinstance(sub, Var) or sub.fn != o.lhs.fn:
                        continue
                    mgu = unify(sub, o.lhs)
                    if mgu is None:
                        continue
                    lhs = substitute(rule.lhs, mgu)
                    rhs = replace_at(substitute(rule.rhs, mgu), p, substitute(o.rhs, mgu))
                    cand = _canonical(Rule(lhs, rhs))
                    if any(_instance_of(old, cand) for old in closure + new):
                        continue
                    new.append(cand)
        if not new:
            return ForwardClosure("closed", closure, iteration)
        closure += new
        frontier = new
    return ForwardClosure("unknown", closure, bound)


def _canonical(rule: Rule) -> Rule:
    order = []
    for t in (rule.lhs, rule.rhs):
        for p in positions(t):
            s = subterm_at(t, p)
            if isinstance(s, Var) and s.name not in order:
                order.append(s.name)
    mapping = {v: f"V{i}" for i, v in enumerate(order, 1)}
    return Rule(rename(rule.lhs, mapping), rename(rule.rhs, mapping))


# ---------------------------------------------------------------------------
# term decompositions


@dataclass(frozen=True)
class Decomposition:
    holes: tuple[Position, ...]
    pieces: tuple[Term, ...]  # l_1..l_n, distinct non-variable terms
    ys: tuple[str, ...]
    zs: tuple[str, ...]

    @property
    def npq(self) -> tuple[int, int, int]:
        return len(self.pieces), len(self.ys), len(self.zs)

    @property
    def material(self) -> list[Term]:
        return list(self.pieces) + [Var(y) for y in self.ys] + [Var(z) for z in self.zs]

    @property
    def shared(self) -> bool:
        """True when one piece or variable fills several holes."""
        return len(self.holes) != len(self.pieces) + len(self.ys) + len(self.zs)

    def __str__(self) -> str:
        hs = "{" + ", ".join(format_position(h) for h in self.holes) + "}"
        return (
            f"holes {hs}: pieces [{', '.join(map(str, self.pieces))}], "
            f"y [{', '.join(self.ys)}], z [{', '.join(self.zs)}]"
        )


class DecompositionCapExceeded(TermError):
    pass


def _antichains(t: Term, p: Position) -> Iterator[list[Position]]:
    """Antichains below ``p`` covering every variable occurrence."""
    yield [p]
    if isinstance(t, App):
        if not t.args:
            yield []
            return
        parts = [list(_antichains(a, p + (i,))) for i, a in enumerate(t.args, 1)]
        for combo in itertools.product(*parts):
            yield [q for part in combo for q in part]


def enumerate_decompositions(l: Term, cap: int = DECOMPOSITION_CAP) -> list[Decomposition]:
    out: dict[tuple, Decomposition] = {}
    for count, holes in enumerate(_antichains(l, ()), 1):
        if count > cap:
            raise DecompositionCapExceeded(f"more than {cap} antichains for {l}")
        if not holes:
            continue
        pieces: list[Term] = []
        var_names: list[str] = []
        for h in holes:
            s = subterm_at(l, h)
            if isinstance(s, Var):
                if s.name not in var_names:
                    var_names.append(s.name)
            elif s not in pieces:
                pieces.append(s)
        inside = set().union(*(variables(pc) for pc in pieces)) if pieces else set()
        d = Decomposition(
            tuple(holes),
            tuple(pieces),
            tuple(v for v in var_names if v in inside),
            tuple(v for v in var_names if v not in inside),
        )
        out.setdefault((d.holes,), d)
    return list(out.values())


# ---------------------------------------------------------------------------
# layered check


@dataclass
class LayerWitness:
    rule: int
    decomposition: str
    condition: str  # "vars-in-pieces" | "contexts"
    detail: list[str] = field(default_factory=list)


@dataclass
class LayeredReport:
    verdict: str  # "layered" | "unknown" | "not-layered-evidence"
    layers: list[list[int]]
    table: list[LayerWitness] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


def _build_cost(value: Term, material: set[Term], budget: int) -> int | None:
    """Size of the smallest context over ``material`` equal to ``value`` (or None)."""
    if value in material:
        return 1
    if isinstance(value, Var) or budget <= 1:
        return None
    total = 1
    for a in value.args:
        c = _build_cost(a, material, budget - total)
        if c is None:
            return None
        total += c
        if total > budget:
            return None
    return total if total <= budget else None


def _cover_lhs(pat: Term, binding: dict, budget: int, material: list[Term]) -> Iterator[tuple[dict, int]]:
    """Ways of writing ``pat`` as a context over ``material`` (holes bind variables)."""
    if budget < 1:
        return
    if isinstance(pat, Var):
        if pat.name in binding:
            c = _build_cost(binding[pat.name], set(material), budget)
            if c is not None:
                yield binding, c
        else:
            for m in material:
                yield {**binding, pat.name: m}, 1
        return
    for m in material:
        b = match_into(pat, m, binding)
        if b is not None:
            yield b, 1
    if 1 + len(pat.args) <= budget:
        yield from _cover_args(pat.args, binding, budget - 1, material, 1)


def _cover_args(pats, binding, budget, material, acc) -> Iterator[tuple[dict, int]]:
    if not pats:
        yield binding, acc
        return
    rest = len(pats) - 1
    for b, c in _cover_lhs(pats[0], binding, budget - rest, material):
        yield from _cover_args(pats[1:], b, budget - c, material, acc + c)


def _one_step(u: Term, rules: list[tuple[int, Rule]], material: list[Term], cap: int) -> str | None:
    """A context C over the material with C[...] ->eps u by one rule, described."""
    for index, rule in rules:
        theta = match(rule.rhs, u)
        if theta is None:
            continue
        covers = list(_cover_lhs(rule.lhs, dict(theta), cap, material))
        if covers:
            b, cost = min(covers, key=lambda bc: (bc[1], sort_key(substitute(rule.lhs, bc[0]))))
            return f"{substitute(rule.lhs, b)} -> {u} by rule {index + 1} (|C|={cost})"
    return None


def _realize(u: Term, rules, material: list[Term], cap: int, out: list[str]) -> bool:
    """Write ``u`` as C0[s1..sk] with each s_j obtained in zero or one root step."""
    if u in material:
        out.append(f"{u}: piece")
        return True
    if isinstance(u, App):
        inner: list[str] = []
        if all(_realize(a, rules, material, cap, inner) for a in u.args):
            out += inner
            return True
    how = _one_step(u, rules, material, cap)
    if how is not None:
        out.append(f"{u}: {how}")
        return True
    return False


def _check_rule(rule: Rule, index: int, avail: list[tuple[int, Rule]], cap: int) -> tuple[list[LayerWitness], list[str]]:
    table, failures = [], []
    for d in enumerate_decompositions(rule.lhs):
        inside = set().union(*(variables(p) for p in d.pieces)) if d.pieces else set()
        if variables(rule.rhs) <= inside:
            table.append(LayerWitness(index, str(d), "vars-in-pieces"))
            continue
        detail: list[str] = []
        if _realize(rule.rhs, avail, d.material, cap, detail):
            table.append(LayerWitness(index, str(d), "contexts", detail))
        else:
            failures.append(f"rule {index + 1}, {d}")
    return table, failures


def layered_check(trs: Trs, context_cap: int | None = None) -> LayeredReport:
    """Two-layer chain: subterm-or-constant rules first, then the rest."""
    cap = context_cap if context_cap is not None else trs_size(trs)
    r1 = [(i, r) for i, r in enumerate(trs.rules) if is_subterm_rule(r)]
    r2 = [(i, r) for i, r in enumerate(trs.rules) if not is_subterm_rule(r)]
    layers = [[i for i, _ in r1], [i for i, _ in r2]]
    table: list[LayerWitness] = []
    failures: list[str] = []
    for layer, avail in ((r1, []), (r2, r1)):
        for index, rule in layer:
            rows, bad = _check_rule(rule, index, avail, cap)
            table += rows
            failures += bad
    if not failures:
        return LayeredReport("layered", layers, table)
    everything = list(enumerate(trs.rules))
    hopeless = []
    for index, rule in enumerate(trs.rules):
        _, bad = _check_rule(rule, index, everything, cap)
        hopeless += bad
    verdict = "not-layered-evidence" if hopeless else "unknown"
    return LayeredReport(verdict, layers, table, failures)


# ---------------------------------------------------------------------------
# permutative theories


@dataclass(frozen=True)
class EqPresentation:
    axioms: tuple[tuple[Term, Term], ...]
    name: str = "E"

    @property
    def signature(self) -> Signature:
        return Signature(arity_map([t for ax in self.axioms for t in ax]))

    @property
    def symbols(self) -> set[str]:
        return set().union(*(symbols(l) | symbols(r) for l, r in self.axioms)) if self.axioms else set()

    @property
    def root_symbols(self) -> set[str]:
        return {t.fn for ax in self.axioms for t in ax if isinstance(t, App)}


def check_permutative(eqs: EqPresentation) -> bool:
    return all(symbol_counts(l) == symbol_counts(r) for l, r in eqs.axioms)


def _eq_steps(t: Term, eqs: EqPresentation) -> Iterator[Term]:
    for p in positions(t):
        sub = subterm_at(t, p)
        for l, r in eqs.axioms:
            for a, b in ((l, r), (r, l)):
                sigma = match(a, sub)
                if sigma is not None:
                    yield replace_at(t, p, substitute(b, sigma))


class EqClassOverflow(TermError):
    pass


def eq_class(eqs: EqPresentation, s: Term, cap: int = 100_000) -> set[Term]:
    """The =_E class of ``s`` (finite because permutative steps keep size)."""
    if not check_permutative(eqs):
        raise TermError("equational reasoning here requires a permutative presentation")
    seen = {s}
    queue = deque([s])
    while queue:
        t = queue.popleft()
        for u in _eq_steps(t, eqs):
            if u not in seen:
                seen.add(u)
                if len(seen) > cap:
                    raise EqClassOverflow(f"equivalence class exceeded {cap} terms")
                queue.append(u)
    return seen


def eq_modulo_permutative(eqs: EqPresentation, s: Term, t: Term, cap: int = 100_000) -> bool:
    if s.size != t.size or symbol_counts(s) != symbol_counts(t):
        if not check_permutative(eqs):
            raise TermError("equational reasoning here requires a permutative presentation")
        return False
    return t in eq_class(eqs, s, cap)


def deduce_permutative(eqs: EqPresentation, frame: Frame, t: Term, max_size: int | None = None) -> Term | None:
    """Smallest recipe s with |s| <= |t| and s sigma =_E t, or None."""
    if not is_ground(t):
        raise KnowledgeError(f"deduction target {t} is not ground")
    if not check_permutative(eqs):
        raise TermError("deduction modulo E requires a permutative presentation")
    limit = t.size if max_size is None else max_size
    target_class = eq_class(eqs, t)
    arities = arity_map([t] + [u for _, u in frame.bindings] + [x for ax in eqs.axioms for x in ax])
    names = sorted(c for c in constants(t) if c not in frame.restricted)
    funcs = sorted((f, a) for f, a in arities.items() if a > 0)
    sigma = frame.sigma
    by_size: dict[int, list[tuple[Term, Term]]] = {1: []}
    for x, v in frame.bindings:
        by_size[1].append((Var(x), v))
    for c in names:
        by_size[1].append((App(c, ()), App(c, ())))
    best: Term | None = None
    for n in range(1, limit + 1):
        if n > 1:
            level = []
            for f, k in funcs:
                for split in _splits(n - 1, k):
                    pools = [by_size.get(s, []) for s in split]
                    for combo in itertools.product(*pools):
                        value = App(f, [v for _, v in combo])
                        if value.size > t.size:
                            continue
                        level.append((App(f, [r for r, _ in combo]), value))
            by_size[n] = level
        hits = sorted((r for r, v in by_size[n] if v in target_class), key=sort_key)
        if hits:
            best = hits[0]
            break
    if best is not None:
        assert substitute(best, sigma) in target_class
    return best


def _splits(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _splits(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# combination


@dataclass
class CombinationReport:
    mode: str  # "trs+trs" | "trs+axioms"
    shared: list[str]
    constructor_sharing: bool
    checks: dict[str, str]
    conclusions: list[str]

    @property
    def applicable(self) -> bool:
        return bool(self.conclusions)


def _trs_symbols(trs: Trs) -> set[str]:
    return set(trs.signature.arities)


def combination_check(r1: Trs, r2: Trs | None = None, eqs: EqPresentation | None = None) -> CombinationReport:
    if (r2 is None) == (eqs is None):
        raise TermError("supply exactly one of a second rewrite system or an axiom set")
    if r2 is not None:
        r1.signature.union(r2.signature)  # raises on arity conflicts
        shared = sorted(_trs_symbols(r1) & _trs_symbols(r2))
        sharing = all(r1.is_constructor(f) and r2.is_constructor(f) for f in shared)
        checks = {}
        for label, t in (("R1", r1), ("R2", r2)):
            checks[f"{label} contracting"] = _yn(check_contracting(t).holds)
            checks[f"{label} strictly contracting"] = _yn(check_strictly_contracting(t))
            checks[f"{label} convergent"] = check_convergent(t).verdict
        union = r1.union(r2)
        checks["union strictly contracting"] = _yn(check_strictly_contracting(union))
        checks["union convergent"] = check_convergent(union).verdict
        conclusions = []
        both_conv = checks["R1 convergent"] == "yes" and checks["R2 convergent"] == "yes"
        if sharing and both_conv:
            if checks["R1 strictly contracting"] == "yes" and checks["R2 strictly contracting"] == "yes":
                conclusions.append("union is strictly contracting convergent")
            if checks["R1 contracting"] == "yes" and checks["R2 contracting"] == "yes":
                conclusions.append("deduction and static equivalence decidable in the union")
        return CombinationReport("trs+trs", shared, sharing, checks, conclusions)
    assert eqs is not None
    r1.signature.union(eqs.signature)
    shared = sorted(_trs_symbols(r1) & eqs.symbols)
    roots = eqs.root_symbols
    sharing = all(r1.is_constructor(f) and f not in roots for f in shared)
    checks = {
        "E permutative": _yn(check_permutative(eqs)),
        "R contracting": _yn(check_contracting(r1).holds),
        "R convergent": check_convergent(r1).verdict,
        "shared symbols avoid axiom roots": _yn(all(f not in roots for f in shared)),
        "shared symbols are constructors of R": _yn(all(r1.is_constructor(f) for f in shared)),
    }
    conclusions = []
    if all(v == "yes" for v in checks.values()):
        conclusions.append("deduction decidable in R + E")
    return CombinationReport("trs+axioms", shared, sharing, checks, conclusions)


def _yn(b: bool) -> str:
    return "yes" if b else "no"


def rename_symbols(trs: Trs, suffix: str, keep: set[str] = frozenset()) -> Trs:
    """A copy of ``trs`` with every symbol (except ``keep``) renamed apart."""
    mapping = {f: (f if f in keep else f + suffix) for f in trs.signature.arities}

    def ren(t: Term) -> Term:
        if isinstance(t, Var):
            return t
        return App(mapping[t.fn], [ren(a) for a in t.args])

    sig = Signature({mapping[f]: a for f, a in trs.signature.arities.items()}, {mapping[f] for f in trs.signature.private})
    return Trs(sig, tuple(Rule(ren(r.lhs), ren(r.rhs)) for r in trs.rules), trs.name + suffix)
