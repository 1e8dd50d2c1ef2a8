"""Rewrite rules, normalization, critical pairs and convergence checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

from .terms import (
    App,
    Position,
    Signature,
    Substitution,
    Term,
    TermError,
    Var,
    count_var,
    iter_subterms,
    match,
    positions,
    rename,
    replace_at,
    strict_subterms,
    subterm_at,
    substitute,
    unify,
    variables,
    variables_in_order,
)

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Var):
            raise TermError(f"left-hand side is a variable: {self}")
        extra = variables(self.rhs) - variables(self.lhs)
        if extra:
            raise TermError(f"rhs variables {sorted(extra)} not in lhs: {self}")

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"

    def renamed(self, suffix: str) -> Rule:
        mapping = {v: v + suffix for v in variables(self.lhs)}
        return Rule(rename(self.lhs, mapping), rename(self.rhs, mapping))


@dataclass(frozen=True)
class Trs:
    signature: Signature
    rules: tuple[Rule, ...]
    name: str = "R"

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        for rule in self.rules:
            self.signature.check(rule.lhs)
            self.signature.check(rule.rhs)

    def __hash__(self) -> int:
        return hash((self.signature, self.rules))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Trs) and self.signature == other.signature and self.rules == other.rules

    def __len__(self) -> int:
        return len(self.rules)

    @classmethod
    def from_rules(cls, rules: Sequence[Rule], signature: Signature | None = None, name: str = "R") -> Trs:
        if signature is None:
            signature = Signature.infer([t for r in rules for t in (r.lhs, r.rhs)])
        return cls(signature, tuple(rules), name)

    @cached_property
    def defined_symbols(self) -> frozenset[str]:
        return frozenset(r.lhs.fn for r in self.rules)

    def is_constructor(self, symbol: str) -> bool:
        """A symbol is a constructor when it never roots a left-hand side."""
        return symbol not in self.defined_symbols

    @cached_property
    def _by_root(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, r in enumerate(self.rules):
            out.setdefault(r.lhs.fn, []).append(i)
        return out

    def root_step(self, t: Term) -> tuple[int, Substitution, Term] | None:
        """First rule (in order) whose lhs matches ``t`` at the root."""
        if not isinstance(t, App):
            return None
        for i in self._by_root.get(t.fn, ()):
            rule = self.rules[i]
            sigma = match(rule.lhs, t)
            if sigma is not None:
                return i, sigma, substitute(rule.rhs, sigma)
        return None

    def root_reducts(self, t: Term) -> Iterator[tuple[int, Substitution, Term]]:
        if not isinstance(t, App):
            return
        for i in self._by_root.get(t.fn, ()):
            rule = self.rules[i]
            sigma = match(rule.lhs, t)
            if sigma is not None:
                yield i, sigma, substitute(rule.rhs, sigma)

    def union(self, other: Trs, name: str | None = None) -> Trs:
        rules = list(self.rules) + [r for r in other.rules if r not in self.rules]
        return Trs(self.signature.union(other.signature), tuple(rules), name or f"{self.name}+{other.name}")


@dataclass(frozen=True)
class Step:
    position: Position
    rule: int
    sigma: Substitution = field(compare=False)


@dataclass
class RewriteTrace:
    start: Term
    steps: list[Step] = field(default_factory=list)
    final: Term | None = None


class BudgetExceeded(RuntimeError):
    """Normalization ran out of steps; non-termination suspected."""

    def __init__(self, trace: RewriteTrace, budget: int) -> None:
        super().__init__(f"normalization budget of {budget} steps exhausted; non-termination suspected")
        self.trace = trace
        self.budget = budget


def replay(trace: RewriteTrace, trs: Trs) -> Term:
    """Re-run every step of ``trace`` and return the term reached."""
    t = trace.start
    for step in trace.steps:
        rule = trs.rules[step.rule]
        sub = subterm_at(t, step.position)
        sigma = match(rule.lhs, sub)
        if sigma is None:
            raise TermError(f"trace step {step} does not apply to {sub}")
        t = replace_at(t, step.position, substitute(rule.rhs, sigma))
    return t


def rewrite_once(t: Term, trs: Trs, at: Position | None = None) -> tuple[Term, Step] | None:
    """One rewrite step: at ``at`` if given, else at the leftmost-innermost redex."""
    if at is not None:
        hit = trs.root_step(subterm_at(t, at))
        if hit is None:
            return None
        i, sigma, reduct = hit
        return replace_at(t, at, reduct), Step(at, i, sigma)

    def walk(s: Term, p: Position) -> tuple[Term, Step] | None:
        if isinstance(s, App):
            for k, a in enumerate(s.args):
                found = walk(a, p + (k + 1,))
                if found is not None:
                    reduct, step = found
                    args = list(s.args)
                    args[k] = reduct
                    return App(s.fn, args), step
        hit = trs.root_step(s)
        if hit is None:
            return None
        i, sigma, reduct = hit
        return reduct, Step(p, i, sigma)

    return walk(t, ())


def normalize(t: Term, trs: Trs, budget: int = DEFAULT_BUDGET) -> tuple[Term, RewriteTrace]:
    """Leftmost-innermost normal form of ``t`` with the full trace."""
    trace = RewriteTrace(t)

    def norm(s: Term, p: Position) -> Term:
        while True:
            if isinstance(s, App) and s.args:
                new_args = [norm(a, p + (k + 1,)) for k, a in enumerate(s.args)]
                if any(n is not a for n, a in zip(new_args, s.args)):
                    s = App(s.fn, new_args)
            hit = trs.root_step(s)
            if hit is None:
                return s
            if len(trace.steps) >= budget:
                raise BudgetExceeded(trace, budget)
            i, sigma, s = hit
            trace.steps.append(Step(p, i, sigma))

    try:
        trace.final = norm(t, ())
    except RecursionError:
        raise BudgetExceeded(trace, budget) from None
    return trace.final, trace


def nf(t: Term, trs: Trs, budget: int = DEFAULT_BUDGET) -> Term:
    """Normal form only."""
    return normalize(t, trs, budget)[0]


def normalize_outermost(t: Term, trs: Trs, budget: int = DEFAULT_BUDGET) -> Term:
    """Leftmost-outermost normal form; used to cross-check strategy independence."""
    for _ in range(budget):
        found = _outermost_step(t, trs)
        if found is None:
            return t
        t = found
    raise BudgetExceeded(RewriteTrace(t), budget)


def _outermost_step(t: Term, trs: Trs) -> Term | None:
    hit = trs.root_step(t)
    if hit is not None:
        return hit[2]
    if isinstance(t, App):
        for k, a in enumerate(t.args):
            r = _outermost_step(a, trs)
            if r is not None:
                args = list(t.args)
                args[k] = r
                return App(t.fn, args)
    return None


def all_reducts(t: Term, trs: Trs) -> Iterator[Term]:
    """Every one-step reduct of ``t`` at every position and with every rule."""
    for p in positions(t):
        for _, _, reduct in trs.root_reducts(subterm_at(t, p)):
            yield replace_at(t, p, reduct)


# ---------------------------------------------------------------------------
# size and shape


def trs_size(trs: Trs) -> int:
    """c_R: the larger of the biggest lhs and the maximal arity plus one."""
    if not trs.rules:
        raise ValueError("c_R is undefined for an empty rule set")
    return max(max(r.lhs.size for r in trs.rules), trs.signature.max_arity + 1)


def rule_shape(rule: Rule) -> str:
    """``strict-subterm``, ``constant`` or ``neither``."""
    if rule.rhs in strict_subterms(rule.lhs):
        return "strict-subterm"
    if isinstance(rule.rhs, App) and not rule.rhs.args:
        return "constant"
    return "neither"


@dataclass(frozen=True)
class ShapeReport:
    shapes: tuple[str, ...]

    @property
    def holds(self) -> bool:
        return all(s != "neither" for s in self.shapes)

    @property
    def offending(self) -> list[int]:
        return [i for i, s in enumerate(self.shapes) if s == "neither"]


def check_subterm_convergent_shape(trs: Trs) -> ShapeReport:
    return ShapeReport(tuple(rule_shape(r) for r in trs.rules))


def is_subterm_rule(rule: Rule) -> bool:
    return rule_shape(rule) != "neither"


# ---------------------------------------------------------------------------
# critical pairs


@dataclass(frozen=True)
class CriticalPair:
    outer: int
    inner: int
    position: Position
    peak: Term
    left: Term  # reduct by the inner rule
    right: Term  # reduct by the outer rule at the root

    @property
    def trivial(self) -> bool:
        return self.left == self.right


def critical_pairs(trs: Trs) -> list[CriticalPair]:
    """Overlaps of every lhs into every non-variable position of every lhs.

    The inner rule is renamed apart; the overlap of a rule with itself at the
    root is excluded.
    """
    out: list[CriticalPair] = []
    for i, outer in enumerate(trs.rules):
        for j, inner0 in enumerate(trs.rules):
            inner = inner0.renamed("'")
            for p in positions(outer.lhs):
                sub = subterm_at(outer.lhs, p)
                if isinstance(sub, Var) or (i == j and not p):
                    continue
                if sub.fn != inner.lhs.fn:
                    continue
                mgu = unify(sub, inner.lhs)
                if mgu is None:
                    continue
                peak = substitute(outer.lhs, mgu)
                left = replace_at(peak, p, substitute(inner.rhs, mgu))
                right = substitute(outer.rhs, mgu)
                out.append(CriticalPair(i, j, p, peak, left, right))
    return out


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceReport:
    verdict: str  # "yes" | "no" | "unknown"
    termination: str  # "size-decrease" | "bounded-exploration" | "loop" | "unknown"
    critical_pairs: int = 0
    witness: str | None = None
    reason: str = ""


def size_decreasing(rule: Rule) -> bool:
    """|l sigma| > |r sigma| for every substitution sigma."""
    if rule.rhs.size >= rule.lhs.size:
        return False
    return all(count_var(x, rule.rhs) <= count_var(x, rule.lhs) for x in variables(rule.rhs))


def ground_terms(signature: Signature, max_size: int) -> list[Term]:
    """All ground terms over ``signature`` up to ``max_size`` nodes."""
    by_size: dict[int, list[Term]] = {1: [App(c, ()) for c in sorted(signature.constants)]}
    funcs = sorted((f, a) for f, a in signature.arities.items() if a > 0)
    for n in range(2, max_size + 1):
        level: list[Term] = []
        for f, a in funcs:
            for split in _compositions(n - 1, a):
                pools = [by_size.get(k, []) for k in split]
                for args in itertools.product(*pools):
                    level.append(App(f, args))
        by_size[n] = level
    return [t for n in sorted(by_size) for t in by_size[n]]


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _loops(start: Term, trs: Trs, limit: int) -> str | None:
    """Look for ``start ->+ C[start theta]`` within ``limit`` explored terms."""
    seen = {start}
    frontier = [start]
    while frontier and len(seen) < limit:
        nxt = []
        for t in frontier:
            for u in all_reducts(t, trs):
                for s in iter_subterms(u):
                    if match(start, s) is not None:
                        return f"{start} ->+ {u}"
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return None


def _explore_halts(start: Term, trs: Trs, limit: int) -> bool | None:
    """True if every rewrite sequence from ``start`` is finite (explored fully)."""
    graph: dict[Term, list[Term]] = {}
    stack = [start]
    while stack:
        t = stack.pop()
        if t in graph:
            continue
        succ = list(dict.fromkeys(all_reducts(t, trs)))
        graph[t] = succ
        if len(graph) > limit:
            return None
        stack.extend(u for u in succ if u not in graph)
    # acyclicity of the reachable graph
    state: dict[Term, int] = {}
    for root in graph:
        if state.get(root):
            continue
        stack2 = [(root, iter(graph[root]))]
        state[root] = 1
        while stack2:
            node, it = stack2[-1]
            child = next(it, None)
            if child is None:
                state[node] = 2
                stack2.pop()
            elif state.get(child) == 1:
                return False
            elif not state.get(child):
                state[child] = 1
                stack2.append((child, iter(graph[child])))
    return True


def check_termination(trs: Trs, instance_size: int = 3, limit: int = 20_000) -> tuple[str, str | None]:
    if all(size_decreasing(r) for r in trs.rules):
        return "size-decrease", None
    for rule in trs.rules:
        loop = _loops(rule.lhs, trs, 2_000)
        if loop is not None:
            return "loop", loop
    pool = ground_terms(trs.signature, instance_size)
    for rule in trs.rules:
        names = variables_in_order(rule.lhs)
        if len(pool) ** len(names) > 5_000:
            return "unknown", None
        for values in itertools.product(pool, repeat=len(names)):
            start = substitute(rule.lhs, dict(zip(names, values)))
            halts = _explore_halts(start, trs, limit)
            if halts is None:
                return "unknown", None
            if not halts:
                return "loop", f"cycle reachable from {start}"
    return "bounded-exploration", None


def check_convergent(trs: Trs, budget: int = DEFAULT_BUDGET) -> ConvergenceReport:
    termination, loop = check_termination(trs)
    cps = critical_pairs(trs)
    if termination == "loop":
        return ConvergenceReport("no", termination, len(cps), loop, "non-terminating")
    for cp in cps:
        try:
            a = nf(cp.left, trs, budget)
            b = nf(cp.right, trs, budget)
        except BudgetExceeded:
            return ConvergenceReport("unknown", termination, len(cps), str(cp.peak), "critical pair normalization ran out of budget")
        if a != b:
            # two distinct normal forms of one peak: confluence fails outright
            witness = f"{cp.peak} ->* {a} / {b}"
            return ConvergenceReport("no", termination, len(cps), witness, "non-joinable critical pair")
    if termination == "unknown":
        return ConvergenceReport("unknown", termination, len(cps), None, "termination not certified")
    return ConvergenceReport("yes", termination, len(cps))
