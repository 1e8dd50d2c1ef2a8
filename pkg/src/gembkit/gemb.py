"""Graph embedding: the four-rule contraction schema on terms and its relatives.

Intermediate terms of the schema may violate symbol arities ("flex" terms).
They are ordinary :class:`App` nodes with an unexpected argument count and
never escape the public functions below, which only return well-formed terms.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterator

import networkx as nx

from .rewriting import Trs
from .terms import (
    App,
    Position,
    Signature,
    Term,
    TermError,
    Var,
    arity_map,
    format_position,
    hom_embedded,
    iter_subterms,
    positions,
    replace_at,
    subterm_at,
)

MAX_ROOT_ARITY = 8


@dataclass(frozen=True)
class GembStep:
    """One schema application: ``tag`` 1 projects, 2 drops, 3/4 splice a child."""

    tag: int
    position: Position
    symbol: str
    index: int  # 1-based argument index acted on
    child: str | None = None  # spliced child's symbol for tags 3 and 4

    def __str__(self) -> str:
        extra = f", child {self.child}" if self.child else ""
        return f"rule {self.tag} at {format_position(self.position)} on {self.symbol} arg {self.index}{extra}"


@dataclass
class GembDerivation:
    start: Term
    steps: list[GembStep] = field(default_factory=list)
    terms: list[Term] = field(default_factory=list)  # terms after each step
    leaf_map: dict[str, str] = field(default_factory=dict)

    @property
    def end(self) -> Term:
        return self.terms[-1] if self.terms else self.start

    def describe(self) -> list[str]:
        return [f"{step} => {term}" for step, term in zip(self.steps, self.terms)]


# ---------------------------------------------------------------------------
# the schema


def local_steps(s: Term) -> Iterator[tuple[Term, int, int, str | None]]:
    """Reducts of ``s`` at its root as (term, tag, index, child symbol)."""
    if not isinstance(s, App):
        return
    args = s.args
    for i, a in enumerate(args):
        yield a, 1, i + 1, None
        yield App(s.fn, args[:i] + args[i + 1 :]), 2, i + 1, None
        if isinstance(a, App):
            spliced = args[:i] + a.args + args[i + 1 :]
            yield App(a.fn, spliced), 3, i + 1, a.fn
            yield App(s.fn, spliced), 4, i + 1, a.fn


def gemb_successors(t: Term) -> dict[Term, GembStep]:
    """All one-step schema reducts of the flex term ``t``, first step kept per reduct."""
    out: dict[Term, GembStep] = {}
    for p in positions(t):
        sub = subterm_at(t, p)
        if not isinstance(sub, App):
            continue
        for reduct, tag, index, child in local_steps(sub):
            new = replace_at(t, p, reduct)
            if new not in out:
                out[new] = GembStep(tag, p, sub.fn, index, child)
    return out


def apply_step(t: Term, step: GembStep) -> Term:
    sub = subterm_at(t, step.position)
    if not isinstance(sub, App) or sub.fn != step.symbol or not 1 <= step.index <= len(sub.args):
        raise TermError(f"step {step} does not apply to {t}")
    i = step.index - 1
    a = sub.args[i]
    if step.tag == 1:
        new = a
    elif step.tag == 2:
        new = App(sub.fn, sub.args[:i] + sub.args[i + 1 :])
    else:
        if not isinstance(a, App) or a.fn != step.child:
            raise TermError(f"step {step} expects child {step.child}")
        spliced = sub.args[:i] + a.args + sub.args[i + 1 :]
        new = App(a.fn if step.tag == 3 else sub.fn, spliced)
    return replace_at(t, step.position, new)


def replay_derivation(d: GembDerivation) -> Term:
    t = d.start
    for step in d.steps:
        t = apply_step(t, step)
    return t


# ---------------------------------------------------------------------------
# permutative equalities


def _is_leaf(t: Term) -> bool:
    return isinstance(t, Var) or not t.args


def _leaf_key(t: Term) -> tuple[str, str]:
    return ("v", t.name) if isinstance(t, Var) else ("c", t.fn)


def subterm_perm_eq(t: Term, u: Term) -> bool:
    """t ≈_s u: equal leaves, or same root with permuted direct arguments."""
    if _is_leaf(t) or _is_leaf(u):
        return t == u
    return t.fn == u.fn and len(t.args) == len(u.args) and Counter(t.args) == Counter(u.args)


def _extend(t: Term, u: Term, pi: dict, cross_kind: bool) -> dict | None:
    """Extend the leaf map ``pi`` so that t·pi = u structurally; None on failure."""
    stack = [(t, u)]
    pi = dict(pi)
    while stack:
        a, b = stack.pop()
        if _is_leaf(a):
            if not _is_leaf(b):
                return None
            ka, kb = _leaf_key(a), _leaf_key(b)
            if not cross_kind and ka[0] != kb[0]:
                return None
            seen = pi.get(ka)
            if seen is None:
                pi[ka] = kb
            elif seen != kb:
                return None
        else:
            if _is_leaf(b) or a.fn != b.fn or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
    return pi


def _is_permutation(pi: dict) -> bool:
    values = set(pi.values())
    return len(values) == len(pi) and values == set(pi)


def _render_map(pi: dict) -> dict[str, str]:
    return {k[1]: v[1] for k, v in sorted(pi.items())}


def leaf_perm_eq(t: Term, u: Term, cross_kind: bool = False) -> dict[str, str] | None:
    """t ≈_l u: a permutation of Var(t) ∪ Cst(t) mapping t to u, or None."""
    pi = _extend(t, u, {}, cross_kind)
    if pi is None or not _is_permutation(pi):
        return None
    return _render_map(pi)


def perm_eq_witness(t: Term, u: Term, cross_kind: bool = False) -> tuple[tuple[int, ...], dict[str, str]] | None:
    """Root argument order and leaf map showing t ≈ u, or None.

    The order lists, for each argument of ``u``, the 1-based index of the
    argument of ``t`` placed there.
    """
    if _is_leaf(t):
        pi = leaf_perm_eq(t, u, cross_kind)
        return ((), pi) if pi is not None else None
    if _is_leaf(u) or t.fn != u.fn or len(t.args) != len(u.args):
        return None
    n = len(t.args)
    if n > MAX_ROOT_ARITY:
        raise TermError(f"root arity {n} exceeds the permutation limit {MAX_ROOT_ARITY}")
    used = [False] * n
    order: list[int] = []

    def search(j: int, pi: dict) -> dict | None:
        if j == n:
            return pi if _is_permutation(pi) else None
        tried: set[Term] = set()
        for k in range(n):
            if used[k] or t.args[k] in tried:
                continue
            tried.add(t.args[k])
            ext = _extend(t.args[k], u.args[j], pi, cross_kind)
            if ext is None:
                continue
            used[k] = True
            order.append(k + 1)
            found = search(j + 1, ext)
            if found is not None:
                return found
            used[k] = False
            order.pop()
        return None

    pi = search(0, {})
    return (tuple(order), _render_map(pi)) if pi is not None else None


def perm_eq(t: Term, u: Term, cross_kind: bool = False) -> bool:
    """t ≈ u: a root argument permutation followed by a leaf permutation."""
    return perm_eq_witness(t, u, cross_kind) is not None


def perm_variants(t: Term, cross_kind: bool = False) -> set[Term]:
    """Every u with t ≈ u."""
    leaves = sorted({_leaf_key(s) for s in iter_subterms(t) if _is_leaf(s)})
    roots: set[Term]
    if _is_leaf(t):
        roots = {t}
    else:
        if len(t.args) > MAX_ROOT_ARITY:
            raise TermError(f"root arity {len(t.args)} exceeds the permutation limit {MAX_ROOT_ARITY}")
        roots = {App(t.fn, p) for p in set(itertools.permutations(t.args))}
    groups = [leaves] if cross_kind else [[k for k in leaves if k[0] == kind] for kind in ("v", "c")]
    maps: list[dict] = [{}]
    for group in groups:
        maps = [{**m, **dict(zip(group, perm))} for m in maps for perm in itertools.permutations(group)]
    out: set[Term] = set()
    for r in roots:
        for m in maps:
            out.add(_apply_leaf_map(r, m))
    return out


def _apply_leaf_map(t: Term, m: dict) -> Term:
    if _is_leaf(t):
        kind, name = m.get(_leaf_key(t), _leaf_key(t))
        return Var(name) if kind == "v" else App(name, ())
    return App(t.fn, [_apply_leaf_map(a, m) for a in t.args])


# ---------------------------------------------------------------------------
# the embedding relation


def _internal_counts(t: Term, arities: dict[str, int]) -> Counter:
    return Counter(s.fn for s in iter_subterms(t) if isinstance(s, App) and arities.get(s.fn, 1) > 0)


def _leaf_sets(t: Term, arities: dict[str, int]) -> tuple[frozenset, frozenset]:
    vs = frozenset(s.name for s in iter_subterms(t) if isinstance(s, Var))
    cs = frozenset(s.fn for s in iter_subterms(t) if isinstance(s, App) and not s.args and arities.get(s.fn) == 0)
    return vs, cs


def _well_formed(t: Term, arities: dict[str, int]) -> bool:
    return all(isinstance(s, Var) or arities.get(s.fn) == len(s.args) for s in iter_subterms(t))


def graph_embedded_rel(
    t: Term,
    u: Term,
    signature: Signature | None = None,
    cross_kind: bool = False,
    max_states: int = 500_000,
) -> GembDerivation | None:
    """Witness for t ≽_gemb u: a schema derivation from ``t`` to some s ≈ u."""
    arities = dict(signature.arities) if signature is not None else arity_map([t, u])
    if not (_well_formed(t, arities) and _well_formed(u, arities)):
        raise TermError("graph embedding is defined on well-formed terms")
    target_size = u.size
    need = _internal_counts(u, arities)
    u_vars, u_consts = _leaf_sets(u, arities)

    def viable(s: Term) -> bool:
        if s.size < target_size:
            return False
        have = _internal_counts(s, arities)
        if any(have[f] < n for f, n in need.items()):
            return False
        if cross_kind:
            return True
        vs, cs = _leaf_sets(s, arities)
        return u_vars <= vs and u_consts <= cs

    parent: dict[Term, tuple[Term, GembStep] | None] = {t: None}
    queue = deque([t]) if viable(t) else deque()
    while queue:
        s = queue.popleft()
        if s.size == target_size:
            if _well_formed(s, arities):
                w = perm_eq_witness(s, u, cross_kind)
                if w is not None:
                    return _rebuild(t, s, parent, w[1])
            continue
        for nxt, step in gemb_successors(s).items():
            if nxt in parent or not viable(nxt):
                continue
            parent[nxt] = (s, step)
            if len(parent) > max_states:
                raise TermError(f"graph-embedding search exceeded {max_states} states")
            queue.append(nxt)
    return None


def _rebuild(start: Term, end: Term, parent: dict, leaf_map: dict[str, str]) -> GembDerivation:
    steps: list[GembStep] = []
    terms: list[Term] = []
    cur = end
    while parent[cur] is not None:
        prev, step = parent[cur]
        steps.append(step)
        terms.append(cur)
        cur = prev
    return GembDerivation(start, steps[::-1], terms[::-1], leaf_map)


def gemb_reachable(t: Term, limit: int = 50_000) -> set[Term]:
    """Every flex term reachable from ``t`` by the schema (including ``t``)."""
    seen = {t}
    frontier = [t]
    while frontier:
        nxt = []
        for s in frontier:
            for r in gemb_successors(s):
                if r not in seen:
                    seen.add(r)
                    if len(seen) > limit:
                        raise GstOverflow(limit)
                    nxt.append(r)
        frontier = nxt
    return seen


class GstOverflow(TermError):
    def __init__(self, cap: int) -> None:
        super().__init__(f"graph-embedded subterm set exceeded the cap of {cap} terms")
        self.cap = cap


def gst(t: Term, signature: Signature, cap: int = 50_000, cross_kind: bool = False) -> set[Term]:
    """Graph-embedded subterms: well-formed permutative variants of schema reducts of ``t``.

    Schema reducts already include every subterm (repeated projection), so
    the recursion over subterms is subsumed.
    """
    arities = dict(signature.arities)
    out: set[Term] = set()
    for s in gemb_reachable(t, cap * 4):
        if _well_formed(s, arities):
            out |= perm_variants(s, cross_kind)
            if len(out) > cap:
                raise GstOverflow(cap)
    return out


# ---------------------------------------------------------------------------
# TRS check


@dataclass
class RuleEmbedding:
    index: int
    verdict: str  # "constant" | "embedded" | "not-embedded"
    derivation: GembDerivation | None = None


@dataclass
class GembReport:
    rules: list[RuleEmbedding]

    @property
    def holds(self) -> bool:
        return all(r.verdict != "not-embedded" for r in self.rules)


def check_graph_embedded_trs(trs: Trs, cross_kind: bool = False) -> GembReport:
    out = []
    for i, rule in enumerate(trs.rules):
        rhs = rule.rhs
        if isinstance(rhs, App) and not rhs.args:
            out.append(RuleEmbedding(i, "constant"))
            continue
        d = graph_embedded_rel(rule.lhs, rhs, trs.signature, cross_kind)
        out.append(RuleEmbedding(i, "embedded" if d is not None else "not-embedded", d))
    return GembReport(out)


# ---------------------------------------------------------------------------
# graph-minor oracle on unlabeled term trees


def term_tree(t: Term) -> nx.Graph:
    g = nx.Graph()
    for p in positions(t):
        g.add_node(p)
        if p:
            g.add_edge(p[:-1], p)
    return g


class NodeBudgetExceeded(TermError):
    pass


def graph_minor_oracle(t: Term, u: Term, node_budget: int = 10) -> bool:
    """True iff contracting some edges of t's tree yields a tree isomorphic to u's."""
    if t.size > node_budget or u.size > node_budget:
        raise NodeBudgetExceeded(f"term graphs exceed the oracle budget of {node_budget} nodes")
    n, m = t.size, u.size
    if m > n:
        return False
    big, small = term_tree(t), term_tree(u)
    small_degrees = sorted(d for _, d in small.degree())
    edges = list(big.edges())
    for chosen in itertools.combinations(edges, n - m):
        q = _contract(big, chosen)
        if sorted(d for _, d in q.degree()) == small_degrees and nx.is_isomorphic(q, small):
            return True
    return False


def _contract(g: nx.Graph, chosen) -> nx.Graph:
    rep = {v: v for v in g.nodes}

    def find(v):
        while rep[v] != v:
            rep[v] = rep[rep[v]]
            v = rep[v]
        return v

    for a, b in chosen:
        rep[find(a)] = find(b)
    q = nx.Graph()
    q.add_nodes_from({find(v) for v in g.nodes})
    for a, b in g.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            q.add_edge(ra, rb)
    return q


def check_hom_embedded_trs(trs: Trs) -> list[int]:
    """Indices of rules whose rhs is not homeomorphically embedded in the lhs."""
    return [i for i, rule in enumerate(trs.rules) if not hom_embedded(rule.lhs, rule.rhs)]
