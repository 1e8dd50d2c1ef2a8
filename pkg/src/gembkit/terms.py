"""First-order terms, signatures, positions, substitutions and contexts.

Terms are immutable and hash-consed enough for heavy use as dict keys: every
node caches its hash and size on construction.  Variables are a separate node
kind; constants (and names) are applications with no arguments.

Surface syntax: ``f(a, g(X))`` where identifiers starting with an upper-case
letter are variables and everything else is a symbol.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

Position = tuple[int, ...]
Substitution = dict[str, "Term"]

EPSILON: Position = ()


class TermError(ValueError):
    """Raised for malformed terms, bad positions or arity violations."""


class Term:
    __slots__ = ()

    is_var = False

    @property
    def size(self) -> int:
        raise NotImplementedError


class Var(Term):
    __slots__ = ("name", "_hash")

    is_var = True

    def __init__(self, name: str) -> None:
        self.name = name
        self._hash = hash(("V", name))

    @property
    def size(self) -> int:
        return 1

    @property
    def depth(self) -> int:
        return 0

    def __eq__(self, other: object) -> bool:
        return self is other or (isinstance(other, Var) and other.name == self.name)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Var({self.name!r})"

    def __str__(self) -> str:
        return self.name

    def __lt__(self, other: Term) -> bool:
        return sort_key(self) < sort_key(other)


class App(Term):
    __slots__ = ("fn", "args", "_hash", "_size", "_depth")

    def __init__(self, fn: str, args: Sequence[Term] = ()) -> None:
        self.fn = fn
        self.args = tuple(args)
        self._hash = hash((fn, self.args))
        self._size = 1 + sum(a.size for a in self.args)
        self._depth = 1 + max(a.depth for a in self.args) if self.args else 0

    @property
    def size(self) -> int:
        return self._size

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def arity(self) -> int:
        return len(self.args)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, App)
            and self._hash == other._hash
            and self.fn == other.fn
            and self.args == other.args
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"App({self.fn!r}, {list(self.args)!r})"

    def __str__(self) -> str:
        if not self.args:
            return self.fn
        return f"{self.fn}({','.join(str(a) for a in self.args)})"

    def __lt__(self, other: Term) -> bool:
        return sort_key(self) < sort_key(other)


def const(name: str) -> App:
    return App(name, ())


def sort_key(t: Term) -> tuple:
    """Total order on terms: size first, then a lexicographic structural key."""
    return (t.size, _lex(t))


def _lex(t: Term) -> tuple:
    if isinstance(t, Var):
        return (0, t.name)
    return (1, t.fn, len(t.args), tuple(_lex(a) for a in t.args))


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Signature:
    """Function symbols with fixed arities; ``private`` marks non-public ones."""

    arities: Mapping[str, int] = field(default_factory=dict)
    private: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "arities", dict(self.arities))
        object.__setattr__(self, "private", frozenset(self.private))
        for name, ar in self.arities.items():
            if ar < 0:
                raise TermError(f"negative arity for {name}")
            if name[:1].isupper():
                raise TermError(f"symbol {name!r} looks like a variable")
        unknown = self.private - set(self.arities)
        if unknown:
            raise TermError(f"private symbols not declared: {sorted(unknown)}")

    def __hash__(self) -> int:
        return hash((tuple(sorted(self.arities.items())), self.private))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Signature)
            and dict(self.arities) == dict(other.arities)
            and self.private == other.private
        )

    def __contains__(self, name: str) -> bool:
        return name in self.arities

    def arity(self, name: str) -> int:
        try:
            return self.arities[name]
        except KeyError:
            raise TermError(f"undeclared symbol {name!r}") from None

    def is_public(self, name: str) -> bool:
        return name not in self.private

    @property
    def constants(self) -> frozenset[str]:
        return frozenset(f for f, a in self.arities.items() if a == 0)

    @property
    def max_arity(self) -> int:
        return max(self.arities.values(), default=0)

    def well_formed(self, t: Term) -> bool:
        for s in iter_subterms(t):
            if isinstance(s, App) and self.arities.get(s.fn) != len(s.args):
                return False
        return True

    def check(self, t: Term) -> Term:
        for s in iter_subterms(t):
            if isinstance(s, App):
                if s.fn not in self.arities:
                    raise TermError(f"undeclared symbol {s.fn!r} in {t}")
                if self.arities[s.fn] != len(s.args):
                    raise TermError(
                        f"{s.fn} expects {self.arities[s.fn]} arguments, got {len(s.args)} in {t}"
                    )
        return t

    def extend(self, arities: Mapping[str, int], private: Iterable[str] = ()) -> Signature:
        merged = dict(self.arities)
        for name, ar in arities.items():
            if merged.get(name, ar) != ar:
                raise TermError(f"arity conflict for {name}: {merged[name]} vs {ar}")
            merged[name] = ar
        return Signature(merged, self.private | frozenset(private))

    def union(self, other: Signature) -> Signature:
        return self.extend(other.arities, other.private)

    @classmethod
    def infer(cls, terms: Iterable[Term], private: Iterable[str] = ()) -> Signature:
        return cls(arity_map(terms), frozenset(private))


def arity_map(terms: Iterable[Term]) -> dict[str, int]:
    """Arity of every symbol occurring in ``terms``; raises on inconsistent use."""
    out: dict[str, int] = {}
    for t in terms:
        for s in iter_subterms(t):
            if isinstance(s, App):
                seen = out.setdefault(s.fn, len(s.args))
                if seen != len(s.args):
                    raise TermError(f"symbol {s.fn} used with arities {seen} and {len(s.args)}")
    return out


# ---------------------------------------------------------------------------
# traversal and positions


def iter_subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        if isinstance(s, App):
            stack.extend(reversed(s.args))


def subterms(t: Term) -> set[Term]:
    """All subterms of ``t`` including ``t`` itself."""
    return set(iter_subterms(t))


def strict_subterms(t: Term) -> set[Term]:
    out: set[Term] = set()
    if isinstance(t, App):
        for a in t.args:
            out |= subterms(a)
    return out


def positions(t: Term) -> list[Position]:
    """All positions of ``t`` in pre-order; child indices are 1-based."""
    out: list[Position] = []

    def walk(s: Term, p: Position) -> None:
        out.append(p)
        if isinstance(s, App):
            for i, a in enumerate(s.args, 1):
                walk(a, p + (i,))

    walk(t, EPSILON)
    return out


def subterm_at(t: Term, p: Position) -> Term:
    for i in p:
        if not isinstance(t, App) or not 1 <= i <= len(t.args):
            raise TermError(f"invalid position {p}")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, p: Position, u: Term) -> Term:
    if not p:
        return u
    if not isinstance(t, App) or not 1 <= p[0] <= len(t.args):
        raise TermError(f"invalid position {p}")
    i = p[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], p[1:], u)
    return App(t.fn, args)


def variables(t: Term) -> set[str]:
    return {s.name for s in iter_subterms(t) if isinstance(s, Var)}


def variables_in_order(t: Term) -> list[str]:
    seen: dict[str, None] = {}
    for s in iter_subterms(t):
        if isinstance(s, Var):
            seen.setdefault(s.name)
    return list(seen)


def constants(t: Term) -> set[str]:
    return {s.fn for s in iter_subterms(t) if isinstance(s, App) and not s.args}


def symbols(t: Term) -> set[str]:
    return {s.fn for s in iter_subterms(t) if isinstance(s, App)}


def symbol_counts(t: Term) -> Counter:
    """Occurrence counts of every function symbol and variable (keyed ``('f', name)`` / ``('v', name)``)."""
    c: Counter = Counter()
    for s in iter_subterms(t):
        c[("v", s.name) if isinstance(s, Var) else ("f", s.fn)] += 1
    return c


def is_ground(t: Term) -> bool:
    return not any(isinstance(s, Var) for s in iter_subterms(t))


def is_linear(t: Term) -> bool:
    names = [s.name for s in iter_subterms(t) if isinstance(s, Var)]
    return len(names) == len(set(names))


def occurs(name: str, t: Term) -> bool:
    return any(isinstance(s, Var) and s.name == name for s in iter_subterms(t))


def count_var(name: str, t: Term) -> int:
    return sum(1 for s in iter_subterms(t) if isinstance(s, Var) and s.name == name)


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class TermGraphMeasures:
    vp: int
    fp: int
    fs: frozenset[str]
    var_count: int
    size: int
    depth: int


def measures(t: Term, signature: Signature | None = None) -> TermGraphMeasures:
    """Counts of variable leaves, function nodes, symbol set, size and depth."""
    if signature is not None:
        signature.check(t)
    else:
        arity_map([t])  # rejects flex terms with inconsistent symbol arities
    vp = fp = 0
    fs: set[str] = set()
    names: set[str] = set()
    for s in iter_subterms(t):
        if isinstance(s, Var):
            vp += 1
            names.add(s.name)
        else:
            fp += 1
            fs.add(s.fn)
    return TermGraphMeasures(vp, fp, frozenset(fs), len(names), t.size, t.depth)


# ---------------------------------------------------------------------------
# substitution, matching, unification


def substitute(t: Term, sigma: Mapping[str, Term]) -> Term:
    if not sigma:
        return t
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if not t.args:
        return t
    new = [substitute(a, sigma) for a in t.args]
    if all(n is a for n, a in zip(new, t.args)):
        return t
    return App(t.fn, new)


def rename(t: Term, mapping: Mapping[str, str]) -> Term:
    return substitute(t, {k: Var(v) for k, v in mapping.items()})


def _match(pattern: Term, subject: Term, sigma: dict[str, Term]) -> bool:
    if isinstance(pattern, Var):
        bound = sigma.get(pattern.name)
        if bound is None:
            sigma[pattern.name] = subject
            return True
        return bound == subject
    if not isinstance(subject, App) or subject.fn != pattern.fn or len(subject.args) != len(pattern.args):
        return False
    return all(_match(p, s, sigma) for p, s in zip(pattern.args, subject.args))


def match_into(pattern: Term, subject: Term, sigma: Mapping[str, Term] | None = None) -> Substitution | None:
    """Extend ``sigma`` so that ``pattern`` instantiated equals ``subject``.

    Bindings of a variable to itself are kept, which is what callers threading
    partial matchers need.
    """
    out = dict(sigma) if sigma else {}
    return out if _match(pattern, subject, out) else None


def match(pattern: Term, subject: Term) -> Substitution | None:
    sigma = match_into(pattern, subject)
    if sigma is None:
        return None
    return {k: v for k, v in sigma.items() if not (isinstance(v, Var) and v.name == k)}


def _walk(t: Term, sigma: dict[str, Term]) -> Term:
    while isinstance(t, Var) and t.name in sigma:
        t = sigma[t.name]
    return t


def _occurs_deep(name: str, t: Term, sigma: dict[str, Term]) -> bool:
    t = _walk(t, sigma)
    if isinstance(t, Var):
        return t.name == name
    return any(_occurs_deep(name, a, sigma) for a in t.args)


def unify(s: Term, t: Term) -> Substitution | None:
    """Most general unifier with occurs check, returned in idempotent form."""
    sigma: dict[str, Term] = {}
    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        a, b = _walk(a, sigma), _walk(b, sigma)
        if a == b:
            continue
        if isinstance(a, Var):
            if _occurs_deep(a.name, b, sigma):
                return None
            sigma[a.name] = b
        elif isinstance(b, Var):
            if _occurs_deep(b.name, a, sigma):
                return None
            sigma[b.name] = a
        else:
            if a.fn != b.fn or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))

    def resolve(u: Term) -> Term:
        u = _walk(u, sigma)
        if isinstance(u, Var) or not u.args:
            return u
        return App(u.fn, [resolve(x) for x in u.args])

    return {k: resolve(Var(k)) for k in sigma}


# ---------------------------------------------------------------------------
# contexts

HOLE = "□"


def hole(i: int) -> Var:
    return Var(f"{HOLE}{i}")


def is_hole(t: Term) -> bool:
    return isinstance(t, Var) and t.name.startswith(HOLE)


@dataclass(frozen=True)
class Context:
    """A linear term whose only variables are holes, filled left to right."""

    term: Term

    def __post_init__(self) -> None:
        names = [s.name for s in iter_subterms(self.term) if isinstance(s, Var)]
        if any(not n.startswith(HOLE) for n in names):
            raise TermError("contexts may only contain hole variables")
        if len(names) != len(set(names)):
            raise TermError("a hole occurs more than once")

    @property
    def holes(self) -> int:
        return sum(1 for s in iter_subterms(self.term) if isinstance(s, Var))

    @property
    def size(self) -> int:
        return self.term.size

    def __str__(self) -> str:
        return str(self.term)

    @classmethod
    def from_term(cls, t: Term) -> Context:
        """Build a context by replacing variables of a linear term with holes in order."""
        order = [s.name for s in iter_subterms(t) if isinstance(s, Var)]
        if len(order) != len(set(order)):
            raise TermError("context source term must be linear")
        return cls(substitute(t, {n: hole(i) for i, n in enumerate(order, 1)}))


def apply_context(c: Context, args: Sequence[Term]) -> Term:
    """``C[S1..Sm]``: replace the i-th hole (left-to-right) by ``args[i-1]``."""
    order = [s.name for s in iter_subterms(c.term) if isinstance(s, Var)]
    if len(order) != len(args):
        raise TermError(f"context has {len(order)} holes, got {len(args)} arguments")
    return substitute(c.term, dict(zip(order, args)))


# ---------------------------------------------------------------------------
# homeomorphic embedding


def hom_embedded(s: Term, t: Term) -> bool:
    """``s`` homeomorphically embeds ``t`` (``t`` is obtained from ``s`` by projections)."""
    memo: dict[tuple[Term, Term], bool] = {}

    def emb(a: Term, b: Term) -> bool:
        key = (a, b)
        if key in memo:
            return memo[key]
        if isinstance(a, Var):
            res = a == b
        else:
            res = (
                isinstance(b, App)
                and a.fn == b.fn
                and len(a.args) == len(b.args)
                and all(emb(x, y) for x, y in zip(a.args, b.args))
            ) or any(emb(x, b) for x in a.args)
        memo[key] = res
        return res

    return emb(s, t)


def projection_reducts(t: Term) -> Iterator[Term]:
    """One-step reducts of ``t`` under the projection system f(x1..xn) -> xi."""
    if isinstance(t, App):
        yield from t.args
        for i, a in enumerate(t.args):
            for r in projection_reducts(a):
                args = list(t.args)
                args[i] = r
                yield App(t.fn, args)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:([A-Za-z0-9_][A-Za-z0-9_']*)|(\S))")


class ParseError(TermError):
    def __init__(self, message: str, text: str = "", offset: int | None = None) -> None:
        where = f" at column {offset + 1}" if offset is not None else ""
        super().__init__(f"{message}{where}: {text!r}" if text else message)
        self.offset = offset


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1):
            out.append(("id", m.group(1), m.start(1)))
        elif m.group(2):
            out.append(("op", m.group(2), m.start(2)))
        pos = m.end()
    return out


def parse_term(text: str, frame_vars: Iterable[str] = ()) -> Term:
    """Parse surface syntax; ``frame_vars`` lists lower-case names read as variables."""
    fv = set(frame_vars)
    toks = _tokens(text)
    i = 0

    def peek() -> tuple[str, str, int] | None:
        return toks[i] if i < len(toks) else None

    def expect(op: str) -> None:
        nonlocal i
        tok = peek()
        if tok is None or tok[1] != op:
            raise ParseError(f"expected {op!r}", text, tok[2] if tok else len(text))
        i += 1

    def term() -> Term:
        nonlocal i
        tok = peek()
        if tok is None or tok[0] != "id":
            raise ParseError("expected identifier", text, tok[2] if tok else len(text))
        i += 1
        name = tok[1]
        nxt = peek()
        if nxt is not None and nxt[1] == "(":
            if name[0].isupper() or name in fv:
                raise ParseError(f"variable {name} cannot take arguments", text, tok[2])
            i += 1
            args = [term()]
            while peek() is not None and peek()[1] == ",":
                i += 1
                args.append(term())
            expect(")")
            return App(name, args)
        if name[0].isupper() or name in fv:
            return Var(name)
        return App(name, ())

    result = term()
    if i != len(toks):
        raise ParseError("trailing input", text, toks[i][2])
    return result


def parse_position(text: str) -> Position:
    text = text.strip()
    if text in ("", "e", "eps", "ε"):
        return EPSILON
    return tuple(int(x) for x in text.split("."))


def format_position(p: Position) -> str:
    return ".".join(str(i) for i in p) if p else "ε"
