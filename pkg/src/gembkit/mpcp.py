"""Deduction instances encoding the modified Post correspondence problem."""

from __future__ import annotations

from dataclasses import dataclass

from .knowledge import Frame
from .rewriting import Rule, Trs
from .terms import App, Signature, Term, TermError, Var, const

ALPHABET = frozenset("ab")


@dataclass(frozen=True)
class MpcpInstance:
    pairs: tuple[tuple[str, str], ...]
    alpha0: str
    beta0: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        if not self.pairs:
            raise TermError("an MPCP instance needs at least one pair")
        for a, b in self.pairs:
            if not a or not b:
                raise TermError("MPCP pair strings must be nonempty")
        for s in [self.alpha0, self.beta0] + [x for p in self.pairs for x in p]:
            if not set(s) <= ALPHABET:
                raise TermError(f"string {s!r} is not over the alphabet {{a,b}}")

    @classmethod
    def parse(cls, pairs: str, alpha0: str, beta0: str) -> MpcpInstance:
        """Parse ``'ba:baa,ab:ba'`` style pair lists."""
        out = []
        for item in pairs.split(","):
            left, sep, right = item.strip().partition(":")
            if not sep:
                raise TermError(f"pair {item!r} is not of the form alpha:beta")
            out.append((left.strip(), right.strip()))
        return cls(tuple(out), alpha0.strip(), beta0.strip())

    def solves(self, indices: list[int]) -> bool:
        """Whether the 1-based index sequence is a solution."""
        top = "".join(self.pairs[i - 1][0] for i in indices)
        bottom = "".join(self.pairs[i - 1][1] for i in indices)
        return bool(indices) and top == bottom and top.endswith(self.alpha0) and top.endswith(self.beta0)


def tower(word: str, inner: Term) -> Term:
    """Compile a string outside-in: ``"ba"`` over t becomes ``b(a(t))``."""
    for ch in reversed(word):
        inner = App(ch, (inner,))
    return inner


def generate_reduction(inst: MpcpInstance) -> tuple[Trs, Frame, Term]:
    n = len(inst.pairs)
    arities = {"a": 1, "b": 1, "locked": 1, "unlocked": 1, "f": 4, "c": 0, "d": 0, "e": 0}
    arities.update({f"g{i}": 1 for i in range(1, n + 1)})
    X, Y, Z, W = Var("X"), Var("Y"), Var("Z"), Var("W")
    rules = [
        Rule(
            App("f", (tower(alpha, X), App(f"g{i}", (Y,)), tower(beta, Z), App("unlocked", (W,)))),
            App("f", (X, Y, Z, App("unlocked", (W,)))),
        )
        for i, (alpha, beta) in enumerate(inst.pairs, 1)
    ]
    rules.append(
        Rule(
            App("f", (X, Y, X, App("locked", (App("unlocked", (Z,)),)))),
            App("f", (X, Y, X, App("unlocked", (Z,)))),
        )
    )
    trs = Trs(Signature(arities), tuple(rules), "mpcp")
    c, e = const("c"), const("e")
    frame = Frame.of(
        {"c", "e"},
        {
            "x": tower(inst.alpha0, c),
            "y": tower(inst.beta0, c),
            "z": App("locked", (App("unlocked", (e,)),)),
        },
        name="mpcp",
    )
    target = App("f", (c, const("d"), c, App("unlocked", (e,))))
    return trs, frame, target


def solution_recipe(inst: MpcpInstance, indices: list[int]) -> Term:
    """The recipe built from a solution, with the frame variables x, y, z."""
    if not inst.solves(indices):
        raise TermError(f"{indices} does not solve the instance")
    top = "".join(inst.pairs[i - 1][0] for i in indices)
    bottom = "".join(inst.pairs[i - 1][1] for i in indices)
    gs: Term = const("d")
    for i in reversed(indices):
        gs = App(f"g{i}", (gs,))
    return App(
        "f",
        (
            tower(top[: len(top) - len(inst.alpha0)], Var("x")),
            gs,
            tower(bottom[: len(bottom) - len(inst.beta0)], Var("y")),
            Var("z"),
        ),
    )
