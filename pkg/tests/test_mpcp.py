from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gembkit.contracting import check_contracting
from gembkit.gemb import check_graph_embedded_trs
from gembkit.knowledge import enumerate_recipes
from gembkit.mpcp import MpcpInstance, generate_reduction, solution_recipe, tower
from gembkit.rewriting import Rule, Trs, critical_pairs, normalize, nf
from gembkit.terms import App, TermError, Var

from conftest import T

EXAMPLE = MpcpInstance.parse("ba:baa,ab:ba,aaa:aa", "aa", "a")


def test_tower_is_outside_in():
    assert tower("ba", T("c")) == T("b(a(c))")
    assert tower("", T("c")) == T("c")


def test_example_rule_table():
    trs, _, _ = generate_reduction(EXAMPLE)
    assert [str(r) for r in trs.rules] == [
        "f(b(a(X)),g1(Y),b(a(a(Z))),unlocked(W)) -> f(X,Y,Z,unlocked(W))",
        "f(a(b(X)),g2(Y),b(a(Z)),unlocked(W)) -> f(X,Y,Z,unlocked(W))",
        "f(a(a(a(X))),g3(Y),a(a(Z)),unlocked(W)) -> f(X,Y,Z,unlocked(W))",
        "f(X,Y,X,locked(unlocked(Z))) -> f(X,Y,X,unlocked(Z))",
    ]
    assert trs.signature.arities["f"] == 4
    assert {trs.signature.arities[g] for g in ("g1", "g2", "g3", "a", "b", "locked", "unlocked")} == {1}


def test_example_frame_and_target():
    _, frame, target = generate_reduction(EXAMPLE)
    assert frame.restricted == {"c", "e"}
    assert frame.sigma == {"x": T("a(a(c))"), "y": T("a(c)"), "z": T("locked(unlocked(e))")}
    assert target == T("f(c,d,c,unlocked(e))")


def test_example_solution_replay():
    trs, frame, target = generate_reduction(EXAMPLE)
    assert EXAMPLE.solves([1, 3])
    recipe = solution_recipe(EXAMPLE, [1, 3])
    assert recipe == T("f(b(a(a(x))),g1(g3(d)),b(a(a(a(y)))),z)", ["x", "y", "z"])
    value, trace = normalize(frame.apply(recipe), trs)
    assert value == target
    # The unlock step fires first, then the blocks peel outermost first.
    assert [s.rule for s in trace.steps] == [3, 0, 2]
    assert all(s.position == () for s in trace.steps)


def test_shared_variable_block_rules_get_stuck():
    trs, frame, target = generate_reduction(EXAMPLE)
    X, Y, Z = Var("X"), Var("Y"), Var("Z")
    literal = []
    for i, (alpha, beta) in enumerate(EXAMPLE.pairs, 1):
        lhs = App("f", (tower(alpha, X), App(f"g{i}", (Y,)), tower(beta, Z), App("unlocked", (Z,))))
        literal.append(Rule(lhs, App("f", (X, Y, Z, App("unlocked", (Z,))))))
    shared = Trs(trs.signature, tuple(literal) + trs.rules[-1:], "literal")
    value = nf(frame.apply(solution_recipe(EXAMPLE, [1, 3])), shared)
    assert value != target


def test_example_properties():
    trs, _, _ = generate_reduction(EXAMPLE)
    assert critical_pairs(trs) == []
    assert check_graph_embedded_trs(trs).holds
    assert not check_contracting(trs).holds


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(st.text("ab", min_size=1, max_size=3), st.text("ab", min_size=1, max_size=3)), min_size=1, max_size=3),
    st.text("ab", max_size=2),
    st.text("ab", max_size=2),
)
def test_generated_systems_are_orthogonal_and_graph_embedded(pairs, alpha0, beta0):
    trs, frame, target = generate_reduction(MpcpInstance(tuple(pairs), alpha0, beta0))
    assert critical_pairs(trs) == []
    assert check_graph_embedded_trs(trs).holds
    assert len(trs.rules) == len(pairs) + 1


def _solutions(inst, max_len):
    for n in range(1, max_len + 1):
        for seq in itertools.product(range(1, len(inst.pairs) + 1), repeat=n):
            if inst.solves(list(seq)):
                yield list(seq)


@pytest.mark.parametrize(
    "pairs,alpha0,beta0",
    [("ba:baa,ab:ba,aaa:aa", "aa", "a"), ("ab:a,b:bb", "b", "b"), ("a:a", "a", "a"), ("aab:a,b:abb", "b", "b")],
)
def test_known_solutions_replay(pairs, alpha0, beta0):
    inst = MpcpInstance.parse(pairs, alpha0, beta0)
    trs, frame, target = generate_reduction(inst)
    found = list(_solutions(inst, 4))
    assert found
    for seq in found:
        assert nf(frame.apply(solution_recipe(inst, seq)), trs) == target


def test_brute_force_confirms_small_solution():
    inst = MpcpInstance.parse("a:a", "a", "a")
    trs, frame, target = generate_reduction(inst)
    recipe = solution_recipe(inst, [1])
    assert recipe.size == 6
    table = enumerate_recipes(frame, trs, recipe.size)
    assert table.lookup(target) is not None
    assert nf(frame.apply(table.lookup(target)), trs) == target


def test_unsolvable_instance_has_no_recipe():
    inst = MpcpInstance.parse("a:b", "a", "b")
    assert not list(_solutions(inst, 4))
    trs, frame, target = generate_reduction(inst)
    assert enumerate_recipes(frame, trs, 6).lookup(target) is None


def test_non_solution_rejected():
    with pytest.raises(TermError):
        solution_recipe(EXAMPLE, [2])


@pytest.mark.parametrize(
    "pairs,alpha0,beta0",
    [((), "a", "a"), ((("", "a"),), "a", "a"), ((("ac", "a"),), "a", "a"), ((("a", "a"),), "c", "a")],
)
def test_invalid_instances(pairs, alpha0, beta0):
    with pytest.raises(TermError):
        MpcpInstance(pairs, alpha0, beta0)


def test_parse_rejects_missing_separator():
    with pytest.raises(TermError):
        MpcpInstance.parse("ab", "a", "a")
