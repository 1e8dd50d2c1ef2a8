from __future__ import annotations

import functools
import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gembkit.gemb import (
    GembStep,
    NodeBudgetExceeded,
    apply_step,
    check_graph_embedded_trs,
    check_hom_embedded_trs,
    gemb_successors,
    graph_embedded_rel,
    graph_minor_oracle,
    gst,
    leaf_perm_eq,
    perm_eq,
    perm_eq_witness,
    perm_variants,
    replay_derivation,
    subterm_perm_eq,
    term_tree,
)
from gembkit.rewriting import Rule, Trs
from gembkit.terms import App, Signature, TermError, Var, measures, symbol_counts

from conftest import T


def test_successors_examples():
    succ = gemb_successors(T("mal(enc(X,Y),Z)"))
    flat = App("enc", (Var("X"), Var("Y"), Var("Z")))
    assert flat in succ and succ[flat].tag == 3 and succ[flat].position == ()
    succ = gemb_successors(T("sign(blind(X,Y),Z)"))
    flat = App("sign", (Var("X"), Var("Y"), Var("Z")))
    assert flat in succ and succ[flat].tag == 4
    assert set(gemb_successors(T("f(X)"))) == {T("X"), App("f", ())}


def test_every_step_removes_a_node():
    t = T("unblind(sign(blind(X,Y),Z),Y)")
    for s, step in gemb_successors(t).items():
        assert s.size < t.size
        assert apply_step(t, step) == s


def test_subterm_permutation_examples():
    assert subterm_perm_eq(T("enc(Y,Z)"), T("enc(Z,Y)"))
    assert subterm_perm_eq(T("f(g(a),b)"), T("f(b,g(a))"))
    assert not subterm_perm_eq(T("f(g(a,b))"), T("f(g(b,a))"))


def test_leaf_permutation_examples():
    assert leaf_perm_eq(T("plus(s(Y),X)"), T("plus(s(X),Y)")) == {"X": "Y", "Y": "X"}
    assert leaf_perm_eq(T("f(X,X)"), T("f(X,Y)")) is None
    assert leaf_perm_eq(T("f(a,b)"), T("f(b,a)")) == {"a": "b", "b": "a"}


def test_leaf_permutation_kind_flag():
    assert leaf_perm_eq(T("f(X,a)"), T("f(a,X)")) is None
    assert leaf_perm_eq(T("f(X,a)"), T("f(a,X)"), cross_kind=True) == {"X": "a", "a": "X"}


def test_perm_eq_examples():
    assert perm_eq(T("plus(X,s(Y))"), T("plus(s(X),Y)"))
    t = T("unblind(sign(blind(X,Y),Z),Y)")
    assert perm_eq(t, t)
    assert not perm_eq(T("f(X,X)"), T("f(X,Y)"))
    order, leaf_map = perm_eq_witness(T("plus(X,s(Y))"), T("plus(s(X),Y)"))
    assert order == (2, 1) and leaf_map == {"X": "Y", "Y": "X"}


def test_graph_embedded_examples():
    d = graph_embedded_rel(T("f(h(a,b),h(c,d))"), T("f(d,a)"))
    assert d is not None and perm_eq(replay_derivation(d), T("f(d,a)"))
    d = graph_embedded_rel(T("unblind(sign(blind(X,Y),Z),Y)"), T("sign(X,Z)"))
    assert d is not None and replay_derivation(d) == T("sign(X,Z)")
    assert len(d.steps) == 2  # breadth-first search returns a shortest witness
    t = T("unblind(sign(blind(X,Y),Z),Y)")
    for step in (GembStep(1, (), "unblind", 1), GembStep(4, (), "sign", 1, "blind"), GembStep(2, (), "sign", 2)):
        t = apply_step(t, step)
    assert t == T("sign(X,Z)")
    assert graph_embedded_rel(T("X"), T("f(X)")) is None


def test_graph_embedded_rejects_ill_formed_input():
    sig = Signature({"f": 2, "a": 0})
    with pytest.raises(TermError):
        graph_embedded_rel(App("f", (T("a"),)), T("a"), sig)


def test_graph_embedded_trs_examples(theory):
    assert check_graph_embedded_trs(theory("mal")).holds
    assert check_graph_embedded_trs(theory("trapdoor")).holds
    bad = Trs.from_rules([Rule(T("f(X)"), T("g(X)"))])
    assert not check_graph_embedded_trs(bad).holds


def test_hom_embedded_trs(theory):
    assert check_hom_embedded_trs(theory("blind")) == []
    assert check_hom_embedded_trs(theory("mal")) == [1]


def test_gst_of_encryption():
    sig = Signature({"enc": 2, "dec": 2, "a": 0, "n": 0})
    assert gst(T("enc(a,n)"), sig) == {T("a"), T("n"), T("enc(a,n)"), T("enc(n,a)")}


def test_graph_minor_oracle_examples():
    # three-legged star reached by contracting the two pendant edges
    assert graph_minor_oracle(T("f(g(a),b,g(c))"), T("h(a,b,c)"))
    assert graph_minor_oracle(T("a"), T("b"))
    assert not graph_minor_oracle(T("g(a)"), T("g(g(a))"))
    with pytest.raises(NodeBudgetExceeded):
        graph_minor_oracle(T("f(f(f(a,a),a),f(a,f(a,a)))"), T("a"), node_budget=10)


def test_term_tree_is_label_free():
    assert nx.is_isomorphic(term_tree(T("f(a,b)")), term_tree(T("g(X,c)")))


# ---------------------------------------------------------------------------
# properties

SIG = Signature({"f": 2, "g": 1, "h": 3, "a": 0, "b": 0})


def terms(max_leaves=5):
    leaves = st.sampled_from([Var("X"), Var("Y"), App("a", ()), App("b", ())])
    return st.recursive(
        leaves,
        lambda k: st.one_of(
            st.builds(lambda x: App("g", (x,)), k),
            st.builds(lambda x, y: App("f", (x, y)), k, k),
            st.builds(lambda x, y, z: App("h", (x, y, z)), k, k, k),
        ),
        max_leaves=max_leaves,
    )


@functools.lru_cache(maxsize=None)
def _reducts(t):
    """Well-formed terms reachable from t by the schema, sampled deterministically."""
    seen, frontier = {t}, [t]
    while frontier:
        nxt = []
        for s in frontier:
            for r in gemb_successors(s):
                if r not in seen:
                    seen.add(r)
                    nxt.append(r)
        frontier = nxt
    return sorted((s for s in seen if SIG.well_formed(s)), key=str)


_UP_TO_8 = terms().filter(lambda x: x.size <= 8)
_SMALL = terms(max_leaves=3)


@st.composite
def minor_case(draw):
    """A term of at most 8 nodes with either a schema reduct or an arbitrary term."""
    t = draw(_UP_TO_8)
    if draw(st.booleans()):
        reducts = _reducts(t)
        return t, reducts[draw(st.integers(0, len(reducts) - 1))], True
    return t, draw(_SMALL), False


def check_gemb_in_minor(case) -> None:
    t, u, is_reduct = case
    embedded = graph_embedded_rel(t, u, SIG) is not None
    if is_reduct:
        assert embedded
    if embedded:
        assert graph_minor_oracle(t, u, node_budget=10)


@settings(max_examples=300, deadline=None)
@given(minor_case())
def test_gemb_is_contained_in_graph_minor(case):
    check_gemb_in_minor(case)


@settings(max_examples=300, deadline=None)
@given(terms())
def test_witnesses_replay(t):
    for u in _reducts(t)[:6]:
        d = graph_embedded_rel(t, u, SIG)
        assert d is not None
        end = replay_derivation(d)
        assert SIG.well_formed(end) and perm_eq(end, u)
        assert end.size <= t.size - len(d.steps)


@settings(max_examples=300, deadline=None)
@given(terms(max_leaves=4))
def test_gemb_reflexive(t):
    d = graph_embedded_rel(t, t, SIG)
    assert d is not None and d.steps == []


@settings(max_examples=150, deadline=None)
@given(terms(max_leaves=3), st.data())
def test_gemb_transitive(t, data):
    if t.size > 6:
        return
    u = data.draw(st.sampled_from(_reducts(t)))
    v = data.draw(st.sampled_from(_reducts(u)))
    assert graph_embedded_rel(t, u, SIG) is not None
    assert graph_embedded_rel(u, v, SIG) is not None
    assert graph_embedded_rel(t, v, SIG) is not None


@settings(max_examples=300, deadline=None)
@given(terms(max_leaves=4))
def test_perm_eq_preserves_measures(t):
    for u in sorted(perm_variants(t), key=str)[:20]:
        assert perm_eq(t, u)
        a, b = measures(t), measures(u)
        assert (a.size, a.depth, a.vp, a.fp) == (b.size, b.depth, b.vp, b.fp)
        internal = lambda s: {f: n for f, n in symbol_counts(s).items() if f in ("f", "g", "h")}
        assert internal(t) == internal(u)
