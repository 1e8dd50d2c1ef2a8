from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gembkit.terms import (
    App,
    Context,
    ParseError,
    Signature,
    TermError,
    Var,
    apply_context,
    hole,
    hom_embedded,
    match,
    measures,
    parse_position,
    parse_term,
    positions,
    projection_reducts,
    replace_at,
    substitute,
    subterm_at,
    subterms,
    unify,
)

from conftest import T


def test_measures_mal_lhs():
    m = measures(T("mal(enc(X,Y),Z)"))
    assert (m.vp, m.fp, m.fs, m.size, m.depth) == (3, 2, frozenset({"mal", "enc"}), 5, 2)


def test_measures_ground_term_counts_constants_as_function_nodes():
    m = measures(T("f(h(a,b),h(c,d))"))
    assert (m.vp, m.fp, m.size, m.depth) == (0, 7, 7, 2)


def test_measures_variable():
    m = measures(T("X"))
    assert (m.vp, m.fp, m.size, m.depth, m.var_count) == (1, 0, 1, 0, 1)


def test_measures_rejects_flex_terms():
    sig = Signature({"f": 2, "a": 0})
    with pytest.raises(TermError):
        measures(App("f", (T("a"),)), sig)


def test_subterms_examples():
    assert subterms(T("dec(enc(a,n),n)")) == {T("dec(enc(a,n),n)"), T("enc(a,n)"), T("a"), T("n")}
    assert subterms(T("c")) == {T("c")}
    assert len(subterms(T("sign(blind(X,Y),Z)"))) == 5


def test_match_examples():
    assert match(T("dec(enc(X,Y),Y)"), T("dec(enc(a,n),n)")) == {"X": T("a"), "Y": T("n")}
    assert match(T("f(X,X)"), T("f(a,b)")) is None
    assert match(T("X"), T("f(a)")) == {"X": T("f(a)")}


def test_unify_examples():
    assert unify(T("f(X,b)"), T("f(a,Y)")) == {"X": T("a"), "Y": T("b")}
    assert unify(T("X"), T("f(X)")) is None
    mgu = unify(T("enc(X,Y)"), T("enc(Z,Z)"))
    assert mgu is not None
    assert substitute(T("enc(X,Y)"), mgu) == substitute(T("enc(Z,Z)"), mgu)
    image = substitute(T("enc(X,Y)"), mgu)
    assert isinstance(image.args[0], Var) and image.args[0] == image.args[1]


def test_apply_context_examples():
    assert apply_context(Context(App("dec", (hole(1), hole(2)))), [T("enc(a,n)"), T("n")]) == T("dec(enc(a,n),n)")
    assert apply_context(Context(hole(1)), [T("g(a)")]) == T("g(a)")
    assert apply_context(Context.from_term(T("f(X,g(Y))")), [T("a"), T("b")]) == T("f(a,g(b))")
    with pytest.raises(TermError):
        apply_context(Context(App("dec", (hole(1), hole(2)))), [T("a")])


def test_context_rejects_repeated_holes():
    with pytest.raises(TermError):
        Context(App("f", (hole(1), hole(1))))


def test_hom_embedded_examples():
    assert hom_embedded(T("checksign(sign(X,Y),pk(Y))"), T("X"))
    assert not hom_embedded(T("mal(enc(X,Y),Z)"), T("enc(Z,Y)"))
    t = T("unblind(sign(blind(X,Y),Z),Y)")
    assert hom_embedded(t, t)


def test_positions_are_one_based():
    t = T("f(a,g(b))")
    assert positions(t) == [(), (1,), (2,), (2, 1)]
    assert subterm_at(t, parse_position("2.1")) == T("b")
    assert replace_at(t, (2, 1), T("c")) == T("f(a,g(c))")


def test_parse_errors_report_column():
    with pytest.raises(ParseError, match="column"):
        parse_term("f(a,")
    with pytest.raises(ParseError):
        parse_term("X(a)")


def test_parse_frame_variables():
    assert parse_term("dec(v,w)", ["v", "w"]) == App("dec", (Var("v"), Var("w")))


# ---------------------------------------------------------------------------
# properties

SYMS = {"f": 2, "g": 1, "a": 0}


def terms(max_leaves: int = 6, vars_=("X", "Y", "Z")):
    leaves = st.sampled_from([Var(v) for v in vars_] + [App("a", ())])
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            st.builds(lambda x: App("g", (x,)), kids),
            st.builds(lambda x, y: App("f", (x, y)), kids, kids),
        ),
        max_leaves=max_leaves,
    )


@settings(max_examples=300)
@given(terms())
def test_size_is_fp_plus_vp_and_depth_below_size(t):
    m = measures(t)
    assert m.size == m.fp + m.vp
    assert m.depth < m.size


@settings(max_examples=300)
@given(terms(), terms(), terms(), terms())
def test_match_recovers_instances(p, s1, s2, s3):
    sigma = {"X": s1, "Y": s2, "Z": s3}
    inst = substitute(p, sigma)
    found = match(p, inst)
    assert found is not None
    assert substitute(p, found) == inst


@settings(max_examples=300)
@given(terms(), terms())
def test_unify_is_symmetric_and_sound(s, t):
    a, b = unify(s, t), unify(t, s)
    assert (a is None) == (b is None)
    if a is not None:
        assert substitute(s, a) == substitute(t, a)


def _reachable_by_projection(s, t):
    seen, stack = {s}, [s]
    while stack:
        u = stack.pop()
        if u == t:
            return True
        for v in projection_reducts(u):
            if v not in seen and v.size >= t.size:
                seen.add(v)
                stack.append(v)
    return False


@settings(max_examples=400)
@given(terms(max_leaves=4), terms(max_leaves=3))
def test_hom_embedding_matches_projection_rewriting(s, t):
    assert hom_embedded(s, t) == _reachable_by_projection(s, t)


def _small_terms(max_size):
    out = {1: [Var("X"), App("a", ())]}
    for n in range(2, max_size + 1):
        level = [App("g", (x,)) for x in out[n - 1]]
        for k in range(1, n - 1):
            level += [App("f", (x, y)) for x in out[k] for y in out[n - 1 - k]]
        out[n] = level
    return [t for n in range(1, max_size + 1) for t in out[n]]


def test_hom_embedding_exhaustive_small():
    pool = _small_terms(5)
    for s in pool:
        for t in pool:
            if t.size <= s.size:
                assert hom_embedded(s, t) == _reachable_by_projection(s, t), (s, t)
