from __future__ import annotations

import pytest

from gembkit.contracting import (
    check_contracting,
    check_projection_closed_derivation,
    check_projection_closed_perm_eq,
    check_strictly_contracting,
    find_projecting_rule,
    linearize,
    missing_projections,
    validate_certificate,
    validate_projecting,
)
from gembkit.gemb import apply_step, check_graph_embedded_trs
from gembkit.rewriting import Rule, Trs, check_subterm_convergent_shape
from gembkit.terms import TermError, Var

from conftest import FIXTURES, T


def without_rule(trs: Trs, index: int) -> Trs:
    rules = tuple(r for i, r in enumerate(trs.rules) if i != index)
    return Trs(trs.signature, rules, trs.name + "-minus")


def test_projecting_rule_examples(theory):
    w = find_projecting_rule(theory("blind"), T("blind(X1,X2)"), "X1")
    assert w is not None and theory("blind").rules[w.rule] == Rule(T("unblind(blind(X,Y),Y)"), T("X"))
    assert validate_projecting(theory("blind"), w)
    w = find_projecting_rule(theory("add"), T("s(Y)"), "Y")
    assert w is not None and theory("add").rules[w.rule] == Rule(T("pred(s(X))"), T("X"))
    assert find_projecting_rule(theory("trapdoor"), T("f(X1,Y,Z,X2)"), "X1") is None


def test_projecting_rule_requires_single_occurrence(theory):
    with pytest.raises(TermError):
        find_projecting_rule(theory("blind"), T("blind(X,X)"), "X")


def test_projection_closed_derivation_examples(theory):
    found = check_projection_closed_derivation(theory("blind"), T("sign(blind(X1,X2),X3)"), T("sign(X1,X3)"))
    assert found is not None
    steps, terms, witnesses = found
    t = T("sign(blind(X1,X2),X3)")
    for step in steps:
        t = apply_step(t, step)
    assert t == T("sign(X1,X3)") == terms[-1]
    assert [w.variable for _, w in witnesses] == ["X1"]
    dec = Trs.from_rules([Rule(T("dec(enc(X,Y),Y)"), T("X"))])
    found = check_projection_closed_derivation(dec, T("enc(X1,X2)"), T("X1"))
    assert found is not None
    steps, _, witnesses = found
    assert [s.tag for s in steps] == [1]
    assert witnesses[0][1].rule == 0
    assert check_projection_closed_derivation(theory("mal"), T("mal(enc(X1,X2),X3)"), T("enc(X3,X2)")) is None


def test_projection_closed_derivation_needs_linear_start(theory):
    with pytest.raises(TermError):
        check_projection_closed_derivation(theory("blind"), T("f(X,X)"), T("X"))


def test_projection_closed_perm_eq_examples(theory):
    add = theory("add")
    b = check_projection_closed_perm_eq(add, T("plus(X,s(Y))"), T("plus(s(X),Y)"))
    assert b is not None and [w.variable for w in b.witnesses] == ["Y"]
    assert add.rules[b.witnesses[0].rule] == Rule(T("pred(s(X))"), T("X"))
    vacuous = check_projection_closed_perm_eq(Trs.from_rules([Rule(T("f(X,Y)"), T("f(Y,X)"))]), T("f(X,Y)"), T("f(Y,X)"))
    assert vacuous is not None and vacuous.witnesses == []
    pred_index = next(i for i, r in enumerate(add.rules) if r.lhs.fn == "pred")
    assert check_projection_closed_perm_eq(without_rule(add, pred_index), T("plus(X,s(Y))"), T("plus(s(X),Y)")) is None
    with pytest.raises(TermError):
        check_projection_closed_perm_eq(add, T("plus(X,Y)"), T("s(X)"))


def test_contracting_examples(theory):
    assert check_contracting(theory("blind")).holds
    report = check_contracting(theory("mal"))
    assert not report.holds and report.first_failure == 1
    assert check_contracting(theory("trapdoor_ext")).holds
    assert not check_contracting(theory("trapdoor")).holds


def test_strictly_contracting_examples(theory):
    assert check_strictly_contracting(theory("blind"))
    assert not check_strictly_contracting(theory("add"))
    assert check_strictly_contracting(theory("prefix"))


def test_linearize_renames_left_to_right():
    g, back = linearize(T("f(X,g(X,Y))"))
    assert g == T("f(X1,g(X2,X3))")
    assert back == {"X1": "X", "X2": "X", "X3": "Y"}


def test_missing_projections_for_trapdoor(theory):
    hints = missing_projections(theory("trapdoor"), 2)
    assert any("f(X1,Y,Z,X2)" in h for h in hints)


@pytest.mark.parametrize("name", FIXTURES)
def test_certificates_replay(theory, name):
    r = theory(name)
    for cert in check_contracting(r).rules:
        if cert.kind != "none":
            assert validate_certificate(r, cert), (name, cert.index)


@pytest.mark.parametrize("name", FIXTURES)
def test_class_inclusions(theory, name):
    r = theory(name)
    contracting = check_contracting(r).holds
    if contracting:
        assert check_graph_embedded_trs(r).holds
    if check_subterm_convergent_shape(r).holds:
        assert contracting
    if check_strictly_contracting(r):
        assert contracting


def test_tampered_certificate_is_rejected(theory):
    r = theory("blind")
    cert = check_contracting(r).rules[2]
    assert cert.kind == "branch-A"
    cert.detail.terms[-1] = Var("X1")
    assert not validate_certificate(r, cert)
