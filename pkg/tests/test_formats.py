from __future__ import annotations

import pytest

from gembkit.formats import (
    FormatError,
    builtin_names,
    load_eqs,
    load_frame,
    load_trs,
    parse_eqs,
    parse_frame,
    parse_terms,
    parse_trs,
    print_eqs,
    print_frame,
    print_trs,
    read_source,
)
from gembkit.knowledge import Frame

from conftest import FIXTURES, T


def test_builtins_cover_fixtures():
    names = builtin_names()
    for name in FIXTURES:
        assert f"{name}.trs" in names
    assert {"keyexch.eqs", "commutativity.eqs"} <= set(names)


@pytest.mark.parametrize("name", FIXTURES)
def test_trs_round_trip(name):
    trs = load_trs(name)
    again = parse_trs(print_trs(trs), f"{name}.trs")
    assert again == trs
    assert print_trs(again) == print_trs(trs)


@pytest.mark.parametrize("name", ["keyexch", "commutativity"])
def test_eqs_round_trip(name):
    eqs = load_eqs(name)
    assert parse_eqs(print_eqs(eqs), f"{name}.eqs") == eqs


def test_private_symbols():
    trs = parse_trs("theory t\nsymbols enc/2, dec/2\nprivate h/1\nrules\ndec(enc(X,Y),Y) -> X\n")
    assert trs.signature.private == {"h"}
    assert parse_trs(print_trs(trs)) == trs


def test_signature_inferred_from_rules():
    trs = parse_trs("rules\nfst(pair(X,Y)) -> X\n")
    assert trs.signature.arities == {"fst": 1, "pair": 2}


def test_frame_parsing(tmp_path):
    text = "frame phiP\nrestricted n\nv = enc(a,n)\nw = n   # the key\n"
    frame = parse_frame(text)
    assert frame == Frame.of({"n"}, {"v": T("enc(a,n)"), "w": T("n")}, name="phiP")
    path = tmp_path / "phiP.frame"
    path.write_text(print_frame(frame))
    assert load_frame(str(path)) == frame


def test_terms_file():
    assert parse_terms("enc(m,k)\n\n# comment\nk\n") == [T("enc(m,k)"), T("k")]


@pytest.mark.parametrize(
    "text,line",
    [
        ("theory t\nrules\ndec(enc(X,Y),Y) X\n", 3),
        ("theory t\nsymbols dec/two\nrules\n", 2),
        ("rules\ndec(enc(X,Y),Y -> X\n", 2),
        ("bogus\n", 1),
    ],
)
def test_trs_errors_carry_line_numbers(text, line):
    with pytest.raises(FormatError) as info:
        parse_trs(text, "bad.trs")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.trs:{line}: ")


def test_trs_arity_conflict():
    with pytest.raises(FormatError):
        parse_trs("rules\nf(X) -> f(X,X)\n")


def test_frame_errors():
    with pytest.raises(FormatError) as info:
        parse_frame("restricted n\nv enc(a,n)\n", "x.frame")
    assert info.value.line == 2
    with pytest.raises(FormatError):
        parse_frame("v = enc(X,n)\n")


def test_eqs_error():
    with pytest.raises(FormatError) as info:
        parse_eqs("axioms\nplus(X,Y) -> plus(Y,X)\n")
    assert info.value.line == 2


def test_missing_source():
    with pytest.raises(FormatError):
        read_source("no-such-theory")
    with pytest.raises(FormatError):
        load_frame("no-such.frame")


def test_builtin_lookup_with_extension():
    assert read_source("blind.trs")[0] == read_source("blind")[0]
