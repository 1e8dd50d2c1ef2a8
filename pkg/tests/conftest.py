from __future__ import annotations

import sys

import pytest

from gembkit.formats import load_eqs, load_trs
from gembkit.terms import parse_term

FIXTURES = [
    "blind",
    "mal",
    "add",
    "prefix",
    "trapdoor",
    "trapdoor_ext",
    "strong_secrecy",
    "pairing_enc",
    "encdec",
    "intruder",
]


def T(text: str, frame_vars=()):
    return parse_term(text, frame_vars)


@pytest.fixture(scope="session")
def theory():
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_trs(name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def axioms():
    return load_eqs


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: int(x.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
