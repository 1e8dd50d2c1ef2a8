"""Reading and writing theory (.trs), frame (.frame) and axiom (.eqs) files."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .analysis import EqPresentation
from .knowledge import Frame
from .rewriting import Rule, Trs
from .terms import ParseError, Signature, Term, TermError, arity_map, parse_term

BUILTIN_SUFFIXES = (".trs", ".eqs")


class FormatError(TermError):
    def __init__(self, message: str, source: str = "<input>", line: int | None = None) -> None:
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.source = source
        self.line = line


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _parse_symbols(spec: str, source: str, number: int) -> dict[str, int]:
    out: dict[str, int] = {}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, arity = item.partition("/")
        if not sep or not arity.strip().isdigit():
            raise FormatError(f"bad symbol declaration {item!r}, expected name/arity", source, number)
        out[name.strip()] = int(arity)
    return out


def _term(text: str, source: str, number: int, frame_vars=()) -> Term:
    try:
        return parse_term(text, frame_vars)
    except ParseError as exc:
        raise FormatError(str(exc), source, number) from None


def _header(line: str, keyword: str) -> str | None:
    if line == keyword:
        return ""
    if line.startswith(keyword + " "):
        return line[len(keyword) + 1 :].strip()
    return None


def parse_trs(text: str, source: str = "<input>") -> Trs:
    name = Path(source).stem if source != "<input>" else "R"
    arities: dict[str, int] | None = None
    private: dict[str, int] = {}
    rules: list[Rule] = []
    in_rules = False
    for number, line in _lines(text):
        if in_rules:
            lhs, sep, rhs = line.partition("->")
            if not sep:
                raise FormatError(f"expected 'lhs -> rhs', got {line!r}", source, number)
            try:
                rule = Rule(_term(lhs, source, number), _term(rhs, source, number))
            except FormatError:
                raise
            except TermError as exc:
                raise FormatError(str(exc), source, number) from None
            rules.append(rule)
        elif (value := _header(line, "theory")) is not None:
            name = value or name
        elif (value := _header(line, "symbols")) is not None:
            arities = (arities or {}) | _parse_symbols(value, source, number)
        elif (value := _header(line, "private")) is not None:
            private |= _parse_symbols(value, source, number)
        elif line == "rules":
            in_rules = True
        else:
            raise FormatError(f"unexpected line {line!r}", source, number)
    try:
        if arities is None:
            arities = arity_map([t for r in rules for t in (r.lhs, r.rhs)])
        for f, a in private.items():
            if arities.get(f, a) != a:
                raise TermError(f"arity conflict for private symbol {f}")
            arities[f] = a
        sig = Signature(arities, frozenset(private))
        for r in rules:
            sig.check(r.lhs)
            sig.check(r.rhs)
        return Trs(sig, tuple(rules), name)
    except FormatError:
        raise
    except TermError as exc:
        raise FormatError(str(exc), source) from None


def _symbol_list(arities: dict[str, int]) -> str:
    return ", ".join(f"{f}/{a}" for f, a in arities.items())


def print_trs(trs: Trs) -> str:
    sig = trs.signature
    public = {f: a for f, a in sig.arities.items() if f not in sig.private}
    lines = [f"theory {trs.name}", f"symbols {_symbol_list(public)}"]
    if sig.private:
        lines.append(f"private {_symbol_list({f: sig.arities[f] for f in sorted(sig.private)})}")
    lines.append("rules")
    lines += [str(r) for r in trs.rules]
    return "\n".join(lines) + "\n"


def parse_frame(text: str, source: str = "<input>") -> Frame:
    name = Path(source).stem if source != "<input>" else "phi"
    restricted: set[str] = set()
    bindings: list[tuple[str, Term]] = []
    for number, line in _lines(text):
        if (value := _header(line, "frame")) is not None:
            name = value or name
        elif (value := _header(line, "restricted")) is not None:
            restricted |= {n.strip() for n in value.split(",") if n.strip()}
        else:
            var, sep, rhs = line.partition("=")
            var = var.strip()
            if not sep or not var.isidentifier():
                raise FormatError(f"expected 'var = term', got {line!r}", source, number)
            bindings.append((var, _term(rhs, source, number)))
    try:
        return Frame(frozenset(restricted), tuple(bindings), name)
    except TermError as exc:
        raise FormatError(str(exc), source) from None


def print_frame(frame: Frame) -> str:
    lines = [f"frame {frame.name}", f"restricted {', '.join(sorted(frame.restricted))}"]
    lines += [f"{x} = {t}" for x, t in frame.bindings]
    return "\n".join(lines) + "\n"


def parse_eqs(text: str, source: str = "<input>") -> EqPresentation:
    name = Path(source).stem if source != "<input>" else "E"
    axioms: list[tuple[Term, Term]] = []
    in_axioms = False
    for number, line in _lines(text):
        if in_axioms:
            lhs, sep, rhs = line.partition("=")
            if not sep:
                raise FormatError(f"expected 'lhs = rhs', got {line!r}", source, number)
            axioms.append((_term(lhs, source, number), _term(rhs, source, number)))
        elif (value := _header(line, "theory")) is not None:
            name = value or name
        elif line == "axioms":
            in_axioms = True
        else:
            raise FormatError(f"unexpected line {line!r}", source, number)
    try:
        arity_map([t for ax in axioms for t in ax])
    except TermError as exc:
        raise FormatError(str(exc), source) from None
    return EqPresentation(tuple(axioms), name)


def print_eqs(eqs: EqPresentation) -> str:
    lines = [f"theory {eqs.name}", "axioms"] + [f"{l} = {r}" for l, r in eqs.axioms]
    return "\n".join(lines) + "\n"


def parse_terms(text: str, source: str = "<input>", frame_vars=()) -> list[Term]:
    return [_term(line, source, number, frame_vars) for number, line in _lines(text)]


def builtin_names() -> list[str]:
    root = resources.files("gembkit") / "theories"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(BUILTIN_SUFFIXES))


def read_source(ref: str) -> tuple[str, str]:
    """Text of ``ref``: a file path, or the name of a bundled theory."""
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    root = resources.files("gembkit") / "theories"
    for candidate in (ref, ref + ".trs", ref + ".eqs"):
        entry = root / Path(candidate).name
        if Path(candidate).name == candidate and entry.is_file():
            return entry.read_text(encoding="utf-8"), Path(candidate).name
    raise FormatError("no such file or bundled theory", ref)


def load_trs(ref: str) -> Trs:
    text, source = read_source(ref)
    return parse_trs(text, source)


def load_eqs(ref: str) -> EqPresentation:
    text, source = read_source(ref)
    return parse_eqs(text, source)


def load_frame(ref: str) -> Frame:
    path = Path(ref)
    if not path.is_file():
        raise FormatError("no such file", ref)
    return parse_frame(path.read_text(encoding="utf-8"), str(path))
