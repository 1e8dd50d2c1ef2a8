"""Command-line entry point: ``gembkit <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable

from . import analysis, contracting, gemb, knowledge, mpcp, rewriting
from .formats import (
    FormatError,
    load_eqs,
    load_frame,
    load_trs,
    parse_terms,
    print_frame,
    print_trs,
    read_source,
)
from .terms import TermError, parse_term

EXIT_HOLDS, EXIT_NOT, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3

PROPERTIES = (
    "graph-embedded",
    "hom-embedded",
    "subterm",
    "contracting",
    "strictly-contracting",
    "convergent",
    "fvp-sufficient",
    "layered",
)

Report = dict[str, Any]


def _term(text: str, frame_vars=()):
    try:
        return parse_term(text, frame_vars)
    except TermError as exc:
        raise FormatError(str(exc), "--term") from None


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


# ---------------------------------------------------------------------------
# check


def _check(args: argparse.Namespace) -> tuple[int, Report]:
    trs = load_trs(args.theory)
    prop = args.property
    rep: Report = {"theory": trs.name}
    if prop == "graph-embedded":
        r = gemb.check_graph_embedded_trs(trs, cross_kind=args.cross_kind)
        rep["verdict"] = _yes(r.holds)
        rep["rules"] = [
            {
                "rule": f"{e.index + 1}: {trs.rules[e.index]}",
                "status": e.verdict,
                "derivation": e.derivation.describe() if e.derivation else [],
            }
            for e in r.rules
        ]
        return (EXIT_HOLDS if r.holds else EXIT_NOT), rep
    if prop == "hom-embedded":
        bad = gemb.check_hom_embedded_trs(trs)
        rep["verdict"] = _yes(not bad)
        rep["offending_rules"] = [f"{i + 1}: {trs.rules[i]}" for i in bad]
        return (EXIT_NOT if bad else EXIT_HOLDS), rep
    if prop == "subterm":
        shape = rewriting.check_subterm_convergent_shape(trs)
        conv = rewriting.check_convergent(trs, args.budget)
        rep["verdict"] = _yes(shape.holds)
        rep["c_R"] = rewriting.trs_size(trs)
        rep["shapes"] = [f"{i + 1}: {rewriting.rule_shape(r)}" for i, r in enumerate(trs.rules)]
        rep["offending_rules"] = [i + 1 for i in shape.offending]
        rep["convergent"] = conv.verdict
        return (EXIT_HOLDS if shape.holds else EXIT_NOT), rep
    if prop in ("contracting", "strictly-contracting"):
        r = contracting.check_contracting(trs)
        holds = r.holds
        if prop == "strictly-contracting":
            deeper = [i + 1 for i, ru in enumerate(trs.rules) if ru.lhs.depth <= ru.rhs.depth]
            rep["depth_failures"] = deeper
            holds = holds and not deeper
        rep["verdict"] = _yes(holds)
        rep["certificates"] = [
            {"rule": f"{c.index + 1}: {trs.rules[c.index]}", "kind": c.kind, "detail": c.describe()}
            for c in r.rules
        ]
        if r.first_failure is not None:
            i = r.first_failure
            rep["first_failure"] = i + 1
            rep["missing_projections"] = contracting.missing_projections(trs, i)
        return (EXIT_HOLDS if holds else EXIT_NOT), rep
    if prop == "convergent":
        r = rewriting.check_convergent(trs, args.budget)
        rep.update(
            verdict=r.verdict,
            termination=r.termination,
            critical_pairs=r.critical_pairs,
            witness=r.witness,
            reason=r.reason,
        )
        return {"yes": EXIT_HOLDS, "no": EXIT_NOT}.get(r.verdict, EXIT_UNKNOWN), rep
    if prop == "fvp-sufficient":
        r = analysis.fvp_sufficient(trs)
        rep.update(verdict=r.verdict, reasons=r.reasons)
        return (EXIT_HOLDS if r.verdict == "yes" else EXIT_NOT), rep
    assert prop == "layered"
    r = analysis.layered_check(trs, args.context_cap)
    rep["verdict"] = r.verdict
    rep["layers"] = [[i + 1 for i in layer] for layer in r.layers]
    rep["witnesses"] = [
        {"rule": w.rule + 1, "decomposition": w.decomposition, "condition": w.condition, "detail": w.detail}
        for w in r.table
    ]
    rep["failures"] = r.failures
    code = {"layered": EXIT_HOLDS, "not-layered-evidence": EXIT_NOT}.get(r.verdict, EXIT_UNKNOWN)
    return code, rep


# ---------------------------------------------------------------------------
# rewriting and embedding


def _normalize(args: argparse.Namespace) -> tuple[int, Report]:
    trs = load_trs(args.theory)
    t = _term(args.term)
    try:
        final, trace = rewriting.normalize(t, trs, args.budget)
    except rewriting.BudgetExceeded as exc:
        return EXIT_UNKNOWN, {"verdict": "budget-exhausted", "message": str(exc), "steps": len(exc.trace.steps)}
    steps = [
        f"rule {s.rule + 1} at {_pos(s.position)}" for s in trace.steps
    ]
    return EXIT_HOLDS, {"verdict": "normalized", "term": str(t), "normal_form": str(final), "steps": steps}


def _pos(p) -> str:
    from .terms import format_position

    return format_position(p)


def _gemb_witness(args: argparse.Namespace) -> tuple[int, Report]:
    s, t = _term(args.source), _term(args.target)
    sig = load_trs(args.theory).signature if args.theory else None
    d = gemb.graph_embedded_rel(s, t, sig, cross_kind=args.cross_kind)
    rep: Report = {"from": str(s), "to": str(t), "verdict": _yes(d is not None)}
    if d is not None:
        rep["derivation"] = d.describe()
        rep["leaf_map"] = dict(sorted(d.leaf_map.items()))
    return (EXIT_HOLDS if d is not None else EXIT_NOT), rep


# ---------------------------------------------------------------------------
# knowledge


def _options(args: argparse.Namespace) -> dict:
    return {"budget": args.budget, "gst_cap": args.gst_cap}


def _saturation_dump(st: knowledge.SaturationState) -> list[str]:
    return [f"{e.term} <= {e.recipe} ({e.provenance})" for e in st.sorted_entries()]


def _deduce(args: argparse.Namespace) -> tuple[int, Report]:
    trs = load_trs(args.theory)
    frame = load_frame(args.frame)
    t = _term(args.term)
    d = knowledge.deduce(frame, trs, t, force=args.force, **_options(args))
    rep: Report = {
        "target": str(t),
        "normal_target": str(d.normal_target),
        "verdict": _yes(d.deducible),
        "recipe": str(d.recipe) if d.recipe is not None else None,
        "heuristic": d.heuristic,
    }
    if args.json:
        rep["saturation"] = _saturation_dump(d.state)
    if d.heuristic:
        return EXIT_UNKNOWN, rep
    return (EXIT_HOLDS if d.deducible else EXIT_NOT), rep


def _static_equiv(args: argparse.Namespace) -> tuple[int, Report]:
    trs = load_trs(args.theory)
    phi, psi = load_frame(args.frame1), load_frame(args.frame2)
    r = knowledge.static_equivalent(
        phi, psi, trs, force=args.force, context_bound=args.context_bound, budget=args.budget, gst_cap=args.gst_cap
    )
    rep: Report = {
        "frames": [phi.name, psi.name],
        "verdict": _yes(r.equivalent),
        "witness": r.equation,
        "holds_in": r.holds_in,
        "candidates": r.candidates,
        "heuristic": r.heuristic,
    }
    if r.heuristic:
        return EXIT_UNKNOWN, rep
    return (EXIT_HOLDS if r.equivalent else EXIT_NOT), rep


def _cap(args: argparse.Namespace) -> tuple[int, Report]:
    trs = load_trs(args.theory)
    text, source = read_source(args.terms)
    terms = parse_terms(text, source)
    sol = knowledge.cap_solve(trs, terms, args.secret, force=args.force, **_options(args))
    rep: Report = {"secret": args.secret, "terms": [str(t) for t in terms], "verdict": _yes(sol is not None)}
    if sol is not None:
        rep["cap"] = str(sol.cap)
        rep["assignment"] = {k: str(v) for k, v in sol.assignment.items()}
        rep["recipe"] = str(sol.recipe)
    return (EXIT_HOLDS if sol is not None else EXIT_NOT), rep


def _deduce_permutative(args: argparse.Namespace) -> tuple[int, Report]:
    eqs = load_eqs(args.axioms)
    frame = load_frame(args.frame)
    t = _term(args.term)
    if not analysis.check_permutative(eqs):
        raise FormatError("axioms are not permutative", args.axioms)
    recipe = analysis.deduce_permutative(eqs, frame, t)
    rep: Report = {
        "target": str(t),
        "verdict": _yes(recipe is not None),
        "recipe": str(recipe) if recipe is not None else None,
    }
    return (EXIT_HOLDS if recipe is not None else EXIT_NOT), rep


# ---------------------------------------------------------------------------
# theory analysis


def _combine(args: argparse.Namespace) -> tuple[int, Report]:
    r1 = load_trs(args.theory1)
    if args.theory2 is not None:
        r = analysis.combination_check(r1, load_trs(args.theory2))
    else:
        r = analysis.combination_check(r1, eqs=load_eqs(args.axioms))
    rep: Report = {
        "mode": r.mode,
        "verdict": "applicable" if r.applicable else "not-applicable",
        "shared_symbols": r.shared,
        "constructor_sharing": r.constructor_sharing,
        "checks": r.checks,
        "conclusions": r.conclusions,
    }
    return (EXIT_HOLDS if r.applicable else EXIT_NOT), rep


def _forward_closure(args: argparse.Namespace) -> tuple[int, Report]:
    trs = load_trs(args.theory)
    r = analysis.forward_closure_bounded(trs, args.bound)
    rep: Report = {
        "verdict": r.status,
        "iterations": r.iterations,
        "rules": [str(x) for x in r.rules],
    }
    return (EXIT_HOLDS if r.status == "closed" else EXIT_UNKNOWN), rep


def _gen_mpcp(args: argparse.Namespace) -> tuple[int, Report]:
    try:
        inst = mpcp.MpcpInstance.parse(args.pairs, args.alpha0, args.beta0)
    except TermError as exc:
        raise FormatError(str(exc), "--pairs") from None
    trs, frame, target = mpcp.generate_reduction(inst)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    files = {"mpcp.trs": print_trs(trs), "mpcp.frame": print_frame(frame), "target.txt": f"{target}\n"}
    for name, body in files.items():
        (out / name).write_text(body, encoding="utf-8")
    rep: Report = {
        "verdict": "generated",
        "files": [str(out / n) for n in files],
        "rules": [str(r) for r in trs.rules],
        "frame": str(frame),
        "target": str(target),
    }
    return EXIT_HOLDS, rep


# ---------------------------------------------------------------------------
# parser and rendering


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    p.add_argument("--budget", type=int, default=rewriting.DEFAULT_BUDGET, help="normalization step budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gembkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.set_defaults(handler=handler)
        return p

    p = add("check", _check, "decide a syntactic property of a theory")
    p.add_argument("--theory", required=True)
    p.add_argument("--property", required=True, choices=PROPERTIES)
    p.add_argument("--cross-kind", action="store_true", help="let leaf bijections swap variables and constants")
    p.add_argument("--context-cap", type=int, default=None, help="context size cap for the layered check (default c_R)")

    p = add("normalize", _normalize, "normalize a term")
    p.add_argument("--theory", required=True)
    p.add_argument("--term", required=True)

    p = add("gemb-witness", _gemb_witness, "decide s >=gemb t and print the derivation")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--theory", default=None, help="theory whose signature fixes well-formedness")
    p.add_argument("--cross-kind", action="store_true")

    for name, handler, help_text in (
        ("deduce", _deduce, "decide deducibility of a ground term"),
        ("static-equiv", _static_equiv, "decide static equivalence of two frames"),
        ("cap", _cap, "solve the cap problem"),
    ):
        p = add(name, handler, help_text)
        p.add_argument("--theory", required=True)
        p.add_argument("--force", action="store_true", help="run outside the certified class (heuristic)")
        p.add_argument("--gst-cap", type=int, default=knowledge.DEFAULT_GST_CAP)
        if name == "deduce":
            p.add_argument("--frame", required=True)
            p.add_argument("--term", required=True)
        elif name == "static-equiv":
            p.add_argument("--frame1", required=True)
            p.add_argument("--frame2", required=True)
            p.add_argument("--context-bound", type=int, default=None, help="candidate recipe size bound (default c_R^2)")
        else:
            p.add_argument("--secret", required=True)
            p.add_argument("--terms", required=True, help="file with one ground term per line")

    p = add("deduce-permutative", _deduce_permutative, "deduction modulo a permutative theory")
    p.add_argument("--axioms", required=True)
    p.add_argument("--frame", required=True)
    p.add_argument("--term", required=True)

    p = add("combine-check", _combine, "check applicability of the combination results")
    p.add_argument("--theory1", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--theory2")
    group.add_argument("--axioms")

    p = add("forward-closure", _forward_closure, "bounded forward closure")
    p.add_argument("--theory", required=True)
    p.add_argument("--bound", type=int, default=analysis.DEFAULT_CLOSURE_BOUND)

    p = add("gen-mpcp", _gen_mpcp, "generate the MPCP reduction instance")
    p.add_argument("--pairs", required=True, help="e.g. 'ba:baa,ab:ba,aaa:aa'")
    p.add_argument("--alpha0", required=True)
    p.add_argument("--beta0", required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    return parser


_NOT_CONFIG = {"command", "handler", "json", "timing"}


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def render(report: Report) -> str:
    lines: list[str] = []

    def emit(key: str, value: Any, indent: str) -> None:
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            for k, v in value.items():
                emit(str(k), v, indent + "  ")
        elif isinstance(value, list):
            lines.append(f"{indent}{key}:" + ("" if value else " []"))
            for item in value:
                if isinstance(item, dict):
                    first = True
                    for k, v in item.items():
                        emit(str(k), v, indent + ("  - " if first else "    "))
                        first = False
                else:
                    lines.append(f"{indent}  - {item}")
        else:
            lines.append(f"{indent}{key}: {value}")

    for k, v in report.items():
        emit(k, v, "")
    return "\n".join(lines) + "\n"


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    start = time.perf_counter()
    report: Report = {"command": args.command, "config": _config(args)}
    try:
        code, body = args.handler(args)
    except (FormatError, knowledge.KnowledgeError, TermError) as exc:
        budget_like = isinstance(
            exc, (gemb.GstOverflow, analysis.EqClassOverflow, analysis.DecompositionCapExceeded, gemb.NodeBudgetExceeded)
        )
        code = EXIT_UNKNOWN if budget_like else EXIT_INPUT
        body = {"verdict": "error", "error": str(exc)}
        if not args.json:
            print(f"gembkit: error: {exc}", file=err)
    except rewriting.BudgetExceeded as exc:
        code, body = EXIT_UNKNOWN, {"verdict": "budget-exhausted", "error": str(exc)}
    report.update(body)
    report["exit_code"] = code
    if args.timing:
        report["seconds"] = round(time.perf_counter() - start, 4)
    if args.json:
        out.write(json.dumps(report, indent=2) + "\n")
    else:
        out.write(render(report))
    return code


def main() -> None:
    sys.exit(run())
