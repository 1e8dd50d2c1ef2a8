"""Graph-embedded and contracting rewrite systems with knowledge decision procedures."""

from __future__ import annotations

from .analysis import combination_check, forward_closure_bounded, fvp_sufficient, layered_check
from .contracting import check_contracting, check_strictly_contracting
from .formats import load_eqs, load_frame, load_trs, parse_frame, parse_trs
from .gemb import check_graph_embedded_trs, graph_embedded_rel, gst
from .knowledge import Frame, cap_solve, deduce, saturate, static_equivalent
from .mpcp import MpcpInstance, generate_reduction
from .rewriting import Rule, Trs, check_convergent, critical_pairs, nf, normalize
from .terms import App, Signature, Term, TermError, Var, parse_term

__all__ = [
    "App",
    "Frame",
    "MpcpInstance",
    "Rule",
    "Signature",
    "Term",
    "TermError",
    "Trs",
    "Var",
    "cap_solve",
    "check_contracting",
    "check_convergent",
    "check_graph_embedded_trs",
    "check_strictly_contracting",
    "combination_check",
    "critical_pairs",
    "deduce",
    "forward_closure_bounded",
    "fvp_sufficient",
    "generate_reduction",
    "graph_embedded_rel",
    "gst",
    "layered_check",
    "load_eqs",
    "load_frame",
    "load_trs",
    "nf",
    "normalize",
    "parse_frame",
    "parse_term",
    "parse_trs",
    "saturate",
    "static_equivalent",
]
