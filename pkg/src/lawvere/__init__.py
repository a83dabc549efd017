"""Finite verification of the relative Lawvere condition for concrete categories of algebras."""

from __future__ import annotations

__version__ = "0.1.0"

from .algebra import (
    AlgebraError,
    Equation,
    FiniteAlgebra,
    Hom,
    Signature,
    eval_term,
    enumerate_homs,
    is_homomorphism,
    parse_term,
    product,
    subalgebra_closure,
)
from .catfile import ParseError, load, load_bundled
from .category import (
    ConcreteCategory,
    Span,
    SplitSpan,
    box_construction,
    equalizer,
    is_local_product,
    kernel_pair,
    kp_construction,
    pullback_split,
)
from .conditions import Battery, NoNaturalOperation, Outcome, check_condition, maltsev_signature
from .report import emit_dot, run_battery
from .spanclass import AllSpans, Relations, StrongRelations, SpanClass, is_difunctional

__all__ = [
    "AlgebraError", "AllSpans", "Battery", "ConcreteCategory", "Equation", "FiniteAlgebra", "Hom",
    "NoNaturalOperation", "Outcome", "ParseError", "Relations", "Signature", "Span", "SpanClass",
    "SplitSpan", "StrongRelations", "box_construction", "check_condition", "emit_dot", "enumerate_homs",
    "equalizer", "eval_term", "is_difunctional", "is_homomorphism", "is_local_product", "kernel_pair",
    "kp_construction", "load", "load_bundled", "maltsev_signature", "parse_term", "product",
    "pullback_split", "run_battery", "subalgebra_closure",
]
