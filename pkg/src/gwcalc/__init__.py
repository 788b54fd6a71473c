"""Exact-arithmetic calculus of Gromov-Witten invariants of projective spaces."""

from .moduli import (
    FixedCurve,
    Fund,
    Mu,
    PointClass,
    Theta,
    Witten,
    parse_sexpr,
    format_sexpr,
    real_codim,
)
from .solver import Engine, EvalConfig, quantum_product, solve_genus0
from .store import CorrelatorKey, InvariantStore, canonicalize, dimension_check
from .target import (
    CohElement,
    CurveClass,
    TargetModel,
    builtin_target,
    load_target,
    make_projective_space,
)

__all__ = [
    "CohElement",
    "CorrelatorKey",
    "CurveClass",
    "Engine",
    "EvalConfig",
    "FixedCurve",
    "Fund",
    "InvariantStore",
    "Mu",
    "PointClass",
    "TargetModel",
    "Theta",
    "Witten",
    "builtin_target",
    "canonicalize",
    "dimension_check",
    "format_sexpr",
    "load_target",
    "make_projective_space",
    "parse_sexpr",
    "quantum_product",
    "real_codim",
    "solve_genus0",
]
