"""Exact computations with graded Lie algebras of maximal class and the varieties of filiform Lie algebras."""

from .exactnum import (
    Fraction,
    ParamPoly,
    ParametricSolveResult,
    RatMatrix,
    det,
    poly_gcd,
    rational_roots,
    solve_linear,
    substitute,
)

__version__ = "0.1.0"
