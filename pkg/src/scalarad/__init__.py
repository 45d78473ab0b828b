"""Scalar automatic differentiation with swappable derivative methods.

Write a function once against the scalar surface (``+ - * /``, ``sin``,
``cos``, ...) and differentiate it with finite differences, forward mode,
multi-tangent forward mode, or a reverse-mode tape.
"""

from .engine import (
    DerivativeMethod,
    DerivativeResult,
    DifferentiableBlock,
    DifferentiableFunction,
    FiniteDifferencing,
    ForwardAD,
    ForwardADMulti,
    ReverseAD,
    call,
    differentiable,
    evaluation_count,
    jvp,
    parse_method,
    vjp,
)
from .errors import ADError, ArityError, DomainError, NotSPDError, RankDeficiencyError, UsageError
from .linalg import DampedPseudoInverseConfig, pinv_solve, solve_spd
from .scalar import (
    PLAIN,
    REVERSE,
    Dual,
    DualN,
    ReverseScalar,
    Scalar,
    ScalarKind,
    compare,
    constant,
    cos,
    exp,
    ln,
    maximum,
    minimum,
    power,
    seed_variable,
    sin,
    sqrt,
    tan,
    value_of,
    variable,
)
from .tape import Tape

__all__ = [
    "ADError", "ArityError", "DampedPseudoInverseConfig", "DerivativeMethod", "DerivativeResult",
    "DifferentiableBlock", "DifferentiableFunction", "DomainError", "Dual", "DualN",
    "FiniteDifferencing", "ForwardAD", "ForwardADMulti", "NotSPDError", "PLAIN", "REVERSE",
    "RankDeficiencyError", "ReverseAD", "ReverseScalar", "Scalar", "ScalarKind", "Tape",
    "UsageError", "call", "compare", "constant", "cos", "differentiable", "evaluation_count",
    "exp", "jvp", "ln", "maximum", "minimum", "parse_method", "pinv_solve", "power",
    "seed_variable", "sin", "solve_spd", "sqrt", "tan", "value_of", "variable", "vjp",
]
