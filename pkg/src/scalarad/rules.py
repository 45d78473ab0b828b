"""Primitive operations and their local partial derivatives.

Every differentiable scalar kind evaluates values through the ``v_*`` helpers
below, so value channels are bit-identical across kinds. The helpers follow
IEEE semantics (NaN/inf) where :mod:`math` would raise.

A rule maps operand values to ``(value, partial_a[, partial_b])``.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

nan = math.nan
inf = math.inf

_sin = math.sin
_cos = math.cos
_tan = math.tan
_exp = math.exp
_log = math.log
_sqrt = math.sqrt


def v_sin(a: float) -> float:
    try:
        return _sin(a)
    except ValueError:
        return nan


def v_cos(a: float) -> float:
    try:
        return _cos(a)
    except ValueError:
        return nan


def v_tan(a: float) -> float:
    try:
        return _tan(a)
    except ValueError:
        return nan


def v_exp(a: float) -> float:
    try:
        return _exp(a)
    except OverflowError:
        return inf


def v_ln(a: float) -> float:
    if a > 0.0:
        return _log(a)
    if a == 0.0:
        return -inf
    return nan


def v_sqrt(a: float) -> float:
    if a >= 0.0:
        return _sqrt(a)
    return nan


def v_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a != a or a == 0.0:
            return nan
        return math.copysign(inf, a) * math.copysign(1.0, b)


def v_pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except OverflowError:
        if a < 0.0 and float(b).is_integer() and int(b) % 2 == 1:
            return -inf
        return inf
    except ValueError:
        # 0 ** negative -> inf; negative ** fractional -> nan
        if a == 0.0 and b < 0.0:
            return inf
        return nan


def v_abs(a: float) -> float:
    return abs(a)


def v_min(a: float, b: float) -> float:
    if a != a or b != b:
        return nan
    return a if a <= b else b


def v_max(a: float, b: float) -> float:
    if a != a or b != b:
        return nan
    return a if a >= b else b


# -- unary rules -------------------------------------------------------------


def sin_rule(a: float) -> tuple[float, float]:
    return v_sin(a), v_cos(a)


def cos_rule(a: float) -> tuple[float, float]:
    return v_cos(a), -v_sin(a)


def tan_rule(a: float) -> tuple[float, float]:
    c = v_cos(a)
    return v_tan(a), v_div(1.0, c * c)


def exp_rule(a: float) -> tuple[float, float]:
    e = v_exp(a)
    return e, e


def ln_rule(a: float) -> tuple[float, float]:
    if a < 0.0:
        return nan, nan
    return v_ln(a), v_div(1.0, a)


def sqrt_rule(a: float) -> tuple[float, float]:
    s = v_sqrt(a)
    return s, v_div(0.5, s)


def neg_rule(a: float) -> tuple[float, float]:
    return -a, -1.0


def abs_rule(a: float) -> tuple[float, float]:
    if a > 0.0:
        return a, 1.0
    if a < 0.0:
        return -a, -1.0
    if a == 0.0:
        return 0.0, 0.0
    return nan, nan


# -- binary rules ------------------------------------------------------------


def add_rule(a: float, b: float) -> tuple[float, float, float]:
    return a + b, 1.0, 1.0


def sub_rule(a: float, b: float) -> tuple[float, float, float]:
    return a - b, 1.0, -1.0


def mul_rule(a: float, b: float) -> tuple[float, float, float]:
    return a * b, b, a


def div_rule(a: float, b: float) -> tuple[float, float, float]:
    v = v_div(a, b)
    return v, v_div(1.0, b), -v_div(v, b)


def pow_rule(a: float, b: float) -> tuple[float, float, float]:
    """Scalar base and scalar exponent; the exponent partial needs ``a > 0``."""
    v = v_pow(a, b)
    return v, b * v_pow(a, b - 1.0), v_ln(a) * v if a > 0.0 else nan


def pow_const_rule(a: float, c: float) -> tuple[float, float]:
    """Scalar base raised to a constant exponent (any sign of base)."""
    return v_pow(a, c), c * v_pow(a, c - 1.0)


def min_rule(a: float, b: float) -> tuple[float, float, float]:
    if a != a or b != b:
        return nan, nan, nan
    # ties credit the first operand
    if a <= b:
        return a, 1.0, 0.0
    return b, 0.0, 1.0


def max_rule(a: float, b: float) -> tuple[float, float, float]:
    if a != a or b != b:
        return nan, nan, nan
    if a >= b:
        return a, 1.0, 0.0
    return b, 0.0, 1.0


class DerivativeRule(NamedTuple):
    op: str
    arity: int
    apply: Callable[..., tuple]


UNARY_RULES: dict[str, Callable[[float], tuple[float, float]]] = {
    "sin": sin_rule,
    "cos": cos_rule,
    "tan": tan_rule,
    "exp": exp_rule,
    "ln": ln_rule,
    "sqrt": sqrt_rule,
    "neg": neg_rule,
    "abs": abs_rule,
}

BINARY_RULES: dict[str, Callable[[float, float], tuple[float, float, float]]] = {
    "add": add_rule,
    "sub": sub_rule,
    "mul": mul_rule,
    "div": div_rule,
    "pow": pow_rule,
    "min": min_rule,
    "max": max_rule,
}

RULES: dict[str, DerivativeRule] = {
    **{op: DerivativeRule(op, 1, f) for op, f in UNARY_RULES.items()},
    **{op: DerivativeRule(op, 2, f) for op, f in BINARY_RULES.items()},
}

UNARY_OPS = tuple(UNARY_RULES)
BINARY_OPS = tuple(BINARY_RULES)

# Value-only views, used by the plain-float path.
UNARY_VALUES: dict[str, Callable[[float], float]] = {
    "sin": v_sin,
    "cos": v_cos,
    "tan": v_tan,
    "exp": v_exp,
    "ln": v_ln,
    "sqrt": v_sqrt,
    "neg": lambda a: -a,
    "abs": v_abs,
}

BINARY_VALUES: dict[str, Callable[[float, float], float]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": v_div,
    "pow": v_pow,
    "min": v_min,
    "max": v_max,
}
