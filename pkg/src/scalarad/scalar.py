"""Differentiable scalar kinds.

Three kinds share one arithmetic surface:

* plain reals -- ordinary Python floats, evaluated through :mod:`.rules`;
* forward duals -- a value plus a tangent block of fixed width. Width 1 is
  :class:`Dual` (float tangent, cheapest in pure Python); wider blocks are
  :class:`DualN`, backed by a numpy vector so every lane updates in one call;
* reverse scalars -- :class:`ReverseScalar`, a value plus a node index on a
  :class:`~scalarad.tape.Tape`.

Functions written against the generic helpers in this module (``sin``,
``cos``, ``sqrt`` ...) and the usual operators run unchanged on any kind.
Python floats and ints mix freely with every kind and act as constants.

Plain floats keep Python operator semantics, so ``1.0 / 0.0`` raises for
them; the AD kinds and :func:`apply_binary` return IEEE inf/NaN instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import rules as R
from .errors import ArityError, DomainError, UsageError
from .tape import Tape

_REAL = (int, float)

_sin_rule = R.sin_rule
_cos_rule = R.cos_rule
_div_rule = R.div_rule
_pow_rule = R.pow_rule
_pow_const_rule = R.pow_const_rule
_v_sin = R.v_sin
_v_cos = R.v_cos
_quiet = np.errstate(invalid="ignore", divide="ignore", over="ignore")


@dataclass(frozen=True)
class ScalarKind:
    """Which differentiable scalar representation a computation uses."""

    name: str
    width: int = 1

    def __post_init__(self):
        if self.name not in ("plain", "forward", "reverse"):
            raise UsageError(f"unknown scalar kind {self.name!r}")
        if self.name == "forward" and self.width < 1:
            raise UsageError(f"forward width must be >= 1, got {self.width}")

    @classmethod
    def plain(cls) -> "ScalarKind":
        return cls("plain")

    @classmethod
    def forward(cls, width: int = 1) -> "ScalarKind":
        return cls("forward", int(width))

    @classmethod
    def reverse(cls) -> "ScalarKind":
        return cls("reverse")

    def __str__(self) -> str:
        if self.name == "forward":
            return f"forward[{self.width}]"
        return self.name


PLAIN = ScalarKind.plain()
REVERSE = ScalarKind.reverse()


class Scalar:
    """Common base of the AD scalar classes."""

    __slots__ = ()

    def _unary(self, op: str):
        raise NotImplementedError

    def _binary(self, op: str, other):
        raise NotImplementedError


def _kind_mismatch(a, b):
    raise UsageError(f"cannot combine {kind_of(a)} with {kind_of(b)} operands")


# --------------------------------------------------------------------------
# forward mode
# --------------------------------------------------------------------------


class ForwardDual(Scalar):
    """Base of the forward-mode dual types."""

    __slots__ = ()

    def __lt__(self, other):
        return self.value < value_of(other)

    def __le__(self, other):
        return self.value <= value_of(other)

    def __gt__(self, other):
        return self.value > value_of(other)

    def __ge__(self, other):
        return self.value >= value_of(other)

    def __eq__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self.value == value_of(other)
        return NotImplemented

    def __ne__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self.value != value_of(other)
        return NotImplemented

    __hash__ = None

    def ln(self):
        return self._unary("ln")

    log = ln

    def tan(self):
        return self._unary("tan")

    def exp(self):
        return self._unary("exp")

    def sqrt(self):
        return self._unary("sqrt")

    def __abs__(self):
        return self._unary("abs")

    def minimum(self, other):
        return self._binary("min", other)

    def maximum(self, other):
        return self._binary("max", other)


class Dual(ForwardDual):
    """Forward dual with a single tangent channel stored as a float."""

    __slots__ = ("value", "tangent")
    width = 1

    def __init__(self, value: float, tangent: float = 0.0):
        self.value = value
        self.tangent = tangent

    def __repr__(self):
        return f"Dual({self.value!r}, {self.tangent!r})"

    @property
    def tangent_block(self) -> np.ndarray:
        return np.array([self.tangent])

    def _unary(self, op):
        v, d = R.UNARY_RULES[op](self.value)
        return Dual(v, self.tangent * d)

    def _binary(self, op, other):
        if other.__class__ is Dual:
            v, da, db = R.BINARY_RULES[op](self.value, other.value)
            return Dual(v, self.tangent * da + other.tangent * db)
        if isinstance(other, _REAL):
            v, da, _ = R.BINARY_RULES[op](self.value, other)
            return Dual(v, self.tangent * da)
        return _kind_mismatch(self, other)

    def _rbinary(self, op, other):
        # other (a real constant) is the first operand
        v, _, db = R.BINARY_RULES[op](other, self.value)
        return Dual(v, self.tangent * db)

    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __pos__(self):
        return self

    def __add__(self, other):
        if other.__class__ is Dual:
            return Dual(self.value + other.value, self.tangent + other.tangent)
        if isinstance(other, _REAL):
            return Dual(self.value + other, self.tangent)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __radd__(self, other):
        if isinstance(other, _REAL):
            return Dual(other + self.value, self.tangent)
        return NotImplemented

    def __sub__(self, other):
        if other.__class__ is Dual:
            return Dual(self.value - other.value, self.tangent - other.tangent)
        if isinstance(other, _REAL):
            return Dual(self.value - other, self.tangent)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _REAL):
            return Dual(other - self.value, -self.tangent)
        return NotImplemented

    def __mul__(self, other):
        if other.__class__ is Dual:
            return Dual(self.value * other.value,
                        self.tangent * other.value + other.tangent * self.value)
        if isinstance(other, _REAL):
            return Dual(self.value * other, self.tangent * other)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, _REAL):
            return Dual(other * self.value, other * self.tangent)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self._binary("div", other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _REAL):
            return self._rbinary("div", other)
        return NotImplemented

    def __pow__(self, other):
        if isinstance(other, _REAL):
            v, d = _pow_const_rule(self.value, other)
            return Dual(v, self.tangent * d)
        if isinstance(other, Scalar):
            return self._binary("pow", other)
        return NotImplemented

    def __rpow__(self, other):
        if isinstance(other, _REAL):
            return self._rbinary("pow", other)
        return NotImplemented

    def sin(self):
        v, d = _sin_rule(self.value)
        return Dual(v, self.tangent * d)

    def cos(self):
        v, d = _cos_rule(self.value)
        return Dual(v, self.tangent * d)


class DualN(ForwardDual):
    """Forward dual whose tangent is a width-N numpy block.

    One evaluation carries N directional derivatives at once. The block is
    treated as immutable; operations always allocate a fresh one.
    """

    __slots__ = ("value", "tangent", "width")

    def __init__(self, value: float, tangent: np.ndarray):
        self.value = value
        self.tangent = tangent
        self.width = tangent.shape[0]

    def __repr__(self):
        return f"DualN({self.value!r}, {self.tangent.tolist()!r})"

    @property
    def tangent_block(self) -> np.ndarray:
        return self.tangent

    def _same(self, other) -> bool:
        if other.__class__ is DualN:
            if other.width != self.width:
                raise UsageError(f"tangent widths differ: {self.width} vs {other.width}")
            return True
        return False

    # inf/NaN partials are data here, not errors
    @_quiet
    def _unary(self, op):
        v, d = R.UNARY_RULES[op](self.value)
        return DualN(v, self.tangent * d)

    @_quiet
    def _binary(self, op, other):
        if self._same(other):
            v, da, db = R.BINARY_RULES[op](self.value, other.value)
            return DualN(v, self.tangent * da + other.tangent * db)
        if isinstance(other, _REAL):
            v, da, _ = R.BINARY_RULES[op](self.value, other)
            return DualN(v, self.tangent * da)
        return _kind_mismatch(self, other)

    @_quiet
    def _rbinary(self, op, other):
        v, _, db = R.BINARY_RULES[op](other, self.value)
        return DualN(v, self.tangent * db)

    def __neg__(self):
        return DualN(-self.value, -self.tangent)

    def __pos__(self):
        return self

    def __add__(self, other):
        if self._same(other):
            return DualN(self.value + other.value, self.tangent + other.tangent)
        if isinstance(other, _REAL):
            return DualN(self.value + other, self.tangent)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __radd__(self, other):
        if isinstance(other, _REAL):
            return DualN(other + self.value, self.tangent)
        return NotImplemented

    def __sub__(self, other):
        if self._same(other):
            return DualN(self.value - other.value, self.tangent - other.tangent)
        if isinstance(other, _REAL):
            return DualN(self.value - other, self.tangent)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _REAL):
            return DualN(other - self.value, -self.tangent)
        return NotImplemented

    def __mul__(self, other):
        if self._same(other):
            return DualN(self.value * other.value,
                         self.tangent * other.value + other.tangent * self.value)
        if isinstance(other, _REAL):
            return DualN(self.value * other, self.tangent * other)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, _REAL):
            return DualN(other * self.value, other * self.tangent)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self._binary("div", other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _REAL):
            return self._rbinary("div", other)
        return NotImplemented

    def __pow__(self, other):
        if isinstance(other, _REAL):
            v, d = _pow_const_rule(self.value, other)
            return DualN(v, self.tangent * d)
        if isinstance(other, Scalar):
            return self._binary("pow", other)
        return NotImplemented

    def __rpow__(self, other):
        if isinstance(other, _REAL):
            return self._rbinary("pow", other)
        return NotImplemented

    def sin(self):
        v, d = _sin_rule(self.value)
        return DualN(v, self.tangent * d)

    def cos(self):
        v, d = _cos_rule(self.value)
        return DualN(v, self.tangent * d)


# --------------------------------------------------------------------------
# reverse mode
# --------------------------------------------------------------------------


class ReverseScalar(Scalar):
    """A value recorded as node ``node`` on ``tape``.

    Operations append nodes to the same tape. A scalar is invalidated when its
    tape is reset; using it afterwards raises :class:`UsageError`.
    """

    __slots__ = ("value", "node", "tape", "_gen")

    def __init__(self, value: float, node: int, tape: Tape):
        self.value = value
        self.node = node
        self.tape = tape
        self._gen = tape.generation

    def __repr__(self):
        return f"ReverseScalar({self.value!r}, node={self.node})"

    def _live_tape(self) -> Tape:
        tape = self.tape
        if self._gen != tape.generation:
            raise UsageError("reverse scalar used after its tape was reset")
        return tape

    def _shared_tape(self, other: "ReverseScalar") -> Tape:
        tape = self.tape
        if other.tape is not tape:
            raise UsageError("reverse scalars belong to different tapes")
        if self._gen != tape.generation or other._gen != tape.generation:
            raise UsageError("reverse scalar used after its tape was reset")
        return tape

    def _unary(self, op):
        tape = self._live_tape()
        v, d = R.UNARY_RULES[op](self.value)
        return ReverseScalar(v, tape._push1(op, self.node, d), tape)

    def _binary(self, op, other):
        if other.__class__ is ReverseScalar:
            tape = self._shared_tape(other)
            v, da, db = R.BINARY_RULES[op](self.value, other.value)
            return ReverseScalar(v, tape._push2(op, self.node, other.node, da, db), tape)
        if isinstance(other, _REAL):
            tape = self._live_tape()
            v, da, _ = R.BINARY_RULES[op](self.value, other)
            return ReverseScalar(v, tape._push1(op, self.node, da), tape)
        return _kind_mismatch(self, other)

    def _rbinary(self, op, other):
        tape = self._live_tape()
        v, _, db = R.BINARY_RULES[op](other, self.value)
        return ReverseScalar(v, tape._push1(op, self.node, db), tape)

    def __neg__(self):
        tape = self._live_tape()
        return ReverseScalar(-self.value, tape._push1("neg", self.node, -1.0), tape)

    def __pos__(self):
        return self

    def __add__(self, other):
        if other.__class__ is ReverseScalar:
            tape = self._shared_tape(other)
            return ReverseScalar(self.value + other.value,
                                 tape._push2("add", self.node, other.node, 1.0, 1.0), tape)
        if isinstance(other, _REAL):
            tape = self._live_tape()
            return ReverseScalar(self.value + other, tape._push1("add", self.node, 1.0), tape)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __radd__(self, other):
        if isinstance(other, _REAL):
            tape = self._live_tape()
            return ReverseScalar(other + self.value, tape._push1("add", self.node, 1.0), tape)
        return NotImplemented

    def __sub__(self, other):
        if other.__class__ is ReverseScalar:
            tape = self._shared_tape(other)
            return ReverseScalar(self.value - other.value,
                                 tape._push2("sub", self.node, other.node, 1.0, -1.0), tape)
        if isinstance(other, _REAL):
            tape = self._live_tape()
            return ReverseScalar(self.value - other, tape._push1("sub", self.node, 1.0), tape)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _REAL):
            tape = self._live_tape()
            return ReverseScalar(other - self.value, tape._push1("sub", self.node, -1.0), tape)
        return NotImplemented

    def __mul__(self, other):
        if other.__class__ is ReverseScalar:
            tape = self._shared_tape(other)
            return ReverseScalar(self.value * other.value,
                                 tape._push2("mul", self.node, other.node, other.value, self.value),
                                 tape)
        if isinstance(other, _REAL):
            tape = self._live_tape()
            return ReverseScalar(self.value * other, tape._push1("mul", self.node, other), tape)
        if isinstance(other, Scalar):
            return _kind_mismatch(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, _REAL):
            tape = self._live_tape()
            return ReverseScalar(other * self.value, tape._push1("mul", self.node, other), tape)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self._binary("div", other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _REAL):
            return self._rbinary("div", other)
        return NotImplemented

    def __pow__(self, other):
        if isinstance(other, _REAL):
            tape = self._live_tape()
            v, d = _pow_const_rule(self.value, other)
            return ReverseScalar(v, tape._push1("pow", self.node, d), tape)
        if isinstance(other, Scalar):
            return self._binary("pow", other)
        return NotImplemented

    def __rpow__(self, other):
        if isinstance(other, _REAL):
            return self._rbinary("pow", other)
        return NotImplemented

    def __lt__(self, other):
        return self.value < value_of(other)

    def __le__(self, other):
        return self.value <= value_of(other)

    def __gt__(self, other):
        return self.value > value_of(other)

    def __ge__(self, other):
        return self.value >= value_of(other)

    def __eq__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self.value == value_of(other)
        return NotImplemented

    def __ne__(self, other):
        if isinstance(other, (Scalar, int, float)):
            return self.value != value_of(other)
        return NotImplemented

    __hash__ = None

    def sin(self):
        tape = self._live_tape()
        v, d = _sin_rule(self.value)
        return ReverseScalar(v, tape._push1("sin", self.node, d), tape)

    def cos(self):
        tape = self._live_tape()
        v, d = _cos_rule(self.value)
        return ReverseScalar(v, tape._push1("cos", self.node, d), tape)

    def tan(self):
        return self._unary("tan")

    def exp(self):
        return self._unary("exp")

    def ln(self):
        return self._unary("ln")

    log = ln

    def sqrt(self):
        return self._unary("sqrt")

    def __abs__(self):
        return self._unary("abs")

    def minimum(self, other):
        return self._binary("min", other)

    def maximum(self, other):
        return self._binary("max", other)


Real = Union[float, int]
AnyScalar = Union[float, Dual, DualN, ReverseScalar]


# --------------------------------------------------------------------------
# constructors and introspection
# --------------------------------------------------------------------------


def kind_of(x) -> ScalarKind:
    if isinstance(x, _REAL):
        return PLAIN
    if isinstance(x, Dual):
        return ScalarKind.forward(1)
    if isinstance(x, DualN):
        return ScalarKind.forward(x.width)
    if isinstance(x, ReverseScalar):
        return REVERSE
    raise UsageError(f"{type(x).__name__} is not a differentiable scalar")


def constant(v: Real, kind: ScalarKind = PLAIN, tape: Tape | None = None) -> AnyScalar:
    """A scalar of ``kind`` with zero derivative."""
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"constant must be finite, got {v}")
    if kind.name == "plain":
        return v
    if kind.name == "forward":
        if kind.width == 1:
            return Dual(v, 0.0)
        return DualN(v, np.zeros(kind.width))
    if tape is None:
        raise UsageError("a reverse constant needs a tape")
    return ReverseScalar(v, tape._push0("const"), tape)


def seed_variable(v: Real, direction, width: int | None = None) -> ForwardDual:
    """Forward dual with value ``v`` and tangent ``direction``.

    ``direction`` is a sequence (its length sets the width) or, for width 1,
    a bare float.
    """
    if isinstance(direction, _REAL):
        block = [float(direction)]
    else:
        block = np.asarray(direction, dtype=float).ravel()
    if width is not None and len(block) != width:
        raise ArityError(f"direction has length {len(block)}, expected width {width}")
    if len(block) == 0:
        raise ArityError("direction must have at least one channel")
    if len(block) == 1:
        return Dual(float(v), float(block[0]))
    return DualN(float(v), np.array(block, dtype=float))


def variable(v: Real, tape: Tape) -> ReverseScalar:
    """Record ``v`` as the next input leaf of ``tape``."""
    node = tape._push0("input")
    tape.input_nodes.append(node)
    return ReverseScalar(float(v), node, tape)


def value_of(a) -> float:
    if isinstance(a, Scalar):
        return a.value
    return a


def tangent_of(a, width: int = 1) -> np.ndarray:
    """Tangent block of a forward dual; zeros for plain constants."""
    if isinstance(a, ForwardDual):
        return a.tangent_block
    if isinstance(a, _REAL):
        return np.zeros(width)
    raise UsageError(f"{kind_of(a)} scalars carry no tangent")


def is_finite(a) -> bool:
    if isinstance(a, ForwardDual):
        return math.isfinite(a.value) and bool(np.all(np.isfinite(a.tangent_block)))
    return math.isfinite(value_of(a))


def _check_op(op: str, table) -> None:
    if op not in table:
        raise UsageError(f"unknown operation {op!r}")


def apply_unary(op: str, a):
    _check_op(op, R.UNARY_RULES)
    if isinstance(a, Scalar):
        if op == "neg":
            return -a
        return a._unary(op)
    return R.UNARY_VALUES[op](float(a))


def apply_binary(op: str, a, b):
    _check_op(op, R.BINARY_RULES)
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        raise UsageError(f"cannot combine {ka} with {kb} operands")
    if isinstance(a, Scalar):
        return a._binary(op, b)
    return R.BINARY_VALUES[op](float(a), float(b))


_COMPARE = {
    "lt": lambda x, y: x < y,
    "le": lambda x, y: x <= y,
    "gt": lambda x, y: x > y,
    "ge": lambda x, y: x >= y,
    "eq": lambda x, y: x == y,
}


def compare(op: str, a, b) -> bool:
    """Compare value channels only."""
    if op not in _COMPARE:
        raise UsageError(f"unknown comparison {op!r}")
    return _COMPARE[op](value_of(a), value_of(b))


# --------------------------------------------------------------------------
# generic math; accept any kind including plain floats
# --------------------------------------------------------------------------


def sin(x):
    if isinstance(x, Scalar):
        return x.sin()
    return _v_sin(x)


def cos(x):
    if isinstance(x, Scalar):
        return x.cos()
    return _v_cos(x)


def tan(x):
    if isinstance(x, Scalar):
        return x.tan()
    return R.v_tan(x)


def exp(x):
    if isinstance(x, Scalar):
        return x.exp()
    return R.v_exp(x)


def ln(x):
    if isinstance(x, Scalar):
        return x.ln()
    return R.v_ln(x)


log = ln


def sqrt(x):
    if isinstance(x, Scalar):
        return x.sqrt()
    return R.v_sqrt(x)


def minimum(a, b):
    """Differentiable min; on ties the derivative follows ``a``."""
    if isinstance(a, Scalar):
        return a.minimum(b)
    if isinstance(b, Scalar):
        return b._rbinary("min", a)
    return R.v_min(a, b)


def maximum(a, b):
    """Differentiable max; on ties the derivative follows ``a``."""
    if isinstance(a, Scalar):
        return a.maximum(b)
    if isinstance(b, Scalar):
        return b._rbinary("max", a)
    return R.v_max(a, b)


def power(a, b):
    if isinstance(a, Scalar) or isinstance(b, Scalar):
        return a ** b
    return R.v_pow(a, b)
