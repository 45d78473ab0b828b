"""Uniform Jacobian computation over interchangeable derivative methods.

A :class:`DifferentiableFunction` is evaluated on a slice of scalars of any
kind. The four derivative methods assemble the dense ``m x n`` Jacobian with
different numbers of evaluations:

==========================  =============================================
method                      function evaluations per Jacobian
==========================  =============================================
``FiniteDifferencing``      ``n + 1`` (forward differences)
``ForwardAD``               ``n`` (one width-1 pass per column)
``ForwardADMulti(N)``       ``ceil(n / N)`` (N columns per pass)
``ReverseAD``               ``1`` recorded pass, plus ``m`` reverse sweeps
==========================  =============================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArityError, UsageError
from .scalar import Dual, DualN, ForwardDual, ReverseScalar, Scalar, variable
from .tape import Tape

# sqrt of double-precision machine epsilon
FD_STEP = 2.0 ** -26


class DifferentiableFunction:
    """A function R^n -> R^m written against the generic scalar surface.

    Subclasses set ``num_inputs``/``num_outputs`` and implement ``call``,
    which must return exactly ``num_outputs`` scalars of the inputs' kind
    (or plain floats for outputs that do not depend on the inputs).
    """

    num_inputs: int
    num_outputs: int

    def call(self, inputs: Sequence) -> list:
        raise NotImplementedError


class FunctionAdapter(DifferentiableFunction):
    def __init__(self, fn: Callable[[Sequence], Sequence], num_inputs: int, num_outputs: int):
        if num_inputs < 1 or num_outputs < 1:
            raise UsageError("a differentiable function needs at least one input and one output")
        self.fn = fn
        self.num_inputs = num_inputs
        self.num_outputs = num_outputs

    def call(self, inputs):
        return self.fn(inputs)

    def __repr__(self):
        name = getattr(self.fn, "__name__", "fn")
        return f"FunctionAdapter({name}, n={self.num_inputs}, m={self.num_outputs})"


def differentiable(fn: Callable[[Sequence], Sequence], num_inputs: int, num_outputs: int) -> FunctionAdapter:
    """Wrap a plain callable ``fn(inputs) -> outputs``."""
    return FunctionAdapter(fn, num_inputs, num_outputs)


@dataclass
class DerivativeResult:
    value: np.ndarray
    jacobian: np.ndarray
    evaluations: int
    sweeps: int = 0
    flagged: bool = field(init=False)

    def __post_init__(self):
        # non-finite entries are reported, never raised
        self.flagged = not bool(np.all(np.isfinite(self.jacobian)))


# --------------------------------------------------------------------------
# methods
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteDifferencing:
    """Forward differences. ``h=None`` uses ``2**-26 * max(1, |x_j|)`` per coordinate."""

    h: float | None = None

    def __post_init__(self):
        if self.h is not None and not self.h > 0:
            raise UsageError(f"finite-difference step must be positive, got {self.h}")

    @property
    def name(self) -> str:
        return "fd"

    def derivative(self, function, inputs) -> DerivativeResult:
        return derivative_finite_diff(function, inputs, self.h)


@dataclass(frozen=True)
class ForwardAD:
    @property
    def name(self) -> str:
        return "forward"

    def derivative(self, function, inputs) -> DerivativeResult:
        return derivative_forward(function, inputs)


@dataclass(frozen=True)
class ForwardADMulti:
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise UsageError(f"forward-multi width must be >= 1, got {self.width}")

    @property
    def name(self) -> str:
        return f"forward-multi:{self.width}"

    def derivative(self, function, inputs) -> DerivativeResult:
        return derivative_forward_multi(function, inputs, self.width)


@dataclass(frozen=True)
class ReverseAD:
    @property
    def name(self) -> str:
        return "reverse"

    def derivative(self, function, inputs, tape: Tape | None = None) -> DerivativeResult:
        return derivative_reverse(function, inputs, tape)


DerivativeMethod = FiniteDifferencing | ForwardAD | ForwardADMulti | ReverseAD


def parse_method(text: str) -> DerivativeMethod:
    """Parse ``fd``, ``forward``, ``forward-multi:<N>`` or ``reverse``."""
    text = text.strip()
    if text == "fd":
        return FiniteDifferencing()
    if text == "forward":
        return ForwardAD()
    if text == "reverse":
        return ReverseAD()
    if text.startswith("forward-multi:"):
        try:
            width = int(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad forward-multi width in {text!r}") from None
        return ForwardADMulti(width)
    raise UsageError(f"unknown derivative method {text!r}")


# --------------------------------------------------------------------------
# evaluation helpers
# --------------------------------------------------------------------------


def _as_inputs(function: DifferentiableFunction, inputs) -> list[float]:
    xs = [float(v) for v in np.asarray(inputs, dtype=float).ravel()]
    if len(xs) != function.num_inputs:
        raise ArityError(f"expected {function.num_inputs} inputs, got {len(xs)}")
    return xs


def _evaluate(function: DifferentiableFunction, xs: list) -> list:
    out = function.call(xs)
    if len(out) != function.num_outputs:
        raise ArityError(f"function returned {len(out)} outputs, declared {function.num_outputs}")
    return out


def _values(out: list) -> np.ndarray:
    return np.array([o.value if isinstance(o, Scalar) else float(o) for o in out])


def call(function: DifferentiableFunction, inputs) -> np.ndarray:
    """Plain evaluation with floats."""
    return _values(_evaluate(function, _as_inputs(function, inputs)))


def derivative_finite_diff(function, inputs, h: float | None = None) -> DerivativeResult:
    xs = _as_inputs(function, inputs)
    n, m = function.num_inputs, function.num_outputs
    f0 = _values(_evaluate(function, xs))
    jac = np.empty((m, n))
    for j in range(n):
        step = h if h is not None else FD_STEP * max(1.0, abs(xs[j]))
        xp = list(xs)
        xp[j] = xs[j] + step
        # divide by the step actually representable at x_j
        dx = xp[j] - xs[j]
        fj = _values(_evaluate(function, xp))
        # non-finite columns are flagged by DerivativeResult, not warned about
        with np.errstate(invalid="ignore", over="ignore"):
            jac[:, j] = (fj - f0) / dx
    return DerivativeResult(f0, jac, evaluations=n + 1)


def derivative_forward(function, inputs) -> DerivativeResult:
    xs = _as_inputs(function, inputs)
    n, m = function.num_inputs, function.num_outputs
    jac = np.empty((m, n))
    value = None
    for j in range(n):
        duals = [Dual(v, 0.0) for v in xs]
        duals[j] = Dual(xs[j], 1.0)
        out = _evaluate(function, duals)
        for i, o in enumerate(out):
            jac[i, j] = o.tangent if isinstance(o, Dual) else _forward_tangent(o, 1)[0]
        if value is None:
            value = _values(out)
    return DerivativeResult(value, jac, evaluations=n)


def _forward_tangent(o, width: int) -> np.ndarray:
    if isinstance(o, ForwardDual):
        if o.width != width:
            raise UsageError(f"output has tangent width {o.width}, expected {width}")
        return o.tangent_block
    if isinstance(o, Scalar):
        raise UsageError("function mixed scalar kinds in its outputs")
    return np.zeros(width)


def derivative_forward_multi(function, inputs, width: int) -> DerivativeResult:
    if width < 1:
        raise UsageError(f"forward-multi width must be >= 1, got {width}")
    if width == 1:
        return derivative_forward(function, inputs)
    xs = _as_inputs(function, inputs)
    n, m = function.num_inputs, function.num_outputs
    jac = np.empty((m, n))
    zero = np.zeros(width)
    eye = np.eye(width)
    value = None
    passes = math.ceil(n / width)
    for p in range(passes):
        lo = p * width
        hi = min(lo + width, n)
        duals = [DualN(v, zero) for v in xs]
        for k in range(lo, hi):
            duals[k] = DualN(xs[k], eye[k - lo])
        out = _evaluate(function, duals)
        for i, o in enumerate(out):
            jac[i, lo:hi] = _forward_tangent(o, width)[: hi - lo]
        if value is None:
            value = _values(out)
    return DerivativeResult(value, jac, evaluations=passes)


def derivative_reverse(function, inputs, tape: Tape | None = None) -> DerivativeResult:
    xs = _as_inputs(function, inputs)
    n, m = function.num_inputs, function.num_outputs
    if tape is None:
        tape = Tape()
    tape.reset()
    leaves = [variable(v, tape) for v in xs]
    out = _evaluate(function, leaves)
    value = _values(out)
    jac = np.zeros((m, n))
    inputs_idx = tape.input_nodes
    adj = [0.0] * len(tape)
    sweeps = 0
    for i, o in enumerate(out):
        if isinstance(o, ReverseScalar):
            if o.tape is not tape:
                raise UsageError("output recorded on a foreign tape")
            tape.sweep(adj, o.node, 1.0)
            sweeps += 1
            jac[i] = [adj[k] for k in inputs_idx]
            adj[: o.node + 1] = [0.0] * (o.node + 1)
        elif isinstance(o, Scalar):
            raise UsageError("function mixed scalar kinds in its outputs")
    return DerivativeResult(value, jac, evaluations=1, sweeps=sweeps)


# --------------------------------------------------------------------------
# single products
# --------------------------------------------------------------------------


def jvp(function, inputs, direction) -> tuple[np.ndarray, np.ndarray]:
    """Value and Jacobian-vector product along ``direction`` (one width-1 pass)."""
    xs = _as_inputs(function, inputs)
    d = [float(v) for v in np.asarray(direction, dtype=float).ravel()]
    if len(d) != len(xs):
        raise ArityError(f"direction has length {len(d)}, expected {len(xs)}")
    out = _evaluate(function, [Dual(v, t) for v, t in zip(xs, d)])
    prod = np.array([o.tangent if isinstance(o, Dual) else _forward_tangent(o, 1)[0] for o in out])
    return _values(out), prod


def vjp(function, inputs, adjoint, tape: Tape | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Value and vector-Jacobian product for output weights ``adjoint`` (one sweep)."""
    xs = _as_inputs(function, inputs)
    w = [float(v) for v in np.asarray(adjoint, dtype=float).ravel()]
    if len(w) != function.num_outputs:
        raise ArityError(f"adjoint has length {len(w)}, expected {function.num_outputs}")
    if tape is None:
        tape = Tape()
    tape.reset()
    leaves = [variable(v, tape) for v in xs]
    out = _evaluate(function, leaves)
    nodes, seeds = [], []
    for o, s in zip(out, w):
        if isinstance(o, ReverseScalar) and s != 0.0:
            nodes.append(o.node)
            seeds.append(s)
    adj = tape.backward_multi(nodes, seeds)
    return _values(out), adj[tape.input_nodes]


# --------------------------------------------------------------------------
# block
# --------------------------------------------------------------------------


class DifferentiableBlock:
    """A function bundled with a derivative method and its scratch state.

    The reverse method keeps one tape for the block's lifetime; after the
    first derivative it already has the capacity later calls need.
    """

    def __init__(self, function: DifferentiableFunction, method: DerivativeMethod):
        self.function = function
        self.method = method
        self.tape = Tape() if isinstance(method, ReverseAD) else None
        self.evaluation_count = 0
        self.sweep_count = 0

    def __repr__(self):
        return f"DifferentiableBlock({self.function!r}, {self.method.name})"

    @property
    def num_inputs(self) -> int:
        return self.function.num_inputs

    @property
    def num_outputs(self) -> int:
        return self.function.num_outputs

    def call(self, inputs) -> np.ndarray:
        return call(self.function, inputs)

    def derivative(self, inputs) -> DerivativeResult:
        if self.tape is not None:
            res = derivative_reverse(self.function, inputs, self.tape)
        else:
            res = self.method.derivative(self.function, inputs)
        self.evaluation_count = res.evaluations
        self.sweep_count = res.sweeps
        return res


def evaluation_count(block: DifferentiableBlock) -> int:
    return block.evaluation_count
