"""A 24-joint serial chain with five task points, and a pseudo-inverse root finder.

The chain stands in for a legged base carrying an arm: four "foot" frames sit
part-way down the chain and the "end-effector" frame is the last one. The
constraint has one scalar per task point, the squared distance to its target;
for the end-effector a second point one ``ee_axis_length`` along its local x
axis is also matched, folding orientation into the same scalar. The
constraint Jacobian is 5 x 24.

Forward kinematics is written against the generic scalar surface, so it runs
on plain floats and on every AD kind.
"""

from __future__ import annotations

import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import (
    DerivativeMethod,
    DifferentiableBlock,
    DifferentiableFunction,
    FiniteDifferencing,
    ForwardAD,
    ForwardADMulti,
    ReverseAD,
)
from .errors import ArityError, UsageError
from .linalg import DEFAULT_DAMPING, norm2, pinv_solve
from .scalar import cos, sin

log = logging.getLogger(__name__)

DOF = 24
STEP_SCALE = 0.5
TOLERANCE = 1e-4
MAX_ITERS = 1000
DIVERGENCE_STREAK = 25
# iterations allowed before |r| is expected to stop rising
BURN_IN = 10
SAMPLE_HALF_RANGE = math.pi / 2

_X, _Y, _Z = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)

# (axis, offset from the previous joint frame) for each joint. The values were
# picked from a seeded search over random chains for reliable convergence of
# the five-target root finder; they are not a model of any real robot.
_DEFAULT_JOINTS: tuple[tuple[tuple[float, float, float], tuple[float, float, float]], ...] = (
    # trunk analogue, first foot
    (_Y, (0.00, 0.00, -0.32)),
    (_X, (0.00, 0.00, 0.21)),
    (_X, (0.00, 0.00, 0.27)),
    (_Z, (0.27, 0.00, 0.00)),
    (_Y, (0.00, -0.24, 0.00)),
    (_Y, (0.00, 0.00, -0.28)),
    (_Z, (0.00, 0.00, 0.20)),
    # second foot
    (_Y, (0.00, -0.33, 0.00)),
    (_Y, (0.00, 0.00, 0.12)),
    # third foot
    (_Y, (0.00, -0.23, 0.00)),
    (_Z, (0.00, 0.00, 0.14)),
    (_Z, (0.26, 0.00, 0.00)),
    (_X, (0.00, 0.00, -0.24)),
    (_X, (0.00, 0.00, 0.15)),
    (_Y, (0.26, 0.00, 0.00)),
    # fourth foot
    (_Y, (0.00, 0.00, 0.23)),
    (_X, (0.00, -0.19, 0.00)),
    (_Z, (0.00, 0.22, 0.00)),
    (_Y, (0.16, 0.00, 0.00)),
    # arm
    (_Z, (0.18, 0.00, 0.00)),
    (_Z, (0.00, -0.35, 0.00)),
    (_Y, (0.00, -0.34, 0.00)),
    (_Z, (0.00, 0.28, 0.00)),
    (_X, (0.00, 0.21, 0.00)),
)

# joint index after which each task point sits; the last one is the end-effector
_DEFAULT_TASK_JOINTS = (6, 8, 14, 18, 23)
_DEFAULT_TASK_OFFSETS = (
    (-0.01, 0.16, -0.09),
    (0.13, 0.19, 0.16),
    (0.19, -0.14, -0.13),
    (-0.11, -0.06, -0.15),
    (-0.14, -0.19, 0.17),
)
_DEFAULT_EE_AXIS_LENGTH = 0.3

# Nominal configuration the demo targets are generated from.
STANCE = (
    0.04, 1.42, -1.12, 1.41, -0.59, -0.24, 1.03, -0.29, 0.16, -1.48, 0.80, 0.12,
    -0.53, 0.91, -0.62, -0.15, -1.15, -0.30, -0.93, -0.75, 0.79, -0.69, -0.05, 1.51,
)


@dataclass(frozen=True)
class ChainModel:
    axes: tuple[tuple[float, float, float], ...]
    offsets: tuple[tuple[float, float, float], ...]
    task_joints: tuple[int, ...]
    task_offsets: tuple[tuple[float, float, float], ...]
    ee_axis_length: float = _DEFAULT_EE_AXIS_LENGTH

    def __post_init__(self):
        if len(self.axes) != len(self.offsets):
            raise UsageError("axes and offsets must have one entry per joint")
        for a in self.axes:
            if abs(math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) - 1.0) > 1e-12:
                raise UsageError(f"joint axis {a} is not unit length")
        if len(self.task_joints) != len(self.task_offsets):
            raise UsageError("task_joints and task_offsets must match")
        if list(self.task_joints) != sorted(self.task_joints) or self.task_joints[-1] >= len(self.axes):
            raise UsageError("task joints must be increasing and inside the chain")

    @property
    def dof(self) -> int:
        return len(self.axes)

    @property
    def num_tasks(self) -> int:
        return len(self.task_joints)


def default_chain() -> ChainModel:
    """The fixed 24-joint model used by the demo."""
    return ChainModel(
        axes=tuple(a for a, _ in _DEFAULT_JOINTS),
        offsets=tuple(o for _, o in _DEFAULT_JOINTS),
        task_joints=_DEFAULT_TASK_JOINTS,
        task_offsets=_DEFAULT_TASK_OFFSETS,
        ee_axis_length=_DEFAULT_EE_AXIS_LENGTH,
    )


def _transform_point(rot, p, off):
    """p + rot @ off, skipping exact-zero offset components."""
    out = list(p)
    for c in range(3):
        if off[c] != 0.0:
            out[0] = out[0] + rot[0][c] * off[c]
            out[1] = out[1] + rot[1][c] * off[c]
            out[2] = out[2] + rot[2][c] * off[c]
    return out


def _rotate(rot, axis, c, s):
    """rot @ Rot(axis, angle) given the angle's cosine and sine."""
    if axis == _Z:
        return [[r[0] * c + r[1] * s, r[1] * c - r[0] * s, r[2]] for r in rot]
    if axis == _Y:
        return [[r[0] * c - r[2] * s, r[1], r[2] * c + r[0] * s] for r in rot]
    if axis == _X:
        return [[r[0], r[1] * c + r[2] * s, r[2] * c - r[1] * s] for r in rot]
    # Rodrigues: I + s K + (1 - c) K^2 for a general unit axis
    x, y, z = axis
    t = 1.0 - c
    local = [
        [t * (x * x) + c, t * (x * y) - s * z, t * (x * z) + s * y],
        [t * (x * y) + s * z, t * (y * y) + c, t * (y * z) - s * x],
        [t * (x * z) - s * y, t * (y * z) + s * x, t * (z * z) + c],
    ]
    return [[r[0] * local[0][k] + r[1] * local[1][k] + r[2] * local[2][k] for k in range(3)] for r in rot]


def chain_frames(model: ChainModel, q: Sequence) -> list[tuple[list, list]]:
    """(rotation rows, origin) of every task frame."""
    if len(q) != model.dof:
        raise ArityError(f"configuration has length {len(q)}, expected {model.dof}")
    rot = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    p = [0.0, 0.0, 0.0]
    frames = []
    tasks = set(model.task_joints)
    for k in range(model.dof):
        p = _transform_point(rot, p, model.offsets[k])
        rot = _rotate(rot, model.axes[k], cos(q[k]), sin(q[k]))
        if k in tasks:
            frames.append((rot, p))
    return frames


def chain_fk(model: ChainModel, q: Sequence) -> list[list]:
    """Positions of the task points, each a 3-list of scalars."""
    return [
        _transform_point(rot, p, off)
        for (rot, p), off in zip(chain_frames(model, q), model.task_offsets)
    ]


def _ee_axis_point(model: ChainModel, rot, point):
    return _transform_point(rot, point, (model.ee_axis_length, 0.0, 0.0))


@dataclass(frozen=True)
class ConstraintTargets:
    """Target positions for the task points, plus the end-effector axis tip."""

    points: tuple[tuple[float, float, float], ...]
    ee_axis_point: tuple[float, float, float]
    configuration: tuple[float, ...]


def make_targets(model: ChainModel, q_star: Sequence[float]) -> ConstraintTargets:
    """Targets met exactly at ``q_star``."""
    q_star = [float(v) for v in q_star]
    frames = chain_frames(model, q_star)
    points = [_transform_point(rot, p, off) for (rot, p), off in zip(frames, model.task_offsets)]
    ee_rot = frames[-1][0]
    return ConstraintTargets(
        points=tuple(tuple(pt) for pt in points),
        ee_axis_point=tuple(_ee_axis_point(model, ee_rot, points[-1])),
        configuration=tuple(q_star),
    )


def _sq_dist(a, b):
    d0 = a[0] - b[0]
    d1 = a[1] - b[1]
    d2 = a[2] - b[2]
    return d0 * d0 + d1 * d1 + d2 * d2


def constraint(model: ChainModel, targets: ConstraintTargets, q: Sequence) -> list:
    """Five residuals; all zero exactly when every target is met."""
    frames = chain_frames(model, q)
    res = []
    last = model.num_tasks - 1
    for i, ((rot, p), off) in enumerate(zip(frames, model.task_offsets)):
        pt = _transform_point(rot, p, off)
        r = _sq_dist(pt, targets.points[i])
        if i == last:
            r = r + _sq_dist(_ee_axis_point(model, rot, pt), targets.ee_axis_point)
        res.append(r)
    return res


class ChainConstraint(DifferentiableFunction):
    def __init__(self, model: ChainModel, targets: ConstraintTargets):
        self.model = model
        self.targets = targets
        self.num_inputs = model.dof
        self.num_outputs = model.num_tasks

    def call(self, inputs):
        return constraint(self.model, self.targets, inputs)


def sample_configuration(rng: np.random.Generator, dof: int = DOF) -> np.ndarray:
    return rng.uniform(-SAMPLE_HALF_RANGE, SAMPLE_HALF_RANGE, size=dof)


def demo_problem(model: ChainModel | None = None, stance: Sequence[float] | None = None) -> ChainConstraint:
    """The demo constraint: targets are where ``stance`` puts the task points."""
    model = model or default_chain()
    if stance is None:
        if model.dof != DOF:
            raise UsageError("a custom-size model needs an explicit stance")
        stance = STANCE
    return ChainConstraint(model, make_targets(model, stance))


# --------------------------------------------------------------------------
# root finding
# --------------------------------------------------------------------------


@dataclass
class RootFindReport:
    converged: bool
    iterations: int
    residual_norm: float
    seconds: float
    x: np.ndarray = field(repr=False)
    history: list[float] = field(default_factory=list, repr=False)
    derivative_seconds: float = 0.0

    @property
    def monotone_violations(self) -> int:
        """Iterations after the burn-in where ``|r|`` went up."""
        h = self.history[BURN_IN:]
        return sum(1 for a, b in zip(h, h[1:]) if b > a)


def root_find(
    block: DifferentiableBlock,
    x0,
    tol: float = TOLERANCE,
    max_iters: int = MAX_ITERS,
    step_scale: float = STEP_SCALE,
    damping: float = DEFAULT_DAMPING,
) -> RootFindReport:
    """Iterate ``x <- x - step_scale * pinv(J) r`` until ``|r| <= tol``.

    Gives up after ``max_iters`` updates, or once ``|r|`` has grown for
    ``DIVERGENCE_STREAK`` consecutive iterations.
    """
    if not tol > 0:
        raise UsageError(f"tol must be positive, got {tol}")
    x = np.array(x0, dtype=float)
    history = []
    streak = 0
    deriv_time = 0.0
    t0 = time.perf_counter()
    it = 0
    while True:
        td = time.perf_counter()
        res = block.derivative(x)
        deriv_time += time.perf_counter() - td
        rn = norm2(res.value)
        if history and rn > history[-1]:
            streak += 1
        else:
            streak = 0
        history.append(rn)
        if rn <= tol:
            converged = True
            break
        if it >= max_iters or streak >= DIVERGENCE_STREAK or not math.isfinite(rn) or res.flagged:
            converged = False
            break
        x = x - step_scale * pinv_solve(res.jacobian, res.value, damping)
        it += 1
    return RootFindReport(
        converged=converged,
        iterations=it,
        residual_norm=rn,
        seconds=time.perf_counter() - t0,
        x=x,
        history=history,
        derivative_seconds=deriv_time,
    )


DEMO_METHODS: tuple[DerivativeMethod, ...] = (
    ForwardAD(),
    ForwardADMulti(DOF),
    ReverseAD(),
    FiniteDifferencing(),
)


@dataclass
class MethodSummary:
    method: str
    trials: int
    converged: int
    mean_seconds: float
    std_seconds: float
    mean_iterations: float
    reports: list[RootFindReport] = field(default_factory=list, repr=False)

    def csv_row(self) -> list[str]:
        return [
            self.method, str(self.trials), str(self.converged),
            repr(self.mean_seconds), repr(self.std_seconds), repr(self.mean_iterations),
        ]


KIN_CSV_HEADER = ("method", "trials", "converged", "mean_seconds", "std_seconds", "mean_iterations")


def summarize(method: str, reports: list[RootFindReport]) -> MethodSummary:
    """Timing and iteration statistics over the converged runs."""
    ok = [r for r in reports if r.converged]
    secs = [r.seconds for r in ok]
    iters = [r.iterations for r in ok]
    return MethodSummary(
        method=method,
        trials=len(reports),
        converged=len(ok),
        mean_seconds=statistics.fmean(secs) if secs else math.nan,
        std_seconds=statistics.pstdev(secs) if secs else math.nan,
        mean_iterations=statistics.fmean(iters) if iters else math.nan,
        reports=reports,
    )


def initial_states(num_trials: int, seed: int, dof: int = DOF) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.array([sample_configuration(rng, dof) for _ in range(num_trials)]).reshape(num_trials, dof)


def harness(
    num_trials: int,
    seed: int,
    methods: Sequence[DerivativeMethod] = DEMO_METHODS,
    problem: ChainConstraint | None = None,
    **root_kw,
) -> list[MethodSummary]:
    """Run the root finder from the same ``num_trials`` starts under each method."""
    if num_trials < 1:
        raise UsageError(f"num_trials must be >= 1, got {num_trials}")
    problem = problem or demo_problem()
    starts = initial_states(num_trials, seed, problem.num_inputs)
    out = []
    for method in methods:
        block = DifferentiableBlock(problem, method)
        reports = [root_find(block, x0, **root_kw) for x0 in starts]
        for k, rep in enumerate(reports):
            if rep.converged and rep.monotone_violations:
                log.info("%s trial %d: |r| rose on %d iterations after burn-in",
                         method.name, k, rep.monotone_violations)
        out.append(summarize(method.name, reports))
    return out
