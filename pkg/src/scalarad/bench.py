"""Seeded sin/cos benchmark functions and a timing harness over derivative methods.

A benchmark with ``n`` inputs, ``m`` outputs and ``o`` operations per output
is a fixed random program. Output ``j`` starts from one input and applies
``o`` steps of the form ``acc = trig(acc (+|*) x[i])`` with ``trig`` either
sin or cos. Every random choice is drawn from a splitmix64 stream in a fixed
order, so ``(n, m, o, seed)`` identifies the program exactly:

    for each output j:   start index
        for each step:   trig bit, combine bit, input index

Each draw maps to a choice by ``next_u64() % k``.
"""

from __future__ import annotations

import configparser
import csv
import io
import itertools
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .engine import (
    DerivativeMethod,
    DifferentiableBlock,
    DifferentiableFunction,
    ForwardADMulti,
    derivative_finite_diff,
    parse_method,
)
from .errors import ArityError, UsageError
from .rules import v_cos, v_sin
from .scalar import Scalar, cos, sin

MASK64 = (1 << 64) - 1

CSV_HEADER = (
    "method", "n", "m", "o", "w",
    "mean_seconds", "std_seconds", "evaluations", "max_abs_err_vs_fd", "flagged",
)


class SplitMix64:
    """Vigna's splitmix64 generator."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        return self.next_u64() % k

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)


SIN, COS = 0, 1
ADD, MUL = 0, 1


class Step(NamedTuple):
    trig: int      # SIN or COS
    combine: int   # ADD or MUL
    index: int


@dataclass(frozen=True)
class BenchmarkSpec(DifferentiableFunction):
    n: int
    m: int
    o: int
    seed: int
    starts: tuple[int, ...]
    steps: tuple[Step, ...]

    @property
    def num_inputs(self) -> int:
        return self.n

    @property
    def num_outputs(self) -> int:
        return self.m

    def output_steps(self, j: int) -> tuple[Step, ...]:
        return self.steps[j * self.o:(j + 1) * self.o]

    def call(self, inputs):
        return eval_benchmark(self, inputs)


def generate_benchmark(n: int, m: int, o: int, seed: int) -> BenchmarkSpec:
    if n < 1 or m < 1 or o < 1:
        raise UsageError(f"n, m and o must be >= 1, got n={n} m={m} o={o}")
    rng = SplitMix64(seed)
    starts, steps = [], []
    for _ in range(m):
        starts.append(rng.below(n))
        for _ in range(o):
            trig = rng.below(2)
            combine = rng.below(2)
            steps.append(Step(trig, combine, rng.below(n)))
    return BenchmarkSpec(n, m, o, int(seed) & MASK64, tuple(starts), tuple(steps))


def eval_benchmark(spec: BenchmarkSpec, inputs: Sequence) -> list:
    if len(inputs) != spec.n:
        raise ArityError(f"benchmark expects {spec.n} inputs, got {len(inputs)}")
    classes = {x.__class__ for x in inputs}
    if len(classes) == 1:
        cls = classes.pop()
        if issubclass(cls, Scalar):
            fsin, fcos = cls.sin, cls.cos
        else:
            fsin, fcos = v_sin, v_cos
    else:
        fsin, fcos = sin, cos
    o = spec.o
    steps = spec.steps
    out = []
    for j in range(spec.m):
        acc = inputs[spec.starts[j]]
        for trig, combine, i in steps[j * o:(j + 1) * o]:
            t = acc * inputs[i] if combine else acc + inputs[i]
            acc = fcos(t) if trig else fsin(t)
        out.append(acc)
    return out


def sample_inputs(n: int, w: int, input_seed: int) -> np.ndarray:
    """``w`` input vectors drawn uniformly from [-pi, pi]^n."""
    rng = SplitMix64(input_seed)
    flat = [-math.pi + 2.0 * math.pi * rng.uniform() for _ in range(n * w)]
    return np.array(flat).reshape(w, n)


# --------------------------------------------------------------------------
# trials
# --------------------------------------------------------------------------


@dataclass
class TrialConfig:
    spec: BenchmarkSpec
    w: int
    input_seed: int
    method: DerivativeMethod

    def __post_init__(self):
        if self.w < 1:
            raise UsageError(f"w must be >= 1, got {self.w}")


@dataclass
class TimingRecord:
    method: str
    n: int
    m: int
    o: int
    w: int
    mean_seconds: float
    std_seconds: float
    evaluations: int
    max_abs_err_vs_fd: float
    flagged: bool
    sweeps: int = 0
    per_input_seconds: list[float] = field(default_factory=list, repr=False)
    # reverse only: storage growth events and node count, per input
    tape_growth: list[int] = field(default_factory=list, repr=False)
    tape_nodes: list[int] = field(default_factory=list, repr=False)

    def csv_row(self) -> list[str]:
        return [
            self.method, str(self.n), str(self.m), str(self.o), str(self.w),
            repr(self.mean_seconds), repr(self.std_seconds), str(self.evaluations),
            repr(self.max_abs_err_vs_fd), "1" if self.flagged else "0",
        ]


def run_trial(config: TrialConfig) -> TimingRecord:
    """Differentiate the benchmark at each of the ``w`` inputs in order."""
    spec = config.spec
    block = DifferentiableBlock(spec, config.method)
    xs = sample_inputs(spec.n, config.w, config.input_seed)
    tape = block.tape
    times, growth, nodes = [], [], []
    evaluations = sweeps = 0
    flagged = False
    first = None
    for x in xs:
        before = tape.growth_events if tape is not None else 0
        t0 = time.perf_counter()
        res = block.derivative(x)
        times.append(time.perf_counter() - t0)
        if tape is not None:
            growth.append(tape.growth_events - before)
            nodes.append(len(tape))
        evaluations += block.evaluation_count
        sweeps += block.sweep_count
        flagged = flagged or res.flagged
        if first is None:
            first = res
    fd = derivative_finite_diff(spec, xs[0])
    err = float(np.max(np.abs(first.jacobian - fd.jacobian)))
    if not math.isfinite(err):
        flagged = True
    return TimingRecord(
        method=config.method.name, n=spec.n, m=spec.m, o=spec.o, w=config.w,
        mean_seconds=statistics.fmean(times), std_seconds=statistics.pstdev(times),
        evaluations=evaluations, max_abs_err_vs_fd=err, flagged=flagged, sweeps=sweeps,
        per_input_seconds=times, tape_growth=growth, tape_nodes=nodes,
    )


def format_csv(records: Iterable[TimingRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()


def run_suite(grid: Iterable[TrialConfig], progress=None) -> str:
    """Run every trial in order and return the CSV text."""
    records = []
    for config in grid:
        rec = run_trial(config)
        records.append(rec)
        if progress is not None:
            progress(rec)
    return format_csv(records)


def resolve_method(text: str, n: int) -> DerivativeMethod:
    """Like :func:`parse_method`, but ``forward-multi:n`` takes the width from ``n``."""
    if text.strip() == "forward-multi:n":
        return ForwardADMulti(n)
    return parse_method(text)


# --------------------------------------------------------------------------
# grid configs
# --------------------------------------------------------------------------


def _int_list(raw: str, key: str) -> list[int]:
    try:
        vals = [int(tok) for tok in raw.replace("\n", ",").split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"{key}: expected comma-separated integers, got {raw!r}") from None
    if not vals:
        raise UsageError(f"{key}: empty list")
    return vals


def parse_suite_config(text: str) -> list[TrialConfig]:
    """Expand an INI ``[grid]`` section into trial configs.

    Keys ``n``, ``m``, ``o``, ``w`` take comma-separated integers (``m = n``
    ties outputs to inputs for square Jacobians); ``seed`` and
    ``input_seed`` take one integer; ``methods`` lists method names.
    Trials are ordered by (n, m, o, w) and then by method.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise UsageError(f"bad suite config: {e}") from None
    if "grid" not in parser:
        raise UsageError("suite config needs a [grid] section")
    g = parser["grid"]
    missing = [k for k in ("n", "m", "o", "w", "methods") if k not in g]
    if missing:
        raise UsageError(f"suite config is missing {', '.join(missing)}")
    ns = _int_list(g["n"], "n")
    tied = g["m"].strip() == "n"
    ms = [None] if tied else _int_list(g["m"], "m")
    os_ = _int_list(g["o"], "o")
    ws = _int_list(g["w"], "w")
    seed = _int_list(g.get("seed", "0"), "seed")[0]
    input_seed = _int_list(g.get("input_seed", "1"), "input_seed")[0]
    methods = [tok.strip() for tok in g["methods"].replace("\n", ",").split(",") if tok.strip()]
    if not methods:
        raise UsageError("methods: empty list")
    for name in methods:
        resolve_method(name, 1)

    grid = []
    for n, m, o, w in itertools.product(ns, ms, os_, ws):
        spec = generate_benchmark(n, n if tied else m, o, seed)
        for name in methods:
            grid.append(TrialConfig(spec, w, input_seed, resolve_method(name, n)))
    return grid
