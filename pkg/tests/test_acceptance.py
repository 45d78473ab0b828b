"""Acceptance criteria, one marked test (or group of tests) per criterion.

``conftest.py`` prints a PASS/FAIL line per criterion after the run.
"""

from __future__ import annotations

import csv
import io
import math
import random
import statistics
import time

import numpy as np
import pytest

from scalarad import rules
from scalarad.bench import TrialConfig, generate_benchmark, run_trial
from scalarad.cli import bench_main
from scalarad.engine import (
    DifferentiableBlock,
    FiniteDifferencing,
    ForwardAD,
    ForwardADMulti,
    ReverseAD,
    derivative_finite_diff,
    derivative_forward,
    derivative_forward_multi,
    derivative_reverse,
    jvp,
    vjp,
)
from scalarad.kinematics import DEMO_METHODS, DOF, demo_problem, initial_states, root_find, summarize
from scalarad.scalar import Dual, DualN, apply_binary, apply_unary, variable
from scalarad.tape import Tape


def criterion(label, title):
    return pytest.mark.criterion(label, title)


def note(record_property, text):
    record_property("note", text)
    print(text)


# --------------------------------------------------------------------------
# AC1 derivative rules
# --------------------------------------------------------------------------

H = 1e-6
REL_TOL = 1e-5

UNARY_DOMAINS = {
    "sin": (-10.0, 10.0), "cos": (-10.0, 10.0), "tan": (-1.4, 1.4), "exp": (-5.0, 5.0),
    "ln": (0.05, 20.0), "sqrt": (0.05, 20.0), "neg": (-10.0, 10.0), "abs": (-10.0, 10.0),
}


def _binary_point(op, rng):
    if op == "pow":
        return rng.uniform(0.1, 4.0), rng.uniform(-3.0, 3.0)
    a, b = rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)
    if op == "div" and abs(b) < 0.2:
        b += 1.0
    return a, b


def _rel(got, want):
    return abs(got - want) / max(1.0, abs(want))


def _unary_partials(op, x):
    """d op / dx under each scalar kind."""
    d1 = apply_unary(op, Dual(x, 1.0)).tangent
    dn = apply_unary(op, DualN(x, np.array([1.0, 0.0]))).tangent_block[0]
    tape = Tape()
    y = apply_unary(op, variable(x, tape))
    dr = tape.backward(y.node)[tape.input_nodes[0]]
    return d1, dn, dr


def _binary_partials(op, a, b):
    pa1 = apply_binary(op, Dual(a, 1.0), Dual(b, 0.0)).tangent
    pb1 = apply_binary(op, Dual(a, 0.0), Dual(b, 1.0)).tangent
    t = apply_binary(op, DualN(a, np.array([1.0, 0.0])), DualN(b, np.array([0.0, 1.0]))).tangent_block
    tape = Tape()
    y = apply_binary(op, variable(a, tape), variable(b, tape))
    adj = tape.backward(y.node)
    ia, ib = tape.input_nodes
    return (pa1, t[0], adj[ia]), (pb1, t[1], adj[ib])


@criterion("AC1", "derivative rules match central differences, rel err <= 1e-5, < 1 s")
def test_ac1_rule_suite(record_property):
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    for op, (lo, hi) in UNARY_DOMAINS.items():
        rng = random.Random(f"ac1-{op}")
        fn = lambda x, op=op: rules.UNARY_RULES[op](x)[0]
        for _ in range(100):
            x = rng.uniform(lo, hi)
            # abs is not differentiable at 0; keep the stencil off the kink
            while op == "abs" and abs(x) < 10 * H:
                x = rng.uniform(lo, hi)
            ref = (fn(x + H) - fn(x - H)) / (2 * H)
            for d in (rules.UNARY_RULES[op](x)[1], *_unary_partials(op, x)):
                worst = max(worst, _rel(d, ref))
                checked += 1
    for op in rules.BINARY_RULES:
        rng = random.Random(f"ac1-{op}")
        fn = lambda a, b, op=op: rules.BINARY_RULES[op](a, b)[0]
        for _ in range(100):
            a, b = _binary_point(op, rng)
            while op in ("min", "max") and abs(a - b) < 10 * H:
                a, b = _binary_point(op, rng)
            ref_a = (fn(a + H, b) - fn(a - H, b)) / (2 * H)
            ref_b = (fn(a, b + H) - fn(a, b - H)) / (2 * H)
            _, pa, pb = rules.BINARY_RULES[op](a, b)
            got_a, got_b = _binary_partials(op, a, b)
            for d in (pa, *got_a):
                worst = max(worst, _rel(d, ref_a))
            for d in (pb, *got_b):
                worst = max(worst, _rel(d, ref_b))
            checked += 8
    elapsed = time.perf_counter() - t0
    note(record_property, f"{checked} partials, worst rel err {worst:.2e}, {elapsed:.3f} s")
    assert worst <= REL_TOL
    assert elapsed < 1.0


# --------------------------------------------------------------------------
# AC2 cross-backend equivalence
# --------------------------------------------------------------------------


def _ac2_specs():
    rng = random.Random(2)
    for k in range(50):
        yield generate_benchmark(rng.randint(1, 30), rng.randint(1, 30), rng.randint(1, 500), 1000 + k)


@criterion("AC2", "backends agree pairwise <= 1e-9 and with FD <= 1e-4 on 50 specs, < 30 s")
def test_ac2_cross_backend(record_property):
    t0 = time.perf_counter()
    worst_pair = worst_fd = 0.0
    input_rng = np.random.default_rng(2)
    for spec in _ac2_specs():
        x = input_rng.uniform(-math.pi, math.pi, spec.n)
        jacs = [derivative_forward(spec, x).jacobian, derivative_reverse(spec, x).jacobian]
        widths = sorted({1, 2, 4, 8, 16, spec.n})
        jacs += [derivative_forward_multi(spec, x, w).jacobian for w in widths]
        fd = derivative_finite_diff(spec, x).jacobian
        for i, a in enumerate(jacs):
            worst_fd = max(worst_fd, float(np.max(np.abs(a - fd))))
            for b in jacs[i + 1:]:
                worst_pair = max(worst_pair, float(np.max(np.abs(a - b))))
    elapsed = time.perf_counter() - t0
    note(record_property, f"worst pairwise {worst_pair:.2e}, worst vs FD {worst_fd:.2e}, {elapsed:.1f} s")
    failures = [
        msg for ok, msg in (
            (worst_pair <= 1e-9, f"pairwise {worst_pair:.2e} > 1e-9"),
            (worst_fd <= 1e-4, f"vs FD {worst_fd:.2e} > 1e-4"),
            (elapsed < 30.0, f"runtime {elapsed:.1f} s >= 30 s"),
        ) if not ok
    ]
    assert not failures, "; ".join(failures)


# --------------------------------------------------------------------------
# AC3 pass counts
# --------------------------------------------------------------------------


@criterion("AC3", "evaluation counts n+1 / n / ceil(n/N) / 1 on 100 shapes")
def test_ac3_pass_counts(record_property):
    rng = random.Random(3)
    mismatches = []
    for k in range(100):
        n, m, width = rng.randint(1, 40), rng.randint(1, 40), rng.randint(1, 48)
        spec = generate_benchmark(n, m, rng.randint(1, 8), k)
        x = np.linspace(-1.0, 1.0, n)
        expected = {
            FiniteDifferencing(): n + 1,
            ForwardAD(): n,
            ForwardADMulti(width): math.ceil(n / width),
            ReverseAD(): 1,
        }
        for method, want in expected.items():
            block = DifferentiableBlock(spec, method)
            block.derivative(x)
            if block.evaluation_count != want:
                mismatches.append((method.name, n, m, block.evaluation_count, want))
    note(record_property, f"{400 - len(mismatches)}/400 counts exact")
    assert not mismatches


# --------------------------------------------------------------------------
# AC4 one-hot recovery
# --------------------------------------------------------------------------


@criterion("AC4", "one-hot JVP/VJP reproduce columns/rows bit-identically on 20 specs")
def test_ac4_one_hot(record_property):
    rng = random.Random(4)
    for k in range(20):
        n, m = rng.randint(1, 12), rng.randint(1, 12)
        spec = generate_benchmark(n, m, rng.randint(1, 60), 400 + k)
        x = np.random.default_rng(k).uniform(-math.pi, math.pi, n)
        fwd = derivative_forward(spec, x).jacobian
        rev = derivative_reverse(spec, x).jacobian
        for i in range(n):
            _, col = jvp(spec, x, np.eye(n)[i])
            assert np.array_equal(col, fwd[:, i]), (k, "column", i)
        for i in range(m):
            _, row = vjp(spec, x, np.eye(m)[i])
            assert np.array_equal(row, rev[i]), (k, "row", i)
    note(record_property, "20 specs, every column and row bit-identical")


# --------------------------------------------------------------------------
# AC5 tape preallocation
# --------------------------------------------------------------------------


@criterion("AC5", "w=100 reverse trial grows the tape only on the first input")
def test_ac5_tape_growth(record_property):
    spec = generate_benchmark(12, 4, 300, 5)
    rec = run_trial(TrialConfig(spec, 100, 5, ReverseAD()))
    note(record_property, f"growth per input: first {rec.tape_growth[0]}, rest {sum(rec.tape_growth[1:])}; "
                          f"nodes {rec.tape_nodes[0]}")
    assert len(rec.tape_growth) == 100
    assert rec.tape_growth[0] > 0
    assert all(g == 0 for g in rec.tape_growth[1:])
    assert len(set(rec.tape_nodes)) == 1


# --------------------------------------------------------------------------
# AC6 benchmark determinism
# --------------------------------------------------------------------------


@criterion("AC6", "bench suite CSVs identical across runs except timing columns")
def test_ac6_suite_determinism(tmp_path, record_property):
    cfg = tmp_path / "grid.ini"
    cfg.write_text(
        "[grid]\nn = 1, 5, 12\nm = 1, 3\no = 40\nw = 4\nseed = 99\ninput_seed = 3\n"
        "methods = fd, forward, forward-multi:4, forward-multi:n, reverse\n"
    )
    texts = []
    for run in range(2):
        out = tmp_path / f"run{run}.csv"
        assert bench_main(["suite", "--config", str(cfg), "--csv", str(out)]) == 0
        texts.append(out.read_text())
    a, b = (list(csv.DictReader(io.StringIO(t))) for t in texts)
    assert len(a) == len(b) == 3 * 2 * 5
    timing = {"mean_seconds", "std_seconds"}
    for ra, rb in zip(a, b):
        assert {k: v for k, v in ra.items() if k not in timing} == {k: v for k, v in rb.items() if k not in timing}
    note(record_property, f"{len(a)} rows compared")


# --------------------------------------------------------------------------
# AC7 sub-experiment-1 shape
# --------------------------------------------------------------------------


@criterion("AC7", "m=1, o=1000, w=100: forward evals = n*w, reverse 1 sweep per input, < 2 min")
def test_ac7_subexperiment_shape(record_property):
    t0 = time.perf_counter()
    w = 100
    rows = []
    for n in (1, 50, 100, 200):
        spec = generate_benchmark(n, 1, 1000, 7)
        fwd = run_trial(TrialConfig(spec, w, 1, ForwardAD()))
        rev = run_trial(TrialConfig(spec, w, 1, ReverseAD()))
        rows.append((n, fwd.evaluations, rev.evaluations, rev.sweeps))
    elapsed = time.perf_counter() - t0
    note(record_property, "n, forward evals, reverse evals, reverse sweeps: "
                          + "; ".join(",".join(map(str, r)) for r in rows) + f"  ({elapsed:.1f} s)")
    for n, fwd_evals, rev_evals, sweeps in rows:
        assert fwd_evals == n * w
        assert rev_evals == w
        assert sweeps == w
    assert elapsed < 120.0


# --------------------------------------------------------------------------
# AC8 kinematics convergence
# --------------------------------------------------------------------------

AC8_TRIALS = 500
AC8_SEED = 0


@pytest.fixture(scope="module")
def ac8_run():
    """Every backend from the same 500 starts, interleaved trial by trial."""
    problem = demo_problem()
    starts = initial_states(AC8_TRIALS, AC8_SEED, DOF)
    blocks = [DifferentiableBlock(problem, m) for m in DEMO_METHODS]
    reports = [[] for _ in blocks]
    t0 = time.perf_counter()
    for x0 in starts:
        for block, out in zip(blocks, reports):
            out.append(root_find(block, x0))
    elapsed = time.perf_counter() - t0
    summaries = [summarize(m.name, r) for m, r in zip(DEMO_METHODS, reports)]
    return summaries, elapsed


def _ac8_table(summaries):
    return "; ".join(
        f"{s.method}: {s.converged}/{s.trials} conv, mean iters {s.mean_iterations:.1f}, "
        f"mean {s.mean_seconds:.3f} s" for s in summaries
    )


@criterion("AC8", "chain root-finding: >=95% converge per backend, mean iterations within 5%, < 5 min")
def test_ac8_convergence_rate(ac8_run, record_property):
    summaries, _ = ac8_run
    note(record_property, _ac8_table(summaries))
    for s in summaries:
        assert s.converged >= 0.95 * s.trials, s.method


@criterion("AC8", "chain root-finding: >=95% converge per backend, mean iterations within 5%, < 5 min")
def test_ac8_iteration_agreement(ac8_run, record_property):
    summaries, _ = ac8_run
    means = [s.mean_iterations for s in summaries]
    spread = max(means) / min(means) - 1.0
    per_trial = [[r.iterations for r in s.reports] for s in summaries]
    common = [k for k in range(AC8_TRIALS) if all(s.reports[k].converged for s in summaries)]
    close = sum(1 for k in common if max(p[k] for p in per_trial) <= 1.05 * min(p[k] for p in per_trial))
    note(record_property, f"mean-iteration spread {spread:.2%}; per-start agreement within 5%: "
                          f"{close}/{len(common)} starts converged under every backend")
    assert spread <= 0.05


@criterion("AC8", "chain root-finding: >=95% converge per backend, mean iterations within 5%, < 5 min")
def test_ac8_runtime(ac8_run, record_property):
    _, elapsed = ac8_run
    note(record_property, f"{AC8_TRIALS} trials x {len(DEMO_METHODS)} backends took {elapsed:.0f} s")
    assert elapsed < 300.0


# --------------------------------------------------------------------------
# AC9 informational timing
# --------------------------------------------------------------------------


@criterion("AC9", "informational: forward-multi:24 vs forward mean derivative time on the demo")
def test_ac9_demo_timing(record_property):
    problem = demo_problem()
    xs = initial_states(20, 9, DOF)
    means = {}
    for method in (ForwardAD(), ForwardADMulti(DOF)):
        block = DifferentiableBlock(problem, method)
        block.derivative(xs[0])
        times = []
        for x in xs:
            t0 = time.perf_counter()
            block.derivative(x)
            times.append(time.perf_counter() - t0)
        means[method.name] = statistics.fmean(times)
    ordered = means["forward-multi:24"] <= means["forward"]
    note(record_property, f"forward {means['forward'] * 1e3:.2f} ms, forward-multi:24 "
                          f"{means['forward-multi:24'] * 1e3:.2f} ms; ordering "
                          + ("holds" if ordered else "does not hold on this machine"))
