"""
Acceptance criteria, one test each.

Every test records a single ``criterion N: PASS|FAIL ...`` line, printed in
the terminal summary, and then asserts.  Tolerances are pinned below.
"""

import dataclasses
import math
import statistics
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from entrokit.density import DataSet, DensityEstimate, EvaluationGrid
from entrokit.errors import IsolatedPointsError
from entrokit.estimators import (
    EMPTY_LEVEL_SET,
    ThresholdSchedule,
    entropy_leave_one_out,
    entropy_plugin,
    entropy_resubstitution,
)
from entrokit.harness import BandwidthRule, bias_probe, coverage_experiment, sweep
from entrokit.kernels import check_kernel, make_kernel, parse_kernel
from entrokit.models import cosine, exponential, gaussian_mixture, normal, sample, uniform

import oracles

KERNEL_TOL = 1e-6
KERNEL_SECONDS = 5.0
PLUGIN_ORACLE_TOL = 1e-4
PLUGIN_GRID_POINTS = 4001
DIRECT_SUM_TOL = 1e-12
CONSISTENCY_TOL = 0.05
CONSISTENCY_SECONDS = 120.0
GROWTH_SLACK = 1.5
SLOPE_TOL = {2: 0.3, 4: 0.5}
COVERAGE_MIN = 0.95

NORMAL_H = 0.5 * math.log(2 * math.pi * math.e)


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_kernel_contract():
    specs = [
        make_kernel("boxcar"),
        make_kernel("epanechnikov"),
        make_kernel("gaussian"),
        make_kernel("double_exponential"),
        make_kernel("polynomial_order_s", order=2),
        make_kernel("polynomial_order_s", order=4),
        make_kernel("polynomial_order_s", order=6),
    ]
    t0 = time.perf_counter()
    failed = [k.name for k in specs if not check_kernel(k, tol=KERNEL_TOL).passed]
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed < KERNEL_SECONDS
    record(1, ok, f"{len(specs)} kernels, failed={failed}, {elapsed:.2f}s (< {KERNEL_SECONDS}s)")
    assert ok


def test_criterion_2_oracle_equivalence():
    data = sample(normal(), 50, 1)
    x = data.observations.ravel()
    g, h, gamma = make_kernel("gaussian"), 0.4, 0.01
    est = DensityEstimate(data, g, h)
    grid = EvaluationGrid.covering(data, g, h, PLUGIN_GRID_POINTS)
    plug = entropy_plugin(est, gamma, grid).value
    plug_oracle = oracles.plugin_refined(x, "gaussian", h, gamma, reach=g.eval_radius)
    resub = entropy_resubstitution(est, gamma).value
    resub_oracle = oracles.resubstitution(x, "gaussian", h, gamma)
    loo = entropy_leave_one_out(data, g, h).value
    loo_oracle = oracles.leave_one_out(x, "gaussian", h)
    e1, e2, e3 = abs(plug - plug_oracle), abs(resub - resub_oracle), abs(loo - loo_oracle)
    ok = e1 <= PLUGIN_ORACLE_TOL and e2 <= DIRECT_SUM_TOL and e3 <= DIRECT_SUM_TOL
    record(2, ok, f"plug-in |diff|={e1:.2e} (<= {PLUGIN_ORACLE_TOL}), resub {e2:.1e}, loo {e3:.1e} (<= {DIRECT_SUM_TOL})")
    assert ok


def test_criterion_3_closed_form_consistency():
    t0 = time.perf_counter()
    gamma = ThresholdSchedule(0.25, 1.0)(20000)
    cases = {"normal": (normal(), "gaussian", 0.3, NORMAL_H), "uniform": (uniform(), "boxcar", 0.2, 0.0)}
    errs = {}
    for name, (model, kname, h, truth) in cases.items():
        k = make_kernel(kname)
        h1, h2 = [], []
        for seed in range(1, 21):
            est = DensityEstimate(sample(model, 20000, seed), k, h)
            h1.append(abs(entropy_plugin(est, gamma).value - truth))
            h2.append(abs(entropy_resubstitution(est, gamma).value - truth))
        errs[name] = (statistics.median(h1), statistics.median(h2))
    elapsed = time.perf_counter() - t0
    ok = all(e <= CONSISTENCY_TOL for pair in errs.values() for e in pair) and elapsed < CONSISTENCY_SECONDS
    detail = ", ".join(f"{m}: |H1-H|={a:.4f} |H2-H|={b:.4f}" for m, (a, b) in errs.items())
    record(3, ok, f"{detail} (<= {CONSISTENCY_TOL}), {elapsed:.0f}s")
    assert ok


def test_criterion_4_consistency_ladder():
    ladder = [1000, 4000, 16000]
    rule = BandwidthRule(0.5, 2.0, 0.2, 8)
    seeds = range(1, 6)
    results = {}
    for name, model, kname in (("normal", normal(), "gaussian"), ("uniform", uniform(), "boxcar")):
        rep = sweep(model, make_kernel(kname), rule, ThresholdSchedule(), ladder, seeds)
        for est in ("plugin_integral", "resubstitution"):
            med = rep.median(est, "sup_abs_error")
            results[(name, est)] = [med[n] for n in ladder]
    ok = all(a > b > c for a, b, c in results.values())
    detail = "; ".join(f"{m}/{e[:5]}: " + ">".join(f"{v:.4f}" for v in vals) for (m, e), vals in results.items())
    record(4, ok, detail)
    assert ok


def test_criterion_5_uniform_in_bandwidth_boundedness():
    ladder = [1000, 2000, 4000, 8000, 16000]
    rep = sweep(
        uniform(), make_kernel("boxcar"), BandwidthRule(0.5, 2.0, 0.2, 16), ThresholdSchedule(0.25, 0.0),
        ladder, range(1, 21), ["plugin_integral"],
    )
    med = rep.median("plugin_integral")
    vals = [med[n] for n in ladder]
    ok = all(math.isfinite(v) for v in vals) and max(vals[1:]) <= GROWTH_SLACK * vals[0]
    record(5, ok, "median sup normalized deviation " + ", ".join(f"{v:.5f}" for v in vals)
           + f" (max later / first = {max(vals[1:]) / vals[0]:.2f} <= {GROWTH_SLACK})")
    assert ok


def test_criterion_6_bias_rate():
    hs = [0.2, 0.1, 0.05]
    s2 = bias_probe(cosine(), make_kernel("epanechnikov"), hs).slope
    s4 = bias_probe(cosine(), make_kernel("polynomial_order_s", order=4), hs).slope
    ok = abs(s2 - 2) <= SLOPE_TOL[2] and abs(s4 - 4) <= SLOPE_TOL[4]
    record(6, ok, f"slope s=2: {s2:.3f} (+-{SLOPE_TOL[2]}), s=4: {s4:.3f} (+-{SLOPE_TOL[4]})")
    assert ok


def test_criterion_7_certainty_interval_coverage():
    g = make_kernel("gaussian")
    c5 = coverage_experiment(normal(), g, 0.3, 5000, 200, seed=1)
    c20 = coverage_experiment(normal(), g, 0.3, 20000, 200, seed=1001)
    ok = c5.coverage >= COVERAGE_MIN and c20.coverage >= c5.coverage
    record(7, ok, f"coverage n=5000: {c5.coverage:.3f} (>= {COVERAGE_MIN}), n=20000: {c20.coverage:.3f}")
    assert ok


def _finite_report(rep):
    for row in rep.rows:
        for f in dataclasses.fields(row):
            v = getattr(row, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                return False
    return True


def test_criterion_8_robustness():
    models = [uniform(), normal(), exponential(2.0), cosine(), gaussian_mixture(), uniform(d=2), normal(d=2)]
    kernels = ["boxcar", "epanechnikov", "gaussian", "double_exponential", "poly:s=4"]
    problems = []
    rows = errors = 0
    for m in models:
        for kname in kernels:
            k = parse_kernel(kname, m.dimension)
            try:
                rep = sweep(m, k, [0.05, 0.2, 0.6], ThresholdSchedule(), [200], [1, 2],
                            ["plugin_integral", "resubstitution", "leave_one_out"])
            except Exception as exc:  # a crash is exactly what this criterion forbids
                problems.append(f"{m.name}/{kname}: {type(exc).__name__}")
                continue
            rows += len(rep.rows)
            errors += sum(not r.ok for r in rep.rows)
            if not _finite_report(rep):
                problems.append(f"{m.name}/{kname}: non-finite value")
            summary_ok = all(
                v is None or math.isfinite(v) for item in rep.medians() for v in item.values() if isinstance(v, float)
            )
            if not summary_ok:
                problems.append(f"{m.name}/{kname}: non-finite summary")
    # empty level set: flagged, not raised
    est = DensityEstimate(DataSet([0.0, 1.0, 2.0]), make_kernel("gaussian"), 0.5)
    if EMPTY_LEVEL_SET not in entropy_plugin(est, 100.0).flags:
        problems.append("empty level set not flagged (plug-in)")
    if EMPTY_LEVEL_SET not in entropy_resubstitution(est, 100.0).flags:
        problems.append("empty level set not flagged (resubstitution)")
    # isolated points: a typed error carrying indices
    try:
        entropy_leave_one_out(DataSet([0.0, 10.0, 0.1]), make_kernel("boxcar"), 0.5)
        problems.append("isolated point not reported")
    except IsolatedPointsError as exc:
        if exc.indices != (1,):
            problems.append(f"wrong isolated indices {exc.indices}")
    ok = not problems
    record(8, ok, f"{rows} sweep rows ({errors} flagged errors), problems={problems}")
    assert ok
