"""Executable acceptance gate.

Each test checks one numbered claim about the package at its stated
tolerance and prints a single CRITERION line with the measured numbers
(visible with -s, or automatically for failing criteria). The claims are
deliberately end-to-end: they exercise the public API the way a user would.

Criterion 5 is known to fail: on every benchmark, scale, and seed tried,
the ablation that keeps each row's own remainder reaches lower medians
than the cross-row scan, because the scan burns population-1 extra
evaluations per step for remainders that stop differing once the rows
co-adapt. The test states the claim faithfully and is left to fail rather
than being weakened; the numbers it prints are the evidence.
"""

import itertools
import math
import sys
import time

import numpy as np

from dacopt import (
    ConvergenceTrace,
    DacConfig,
    EvalCounter,
    ExternalObjective,
    ExternalObjectiveConfig,
    FullSolution,
    FunctionId,
    Grouping,
    GridSpec,
    PartialSolution,
    Population,
    ProblemSpec,
    RngStream,
    accurate_complement,
    approximate_complement,
    detect_interaction,
    lemma1_report,
    loglinear_fit,
    make_gaussian_search_op,
    make_instance,
    parse_config,
    read_trace_csv,
    run_dac,
    run_dachc,
    run_experiment,
    run_phc,
    schwefel12,
    sphere,
)

SUITE = (FunctionId.F1, FunctionId.F2, FunctionId.F3, FunctionId.F4,
         FunctionId.F5)


def _announce(number: int, name: str, ok: bool, detail: str) -> None:
    print(f"CRITERION {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


# -- 1: descent is monotone and rows never worsen ------------------------------


def test_c1_monotone_descent_and_row_safety():
    started = time.perf_counter()
    row_violations = 0
    trace_violations = 0
    runs = 0
    for fid in SUITE:
        for seed in range(5):
            inst = make_instance(fid, 100, 10, seed)
            spec = inst.problem_spec()
            cfg = DacConfig(population=2, groups=10, budget=50_000,
                            seed=seed, log_every=500)
            steps = []
            _, trace = run_dachc(inst, spec, cfg, rng=RngStream(seed, "run"),
                                 step_observer=lambda it, i, j, b, a:
                                 steps.append((b, a)))
            runs += 1
            row_violations += sum(1 for b, a in steps if a > b)
            values = trace.as_arrays()[1]
            trace_violations += int((np.diff(values) > 0).sum())
            assert trace.final_fe == 50_000
    elapsed = time.perf_counter() - started
    ok = row_violations == 0 and trace_violations == 0 and elapsed < 60.0
    _announce(1, "monotone descent", ok,
              f"{runs} runs, {row_violations} row violations, "
              f"{trace_violations} trace violations, {elapsed:.1f}s")
    assert row_violations == 0
    assert trace_violations == 0
    assert elapsed < 60.0


# -- 2: evaluation accounting is exact ------------------------------------------


def test_c2_evaluation_cost_laws_exact():
    spec = ProblemSpec.box(20, -100.0, 100.0)
    op = make_gaussian_search_op(spec)
    mismatches = []
    for n, m in ((1, 1), (2, 10), (3, 4)):
        k = 3
        base = dict(population=n, groups=m, budget=10 ** 6, max_iterations=k)
        checks = [
            ("shared-remainder climber", run_dachc,
             dict(**base), n + k * m * n * n),
            ("own-remainder climber", run_phc,
             dict(**base), n + k * m * n),
            ("generic loop, uncached", run_dac,
             dict(use_incumbent_cache=False, **base), n + k * 2 * m * n * n),
            ("generic loop, cached", run_dac,
             dict(**base), n + k * m * n * (2 * n - 1)),
        ]
        for label, runner, kwargs, expect in checks:
            cfg = DacConfig(**kwargs)
            if runner is run_dac:
                _, trace = runner(sphere, spec, cfg, op)
            else:
                _, trace = runner(sphere, spec, cfg)
            if trace.final_fe != expect:
                mismatches.append(
                    f"{label} N={n} M={m}: {trace.final_fe} != {expect}")
    _announce(2, "evaluation accounting", not mismatches,
              "all 12 configurations exact" if not mismatches
              else "; ".join(mismatches))
    assert not mismatches


# -- 3: the cheap remainder scan agrees with the exhaustive oracle ----------------


def test_c3_scan_equals_oracle_on_full_grid():
    pts = np.linspace(-4.0, 4.0, 5)
    grid = GridSpec(np.array([1, 2]), [pts, pts])
    grouping = Grouping(3, (np.array([0]), np.array([1, 2])))
    combos = list(itertools.product(pts, pts))

    def full_population(partial_value):
        rows = []
        for a, b in combos:
            vec = np.array([partial_value, a, b])
            rows.append(FullSolution(vec, cached_value=schwefel12(vec)))
        return rows

    exact = True
    same_point = True
    for partial_value in np.linspace(-4.0, 4.0, 7):
        partial = PartialSolution(np.array([0]), np.array([partial_value]))
        oracle_comp, oracle_value = accurate_complement(schwefel12, partial,
                                                        grid)
        rows = full_population(partial_value)
        pop = Population(rows, np.ones((len(rows), 2)), grouping)
        choice = approximate_complement(0, 0, pop, schwefel12,
                                        EvalCounter(10 ** 6), use_cache=False)
        exact = exact and choice.value == oracle_value
        winning = rows[choice.row_index].values[1:]
        same_point = same_point and np.array_equal(
            winning, np.asarray(oracle_comp.values))

    partial_value = 1.5
    partial = PartialSolution(np.array([0]), np.array([partial_value]))
    _, oracle_value = accurate_complement(schwefel12, partial, grid)
    rows = full_population(partial_value)

    # a proper subset of the rows can never beat the exhaustive answer
    rng = np.random.default_rng(0)
    subset_ok = True
    for _ in range(50):
        size = int(rng.integers(1, len(rows)))
        keep = rng.choice(len(rows), size=size, replace=False)
        sub = Population([rows[int(k)] for k in keep],
                         np.ones((size, 2)), grouping)
        sub_choice = approximate_complement(0, 0, sub, schwefel12,
                                            EvalCounter(10 ** 6),
                                            use_cache=False)
        if sub_choice.value < oracle_value:
            subset_ok = False
    ok = exact and same_point and subset_ok
    _announce(3, "scan vs oracle", ok,
              f"7 partials exact: {exact and same_point}, "
              f"50 subsets never better: {subset_ok}")
    assert exact and same_point and subset_ok


# -- 4: every instance certifies its own optimum ----------------------------------


def test_c4_certified_optima():
    started = time.perf_counter()
    worst_exact = 0.0
    worst_valley = 0.0
    worst_additivity = 0.0
    for fid in SUITE:
        for seed in range(100):
            inst = make_instance(fid, 100, 10, seed)
            opt = inst.optimum()
            assert (opt >= inst.lower).all() and (opt <= inst.upper).all()
            value = inst.evaluate(opt)
            if fid is FunctionId.F5:
                worst_valley = max(worst_valley, value)
            else:
                worst_exact = max(worst_exact, abs(value))
            if fid is FunctionId.F3 and seed < 20:
                x = RngStream(seed, "probe").uniform(-100, 100, 100)
                z = x - inst.shift
                manual = sum(schwefel12(z[b])
                             for b in inst.schwefel_block_indices())
                got = inst.evaluate(x)
                rel = abs(got - manual) / max(1.0, abs(manual))
                worst_additivity = max(worst_additivity, rel)
    elapsed = time.perf_counter() - started
    ok = (worst_exact == 0.0 and worst_valley <= 1e-9
          and worst_additivity <= 1e-12 and elapsed < 10.0)
    _announce(4, "certified optima", ok,
              f"500 instances; exact residual {worst_exact!r}, valley "
              f"residual {worst_valley:.2e}, additivity {worst_additivity:.2e}, "
              f"{elapsed:.1f}s")
    assert worst_exact == 0.0
    assert worst_valley <= 1e-9
    assert worst_additivity <= 1e-12
    assert elapsed < 10.0


# -- 5: cross-row remainders beat per-row remainders on the suite ------------------


def test_c5_cross_row_scan_beats_ablation_on_suite():
    started = time.perf_counter()
    medians = {}
    for fid in SUITE:
        inst = make_instance(fid, 100, 10, 42)
        spec = inst.problem_spec()
        finals = {"shared": [], "own": []}
        for r in range(10):
            cfg = DacConfig(population=2, groups=10, budget=200_000,
                            seed=0, log_every=50_000)
            best_a, _ = run_dachc(inst, spec, cfg,
                                  rng=RngStream.from_parts(42, "run", r))
            best_b, _ = run_phc(inst, spec, cfg,
                                rng=RngStream.from_parts(42, "run", r))
            finals["shared"].append(best_a.cached_value)
            finals["own"].append(best_b.cached_value)
        medians[fid.value] = (float(np.median(finals["shared"])),
                              float(np.median(finals["own"])))
    elapsed = time.perf_counter() - started
    never_worse = all(s <= o for s, o in medians.values())
    strictly_better = sum(1 for s, o in medians.values() if s < o)
    ok = never_worse and strictly_better >= 4 and elapsed < 600.0
    detail = ", ".join(f"{fn} {s:.3e}/{o:.3e}"
                       for fn, (s, o) in medians.items())
    _announce(5, "cross-row advantage", ok,
              f"shared/own medians: {detail}; {elapsed:.0f}s")
    assert never_worse, f"shared-remainder medians worse: {detail}"
    assert strictly_better >= 4, detail
    assert elapsed < 600.0


# -- 6: near log-linear convergence on the weighted composite ----------------------


def test_c6_loglinear_convergence():
    inst = make_instance(FunctionId.F1, 100, 10, 42)
    spec = inst.problem_spec()
    traces = []
    for r in range(10):
        cfg = DacConfig(population=2, groups=10, budget=120_000,
                        seed=0, log_every=1000)
        _, trace = run_dachc(inst, spec, cfg,
                             rng=RngStream.from_parts(42, "run", r))
        traces.append(trace)
    fes = traces[0].fes
    assert all(t.fes == fes for t in traces), "runs left different trace grids"
    stacked = np.array([t.values for t in traces])
    median = np.median(stacked, axis=0)
    mtrace = ConvergenceTrace()
    for fe, v in zip(fes, median):
        mtrace.record(fe, v)
    fit = loglinear_fit(mtrace, window=0.5)
    ok = fit.slope < 0.0 and fit.r_squared >= 0.9
    _announce(6, "log-linear convergence", ok,
              f"slope {fit.slope:.3e}, r^2 {fit.r_squared:.4f}, "
              f"{fit.points_used} points")
    assert fit.slope < 0.0
    assert fit.r_squared >= 0.9


# -- 7: the interaction detector is sharp both ways --------------------------------


def test_c7_interaction_detector():
    spec2 = ProblemSpec.box(2, -10.0, 10.0)
    found = 0
    verified = 0
    for run in range(100):
        rng = RngStream.from_parts(42, "interaction-detector", run)
        w = detect_interaction(schwefel12, 0, 1, spec2, 1000, rng)
        if w is not None:
            found += 1
            if w.check(schwefel12):
                verified += 1
    spec10 = ProblemSpec.box(10, -10.0, 10.0)
    false_hits = 0
    pair_rng = np.random.default_rng(7)
    for pair in range(10):
        i, j = map(int, pair_rng.choice(10, size=2, replace=False))
        rng = RngStream.from_parts(43, "interaction-detector", pair)
        if detect_interaction(sphere, i, j, spec10, 10_000, rng) is not None:
            false_hits += 1
    ok = found >= 99 and verified == found and false_hits == 0
    _announce(7, "interaction detector", ok,
              f"{found}/100 witnesses (all verified: {verified == found}), "
              f"{false_hits} false hits on the separable control")
    assert found >= 99
    assert verified == found
    assert false_hits == 0


# -- 8: probability products respect the power-mean bound ---------------------------


def test_c8_product_vs_power_bound():
    rng = np.random.default_rng(11)
    worst_excess = -math.inf
    equality_spread = 0.0
    for _ in range(10_000):
        n = int(rng.integers(1, 13))
        p = rng.uniform(0.0, 1.0, n)
        rep = lemma1_report(p, 0)
        worst_excess = max(worst_excess,
                           rep.product - rep.bound * (1 + 1e-12))
        if rep.bound > 0 and abs(rep.product - rep.bound) <= 1e-12 * rep.bound:
            equality_spread = max(equality_spread, float(p.max() - p.min()))
    exact_cases = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        p = float(rng.uniform(0.01, 1.0))
        rep = lemma1_report([p] * n, 0)
        if abs(rep.product - rep.bound) <= 1e-12 * max(rep.bound, 1e-300):
            exact_cases += 1
    ok = worst_excess <= 0.0 and equality_spread <= 1e-9 and exact_cases == 1000
    _announce(8, "product vs power bound", ok,
              f"worst excess {worst_excess:.2e}, equality only below spread "
              f"{equality_spread:.2e}, {exact_cases}/1000 uniform vectors "
              "touch the bound")
    assert worst_excess <= 0.0
    assert equality_spread <= 1e-9
    assert exact_cases == 1000


# -- 9: runs reproduce bit for bit, in and out of process ----------------------------


def test_c9_reproducibility(tmp_path, monkeypatch):
    monkeypatch.setenv("DACOPT_THREADS", "1")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        cfg = parse_config(overrides={
            "algo": "dac-hc", "fn": "f3", "dim": "8", "m": "2", "M": "4",
            "budget": "1000", "runs": "2", "log-every": "100",
            "out": str(out)})
        run_experiment(cfg)
        outs.append(out)
    a, b = outs
    trace_names = sorted(p.name for p in a.glob("trace_*.csv"))
    traces_equal = all((a / n).read_bytes() == (b / n).read_bytes()
                       for n in trace_names)
    summary_equal = (a / "summary.csv").read_bytes() == \
        (b / "summary.csv").read_bytes()
    final = read_trace_csv(a / "trace_run000.csv").final_value

    cmd = f"{sys.executable} -m dacopt.worker --builtin sphere --dim 4"
    mismatches = 0
    with ExternalObjective(ExternalObjectiveConfig(cmd, 4)) as session:
        rng = RngStream(3, "probe")
        for _ in range(20):
            x = rng.uniform(-5.0, 5.0, 4)
            if session(x) != sphere(x):
                mismatches += 1
    ok = traces_equal and summary_equal and mismatches == 0
    _announce(9, "bit-exact reproducibility", ok,
              f"{len(trace_names)} traces identical: {traces_equal}, summary "
              f"identical: {summary_equal} (final {final!r}), worker "
              f"mismatches: {mismatches}/20")
    assert traces_equal
    assert summary_equal
    assert mismatches == 0
