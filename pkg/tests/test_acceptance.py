"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import functools
import itertools
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from explicit_cbf.affine import (AffineEvaluator, AffineProblem, enumerate_regions, eval_affine,
                                 lipschitz_constant)
from explicit_cbf.bench import random_qp, run_bench, summarize, trial_rng
from explicit_cbf.frontend import assemble
from explicit_cbf.oracle import subset_count, theta_active_set, theta_enumerate
from explicit_cbf.qp_core import ConstraintSet, WeightMatrix
from explicit_cbf.runtime import fresh_solve, simulate
from explicit_cbf.scenarios import load_scenario

from conftest import ACCEPTANCE, KKT_LOG, KKT_TOL

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"
STRICT = 1e-7


def report(number, ok, detail, warn_only=False):
    verdict = "PASS" if ok else ("WARN" if warn_only else "FAIL")
    line = f"ACCEPTANCE {number} {verdict}: {detail}"
    ACCEPTANCE[number] = line
    sys.__stdout__.write(f"\n{line}\n")
    sys.__stdout__.flush()


def degenerate(res, cs, k, W, tol=STRICT):
    """Weak complementarity or nearly active inactive rows."""
    lam = res.multipliers
    act = list(res.active_set)
    slack = cs.B @ res.control + cs.a
    inact = np.setdiff1d(np.arange(cs.p), act)
    return (len(act) and lam[act].min() < tol) or (len(inact) and slack[inact].max() > -tol)


# cached simulations; run lazily inside tests so KKT certification applies
@functools.lru_cache(maxsize=None)
def scenario_run(name):
    sc = load_scenario(SCENARIO_DIR / f"{name}.yaml")
    return sc, simulate(sc.problem, sc.x0, sc.horizon, sc.dt)


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    worst, trials, skipped, bad = 0.0, 0, 0, []
    affine_worst, affine_trials = 0.0, 0
    for m in (2, 4, 6, 8, 10):
        for p in (1, 2, 4, 8):
            for trial in range(500):
                B, a, k = random_qp(trial_rng(0, m, p, trial), m, p)
                cs, W = ConstraintSet(B, a, m=m), WeightMatrix.identity(m)
                e = theta_enumerate(cs, k, W)
                s = theta_active_set(cs, k, W)
                trials += 1
                if degenerate(e, cs, k, W):
                    skipped += 1
                    continue
                gap = np.abs(e.control - s.control).max()
                if trial < 25:
                    # constant data: parameter-free affine problem evaluated at x = 0
                    prob = AffineProblem(B, np.zeros((p, 1)), a, np.zeros((m, 1)), k, np.eye(m))
                    u_aff, _ = eval_affine(enumerate_regions(prob), np.zeros(1))
                    da = np.abs(u_aff - e.control).max()
                    affine_worst = max(affine_worst, da)
                    affine_trials += 1
                    gap = max(gap, da)
                worst = max(worst, gap)
                if gap > 1e-6:
                    bad.append((m, p, trial, gap))
    secs = time.perf_counter() - t0
    ok = not bad
    report(1, ok, f"{trials} QPs ({skipped} degenerate skipped), {affine_trials} also via "
                  f"eval_affine; max |du| = {worst:.2e} (affine {affine_worst:.2e}); "
                  f"{secs:.0f} s")
    assert ok, bad[:5]


def test_criterion_2_resource_aware_matches_fresh_solve():
    t0 = time.perf_counter()
    lines, off_boundary, boundary = [], [], 0
    for path in sorted(SCENARIO_DIR.glob("*.yaml")):
        sc, tr = scenario_run(path.stem)
        prob = sc.problem
        worst = 0.0
        for k in range(len(tr)):
            cs, kk, W = assemble(prob, tr.states[k], tr.times[k])
            theta = theta_enumerate if subset_count(cs.p, cs.m) <= 5000 else theta_active_set
            ref = theta(cs, kk, W)
            gap = np.abs(ref.control - tr.controls[k]).max()
            worst = max(worst, gap)
            if gap > 1e-9:
                if degenerate(ref, cs, kk, W):
                    boundary += 1
                else:
                    off_boundary.append((path.stem, k, gap))
        lines.append(f"{path.stem} {len(tr)} steps max {worst:.1e}")
    secs = time.perf_counter() - t0
    ok = not off_boundary
    report(2, ok, f"{'; '.join(lines)}; boundary exceptions {boundary}, "
                  f"off-boundary {len(off_boundary)}; {secs:.0f} s")
    assert ok, off_boundary[:5]


def test_criterion_3_theta_sparsity():
    sc, tr = scenario_run("aircraft")
    frac = tr.theta_calls / len(tr)
    ok = len(tr) == 3000 and frac <= 0.05
    report(3, ok, f"aircraft: {tr.theta_calls} oracle calls in {len(tr)} steps "
                  f"({100 * frac:.2f}% <= 5%)")
    assert ok


def test_criterion_4_safety():
    sc, tr = scenario_run("aircraft")
    hmin = float(tr.barrier_values.min())
    ma, tm = scenario_run("multi_agent")
    margins = {label: min(fun(x) for x in tm.states) for label, fun in ma.separation_checks}
    worst_label = min(margins, key=margins.get)
    ok = sc.dt <= 1e-2 and hmin >= -1e-3 and margins[worst_label] > 0
    report(4, ok, f"aircraft min h = {hmin:.2e} at dt = {sc.dt}; multi-agent min margin "
                  f"{margins[worst_label]:.3f} ({worst_label})")
    assert ok


def test_criterion_5_piecewise_affine_validity(rng):
    one = AffineProblem([[1.0]], [[1.0]], [0.0], [[0.0]], [0.0], WeightMatrix.identity(1))
    laws = {law.index_set: law for law in enumerate_regions(one)}
    exact = (set(laws) == {(), (0,)}
             and laws[(0,)].G.tolist() == [[1.0]]
             and laws[()].K_I.tolist() == [[0.0]]
             and laws[(0,)].K_I.tolist() == [[-1.0]]
             and lipschitz_constant(list(laws.values())) == 1.0)

    slope_excess, segments, gaps = -np.inf, 0, []
    for _ in range(5):
        n, m = 2, int(rng.integers(2, 4))
        p = int(rng.integers(1, m + 1))
        prob = AffineProblem(rng.standard_normal((p, m)), rng.standard_normal((p, n)),
                             rng.uniform(-1, 1, p), rng.standard_normal((m, n)),
                             rng.standard_normal(m), np.eye(m))
        laws_r = enumerate_regions(prob)
        L = lipschitz_constant(laws_r)
        ev = AffineEvaluator(laws_r)

        def controls(X):
            idx = ev.locate_batch(X)
            assert np.all(idx >= 0)
            return np.array([ev.laws[j].control(x) for x, j in zip(X, idx)])

        X0 = rng.uniform(-3, 3, (2000, n))
        X1 = X0 + rng.standard_normal((2000, n)) * rng.choice([1e-3, 0.1, 2.0], (2000, 1))
        slopes = (np.linalg.norm(controls(X1) - controls(X0), axis=1)
                  / np.linalg.norm(X1 - X0, axis=1))
        slope_excess = max(slope_excess, float(slopes.max() - L))
        segments += len(slopes)

        for _ in range(300):
            a, b = rng.uniform(-3, 3, (2, n))
            i0, i1 = ev.locate(a), ev.locate(b)
            if i0 == i1:
                continue
            lo, hi = a, b
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if ev.locate(mid) == i0:
                    lo = mid
                else:
                    hi = mid
            j = ev.locate(hi)
            gaps.append(float(np.abs(ev.laws[i0].control(lo) - ev.laws[j].control(hi)).max()))
    ok = exact and slope_excess <= 1e-6 and gaps and max(gaps) <= 1e-7
    report(5, ok, f"1-D example exact: {exact}; {segments} segments, max slope - L = "
                  f"{slope_excess:.2e}; {len(gaps)} facet crossings, max gap {max(gaps):.1e}")
    assert ok


def feasible_everywhere(rng, n, m, p):
    """Rows ``a(x) = -B (M x + c) - s`` with ``s > 0`` keep ``u = M x + c`` strictly feasible."""
    B = rng.standard_normal((p, m))
    M, c = rng.standard_normal((m, n)), rng.standard_normal(m)
    s = rng.uniform(0.1, 1.0, p)
    return AffineProblem(B, -B @ M, -B @ c - s, rng.standard_normal((m, n)),
                         rng.standard_normal(m), np.eye(m))


def test_criterion_6_partition(rng):
    n, band = 2, 1e-6
    problems, samples, excluded, failures = 0, 0, 0, []
    for m, p in itertools.product((1, 2, 3), (1, 2, 3, 4, 5, 6)):
        prob = feasible_everywhere(rng, n, m, p)
        laws = enumerate_regions(prob)
        X = rng.uniform(-3, 3, (10_000, n))
        passes = np.zeros(len(X), dtype=int)
        near = np.zeros(len(X), dtype=bool)
        for law in laws:
            if len(law.offsets) == 0:
                passes += 1
                continue
            V = X @ law.normals.T + law.offsets
            passes += np.all(np.where(law.strict, V < 0, V <= 0), axis=1)
            near |= np.all(V <= band, axis=1) != np.all(V <= -band, axis=1)
        keep = ~near
        problems += 1
        samples += int(keep.sum())
        excluded += int(near.sum())
        wrong = np.flatnonzero(keep & (passes != 1))
        if wrong.size:
            failures.append((m, p, int(wrong.size), passes[wrong[0]]))
    ok = not failures
    report(6, ok, f"{problems} problems (m <= 3, p <= 6, all subsets), {samples} samples "
                  f"with exactly one region ({excluded} boundary samples excluded)")
    assert ok, failures


def test_criterion_7_kkt_certification():
    checked, failed = KKT_LOG["checked"], len(KKT_LOG["failed"])
    ok = checked > 0 and failed == 0
    report(7, ok, f"{checked} Optimal solves certified this session, {failed} above "
                  f"{KKT_TOL:g}")
    assert ok


def test_criterion_8_timing_crossover():
    rows = summarize(run_bench([10], [1], trials=300, seed=0))
    means = {method: mean for _, _, method, mean, *_ in rows}
    solver = min(means["SolverEnumerate"], means["SolverActiveSet"])
    ok = means["Explicit"] < solver
    report(8, ok, f"m=10, p=1 mean solve: Explicit {means['Explicit']:.1f} us vs solver path "
                  f"{solver:.1f} us (informational)", warn_only=True)
    if not ok:
        warnings.warn("Explicit was not faster than the solver path at m=10, p=1 on this machine")
