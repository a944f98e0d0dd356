"""Timing comparison of the oracle realizations on random filter QPs."""
from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass

import numpy as np

from .oracle import feasibility_probe, theta_active_set, theta_enumerate, PROBE_TOL
from .qp_core import ConstraintSet, WeightMatrix
from .region import first_member, membership
from .runtime import FilterState

METHODS = ("SolverEnumerate", "SolverActiveSet", "Explicit", "ResourceAware")
DISTRIBUTION = ("b_i ~ N(0, I_m); a_i ~ U[-1, 1]; k uniform in the ball of radius 2; R = I; "
                "infeasible draws rejected (up to 100 resamples)")
AGREE_TOL = 1e-6


class BenchDisagreement(RuntimeError):
    pass


@dataclass(frozen=True)
class BenchRecord:
    m: int
    p: int
    trial: int
    method: str
    setup_ns: int
    solve_ns: int
    active_set: tuple
    checksum: str


def trial_rng(seed: int, m: int, p: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, m, p, trial]))


def random_qp(rng: np.random.Generator, m: int, p: int, max_tries: int = 100):
    """Draw ``(B, a, k)`` for a feasible random QP."""
    for _ in range(max_tries):
        B = rng.standard_normal((p, m))
        a = rng.uniform(-1.0, 1.0, p)
        d = rng.standard_normal(m)
        k = 2.0 * rng.uniform() ** (1.0 / m) * d / np.linalg.norm(d)
        if p == 0 or feasibility_probe(ConstraintSet(B, a, m=m)) <= PROBE_TOL:
            return B, a, k
    raise RuntimeError(f"no feasible QP after {max_tries} draws (m={m}, p={p})")


def checksum(u) -> str:
    text = ",".join(f"{v:.6f}" for v in np.asarray(u) + 0.0)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _setup(B, a, m):
    return ConstraintSet(B, a, m=m), WeightMatrix.identity(m)


def _run_method(method, B, a, k, m, cache: FilterState):
    t0 = time.perf_counter_ns()
    cs, W = _setup(B, a, m)
    t1 = time.perf_counter_ns()
    if method == "SolverEnumerate":
        res = theta_enumerate(cs, k, W)
        u, I = res.control, res.active_set
    elif method == "SolverActiveSet":
        res = theta_active_set(cs, k, W)
        u, I = res.control, res.active_set
    elif method == "Explicit":
        hit = first_member(cs, k, W)
        u, I = hit.candidate.control, hit.candidate.index_set
    else:
        chk = membership(cs, k, W, cache.cached_set)
        if chk.in_region:
            u, I = chk.candidate.control, cache.cached_set
        else:
            res = theta_active_set(cs, k, W, cache.cached_set)
            cache.theta_calls += 1
            u, I = res.control, res.active_set
        cache.cached_set = I
        cache.total_steps += 1
    t2 = time.perf_counter_ns()
    return u, tuple(I), t1 - t0, t2 - t1


def run_trial(seed: int, m: int, p: int, trial: int) -> list:
    """Time every method on one random QP; raises on cross-method disagreement."""
    B, a, k = random_qp(trial_rng(seed, m, p, trial), m, p)
    out = []
    ref = None
    for method in METHODS:
        cache = FilterState()
        _run_method(method, B, a, k, m, cache)        # warm run, primes the cache
        u, I, setup, solve = _run_method(method, B, a, k, m, cache)
        if ref is None:
            ref = u
        elif np.abs(u - ref).max() > AGREE_TOL:
            raise BenchDisagreement(
                f"{method} disagrees with SolverEnumerate on seed={seed} m={m} p={p} "
                f"trial={trial}: max|du|={np.abs(u - ref).max():.3e}")
        out.append(BenchRecord(m, p, trial, method, setup, solve, I, checksum(u)))
    return out


def run_bench(m_list, p_list, trials: int, seed: int = 0) -> list:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    records = []
    for m in m_list:
        for p in p_list:
            for trial in range(trials):
                records.extend(run_trial(seed, m, p, trial))
    return records


def write_bench_csv(path, records, seed: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# seed={seed}\n# distribution: {DISTRIBUTION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "p", "trial", "method", "setup_ns", "solve_ns", "active_set",
                    "checksum"])
        for r in records:
            w.writerow([r.m, r.p, r.trial, r.method, r.setup_ns, r.solve_ns,
                        ";".join(map(str, r.active_set)), r.checksum])


def summarize(records) -> list:
    """Rows ``(m, p, method, mean_solve_us, std_solve_us, mean_total_us, std_total_us)``."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.m, r.p, r.method), []).append(r)
    rows = []
    for (m, p, method), rs in groups.items():
        solve = np.array([r.solve_ns for r in rs]) / 1e3
        total = np.array([r.setup_ns + r.solve_ns for r in rs]) / 1e3
        rows.append((m, p, method, solve.mean(), solve.std(), total.mean(), total.std()))
    return rows


def format_summary(rows) -> str:
    lines = [f"{'m':>3} {'p':>3} {'method':<16} {'solve us':>10} {'+-':>8} "
             f"{'total us':>10} {'+-':>8}"]
    for m, p, method, ms, ss, mt, st in rows:
        lines.append(f"{m:>3} {p:>3} {method:<16} {ms:>10.1f} {ss:>8.1f} {mt:>10.1f} {st:>8.1f}")
    return "\n".join(lines)
