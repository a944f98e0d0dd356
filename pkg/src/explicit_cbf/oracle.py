"""Two realizations of the active-set oracle.

``theta_enumerate`` walks every index set of size at most ``m`` and returns the
first one whose region test passes. ``theta_active_set`` is a dual active-set
QP method (Goldfarb-Idnani style) that can be warm started from a guessed set.
Both return a :class:`SolveResult`; failures are reported through ``status``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .qp_core import (ActiveSet, ConstraintSet, RankDeficient, WeightMatrix, as_active_set,
                      candidate, gram_factorize)
from .region import TOL_DUAL, TOL_PRIMAL, first_member

SUBSET_BUDGET = 10**6
PROBE_TOL = 1e-6


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    DEGENERATE_LICQ = "DegenerateLICQ"


class BudgetExceeded(RuntimeError):
    """Too many index sets to enumerate; use ``theta_active_set`` instead."""


@dataclass(frozen=True)
class SolveResult:
    control: np.ndarray
    multipliers: np.ndarray     # length p, zero off the active set
    active_set: ActiveSet
    iterations: int
    status: Status

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def subset_count(p: int, m: int) -> int:
    return sum(math.comb(p, k) for k in range(min(p, m) + 1))


def check_budget(p: int, m: int, budget: int = SUBSET_BUDGET) -> None:
    n = subset_count(p, m)
    if n > budget:
        raise BudgetExceeded(f"{n} index sets for p={p}, m={m} exceed budget {budget}")


def feasibility_probe(constraints: ConstraintSet) -> float:
    """Smallest uniform relaxation ``s`` making every row satisfiable.

    Solves ``min s  s.t.  (b_i^T u + a_i) / nu_i <= s,  s >= -1`` as an LP with
    ``nu_i = max(||b_i||, 1)``. The QP is infeasible iff the result exceeds
    ``PROBE_TOL``.
    """
    p, m = constraints.p, constraints.m
    if p == 0:
        return -1.0
    nu = np.maximum(np.linalg.norm(constraints.B, axis=1), 1.0)
    A_ub = np.hstack([constraints.B / nu[:, None], -np.ones((p, 1))])
    b_ub = -constraints.a / nu
    c = np.zeros(m + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * m + [(-1.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"feasibility probe failed: {res.message}")
    return float(res.x[-1])


def _failure(constraints, nominal, iterations, status) -> SolveResult:
    return SolveResult(np.array(nominal, dtype=float), np.zeros(constraints.p), (),
                       iterations, status)


def _optimal(constraints, nominal, weight, cand, iterations) -> SolveResult:
    # single exit point for successful solves
    return SolveResult(cand.control, cand.full_multipliers(constraints.p), cand.index_set,
                       iterations, Status.OPTIMAL)


def _no_member_status(constraints: ConstraintSet) -> Status:
    if feasibility_probe(constraints) > PROBE_TOL:
        return Status.INFEASIBLE
    return Status.DEGENERATE_LICQ


def theta_enumerate(constraints: ConstraintSet, nominal, weight: WeightMatrix,
                    budget: int = SUBSET_BUDGET) -> SolveResult:
    """Exhaustive oracle: first passing index set by size, then lexicographically."""
    p, m = constraints.p, constraints.m
    check_budget(p, m, budget)
    hit = first_member(constraints, nominal, weight)
    if hit is not None:
        return _optimal(constraints, nominal, weight, hit.candidate, 0)
    return _failure(constraints, nominal, 0, _no_member_status(constraints))


def _prune_rank(constraints, weight, indices) -> list:
    kept: list = []
    for i in sorted(set(int(j) for j in indices)):
        if i < 0 or i >= constraints.p:
            continue
        try:
            gram_factorize(constraints, weight, tuple(kept + [i]))
        except RankDeficient:
            continue
        kept.append(i)
    return kept


def theta_active_set(constraints: ConstraintSet, nominal, weight: WeightMatrix,
                     warm_start=(), max_iter: int | None = None) -> SolveResult:
    """Dual active-set solve warm started from ``warm_start``.

    The warm set is pruned to linearly independent rows and then repaired by
    dropping the most negative multiplier until the candidate is dual
    feasible. From there the most violated row is added, taking partial steps
    that drop rows whose multipliers reach zero, until no row is violated.
    ``iterations`` counts row additions and removals, so an exact warm start
    reports zero.
    """
    p = constraints.p
    k = np.asarray(nominal, dtype=float)
    cap = max_iter if max_iter is not None else 50 * (p + 1)
    W = _prune_rank(constraints, weight, warm_start)
    iterations = 0
    stagnant = 0
    best_cost = -np.inf
    B, a, Rinv = constraints.B, constraints.a, weight.inv

    while True:
        # dual repair of the working set
        cand = candidate(constraints, k, weight, tuple(W))
        while W and cand.multipliers.min() < -TOL_DUAL:
            drop = int(np.argmin(cand.multipliers))
            del W[drop]
            iterations += 1
            if iterations > cap:
                return _failure(constraints, k, iterations, Status.DEGENERATE_LICQ)
            cand = candidate(constraints, k, weight, tuple(W))

        u = cand.control
        slack = B @ u + a
        if W:
            slack[W] = -np.inf
        if p == 0 or slack.max() < TOL_PRIMAL:
            return _optimal(constraints, k, weight, cand, iterations)

        d = u - k
        cost = 0.5 * d @ weight.R @ d
        if cost > best_cost * (1 + 1e-14) + 1e-300:
            best_cost = cost
            stagnant = 0
        else:
            stagnant += 1
        violated = np.flatnonzero(slack >= TOL_PRIMAL)
        if stagnant > 3 * p:
            q = int(violated[0])
        else:
            q = int(violated[np.argmax(slack[violated])])

        lam_W = cand.multipliers.copy()
        lam_q = 0.0
        n_q = B[q]
        while True:
            iterations += 1
            if iterations > cap:
                return _failure(constraints, k, iterations, Status.DEGENERATE_LICQ)
            if W:
                fac = gram_factorize(constraints, weight, tuple(W))
                r = fac.solve(fac.Rinv_B.T @ n_q)
                z = -(Rinv @ n_q - fac.Rinv_B @ r)
            else:
                r = np.zeros(0)
                z = -(Rinv @ n_q)
            try:
                gram_factorize(constraints, weight, tuple(sorted(W + [q])))
                independent = True
            except RankDeficient:
                independent = False
            s_q = n_q @ u + a[q]
            t_full = s_q / (-(n_q @ z)) if independent else np.inf
            t_dual, l = np.inf, -1
            for idx in range(len(W)):
                if r[idx] > 1e-12 * max(1.0, np.abs(r).max()):
                    ratio = max(lam_W[idx], 0.0) / r[idx]
                    if ratio < t_dual:
                        t_dual, l = ratio, idx
            if not np.isfinite(t_full) and not np.isfinite(t_dual):
                status = (Status.INFEASIBLE if feasibility_probe(constraints) > PROBE_TOL
                          else Status.DEGENERATE_LICQ)
                return _failure(constraints, k, iterations, status)
            if t_full <= t_dual:
                W = sorted(W + [q])
                break
            if independent:
                u = u + t_dual * z
            lam_W = lam_W - t_dual * r
            lam_q += t_dual
            del W[l]
            lam_W = np.delete(lam_W, l)


def solve(constraints: ConstraintSet, nominal, weight: WeightMatrix, theta: str = "activeset",
          warm_start=()) -> SolveResult:
    """Dispatch to the named oracle (``"enumerate"`` or ``"activeset"``)."""
    if theta == "enumerate":
        return theta_enumerate(constraints, nominal, weight)
    if theta == "activeset":
        return theta_active_set(constraints, nominal, weight, as_active_set(warm_start))
    raise ValueError(f"unknown oracle {theta!r}")
