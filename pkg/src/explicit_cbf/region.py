"""Pointwise active-set region tests and the trigger functions.

A state belongs to the region of ``I`` iff the rows in ``I`` are linearly
independent, the candidate multipliers are non-negative and every row outside
``I`` is strictly satisfied by the candidate control.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .qp_core import (ActiveSet, Candidate, ConstraintSet, RankDeficient, WeightMatrix,
                      candidate)

TOL_DUAL = 1e-9
TOL_PRIMAL = 1e-9


class Reason(enum.Enum):
    RANK_FAILED = "RankFailed"
    DUAL_NEGATIVE = "DualNegative"
    INACTIVE_VIOLATED = "InactiveViolated"
    MEMBER = "Member"


@dataclass(frozen=True)
class TriggerValues:
    s1_min: float   # min multiplier, +inf for the empty set
    s2_max: float   # max inactive row value, -inf when every row is in I

    def member(self, tol_dual: float = TOL_DUAL, tol_primal: float = TOL_PRIMAL) -> bool:
        return self.s1_min >= -tol_dual and self.s2_max < tol_primal


@dataclass(frozen=True)
class MembershipResult:
    reason: Reason
    candidate: Candidate | None = None
    triggers: TriggerValues | None = None

    @property
    def in_region(self) -> bool:
        return self.reason is Reason.MEMBER


def _complement_mask(p: int, I: ActiveSet) -> np.ndarray:
    mask = np.ones(p, dtype=bool)
    if I:
        mask[list(I)] = False
    return mask


def trigger_values(cand: Candidate, constraints: ConstraintSet) -> TriggerValues:
    lam = cand.multipliers
    s1 = float(lam.min()) if lam.size else np.inf
    mask = _complement_mask(constraints.p, cand.index_set)
    if mask.any():
        s2 = float((constraints.B[mask] @ cand.control + constraints.a[mask]).max())
    else:
        s2 = -np.inf
    return TriggerValues(s1, s2)


def triggers(constraints: ConstraintSet, nominal, weight: WeightMatrix,
             I: ActiveSet) -> TriggerValues:
    """Trigger values of ``I`` at the current data; raises ``RankDeficient``."""
    return trigger_values(candidate(constraints, nominal, weight, tuple(I)), constraints)


def membership(constraints: ConstraintSet, nominal, weight: WeightMatrix, I: ActiveSet,
               tol_dual: float = TOL_DUAL, tol_primal: float = TOL_PRIMAL) -> MembershipResult:
    """Test whether the QP data lies in the region of ``I``.

    Checks run in order (rank, dual sign, inactive rows) and the first failure
    is reported. The candidate is attached whenever the rank test passes so
    the caller can reuse ``u_I`` without recomputation.
    """
    try:
        cand = candidate(constraints, nominal, weight, tuple(I))
    except RankDeficient:
        return MembershipResult(Reason.RANK_FAILED)
    trig = trigger_values(cand, constraints)
    if trig.s1_min < -tol_dual:
        reason = Reason.DUAL_NEGATIVE
    elif trig.s2_max >= tol_primal:
        reason = Reason.INACTIVE_VIOLATED
    else:
        reason = Reason.MEMBER
    return MembershipResult(reason, cand, trig)


def first_member(constraints: ConstraintSet, nominal, weight: WeightMatrix,
                 max_size: int | None = None) -> MembershipResult | None:
    """Scan index sets by size, then lexicographically; return the first member.

    Returns ``None`` when no index set of size at most ``max_size`` (default
    ``m``) passes.
    """
    p = constraints.p
    top = min(p, constraints.m if max_size is None else max_size)
    for size in range(top + 1):
        for I in itertools.combinations(range(p), size):
            res = membership(constraints, nominal, weight, I)
            if res.in_region:
                return res
    return None
