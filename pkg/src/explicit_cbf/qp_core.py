"""Parametric QP data model and the closed-form candidate KKT solution.

The filter QP at a fixed state is::

    min_u  1/2 (u - k)^T R (u - k)
    s.t.   b_i^T u + a_i <= 0,   i = 0, ..., p-1

For a trial index set ``I`` whose rows are linearly independent the
equality-constrained optimum is available in closed form::

    H_I    = B_I^T R^{-1} B_I
    lam_I  = H_I^{-1} (B_I^T k + a_I)
    u_I    = k - R^{-1} B_I lam_I
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_solve

# Full column rank iff sigma_min(R^{-1/2} B_I) > RANK_RTOL * max(sigma_max, 1).
RANK_RTOL = 1e-9
SYMMETRY_RTOL = 1e-12

ActiveSet = tuple  # strictly increasing tuple of row indices


class RankDeficient(ValueError):
    """Raised when B_I fails the full-column-rank test.

    This is a verdict about the trial index set, not a malfunction; callers
    that enumerate index sets catch it and move on.
    """

    def __init__(self, index_set: ActiveSet, sigma_min: float = 0.0):
        super().__init__(f"rows {list(index_set)} are not linearly independent "
                         f"(sigma_min={sigma_min:.3e})")
        self.index_set = index_set
        self.sigma_min = sigma_min


def as_active_set(indices: Iterable[int], p: int | None = None) -> ActiveSet:
    """Normalize ``indices`` into a sorted, duplicate-free tuple of ints."""
    out = tuple(sorted(int(i) for i in indices))
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate indices in active set {out}")
    if p is not None and out and (out[0] < 0 or out[-1] >= p):
        raise ValueError(f"active set {out} out of range for p={p}")
    return out


class WeightMatrix:
    """Symmetric positive definite input metric ``R``.

    Construction fails with ``ValueError`` unless ``R`` is symmetric (to a
    relative tolerance of 1e-12) and admits a Cholesky factorization.
    """

    def __init__(self, entries):
        R = np.array(entries, dtype=float, copy=True)
        if R.ndim == 0:
            R = R.reshape(1, 1)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError(f"weight must be a square matrix, got shape {R.shape}")
        if not np.all(np.isfinite(R)):
            raise ValueError("weight has non-finite entries")
        scale = max(np.abs(R).max(initial=0.0), 1.0)
        if np.abs(R - R.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
            raise ValueError("weight is not symmetric")
        R = 0.5 * (R + R.T)
        try:
            L = np.linalg.cholesky(R)
        except np.linalg.LinAlgError as exc:
            raise ValueError("weight is not positive definite") from exc
        self.R = R
        self.chol = L
        self.inv = cho_solve((L, True), np.eye(R.shape[0]))
        self.inv = 0.5 * (self.inv + self.inv.T)
        self.chol_inv = np.linalg.solve(L, np.eye(R.shape[0]))
        for arr in (self.R, self.chol, self.inv, self.chol_inv):
            arr.setflags(write=False)

    @classmethod
    def identity(cls, m: int) -> WeightMatrix:
        return cls(np.eye(m))

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def __repr__(self):
        return f"WeightMatrix(m={self.m})"


class ConstraintSet:
    """Stacked rows ``b_i^T u + a_i <= 0`` evaluated at one state.

    ``B`` is stored row-wise with shape ``(p, m)`` so ``B[i]`` is ``b_i``; row
    order is the constraint index order.
    """

    def __init__(self, B, a, m: int | None = None):
        B = np.array(B, dtype=float, copy=True)
        a = np.array(a, dtype=float, copy=True).reshape(-1)
        if B.size == 0:
            if m is None:
                m = B.shape[1] if B.ndim == 2 else 0
            B = B.reshape(0, m)
        if B.ndim != 2 or B.shape[0] != a.shape[0]:
            raise ValueError(f"inconsistent constraint shapes B{B.shape}, a{a.shape}")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(a))):
            raise ValueError("constraint data must be finite")
        B.setflags(write=False)
        a.setflags(write=False)
        self.B = B
        self.a = a

    @classmethod
    def from_rows(cls, rows: Sequence[tuple], m: int) -> ConstraintSet:
        if not rows:
            return cls(np.zeros((0, m)), np.zeros(0), m=m)
        return cls(np.array([r[0] for r in rows], dtype=float),
                   np.array([r[1] for r in rows], dtype=float))

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def slacks(self, u) -> np.ndarray:
        """Row values ``b_i^T u + a_i`` (non-positive when satisfied)."""
        return self.B @ u + self.a

    def __eq__(self, other):
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return (self.B.shape == other.B.shape and np.array_equal(self.B, other.B)
                and np.array_equal(self.a, other.a))

    def __repr__(self):
        return f"ConstraintSet(p={self.p}, m={self.m})"


@dataclass(frozen=True)
class GramFactorization:
    """Cholesky factor of ``H_I = B_I^T R^{-1} B_I`` plus the gathered rows."""

    index_set: ActiveSet
    B_I: np.ndarray        # (m, k), columns are b_i
    Rinv_B: np.ndarray     # (m, k)
    chol: np.ndarray       # lower factor of H_I, (k, k)
    sigma_min: float

    @property
    def H(self) -> np.ndarray:
        return self.chol @ self.chol.T

    def solve(self, rhs) -> np.ndarray:
        if not self.index_set:
            return np.zeros(0)
        return cho_solve((self.chol, True), rhs, check_finite=False)


@dataclass(frozen=True)
class Candidate:
    multipliers: np.ndarray
    control: np.ndarray
    index_set: ActiveSet = field(default=())

    def full_multipliers(self, p: int) -> np.ndarray:
        lam = np.zeros(p)
        if self.index_set:
            lam[list(self.index_set)] = self.multipliers
        return lam


def _check_dims(constraints: ConstraintSet, weight: WeightMatrix, I: ActiveSet):
    if constraints.m != weight.m:
        raise ValueError(f"constraint width {constraints.m} != weight size {weight.m}")
    if I and (min(I) < 0 or max(I) >= constraints.p):
        raise ValueError(f"index set {I} out of range for p={constraints.p}")


def gram_factorize(constraints: ConstraintSet, weight: WeightMatrix,
                   I: ActiveSet) -> GramFactorization:
    """Factor ``H_I`` for the rows in ``I``; raise :class:`RankDeficient` otherwise."""
    I = tuple(I)
    _check_dims(constraints, weight, I)
    m = constraints.m
    if not I:
        empty = np.zeros((m, 0))
        return GramFactorization((), empty, empty, np.zeros((0, 0)), np.inf)
    if len(I) > m:
        raise RankDeficient(I, 0.0)
    B_I = constraints.B[list(I)].T
    sv = np.linalg.svd(weight.chol_inv @ B_I, compute_uv=False)
    if sv[-1] <= RANK_RTOL * max(sv[0], 1.0):
        raise RankDeficient(I, float(sv[-1]))
    Rinv_B = weight.inv @ B_I
    H = B_I.T @ Rinv_B
    H = 0.5 * (H + H.T)
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise RankDeficient(I, float(sv[-1])) from None
    return GramFactorization(I, B_I, Rinv_B, L, float(sv[-1]))


def candidate(constraints: ConstraintSet, nominal, weight: WeightMatrix, I: ActiveSet,
              factorization: GramFactorization | None = None) -> Candidate:
    """Closed-form multipliers and control for the trial active set ``I``.

    Parameters
    ----------
    constraints : ConstraintSet
    nominal : array_like, shape (m,)
        The nominal input ``k``.
    weight : WeightMatrix
    I : tuple of int
        Sorted row indices assumed active.
    factorization : GramFactorization, optional
        Reuse a factorization of the same ``I``.

    Raises
    ------
    RankDeficient
        If the rows in ``I`` are not linearly independent.
    """
    k = np.asarray(nominal, dtype=float)
    I = tuple(I)
    if not I:
        _check_dims(constraints, weight, I)
        return Candidate(np.zeros(0), k.copy(), ())
    fac = factorization if factorization is not None else gram_factorize(constraints, weight, I)
    a_I = constraints.a[list(I)]
    lam = fac.solve(fac.B_I.T @ k + a_I)
    u = k - fac.Rinv_B @ lam
    # one refinement step: large multipliers amplify rounding in the active rows
    r = fac.B_I.T @ u + a_I
    if np.any(r):
        delta = fac.solve(r)
        lam = lam + delta
        u = u - fac.Rinv_B @ delta
    return Candidate(lam, u, I)


@dataclass(frozen=True)
class KKTReport:
    """Magnitudes of the four KKT residuals.

    ``primal`` is ``max_i(b_i^T u + a_i)``; it is ``-inf`` when there are no
    rows. ``dual`` is the most negative multiplier (0 when none is negative
    is reported as ``min(0, min lam)``).
    """

    stationarity: float
    primal: float
    dual: float
    complementarity: float

    @property
    def no_rows(self) -> bool:
        return self.primal == -np.inf

    def worst(self) -> float:
        """Largest residual magnitude, suitable for a single tolerance check."""
        return max(self.stationarity, max(self.primal, 0.0), max(-self.dual, 0.0),
                   self.complementarity)

    def passes(self, tol: float = 1e-7) -> bool:
        return self.worst() <= tol


def kkt_residuals(cand: Candidate, constraints: ConstraintSet, nominal,
                  weight: WeightMatrix) -> KKTReport:
    k = np.asarray(nominal, dtype=float)
    u = cand.control
    lam = cand.full_multipliers(constraints.p)
    stat = weight.R @ (u - k) + constraints.B.T @ lam
    if constraints.p == 0:
        return KKTReport(float(np.linalg.norm(stat)), -np.inf, 0.0, 0.0)
    s = constraints.slacks(u)
    return KKTReport(
        stationarity=float(np.linalg.norm(stat)),
        primal=float(s.max()),
        dual=float(min(lam.min(), 0.0)),
        complementarity=float(np.abs(lam * s).max()),
    )
