"""Offline piecewise-affine explicit controller.

When the input directions ``b_i`` are constant and ``a_i(x) = gamma_i^T x + eta_i``
and ``k(x) = K x + kappa`` are affine, every region law is affine and every
region is a polyhedron; all of it can be tabulated once.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .frontend import VanishingControlDirection, assemble
from .oracle import SUBSET_BUDGET, check_budget
from .qp_core import ActiveSet, ConstraintSet, RankDeficient, WeightMatrix, gram_factorize
from .region import TOL_DUAL, TOL_PRIMAL

REGION_TABLE_FORMAT = "explicit-cbf-region-table"
REGION_TABLE_VERSION = 1


class NoRegionFound(LookupError):
    """No tabulated region contains the query state."""


@dataclass
class AffineProblem:
    b_rows: np.ndarray   # (p, m)
    gamma: np.ndarray    # (p, n)
    eta: np.ndarray      # (p,)
    K: np.ndarray        # (m, n)
    kappa: np.ndarray    # (m,)
    weight: WeightMatrix

    def __post_init__(self):
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        m, n = self.K.shape
        self.kappa = np.asarray(self.kappa, dtype=float).reshape(m)
        self.b_rows = np.asarray(self.b_rows, dtype=float).reshape(-1, m)
        p = self.b_rows.shape[0]
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(p, n)
        self.eta = np.asarray(self.eta, dtype=float).reshape(p)
        if not isinstance(self.weight, WeightMatrix):
            self.weight = WeightMatrix(self.weight)
        if self.weight.m != m:
            raise ValueError(f"weight size {self.weight.m} does not match m={m}")

    @property
    def n(self) -> int:
        return self.K.shape[1]

    @property
    def m(self) -> int:
        return self.K.shape[0]

    @property
    def p(self) -> int:
        return self.b_rows.shape[0]

    def qp_data(self, x):
        """``(constraints, nominal, weight)`` of the filter QP at state ``x``."""
        x = np.asarray(x, dtype=float)
        return (ConstraintSet(self.b_rows, self.gamma @ x + self.eta, m=self.m),
                self.K @ x + self.kappa, self.weight)


@dataclass
class AffineRegionLaw:
    """Affine multipliers/control on one region and the region's inequalities.

    ``normals @ x + offsets`` is compared row-wise: the first ``len(index_set)``
    rows are non-strict (``<= 0``, dual feasibility written as ``-lam <= 0``),
    the remaining rows are strict (``< 0``, inactive constraints).
    """

    index_set: ActiveSet
    G: np.ndarray
    g: np.ndarray
    K_I: np.ndarray
    kappa_I: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    strict: np.ndarray
    empty: bool = False
    margin: float = np.nan

    @property
    def polyhedron(self) -> list:
        return [(self.normals[i], float(self.offsets[i]), bool(self.strict[i]))
                for i in range(len(self.offsets))]

    def multipliers(self, x) -> np.ndarray:
        return self.G @ x + self.g

    def control(self, x) -> np.ndarray:
        return self.K_I @ x + self.kappa_I

    def contains(self, x, tol_dual: float = TOL_DUAL, tol_primal: float = TOL_PRIMAL) -> bool:
        v = self.normals @ x + self.offsets
        return bool(np.all(np.where(self.strict, v < tol_primal, v <= tol_dual)))


def precompute_region(problem: AffineProblem, I: ActiveSet) -> AffineRegionLaw:
    """Tabulate the affine law and polyhedron of ``I``; raises ``RankDeficient``."""
    I = tuple(I)
    n, m, p = problem.n, problem.m, problem.p
    Rinv = problem.weight.inv
    if I:
        fac = gram_factorize(ConstraintSet(problem.b_rows, np.zeros(p), m=m), problem.weight, I)
        B_I = fac.B_I
        G = fac.solve(B_I.T @ problem.K + problem.gamma[list(I)])
        g = fac.solve(B_I.T @ problem.kappa + problem.eta[list(I)])
        K_I = problem.K - Rinv @ B_I @ G
        kappa_I = problem.kappa - Rinv @ B_I @ g
    else:
        G, g = np.zeros((0, n)), np.zeros(0)
        K_I, kappa_I = problem.K.copy(), problem.kappa.copy()
    out = [j for j in range(p) if j not in I]
    normals = np.vstack([-G, problem.b_rows[out] @ K_I + problem.gamma[out]]).reshape(-1, n)
    offsets = np.concatenate([-g, problem.b_rows[out] @ kappa_I + problem.eta[out]])
    strict = np.array([False] * len(I) + [True] * len(out), dtype=bool)
    law = AffineRegionLaw(I, G, g, K_I, kappa_I, normals, offsets, strict)
    law.margin = _interior_margin(normals, offsets)
    law.empty = law.margin < -1e-9
    return law


def _interior_margin(normals, offsets) -> float:
    """Largest ``t`` with ``normals x + offsets + t ||normal|| <= 0`` (capped at 1).

    Negative means the closed polyhedron is empty; ``-inf`` when the LP is
    infeasible outright (a constant row that can never hold).
    """
    r, n = normals.shape
    if r == 0:
        return 1.0
    nu = np.linalg.norm(normals, axis=1)
    const = nu < 1e-12
    if np.any(offsets[const] > 1e-9):
        return -np.inf
    keep = ~const
    if not keep.any():
        return 1.0
    # unit rows keep the LP well scaled; the margin is then a Euclidean distance
    A_ub = np.hstack([normals[keep] / nu[keep, None], np.ones((int(keep.sum()), 1))])
    b_ub = -offsets[keep] / nu[keep]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    for method in ("highs", "highs-ipm", "highs-ds"):
        res = linprog(c, A_ub=A_ub, b_ub=b_ub,
                      bounds=[(None, None)] * n + [(None, 1.0)], method=method)
        if res.status in (0, 2):
            break
    if res.status == 2:
        return -np.inf
    if res.status != 0:
        raise RuntimeError(f"region emptiness probe failed: {res.message}")
    return float(res.x[-1])


def enumerate_regions(problem: AffineProblem, budget: int = SUBSET_BUDGET) -> list:
    """Laws for every full-rank index set of size at most ``m``.

    Order matches the exhaustive oracle: by size, then lexicographic. Laws of
    regions whose closure is empty are flagged with ``empty=True`` and kept.
    """
    p, m = problem.p, problem.m
    check_budget(p, m, budget)
    laws = []
    for size in range(min(p, m) + 1):
        for I in itertools.combinations(range(p), size):
            try:
                laws.append(precompute_region(problem, I))
            except RankDeficient:
                continue
    return laws


def lipschitz_constant(laws, subset_filter=None) -> float:
    """Maximum spectral norm of ``K_I`` over the retained laws.

    By default only laws with a non-empty closed region are retained. The
    bound is valid on convex subsets of the feasible domain; a custom
    ``subset_filter`` is not checked for convexity.
    """
    keep = subset_filter if subset_filter is not None else (lambda law: not law.empty)
    selected = [law for law in laws if keep(law)]
    if not selected:
        raise ValueError("no laws left after filtering")
    return max(float(np.linalg.norm(law.K_I, 2)) if law.K_I.size else 0.0 for law in selected)


class AffineEvaluator:
    """Region lookup over tabulated laws with a last-hit cache.

    Each evaluator owns its cache and is not meant to be shared between
    threads; the laws themselves are read-only and may be shared.
    """

    def __init__(self, laws, tol_dual: float = TOL_DUAL, tol_primal: float = TOL_PRIMAL):
        self.laws = [law for law in laws if not law.empty]
        if not self.laws:
            raise ValueError("no non-empty regions to evaluate")
        self.tol_dual = tol_dual
        self.tol_primal = tol_primal
        self.last_hit = None
        self._N = np.vstack([law.normals for law in self.laws])
        self._off = np.concatenate([law.offsets for law in self.laws])
        self._strict = np.concatenate([law.strict for law in self.laws])
        sizes = [len(law.offsets) for law in self.laws]
        self._starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
        self._sizes = np.array(sizes)

    def locate(self, x) -> int:
        x = np.asarray(x, dtype=float)
        if self.last_hit is not None and self.laws[self.last_hit].contains(
                x, self.tol_dual, self.tol_primal):
            return self.last_hit
        idx = int(self.locate_batch(x[None, :])[0])
        if idx < 0:
            raise NoRegionFound(f"no region contains x={x}")
        self.last_hit = idx
        return idx

    def locate_batch(self, X) -> np.ndarray:
        """Index of the first containing law per row of ``X`` (-1 if none)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones((X.shape[0], len(self.laws)), dtype=bool)
        if self._off.size:
            V = X @ self._N.T + self._off
            sat = np.where(self._strict, V < self.tol_primal, V <= self.tol_dual)
            nonempty = self._sizes > 0
            red = np.logical_and.reduceat(sat, self._starts[nonempty], axis=1)
            ok[:, nonempty] = red
        first = np.where(ok.any(axis=1), ok.argmax(axis=1), -1)
        return first

    def __call__(self, x):
        law = self.laws[self.locate(x)]
        return law.control(np.asarray(x, dtype=float)), law.index_set


def eval_affine(laws, x, evaluator: AffineEvaluator | None = None):
    """Explicit controller output ``(u, index_set)`` at ``x``.

    Pass a persistent ``evaluator`` to benefit from its last-hit cache.
    Raises :class:`NoRegionFound` when ``x`` lies in no tabulated region.
    """
    ev = evaluator if evaluator is not None else AffineEvaluator(laws)
    return ev(x)


def affine_problem_from(problem, t: float = 0.0, rng=None, n_checks: int = 8,
                        rtol: float = 1e-9) -> AffineProblem:
    """Extract constant/affine data from a :class:`FilterProblem` at time ``t``.

    Raises ``ValueError`` if the assembled rows are not constant in ``b`` or
    not affine in ``a`` and ``k`` (checked at random states).
    """
    with warnings.catch_warnings():
        # probe states are synthetic; a vanishing row there is not a user error
        warnings.simplefilter("ignore", VanishingControlDirection)
        return _extract_affine(problem, t, rng, n_checks, rtol)


def _extract_affine(problem, t, rng, n_checks, rtol) -> AffineProblem:
    n = problem.system.n
    cs0, k0, W = assemble(problem, np.zeros(n), t)
    gamma = np.zeros((cs0.p, n))
    Kmat = np.zeros((k0.size, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cs, k, _ = assemble(problem, e, t)
        gamma[:, j] = cs.a - cs0.a
        Kmat[:, j] = k - k0
    aff = AffineProblem(cs0.B, gamma, cs0.a, Kmat, k0, W)
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(n_checks):
        x = rng.standard_normal(n)
        cs, k, _ = assemble(problem, x, t)
        ref_cs, ref_k, _ = aff.qp_data(x)
        scale = 1.0 + np.abs(cs.a).max(initial=0.0) + np.abs(k).max(initial=0.0)
        if (not np.allclose(cs.B, cs0.B, rtol=0, atol=rtol * scale)
                or np.abs(cs.a - ref_cs.a).max(initial=0.0) > rtol * scale * 10
                or np.abs(k - ref_k).max(initial=0.0) > rtol * scale * 10):
            raise ValueError("problem data is not constant-b / affine-a / affine-k")
    return aff


def _law_record(law: AffineRegionLaw) -> dict:
    return {
        "index_set": list(law.index_set),
        "G": law.G.ravel().tolist(),
        "g": law.g.tolist(),
        "K_I": law.K_I.ravel().tolist(),
        "kappa_I": law.kappa_I.tolist(),
        "polyhedron": [{"normal": (nrm + 0.0).tolist(), "offset": off + 0.0, "strict": st}
                       for nrm, off, st in law.polyhedron],
        "empty": bool(law.empty),
        "margin": law.margin if np.isfinite(law.margin) else None,
    }


def write_region_table(path, laws, n: int, m: int, p: int, lipschitz: float | None = None,
                       meta: dict | None = None) -> None:
    """Write laws as JSON Lines: one header record then one record per law.

    Matrices are flattened row-major; ``G`` is ``|I| x n`` and ``K_I`` is
    ``m x n``.
    """
    header = {"format": REGION_TABLE_FORMAT, "version": REGION_TABLE_VERSION,
              "n": n, "m": m, "p": p, "count": len(laws), "lipschitz": lipschitz}
    if meta:
        header["meta"] = meta
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for law in laws:
            fh.write(json.dumps(_law_record(law), sort_keys=True) + "\n")


def read_region_table(path):
    """Inverse of :func:`write_region_table`; returns ``(header, laws)``."""
    with open(Path(path), encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    header = json.loads(lines[0])
    if header.get("format") != REGION_TABLE_FORMAT:
        raise ValueError("not a region table")
    if header.get("version") != REGION_TABLE_VERSION:
        raise ValueError(f"unsupported region table version {header.get('version')}")
    n, m = header["n"], header["m"]
    laws = []
    for ln in lines[1:]:
        rec = json.loads(ln)
        k = len(rec["index_set"])
        poly = rec["polyhedron"]
        laws.append(AffineRegionLaw(
            index_set=tuple(rec["index_set"]),
            G=np.array(rec["G"], dtype=float).reshape(k, n),
            g=np.array(rec["g"], dtype=float),
            K_I=np.array(rec["K_I"], dtype=float).reshape(m, n),
            kappa_I=np.array(rec["kappa_I"], dtype=float),
            normals=np.array([r["normal"] for r in poly], dtype=float).reshape(len(poly), n),
            offsets=np.array([r["offset"] for r in poly], dtype=float),
            strict=np.array([r["strict"] for r in poly], dtype=bool),
            empty=rec["empty"],
            margin=rec["margin"] if rec["margin"] is not None else -np.inf,
        ))
    return header, laws
