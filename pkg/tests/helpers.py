"""Independent reference solvers and random problem generators for the tests."""
from __future__ import annotations

import clarabel
import numpy as np
from scipy import sparse

from explicit_cbf.affine import AffineProblem


def reference_qp(B, a, k, R=None):
    """Solve ``min 1/2 |u-k|_R^2  s.t.  B u + a <= 0`` with the Clarabel interior-point solver.

    Shares no code with the package solvers. Returns ``None`` when Clarabel
    certifies infeasibility.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    a = np.asarray(a, dtype=float).reshape(-1)
    k = np.asarray(k, dtype=float)
    m = k.size
    R = np.eye(m) if R is None else np.asarray(R, dtype=float)
    if a.size == 0:
        return k.copy()
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = settings.tol_gap_rel = 1e-10
    settings.tol_feas = 1e-10
    solver = clarabel.DefaultSolver(sparse.csc_matrix(np.triu(R)), -R @ k,
                                    sparse.csc_matrix(B), -a,
                                    [clarabel.NonnegativeConeT(B.shape[0])], settings)
    sol = solver.solve()
    status = str(sol.status)
    if "Infeasible" in status:
        return None
    if status != "Solved":
        raise RuntimeError(f"reference solver stopped with status {status}")
    return np.array(sol.x)


def random_qp(rng, m, p, feasible=True):
    """Random ``(B, a, k)``; with ``feasible`` rows are shifted so a known point satisfies them."""
    B = rng.standard_normal((p, m))
    k = 2.0 * rng.standard_normal(m)
    if feasible:
        u0 = rng.standard_normal(m)
        a = -(B @ u0) - rng.uniform(0.05, 1.0, p)
    else:
        a = rng.uniform(-1.0, 1.0, p)
    return B, a, k


def random_spd(rng, m, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return Q @ np.diag(np.geomspace(1.0, cond, m)) @ Q.T


def random_affine_problem(rng, n, m, p, weight=None):
    """Constant-``b`` problem; when ``p <= m`` with independent rows it is feasible everywhere."""
    b = rng.standard_normal((p, m))
    gamma = rng.standard_normal((p, n))
    eta = rng.uniform(-1.0, 1.0, p)
    K = rng.standard_normal((m, n))
    kappa = rng.standard_normal(m)
    W = np.eye(m) if weight is None else weight
    return AffineProblem(b, gamma, eta, K, kappa, W)
