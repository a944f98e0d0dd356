"""scikit-learn style wrappers around the explicit law and the runtime filter."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .affine import (AffineEvaluator, AffineProblem, NoRegionFound, enumerate_regions,
                     lipschitz_constant)
from .frontend import FilterProblem
from .runtime import FilterState, fresh_solve, step_detail


class ExplicitCBFController(BaseEstimator):
    """Piecewise-affine filter for constant-``b`` problems.

    Parameters
    ----------
    b_rows : array of shape (p, m)
        Constant constraint normals.
    gamma, eta : arrays of shape (p, n) and (p,)
        Affine row offsets ``a(x) = gamma x + eta``.
    K, kappa : arrays of shape (m, n) and (m,)
        Affine nominal law ``k(x) = K x + kappa``.
    weight : array of shape (m, m), optional
        Positive definite input weight, identity by default.

    Attributes
    ----------
    regions_ : list of AffineRegionLaw
    lipschitz_ : float
    n_features_in_ : int
    """

    def __init__(self, b_rows=None, gamma=None, eta=None, K=None, kappa=None, weight=None):
        self.b_rows = b_rows
        self.gamma = gamma
        self.eta = eta
        self.K = K
        self.kappa = kappa
        self.weight = weight

    def fit(self, X=None, y=None):
        """Enumerate and precompute every region law. ``X`` is ignored.

        Raises ``ValueError`` if every region is empty (infeasible everywhere).
        """
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        m, n = K.shape
        weight = np.eye(m) if self.weight is None else self.weight
        self.problem_ = AffineProblem(self.b_rows, self.gamma, self.eta, K, self.kappa, weight)
        self.regions_ = enumerate_regions(self.problem_)
        self.lipschitz_ = lipschitz_constant(self.regions_)
        self.evaluator_ = AffineEvaluator(self.regions_)
        self.n_features_in_ = n
        return self

    def _check(self, X):
        check_is_fitted(self, "regions_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def _locate(self, X) -> np.ndarray:
        idx = self.evaluator_.locate_batch(X)
        if np.any(idx < 0):
            raise NoRegionFound(f"no region contains x={X[int(np.argmin(idx))]}")
        return idx

    def predict(self, X) -> np.ndarray:
        """Filtered controls, shape ``(n_samples, m)``."""
        X = self._check(X)
        idx = self._locate(X)
        out = np.empty((X.shape[0], self.problem_.m))
        for r, (x, j) in enumerate(zip(X, idx)):
            out[r] = self.evaluator_.laws[j].control(x)
        return out

    def predict_active_set(self, X) -> list:
        X = self._check(X)
        return [self.evaluator_.laws[j].index_set for j in self._locate(X)]


class SafetyFilter(BaseEstimator):
    """Pointwise filter over a :class:`FilterProblem`.

    With ``resource_aware=True`` rows of ``X`` are treated as consecutive
    samples of one trajectory and the cached active set is reused between
    them; ``theta_calls_`` counts oracle invocations.
    """

    def __init__(self, problem: FilterProblem | None = None, theta: str = "activeset",
                 resource_aware: bool = True):
        self.problem = problem
        self.theta = theta
        self.resource_aware = resource_aware

    def fit(self, X=None, y=None):
        if not isinstance(self.problem, FilterProblem):
            raise TypeError("problem must be a FilterProblem")
        self.state_ = FilterState()
        self.n_features_in_ = self.problem.system.n
        return self

    @property
    def theta_calls_(self) -> int:
        check_is_fitted(self, "state_")
        return self.state_.theta_calls

    def predict(self, X, t=None) -> np.ndarray:
        """Decision vectors (inputs then slacks) for each row of ``X``."""
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        times = np.zeros(len(X)) if t is None else np.broadcast_to(np.asarray(t, float), len(X))
        out = np.empty((len(X), self.problem.decision_dim))
        for r, (x, tk) in enumerate(zip(X, times)):
            if self.resource_aware:
                out[r] = step_detail(self.state_, self.problem, x, tk, self.theta).control
            else:
                res = fresh_solve(self.problem, x, tk, self.theta)
                self.state_.theta_calls += 1
                out[r] = res.control
        return out
