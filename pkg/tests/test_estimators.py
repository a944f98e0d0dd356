import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from explicit_cbf.affine import NoRegionFound
from explicit_cbf.estimators import ExplicitCBFController, SafetyFilter
from explicit_cbf.runtime import fresh_solve
from explicit_cbf.scenarios import single_integrator


def one_dim_controller():
    return ExplicitCBFController(b_rows=[[1.0]], gamma=[[1.0]], eta=[0.0], K=[[0.0]],
                                 kappa=[0.0])


class TestExplicitController:
    def test_params_and_clone(self):
        est = one_dim_controller()
        assert set(est.get_params()) == {"b_rows", "gamma", "eta", "K", "kappa", "weight"}
        twin = clone(est)
        assert twin.get_params()["b_rows"] == [[1.0]]

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            one_dim_controller().predict([[1.0]])

    def test_fit_predict(self):
        est = one_dim_controller().fit()
        assert len(est.regions_) == 2 and est.lipschitz_ == 1.0
        np.testing.assert_array_equal(est.predict([[2.0], [-1.0]]), [[-2.0], [0.0]])
        assert est.predict_active_set([[2.0], [-1.0]]) == [(0,), ()]
        with pytest.raises(ValueError):
            est.predict([[1.0, 2.0]])

    def test_infeasible_everywhere(self):
        # u + 1 <= 0 and -u + 1 <= 0 cannot both hold
        est = ExplicitCBFController(b_rows=[[1.0], [-1.0]], gamma=[[0.0], [0.0]], eta=[1.0, 1.0],
                                    K=[[0.0]], kappa=[0.0])
        with pytest.raises(ValueError):
            est.fit()

    def test_no_region(self):
        # u + x <= 0 and -u + x <= 0 are jointly feasible only for x <= 0
        est = ExplicitCBFController(b_rows=[[1.0], [-1.0]], gamma=[[1.0], [1.0]], eta=[0.0, 0.0],
                                    K=[[0.0]], kappa=[0.0]).fit()
        est.predict([[-1.0]])
        with pytest.raises(NoRegionFound):
            est.predict([[1.0]])


class TestSafetyFilter:
    def test_predict_matches_fresh_solve(self):
        sc = single_integrator()
        X = np.array([[1.0, 0.0], [0.9, 0.1], [-0.1, 0.0]])
        filt = SafetyFilter(sc.problem).fit()
        U = filt.predict(X)
        for x, u in zip(X, U):
            np.testing.assert_allclose(u, fresh_solve(sc.problem, x).control, atol=1e-12)
        assert filt.theta_calls_ == 1
        plain = SafetyFilter(sc.problem, resource_aware=False).fit()
        plain.predict(X)
        assert plain.theta_calls_ == 3

    def test_requires_problem(self):
        with pytest.raises(TypeError):
            SafetyFilter().fit()
        with pytest.raises(NotFittedError):
            SafetyFilter(single_integrator().problem).predict([[0.0, 0.0]])
