import itertools

import numpy as np
import pytest

from explicit_cbf.qp_core import ConstraintSet, RankDeficient, WeightMatrix
from explicit_cbf.region import (TOL_PRIMAL, Reason, first_member, membership, trigger_values,
                                 triggers)

from helpers import random_qp, random_spd, reference_qp

I2 = WeightMatrix.identity(2)
K0 = np.zeros(2)


def single(a):
    return ConstraintSet([[1.0, 0.0]], [a])


class TestMembership:
    def test_member_empty_set(self):
        res = membership(single(-1.0), K0, I2, ())
        assert res.reason is Reason.MEMBER and res.in_region

    def test_dual_negative(self):
        res = membership(single(-1.0), K0, I2, (0,))
        assert res.reason is Reason.DUAL_NEGATIVE
        assert res.triggers.s1_min == pytest.approx(-1.0)
        assert res.candidate is not None

    def test_inactive_violated(self):
        res = membership(single(1.0), K0, I2, ())
        assert res.reason is Reason.INACTIVE_VIOLATED
        assert res.triggers.s2_max == pytest.approx(1.0)

    def test_rank_failed_has_no_candidate(self):
        cs = ConstraintSet([[1.0, 0.0], [2.0, 0.0]], [1.0, 1.0])
        res = membership(cs, K0, I2, (0, 1))
        assert res.reason is Reason.RANK_FAILED
        assert res.candidate is None and res.triggers is None

    def test_oversized_set_rank_failed(self):
        cs = ConstraintSet([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [1.0, 1.0, 2.0])
        assert membership(cs, K0, I2, (0, 1, 2)).reason is Reason.RANK_FAILED

    def test_half_open_boundary(self):
        # inactive row exactly at zero counts as satisfied (tolerance is half-open)
        assert membership(single(0.0), K0, I2, ()).in_region
        assert not membership(single(TOL_PRIMAL), K0, I2, ()).in_region


class TestTriggers:
    def test_empty_set_sentinel(self):
        t = triggers(ConstraintSet([[1.0, 0.0], [0.0, 1.0]], [-1.0, -2.0]), K0, I2, ())
        assert t.s1_min == np.inf and t.s2_max < 0

    def test_full_set_sentinel(self):
        t = triggers(single(1.0), K0, I2, (0,))
        assert t.s2_max == -np.inf
        assert t.s1_min == pytest.approx(1.0)

    def test_propagates_rank_deficiency(self):
        cs = ConstraintSet([[1.0, 0.0], [2.0, 0.0]], [1.0, 1.0])
        with pytest.raises(RankDeficient):
            triggers(cs, K0, I2, (0, 1))

    def test_equivalent_to_membership(self, rng):
        for _ in range(200):
            B, a, k = random_qp(rng, 2, 4, feasible=False)
            cs = ConstraintSet(B, a)
            for size in range(3):
                for I in itertools.combinations(range(4), size):
                    res = membership(cs, k, I2, I)
                    if res.reason is Reason.RANK_FAILED:
                        continue
                    assert res.in_region == trigger_values(res.candidate, cs).member()


def test_first_member_order():
    # rows u_0 <= -1 and u_0 <= -1 (duplicate): both singletons pass; the first wins
    cs = ConstraintSet([[1.0, 0.0], [1.0, 0.0]], [1.0, 1.0])
    hit = first_member(cs, K0, I2)
    assert hit.candidate.index_set == (0,)


def test_first_member_none_when_infeasible():
    cs = ConstraintSet([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0])
    assert first_member(cs, K0, I2) is None


def test_member_candidate_is_optimal(rng):
    """Whenever a set passes, its candidate equals the independently computed optimum."""
    checked = 0
    for _ in range(300):
        m = int(rng.integers(1, 4))
        p = int(rng.integers(1, 6))
        B, a, k = random_qp(rng, m, p)
        R = random_spd(rng, m)
        cs, W = ConstraintSet(B, a), WeightMatrix(R)
        u_ref = reference_qp(B, a, k, R)
        for size in range(min(m, p) + 1):
            for I in itertools.combinations(range(p), size):
                res = membership(cs, k, W, I)
                if res.in_region:
                    np.testing.assert_allclose(res.candidate.control, u_ref, atol=1e-6)
                    checked += 1
    assert checked >= 300
