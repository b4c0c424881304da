"""Estimators, hypothesis tests, and the report records they produce."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatsheet import (RunningMoments, ks_report, ks_two_sample, matrix_compare,
                       mean_se, recompute_pass, residual_report, z_test)

finite = st.floats(-1e9, 1e9, allow_nan=False, allow_infinity=False)


class TestMeanSe:
    def test_constant_samples(self):
        m, se = mean_se(np.full(50, 3.25))
        assert m == 3.25
        assert se == 0.0

    def test_alternating_binary(self):
        x = np.tile([0.0, 1.0], 500)
        m, se = mean_se(x)
        assert m == 0.5
        # unbiased sample sd of a balanced 0/1 vector is 0.5 sqrt(n/(n-1))
        assert se == pytest.approx(0.5 * math.sqrt(1000 / 999) / math.sqrt(1000),
                                   rel=1e-12)
        assert se == pytest.approx(0.0158193, abs=1e-5)

    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            mean_se([1.0])

    def test_four_se_calibration(self):
        # meta-test: the 4 se band should essentially never miss the mean
        hits = 0
        for seed in range(100):
            x = np.random.default_rng(seed).standard_normal(100000)
            m, se = mean_se(x)
            hits += abs(m) <= 4.0 * se
        assert hits == 100


class TestZTest:
    def test_exact_match(self):
        rep = z_test(1.0, 0.1, 1.0, k=4)
        assert rep.passed and rep.z == 0.0

    def test_five_sigma_fails(self):
        rep = z_test(1.5, 0.1, 1.0, k=4)
        assert not rep.passed
        assert rep.z == pytest.approx(5.0)

    def test_just_inside_band(self):
        rep = z_test(1.39, 0.1, 1.0, k=4)
        assert rep.passed
        assert rep.z == pytest.approx(3.9)

    def test_zero_se_exact(self):
        rep = z_test(2.0, 0.0, 2.0)
        assert rep.passed and rep.z == 0.0

    def test_zero_se_mismatch_is_infinite(self):
        rep = z_test(2.0, 0.0, 1.0)
        assert not rep.passed
        assert math.isinf(rep.z)

    def test_negative_se_rejected(self):
        with pytest.raises(ValueError):
            z_test(1.0, -0.1, 1.0)


class TestKsTwoSample:
    def test_identical_samples(self):
        a = np.arange(100.0)
        stat, p = ks_two_sample(a, a)
        assert stat == 0.0
        assert p == 1.0

    def test_disjoint_supports(self):
        stat, p = ks_two_sample(np.zeros(40), np.ones(40) + 5.0)
        assert stat == 1.0
        assert p < 1e-6

    def test_calibration(self):
        ok = 0
        for seed in range(100):
            r = np.random.default_rng(1000 + seed)
            _, p = ks_two_sample(r.standard_normal(10000), r.standard_normal(10000))
            ok += p > 0.01
        assert ok >= 98

    def test_report_wrapper(self):
        r = np.random.default_rng(4)
        rep = ks_report("shift check", r.standard_normal(500),
                        r.standard_normal(500))
        assert rep.passed
        assert "p >" in rep.rule
        assert "ks_statistic" in rep.grid


class TestMatrixCompare:
    def test_equal_matrices_pass(self):
        g = np.eye(4)
        rep = matrix_compare(g, g, np.full((4, 4), 0.1), name="gram")
        assert rep.passed
        assert rep.estimate == 1.0

    def test_single_gross_outlier_fails(self):
        emp = np.eye(4)
        ana = emp.copy()
        se = np.full((4, 4), 0.1)
        emp[0, 0] += 3 * 4 * 0.1  # 12 se with k = 4
        rep = matrix_compare(emp, ana, se, k=4, name="gram")
        assert not rep.passed

    def test_max_rule_trips_even_with_good_fraction(self):
        # one 12 se entry in an 8x8: 63/64 = 0.984 >= 0.95 but the cap 2k = 8
        # is exceeded
        emp = np.zeros((8, 8))
        se = np.full((8, 8), 1.0)
        emp[3, 4] = 12.0
        rep = matrix_compare(emp, np.zeros((8, 8)), se, k=4, name="gram")
        assert not rep.passed
        assert rep.estimate >= 0.95

    def test_fraction_rule_trips(self):
        # 2 of 16 entries at 5 sigma: fraction 0.875 < 0.95
        emp = np.zeros((4, 4))
        se = np.full((4, 4), 1.0)
        emp[0, 0] = 5.0
        emp[1, 1] = -5.0
        rep = matrix_compare(emp, np.zeros((4, 4)), se, k=4, name="gram")
        assert not rep.passed
        assert rep.estimate == pytest.approx(14.0 / 16.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            matrix_compare(np.zeros((2, 2)), np.zeros((3, 3)),
                           np.ones((2, 2)), name="gram")


class TestReportRecords:
    def test_json_roundtrip_and_pass_key(self):
        rep = z_test(1.1, 0.1, 1.0, k=4, name="demo statistic")
        d = json.loads(rep.to_json())
        assert d["statistic"] == "demo statistic"
        assert d["pass"] is True
        assert "passed" not in d

    def test_residual_report_rule(self):
        rep = residual_report("resid", 0.005, 0.01)
        assert rep.passed
        assert rep.rule == "estimate <= target"
        bad = residual_report("resid", 0.02, 0.01)
        assert not bad.passed

    def test_recompute_matches_z_rule(self):
        rep = z_test(1.2, 0.1, 1.0, k=4)
        assert recompute_pass(rep) == rep.passed

    @settings(max_examples=60)
    @given(finite, st.floats(1e-9, 1e6), finite, st.integers(1, 8))
    def test_recompute_invariant_z(self, est, se, target, k):
        rep = z_test(est, se, target, k=k)
        assert recompute_pass(rep) == rep.passed

    @settings(max_examples=60)
    @given(st.floats(0, 1e6), st.floats(1e-9, 1e6))
    def test_recompute_invariant_residual(self, resid, tol):
        rep = residual_report("r", resid, tol)
        assert recompute_pass(rep) == rep.passed


class TestRunningMoments:
    def test_matches_numpy_in_one_batch(self):
        x = np.random.default_rng(2).standard_normal(1000)
        rm = RunningMoments()
        rm.add_batch(x)
        assert rm.mean == pytest.approx(x.mean(), rel=1e-12)
        assert rm.variance == pytest.approx(x.var(ddof=1), rel=1e-12)

    def test_merge_is_order_independent(self):
        r = np.random.default_rng(3)
        parts = [r.standard_normal(s) for s in (10, 57, 3, 200)]
        whole = np.concatenate(parts)
        a = RunningMoments()
        for p in parts:
            a.add_batch(p)
        b = RunningMoments()
        for p in reversed(parts):
            b.add_batch(p)
        assert a.count == b.count == whole.size
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.variance == pytest.approx(whole.var(ddof=1), rel=1e-10)
        assert b.variance == pytest.approx(whole.var(ddof=1), rel=1e-10)

    def test_merge_objects(self):
        r = np.random.default_rng(5)
        x, y = r.standard_normal(400), r.standard_normal(300)
        a = RunningMoments()
        a.add_batch(x)
        b = RunningMoments()
        b.add_batch(y)
        a.merge(b)
        both = np.concatenate([x, y])
        assert a.variance == pytest.approx(both.var(ddof=1), rel=1e-11)

    def test_variance_needs_two(self):
        rm = RunningMoments()
        rm.add_batch([1.0])
        with pytest.raises(ValueError):
            rm.variance

    def test_se_of_variance_formula(self):
        x = np.random.default_rng(6).standard_normal(500)
        rm = RunningMoments()
        rm.add_batch(x)
        assert rm.se_of_variance == pytest.approx(
            rm.variance * math.sqrt(2.0 / (rm.count - 1)), rel=1e-12)

    @settings(max_examples=40)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60),
           st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60))
    def test_merge_equals_concat(self, xs, ys):
        a = RunningMoments()
        a.add_batch(np.array(xs))
        b = RunningMoments()
        b.add_batch(np.array(ys))
        a.merge(b)
        whole = np.array(xs + ys)
        assert a.mean == pytest.approx(whole.mean(), rel=1e-9, abs=1e-9)
        assert a.variance == pytest.approx(whole.var(ddof=1), rel=1e-8, abs=1e-8)


if __name__ == "__main__":
    pytest.main([__file__])
