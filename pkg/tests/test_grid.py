"""Grid containers, antisymmetric extension, pairings, bump test functions."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import heatsheet as hs
from heatsheet import TimeGrid, SymGrid, antisym_extend, bump, pair, restrict

T_MAX = 8.0
N = 512

rng = np.random.default_rng(1)


@pytest.fixture
def grid():
    return TimeGrid(T_MAX, N)


class TestTimeGrid:
    def test_dt_and_midpoint_nodes(self, grid):
        assert grid.dt == T_MAX / N
        assert grid.nodes[0] == pytest.approx(0.5 * grid.dt)
        assert grid.nodes[-1] == pytest.approx(T_MAX - 0.5 * grid.dt)
        assert np.all(np.diff(grid.nodes) > 0)

    def test_rejects_nonpositive_t_max(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 64)
        with pytest.raises(ValueError):
            TimeGrid(-1.0, 64)

    def test_rejects_non_power_of_two(self):
        for bad in (0, 3, 63, 4095):
            with pytest.raises(ValueError):
                TimeGrid(T_MAX, bad)

    def test_value_equality_and_hash(self, grid):
        same = TimeGrid(T_MAX, N)
        assert grid == same
        assert hash(grid) == hash(same)
        assert grid != TimeGrid(T_MAX, 2 * N)


class TestSymGrid:
    def test_doubles_node_count(self, grid):
        sym = SymGrid(grid)
        assert sym.n == 2 * N
        assert sym.nodes.shape == (2 * N,)

    def test_nodes_are_odd_symmetric(self, grid):
        sym = SymGrid(grid)
        np.testing.assert_allclose(sym.nodes, -sym.nodes[::-1], atol=0)


class TestAntisymExtend:
    def test_odd_reflection_layout(self, grid):
        f = rng.standard_normal(N)
        fa = antisym_extend(f)
        assert fa.shape == (2 * N,)
        np.testing.assert_array_equal(fa[N:], f)
        np.testing.assert_array_equal(fa[:N], -f[::-1])

    def test_l2_norm_scales_by_sqrt2(self, grid):
        f = bump(2.0, 1.0, grid=grid).values
        fa = antisym_extend(f)
        assert math.sqrt(np.sum(fa * fa)) == pytest.approx(
            math.sqrt(2.0) * math.sqrt(np.sum(f * f)), rel=1e-14)

    def test_l1_norm_doubles(self, grid):
        f = bump(2.0, 1.0, grid=grid).values
        assert np.sum(np.abs(antisym_extend(f))) == pytest.approx(
            2.0 * np.sum(np.abs(f)), rel=1e-14)

    def test_restrict_roundtrip(self):
        f = rng.standard_normal(64)
        np.testing.assert_array_equal(restrict(antisym_extend(f)), f)

    def test_restrict_rejects_odd_length(self):
        with pytest.raises(ValueError):
            restrict(np.zeros(7))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
    def test_extension_is_odd(self, vals):
        fa = antisym_extend(np.array(vals))
        np.testing.assert_array_equal(fa, -fa[::-1])


class TestPair:
    def test_constant_against_constant(self, grid):
        ones = np.ones(N)
        assert pair(ones, ones, grid) == pytest.approx(T_MAX, rel=1e-14)

    def test_exponential_midpoint_rule_second_order(self):
        # int_0^inf e^(-2t) dt = 1/2; midpoint rule converges at O(dt^2)
        errs = []
        for n in (2048, 4096):
            g = TimeGrid(20.0, n)
            e = np.exp(-g.nodes)
            errs.append(abs(pair(e, e, g) - 0.5))
        assert errs[0] < 1e-5
        assert 3.5 < errs[0] / errs[1] < 4.5

    def test_shape_check(self, grid):
        with pytest.raises(ValueError):
            pair(np.zeros(N), np.zeros(N + 1), grid)
        with pytest.raises(ValueError):
            pair(np.zeros(N // 2), np.zeros(N // 2), grid)

    def test_bilinear(self, grid):
        f, g1, g2 = (rng.standard_normal(N) for _ in range(3))
        lhs = pair(f, 2.0 * g1 - 3.0 * g2, grid)
        rhs = 2.0 * pair(f, g1, grid) - 3.0 * pair(f, g2, grid)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @settings(max_examples=30)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_cauchy_schwarz(self, seed):
        g = TimeGrid(4.0, 64)
        r = np.random.default_rng(seed)
        f, h = r.standard_normal(64), r.standard_normal(64)
        lhs = pair(f, h, g) ** 2
        rhs = pair(f, f, g) * pair(h, h, g)
        assert lhs <= rhs * (1 + 1e-12)


class TestBump:
    def test_peak_value_is_amplitude_over_e(self, grid):
        h = bump(2.0, 1.0, grid=grid, amplitude=3.0)
        assert h(np.array([2.0]))[0] == pytest.approx(3.0 / math.e, rel=1e-14)
        assert h.sup_norm == pytest.approx(3.0 / math.e, rel=1e-14)

    def test_compact_support(self, grid):
        h = bump(2.0, 1.0, grid=grid)
        assert h.support == (1.0, 3.0)
        ts = np.array([0.5, 0.99, 3.01, 7.0])
        np.testing.assert_array_equal(h(ts), 0.0)

    def test_derivative_matches_finite_differences(self, grid):
        h = bump(2.0, 1.0, grid=grid)
        ts = np.linspace(1.05, 2.95, 100)
        fd = (h(ts + 1e-6) - h(ts - 1e-6)) / 2e-6
        assert np.max(np.abs(fd - h.deriv(ts))) <= 1e-6 * h.sup_norm

    def test_second_derivative_matches_finite_differences(self, grid):
        h = bump(2.0, 1.0, grid=grid)
        ts = np.linspace(1.1, 2.9, 60)
        fd = (h.deriv(ts + 1e-6) - h.deriv(ts - 1e-6)) / 2e-6
        assert np.max(np.abs(fd - h.deriv2(ts))) <= 1e-4

    def test_grid_values_are_cached(self, grid):
        h = bump(2.0, 1.0, grid=grid)
        assert h.values is h.values
        assert h.deriv_values is h.deriv_values
        np.testing.assert_array_equal(h.values, h(grid.nodes))

    def test_amplitude_scales_linearly(self, grid):
        h1 = bump(2.0, 1.0, grid=grid)
        h3 = bump(2.0, 1.0, grid=grid, amplitude=-2.5)
        np.testing.assert_allclose(h3.values, -2.5 * h1.values, rtol=1e-14)

    def test_default_grid_construction(self):
        h = bump(2.0, 1.0)
        assert h.grid == TimeGrid(8.0, 4096)
        h2 = bump(2.0, 1.0, t_max=4.0, n=128)
        assert h2.grid == TimeGrid(4.0, 128)

    def test_explicit_testfunction_constructor(self, grid):
        h = hs.TestFunction(center=2.0, radius=1.0, grid=grid)
        np.testing.assert_array_equal(h.values, bump(2.0, 1.0, grid=grid).values)


if __name__ == "__main__":
    pytest.main([__file__])
