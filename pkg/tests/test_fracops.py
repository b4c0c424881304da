"""Fractional Laplacian and the Abel-type operators acting on extensions.

Reference values for the operator outputs were produced by adaptive
quadrature of the defining integrals after removing the square-root
singularities by substitution; they are frozen below.
"""
import math
import warnings

import numpy as np
import pytest

import heatsheet as hs
from heatsheet import (ConfigurationError, SpectralPlan, SymGrid, TimeGrid,
                       antisym_extend, bump, cov_v_apply, frac_laplacian,
                       halfroot_conv, op_A1, op_A2, recompute_pass, smooth_window,
                       verify_A1A2_identity)
from heatsheet.fracops import A2_TAIL_POWER, a1_a2_residual

T_MAX = 8.0
N = 1024

# quadrature values of the three operators applied to bump(2, 1) on
# (t_max=8, n=1024), at the grid nodes 192, 256, 332, 640
PROBE_NODES = [192, 256, 332, 640]
A2_REF = [0.4254822327289219, 0.5910037189213994,
          0.30501913838178357, -0.018090004495742853]
A1_REF = [-0.02787993395798696, 0.28925599023068893,
          0.42441256132744426, 0.0]
HALFROOT_REF = [0.19365859926501147, 0.25398402034600054,
                0.17641371149836407, 0.025369666903207876]


@pytest.fixture(scope="module")
def grid():
    return TimeGrid(T_MAX, N)


@pytest.fixture(scope="module")
def h(grid):
    return bump(2.0, 1.0, grid=grid)


@pytest.fixture(scope="module")
def plan(grid):
    return SpectralPlan(SymGrid(grid))


class TestSpectralPlan:
    def test_rejects_small_padding(self, grid):
        with pytest.raises(ValueError):
            SpectralPlan(SymGrid(grid), pad=1)

    def test_multiplier_zero_bin(self, plan):
        assert plan.multiplier(0.5)[0] == 0.0
        assert plan.multiplier(0.0)[0] == 1.0
        assert plan.multiplier(0.0).max() == 1.0

    def test_padded_length(self, grid):
        assert SpectralPlan(SymGrid(grid), pad=4).padded_len == 4 * 2 * N


class TestFracLaplacian:
    def test_beta_zero_is_identity(self, h, plan):
        fa = antisym_extend(h.values)
        out = frac_laplacian(fa, 0.0, plan)
        assert np.max(np.abs(out - fa)) <= 1e-12

    def test_windowed_tone_eigenfunction(self, grid, plan):
        # sin(k t) localized by a smooth window: |tau|^beta acts as k^beta
        k = 8.0
        tone = np.sin(k * grid.nodes) * smooth_window(grid, 0.5, 7.5, ramp=1.0)
        interior = (grid.nodes > 2.0) & (grid.nodes < 6.0)
        half = frac_laplacian(antisym_extend(tone), 0.5, plan)[N:]
        err = np.max(np.abs(half - math.sqrt(k) * tone)[interior])
        assert err <= 1e-2 * math.sqrt(k) * np.max(np.abs(tone))
        one = frac_laplacian(antisym_extend(tone), 1.0, plan)[N:]
        assert np.max(np.abs(one - k * tone)[interior]) <= 1e-2 * k

    def test_linearity(self, grid, plan):
        f1 = bump(2.0, 1.0, grid=grid).values
        f2 = bump(4.5, 1.5, grid=grid).values
        a, b = 0.7, -1.9
        lhs = frac_laplacian(antisym_extend(a * f1 + b * f2), 0.5, plan)
        rhs = a * frac_laplacian(antisym_extend(f1), 0.5, plan) \
            + b * frac_laplacian(antisym_extend(f2), 0.5, plan)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_quarter_twice_equals_half(self):
        # high-pass input: the truncation spill of the first application is
        # far below the target; low-frequency content would surface it
        g = TimeGrid(8.0, 4096)
        p = SpectralPlan(SymGrid(g))
        tone = np.sin(128.0 * g.nodes) * smooth_window(g, 1.0, 7.0, ramp=2.0)
        fa = antisym_extend(tone)
        twice = frac_laplacian(frac_laplacian(fa, 0.25, p), 0.25, p)
        once = frac_laplacian(fa, 0.5, p)
        assert np.max(np.abs(twice - once)) <= 1e-10

    def test_wrong_length_rejected(self, plan):
        with pytest.raises(ValueError):
            frac_laplacian(np.zeros(2 * N + 2), 0.5, plan)

    def test_nondecaying_input_warns(self, grid, plan):
        with pytest.warns(RuntimeWarning):
            frac_laplacian(np.ones(2 * N), 0.5, plan)

    def test_decay_check_can_be_silenced(self, plan):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            frac_laplacian(np.ones(2 * N), 0.5, plan, check_decay=False)

    def test_singular_beta_needs_mean_free(self, h, plan):
        with pytest.raises(ValueError, match="mean-free"):
            frac_laplacian(np.abs(antisym_extend(h.values)) + 0.1, -1.5, plan,
                           check_decay=False)
        # antisymmetric extensions sum to zero, so they pass
        frac_laplacian(antisym_extend(h.values), -1.5, plan)

    def test_batched_input(self, h, plan):
        fa = antisym_extend(h.values)
        batch = np.stack([fa, 2.0 * fa])
        out = frac_laplacian(batch, 0.5, plan)
        assert out.shape == (2, 2 * N)
        np.testing.assert_allclose(out[1], 2.0 * out[0], rtol=1e-13)


class TestOpA2:
    def test_frozen_quadrature_values(self, h):
        a2 = op_A2(h)
        for k, ref in zip(PROBE_NODES, A2_REF):
            assert a2[k] == pytest.approx(ref, abs=5e-4)

    def test_matches_scaled_quarter_operator(self, grid, h):
        # the identity behind the factorization: A2 h = sqrt2 (-d_t^2)^(1/4) h^a
        plan4 = SpectralPlan(SymGrid(grid), pad=4)
        spectral = math.sqrt(2.0) * frac_laplacian(
            antisym_extend(h.values), 0.5, plan4)[N:]
        interior = grid.nodes <= 6.0
        err = np.max(np.abs(op_A2(h) - spectral)[interior])
        assert err <= 1e-2 * h.sup_norm

    def test_amplitude_linearity(self, grid):
        a = op_A2(bump(2.0, 1.0, grid=grid))
        b = op_A2(bump(2.0, 1.0, grid=grid, amplitude=-2.5))
        assert np.max(np.abs(b + 2.5 * a)) <= 1e-12

    def test_far_field_bound(self, grid, h):
        # beyond twice the support edge the output obeys the envelope
        # sup|h| c (t - c)^(-3/2) with c the support's upper edge
        a2 = op_A2(h)
        c = h.support[1]
        m = grid.nodes >= 2.0 * c
        bound = h.sup_norm * c * (grid.nodes[m] - c) ** -1.5
        assert np.all(np.abs(a2[m]) <= bound)
        assert np.max(grid.nodes[m] ** 1.5 * np.abs(a2[m])) < 0.5

    def test_extension_smoothness_under_refinement(self):
        # second differences of the antisymmetric extension stay bounded as
        # the grid refines (no kink at t = 0)
        worst = {}
        for n in (512, 2048):
            g = TimeGrid(T_MAX, n)
            ext = antisym_extend(op_A2(bump(2.0, 1.0, grid=g)))
            worst[n] = np.max(np.abs(np.diff(ext, 2))) / g.dt ** 2
        assert worst[2048] < 60.0
        assert worst[2048] / worst[512] < 1.15


class TestHalfrootConv:
    def test_frozen_quadrature_values(self, grid, h):
        hr = halfroot_conv(h.values, grid)
        for k, ref in zip(PROBE_NODES, HALFROOT_REF):
            assert hr[k] == pytest.approx(ref, abs=1e-5)

    def test_is_twice_the_covariance_smoother(self, grid, h):
        np.testing.assert_array_equal(halfroot_conv(h.values, grid),
                                      2.0 * cov_v_apply(h.values, grid))

    def test_inverts_op_A2(self, grid, h):
        # principal-value convolution against (4 pi |.|)^(-1/2) undoes A2
        recon = halfroot_conv(op_A2(h), grid, tail=("power", A2_TAIL_POWER - 1.0))
        assert np.max(np.abs(recon - h.values)) <= 1e-2 * h.sup_norm

    def test_exponential_matches_window_integral(self):
        # halfroot_conv(e^-t) equals the t-window integral of the drift
        # kernel; compare on the near half of a long grid
        g = TimeGrid(16.0, 2048)
        out = halfroot_conv(np.exp(-g.nodes), g)
        spec = hs.LnuSpec(nu=1.0)
        m = g.nodes <= 8.0
        ref = np.array([hs.l_nu(spec, t) for t in g.nodes[m]])
        assert np.max(np.abs(out[m] - ref) / ref) <= 1e-3

    def test_tail_model_validation(self, grid, h):
        with pytest.raises(ConfigurationError):
            halfroot_conv(h.values, grid, tail=("exp", 1.0))

    def test_wrong_shape(self, grid):
        with pytest.raises(ValueError):
            halfroot_conv(np.zeros(N + 1), grid)


class TestOpA1:
    def test_exponential_eigenfunction(self):
        # A1 e^(-nu t) = sqrt(nu) e^(-nu t); checked where the values are
        # well above the grid floor
        g = TimeGrid(T_MAX, 4096)
        for nu in (1.0, 4.0):
            f = np.exp(-nu * g.nodes)
            out = op_A1(f, g, tail=("exp", nu))
            m = g.nodes <= 4.0
            rel = np.abs(out - math.sqrt(nu) * f)[m] / (math.sqrt(nu) * f[m])
            assert np.max(rel) <= 1e-3

    def test_constant_maps_to_zero(self, grid):
        out = op_A1(np.full(N, 2.5), grid, tail=("zero",))
        assert np.max(np.abs(out)) == 0.0

    def test_frozen_quadrature_values(self, grid, h):
        a1 = op_A1(h.values, grid, tail=("zero",))
        for k, ref in zip(PROBE_NODES, A1_REF):
            assert a1[k] == pytest.approx(ref, abs=6e-4)

    def test_tail_model_is_required(self, grid, h):
        with pytest.raises(ConfigurationError):
            op_A1(h.values, grid, tail=None)
        with pytest.raises(ConfigurationError):
            op_A1(h.values, grid, tail=("bogus", 1.0))
        with pytest.raises(ConfigurationError):
            op_A1(h.values, grid, tail=("power", 0.5))
        with pytest.raises(ConfigurationError):
            op_A1(h.values, grid, tail=("exp", 0.0))

    def test_linearity(self, grid):
        f1 = bump(2.0, 1.0, grid=grid).values
        f2 = bump(4.5, 1.5, grid=grid).values
        lhs = op_A1(0.7 * f1 - 1.9 * f2, grid, tail=("zero",))
        rhs = 0.7 * op_A1(f1, grid, tail=("zero",)) \
            - 1.9 * op_A1(f2, grid, tail=("zero",))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


class TestCompositionIdentity:
    def test_zero_input_zero_residual(self, grid):
        assert a1_a2_residual(bump(2.0, 1.0, grid=grid, amplitude=0.0)) == 0.0

    def test_report_passes_with_first_order_refinement(self, h):
        rep = verify_A1A2_identity(h)
        assert rep.passed
        assert recompute_pass(rep)
        assert rep.target == pytest.approx(
            2e-2 * np.max(np.abs(h.deriv_values)), rel=1e-12)
        assert rep.grid["refinement_ratio"] >= 1.8


if __name__ == "__main__":
    pytest.main([__file__])
