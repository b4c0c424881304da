"""heatsheet: a desk-scale laboratory for the stochastic heat equation.

The field driven by space-time white noise is represented both through
closed-form covariances and through Monte Carlo integrals against sampled
Brownian sheets; fractional time operators, a boundary-drift functional,
a weak-form residual, and a spatial SDE are all cross-checked against
independent oracles.  See the README for the map of checks.
"""

from .grid import (TimeGrid, SymGrid, TestFunction, bump, antisym_extend,
                   restrict, pair)
from .kernels import (KernelPoint, heat_kernel, heat_kernel_dx, laplace_g,
                      image_green, boundary_kernel, LnuSpec, l_nu,
                      l_nu_laplace)
from .fracops import (SpectralPlan, frac_laplacian, op_A1, op_A2,
                      halfroot_conv, a1_a2_residual, verify_A1A2_identity,
                      ConfigurationError)
from .gaussfield import (cov_u, cov_u_cross, cov_u_apply, cov_v_apply,
                         cov_u_gram, cov_v_gram, SheetSample, sheet_sample,
                         sheet_rng, greenrep_eval, pair_u, pair_v,
                         drift_field_form, drift_integral_form,
                         drift_variance_exact, cameron_martin_laplace,
                         cameron_martin_target,
                         verify_cameron_martin_laplace, SpaceBump,
                         TensorTestFunction, WeakformPlan,
                         weakform_residual, weakform_residual_reference,
                         dump_sheet, load_sheet, coverage_halfwidth,
                         CoverageError, ResourceError)
from .sde import (FieldState, EvolveConfig, EvolveResult, drift, euler_step,
                  noise_draw, stationary_basis, stationary_init,
                  StationarySampler, evolve, zero_state, smooth_window,
                  stability_limit, spectral_radius, InstabilityError)
from .stats import (VerificationReport, mean_se, z_test, ks_two_sample,
                    ks_report, matrix_compare, residual_report,
                    RunningMoments, recompute_pass)

__version__ = "0.1.0"

__all__ = [
    "TimeGrid", "SymGrid", "TestFunction", "bump", "antisym_extend",
    "restrict", "pair",
    "KernelPoint", "heat_kernel", "heat_kernel_dx", "laplace_g",
    "image_green", "boundary_kernel", "LnuSpec", "l_nu", "l_nu_laplace",
    "SpectralPlan", "frac_laplacian", "op_A1", "op_A2", "halfroot_conv",
    "a1_a2_residual", "verify_A1A2_identity", "ConfigurationError",
    "cov_u", "cov_u_cross", "cov_u_apply", "cov_v_apply", "cov_u_gram",
    "cov_v_gram", "SheetSample", "sheet_sample", "sheet_rng",
    "greenrep_eval", "pair_u", "pair_v", "drift_field_form",
    "drift_integral_form", "drift_variance_exact",
    "cameron_martin_laplace", "cameron_martin_target",
    "verify_cameron_martin_laplace", "SpaceBump", "TensorTestFunction",
    "WeakformPlan", "weakform_residual", "weakform_residual_reference",
    "dump_sheet", "load_sheet", "coverage_halfwidth", "CoverageError",
    "ResourceError",
    "FieldState", "EvolveConfig", "EvolveResult", "drift", "euler_step",
    "noise_draw", "stationary_basis", "stationary_init",
    "StationarySampler", "evolve", "zero_state", "smooth_window",
    "stability_limit", "spectral_radius", "InstabilityError",
    "VerificationReport", "mean_se", "z_test", "ks_two_sample",
    "ks_report", "matrix_compare", "residual_report", "RunningMoments",
    "recompute_pass",
]
