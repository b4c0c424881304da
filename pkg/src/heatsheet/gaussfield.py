"""Brownian-sheet sampling and the Gaussian field it drives.

The solution field is represented two ways and the module exists to play
them against each other:

* analytically, through closed-form covariance kernels for the field and
  its spatial derivative (cov_u, cov_v_* below), and
* pathwise, as stochastic integrals of heat kernels against a sampled
  sheet of independent Gaussian cell increments (greenrep_eval, pair_u,
  pair_v), plus the boundary-drift functionals and the weak-form residual
  built from the same machinery.

Weights against a sheet are always precomputable arrays, so replicas
reduce to dot products; everything downstream of a (seed, stream) pair is
deterministic.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import erfc, roots_legendre

from .grid import TimeGrid, SymGrid, TestFunction, antisym_extend
from .fracops import SpectralPlan, frac_laplacian
from .stats import VerificationReport

SQRT4PI = math.sqrt(4.0 * math.pi)

DEFAULT_TAIL_TOL = 1e-8
GRAM_JITTER = 1e-12
MAX_SHEET_CELLS = 60_000_000

# Gauss-Legendre node counts for the per-cell time integrals of pairing
# weights; 32 puts the quadrature residual far below every discretization
# effect at the default grids.
PAIR_U_NODES = 32
PAIR_V_NODES = 32
PAIR_V_CUT = 6.5  # e^(-v^2) support cut for the derivative-kernel integral


class CoverageError(ValueError):
    """Sheet rectangle does not cover the kernel's effective support."""


class ResourceError(RuntimeError):
    """Requested sheet exceeds the in-memory cell budget."""


# ----------------------------------------------------------------------
# closed-form covariances

def cov_u(t: float, t2: float) -> float:
    """Field covariance at one location: (sqrt(t+t2) - sqrt(|t-t2|)) / sqrt(4 pi)."""
    if t < 0 or t2 < 0:
        raise ValueError("times must be nonnegative")
    return (math.sqrt(t + t2) - math.sqrt(abs(t - t2))) / SQRT4PI


def cov_u_cross(dx: float, t: float, t2: float, nq: int = 200) -> float:
    """Two-location field covariance.

    Equals (1/(2 sqrt(4 pi))) int_{|t-t2|}^{t+t2} r^(-1/2) e^(-dx^2/(4r)) dr,
    evaluated after r = w^2 as a nonsingular Gauss-Legendre integral
    (1/sqrt(4 pi)) int e^(-dx^2/(4 w^2)) dw between sqrt(|t-t2|) and
    sqrt(t+t2).  Reduces to cov_u at dx = 0 and decays monotonically in |dx|.
    """
    if t < 0 or t2 < 0:
        raise ValueError("times must be nonnegative")
    lo = math.sqrt(abs(t - t2))
    hi = math.sqrt(t + t2)
    if hi <= lo:
        return 0.0
    xg, wg = roots_legendre(nq)
    w = lo + (hi - lo) * 0.5 * (xg + 1.0)
    ww = (hi - lo) * 0.5 * wg
    if dx == 0.0:
        vals = np.ones_like(w)
    else:
        vals = np.exp(-dx * dx / (4.0 * w * w))
    return float(np.sum(vals * ww) / SQRT4PI)


# ----------------------------------------------------------------------
# exact-cell covariance operators on a TimeGrid

def _oddconv_apply(f: np.ndarray, grid: TimeGrid, antideriv) -> np.ndarray:
    """Convolve the odd extension of f with a kernel given by its
    antiderivative, integrating the kernel exactly over each cell."""
    f = np.asarray(f, dtype=float)
    n = grid.n
    dt = grid.dt
    k = np.arange(-(2 * n - 1), 2 * n)
    w = antideriv(k * dt + 0.5 * dt) - antideriv(k * dt - 0.5 * dt)
    fa = antisym_extend(f)
    return fftconvolve(fa, w)[2 * n - 1: 4 * n - 1][n:]


def cov_u_apply(f: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """C1 f: kernel -sqrt(|u|)/sqrt(4 pi) against the odd extension.

    Antisymmetrizing reproduces the positive closed form
    (sqrt(t+t') - sqrt(|t-t'|))/sqrt(4 pi) printed for the covariance, so
    C1 is positive despite the leading minus in the kernel.
    """
    F = lambda u: -(2.0 / 3.0) * np.sign(u) * np.abs(u) ** 1.5 / SQRT4PI
    return _oddconv_apply(f, grid, F)


def cov_v_apply(f: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """C2 f: kernel 1/(2 sqrt(4 pi |u|)) against the odd extension."""
    # antiderivative of |u|^(-1/2)/(2 sqrt(4pi)) is sgn(u) sqrt(|u|)/sqrt(4pi)
    F = lambda u: np.sign(u) * np.sqrt(np.abs(u)) / SQRT4PI
    return _oddconv_apply(f, grid, F)


def _gram(h_list: list[TestFunction], apply_op) -> np.ndarray:
    if not h_list:
        raise ValueError("empty test-function list")
    g = h_list[0].grid
    if any(h.grid != g for h in h_list):
        raise ValueError("test functions not on one grid")
    cols = [apply_op(h.values, g) for h in h_list]
    G = np.array([[float(np.sum(hi.values * cj) * g.dt) for cj in cols]
                  for hi in h_list])
    return 0.5 * (G + G.T)  # kernel symmetry, up to roundoff


def cov_u_gram(h_list: list[TestFunction]) -> np.ndarray:
    """Gram matrix <h_i; C1 h_j> by exact-cell double quadrature."""
    return _gram(h_list, cov_u_apply)


def cov_v_gram(h_list: list[TestFunction]) -> np.ndarray:
    """Gram matrix <h_i; C2 h_j>; the |t-t'|^(-1/2) diagonal is integrated
    exactly per cell.  Raises if the result is not PSD after jitter."""
    G = _gram(h_list, cov_v_apply)
    jit = GRAM_JITTER * np.trace(G) / len(h_list)
    evals = np.linalg.eigvalsh(G + jit * np.eye(len(h_list)))
    if evals.min() < -jit:
        raise ArithmeticError(
            f"cov_v Gram not PSD after jitter: min eigenvalue {evals.min():.3e}")
    return G


def gram_cholesky(G: np.ndarray) -> np.ndarray:
    """Cholesky factor after the standard trace-scaled jitter."""
    m = G.shape[0]
    jit = GRAM_JITTER * np.trace(G) / m
    return np.linalg.cholesky(G + jit * np.eye(m))


# ----------------------------------------------------------------------
# Brownian sheet

@dataclass(frozen=True, eq=False)
class SheetSample:
    """One realization of sheet increments on [y_min, y_max] x [0, s_max].

    increments[j, k] is the integral of B(dy, ds) over cell (j, k): i.i.d.
    centered Gaussians with variance dy * ds.  Cell centers sit at
    y_min + (j + 1/2) dy and (k + 1/2) ds.
    """

    y_min: float
    y_max: float
    s_max: float
    dy: float
    ds: float
    seed: int
    stream: int
    increments: np.ndarray = field(repr=False)

    @property
    def y_nodes(self) -> np.ndarray:
        ny = self.increments.shape[0]
        return self.y_min + (np.arange(ny) + 0.5) * self.dy

    @property
    def s_nodes(self) -> np.ndarray:
        ns = self.increments.shape[1]
        return (np.arange(ns) + 0.5) * self.ds

    @property
    def cells(self) -> int:
        return self.increments.size


def sheet_shape(y_min: float, y_max: float, s_max: float,
                dy: float, ds: float) -> tuple[int, int]:
    if dy <= 0 or ds <= 0:
        raise ValueError("dy and ds must be positive")
    if y_max <= y_min or s_max <= 0:
        raise ValueError("empty sheet rectangle")
    ny = int(round((y_max - y_min) / dy))
    ns = int(round(s_max / ds))
    if ny < 1 or ns < 1:
        raise ValueError("empty sheet rectangle")
    return ny, ns


def sheet_rng(seed: int, stream: int) -> np.random.Generator:
    """The deterministic generator owned by (seed, stream)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def sheet_sample(y_min: float, y_max: float, s_max: float, dy: float, ds: float,
                 seed: int, stream: int = 0,
                 dtype=np.float64) -> SheetSample:
    """Sample sheet increments; a pure function of (seed, stream)."""
    ny, ns = sheet_shape(y_min, y_max, s_max, dy, ds)
    if ny * ns > MAX_SHEET_CELLS:
        raise ResourceError(
            f"sheet of {ny * ns} cells exceeds budget {MAX_SHEET_CELLS}")
    rng = sheet_rng(seed, stream)
    inc = rng.standard_normal((ny, ns), dtype=dtype)
    inc *= np.sqrt(dy * ds)  # in place: keeps the requested dtype
    return SheetSample(y_min=y_min, y_max=y_max, s_max=s_max, dy=dy, ds=ds,
                       seed=seed, stream=stream, increments=inc)


def coverage_halfwidth(t_hi: float, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Half-width L = sqrt(4 t ln(1/tol)) of the kernel's effective support."""
    return math.sqrt(4.0 * t_hi * math.log(1.0 / tail_tol))


def _check_coverage(sheet: SheetSample, x: float, t_hi: float,
                    tail_tol: float = DEFAULT_TAIL_TOL):
    need = coverage_halfwidth(t_hi, tail_tol)
    if x - sheet.y_min < need:
        raise CoverageError(
            f"sheet y_min side short: need {need:.2f} below x={x}, "
            f"have {x - sheet.y_min:.2f}")
    if sheet.y_max - x < need:
        raise CoverageError(
            f"sheet y_max side short: need {need:.2f} above x={x}, "
            f"have {sheet.y_max - x:.2f}")
    if sheet.s_max < t_hi - 1e-12:
        raise CoverageError(
            f"sheet s_max={sheet.s_max} does not reach t={t_hi}")


# ----------------------------------------------------------------------
# sheet weights: point evaluation and test-function pairings

def point_weights(y_nodes: np.ndarray, s_nodes: np.ndarray,
                  x: float, t: float) -> np.ndarray:
    """Heat-kernel values g(y, s; x, t) at cell centers (0 for s >= t)."""
    tau = t - s_nodes
    pos = tau > 0
    out = np.zeros((y_nodes.size, s_nodes.size))
    taup = tau[pos]
    out[:, pos] = np.exp(-(x - y_nodes)[:, None] ** 2 / (4.0 * taup[None, :])) \
        / np.sqrt(4.0 * np.pi * taup[None, :])
    return out


def pair_u_weights(y_nodes: np.ndarray, s_nodes: np.ndarray, x: float,
                   h, t_hi: float, nw: int = PAIR_U_NODES) -> np.ndarray:
    """Per-cell weights int_s^{t_hi} g(y,s;x,t) h(t) dt.

    The substitution w = sqrt(t - s) removes the kernel's 1/sqrt
    singularity; the integrand is then smooth and a fixed Gauss-Legendre
    rule per s-row suffices.  h is any callable on [0, t_hi].
    """
    xg, wg = roots_legendre(nw)
    d2 = (x - y_nodes) ** 2
    out = np.zeros((y_nodes.size, s_nodes.size))
    for k, s in enumerate(s_nodes):
        if s >= t_hi:
            continue
        wmax = math.sqrt(t_hi - s)
        w = 0.5 * wmax * (xg + 1.0)
        ww = 0.5 * wmax * wg
        hv = np.asarray(h(s + w * w), dtype=float)
        E = np.exp(-d2[:, None] / (4.0 * w[None, :] ** 2))
        out[:, k] = (2.0 / SQRT4PI) * (E @ (hv * ww))
    return out


def pair_v_weights(y_nodes: np.ndarray, s_nodes: np.ndarray, x: float,
                   h, t_hi: float, nv: int = PAIR_V_NODES,
                   vcut: float = PAIR_V_CUT) -> np.ndarray:
    """Per-cell weights int_s^{t_hi} (dg/dx)(y,s;x,t) h(t) dt.

    With d = x - y and v = |d| / (2 sqrt(t - s)) the integral becomes
    -sgn(d) (2/sqrt(4 pi)) int e^(-v^2) h(s + d^2/(4 v^2)) dv from
    v_min = |d|/(2 sqrt(t_hi - s)) upward; e^(-v^2) kills everything
    beyond vcut.  Rows with d = 0 vanish by antisymmetry.
    """
    xg, wg = roots_legendre(nv)
    d = x - y_nodes
    ad = np.abs(d)
    sg = np.sign(d)
    out = np.zeros((y_nodes.size, s_nodes.size))
    for k, s in enumerate(s_nodes):
        if s >= t_hi:
            continue
        vmin = ad / (2.0 * math.sqrt(t_hi - s))
        vhi = np.maximum(vcut, vmin)
        v = vmin[:, None] + (vhi - vmin)[:, None] * 0.5 * (xg[None, :] + 1.0)
        jac = (vhi - vmin)[:, None] * 0.5 * wg[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = s + ad[:, None] ** 2 / (4.0 * v * v)
        tt[ad == 0.0, :] = s  # d = 0 rows are zeroed by sg anyway
        hv = np.asarray(h(np.minimum(tt, t_hi)), dtype=float)
        hv[tt > t_hi] = 0.0
        out[:, k] = -sg * (2.0 / SQRT4PI) * np.sum(np.exp(-v * v) * hv * jac, axis=1)
    return out


def greenrep_eval(sheet: SheetSample, x: float, t: float,
                  tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Riemann-Ito evaluation of the field at (x, t): sum g * dB over cells."""
    _check_coverage(sheet, x, t, tail_tol)
    w = point_weights(sheet.y_nodes, sheet.s_nodes, x, t)
    return float(np.sum(w * sheet.increments))


def _pair_check(sheet: SheetSample, x: float, h: TestFunction,
                tail_tol: float):
    hi = h.support[1]
    _check_coverage(sheet, x, hi, tail_tol)


def pair_u(sheet: SheetSample, x: float, h: TestFunction,
           tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """The field observable U(x, h) as a sheet integral."""
    _pair_check(sheet, x, h, tail_tol)
    w = pair_u_weights(sheet.y_nodes, sheet.s_nodes, x, h, h.grid.t_max)
    return float(np.sum(w * sheet.increments))


def pair_v(sheet: SheetSample, x: float, h: TestFunction,
           tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """The derivative observable (d/dx U)(x, h) as a sheet integral."""
    _pair_check(sheet, x, h, tail_tol)
    w = pair_v_weights(sheet.y_nodes, sheet.s_nodes, x, h, h.grid.t_max)
    return float(np.sum(w * sheet.increments))


# ----------------------------------------------------------------------
# boundary-drift functionals

def exp_tail_u(d, s, nu: float, T: float):
    """int_T^inf g(d; t - s) e^(-nu t) dt in closed erfc form (d = x - y')."""
    a = T - s
    ad = np.abs(d)
    sr = math.sqrt(nu)
    up = sr * np.sqrt(a) + ad / (2.0 * np.sqrt(a))
    um = sr * np.sqrt(a) - ad / (2.0 * np.sqrt(a))
    return np.exp(-nu * s) / (4.0 * sr) * (
        np.exp(sr * ad) * erfc(up) + np.exp(-sr * ad) * erfc(um))


def exp_tail_v(d, s, nu: float, T: float):
    """int_T^inf (dg/dx)(d; t - s) e^(-nu t) dt; the Gaussian boundary terms
    of the differentiation cancel exactly, leaving pure erfc terms."""
    a = T - s
    ad = np.abs(d)
    sg = np.sign(d)
    sr = math.sqrt(nu)
    up = sr * np.sqrt(a) + ad / (2.0 * np.sqrt(a))
    um = sr * np.sqrt(a) - ad / (2.0 * np.sqrt(a))
    return np.exp(-nu * s) * sg * 0.25 * (
        np.exp(sr * ad) * erfc(up) - np.exp(-sr * ad) * erfc(um))


def drift_field_weights(y_nodes: np.ndarray, s_nodes: np.ndarray, y: float,
                        nu: float, T: float, nw: int = PAIR_U_NODES,
                        nv: int = PAIR_V_NODES) -> np.ndarray:
    """Cell weights of U(y, sqrt(nu) e^(-nu .)) + d/dx U(y, e^(-nu .)).

    The exponentials are not compactly supported, so the grid part on
    [0, T] is completed with the analytic erfc tails beyond T.
    """
    hu = lambda t: math.sqrt(nu) * np.exp(-nu * t)
    hv = lambda t: np.exp(-nu * t)
    d = y - y_nodes
    W = pair_u_weights(y_nodes, s_nodes, y, hu, T, nw=nw)
    W += pair_v_weights(y_nodes, s_nodes, y, hv, T, nv=nv)
    W += math.sqrt(nu) * exp_tail_u(d[:, None], s_nodes[None, :], nu, T)
    W += exp_tail_v(d[:, None], s_nodes[None, :], nu, T)
    return W


def drift_integral_weights(y_nodes: np.ndarray, s_nodes: np.ndarray, y: float,
                           nu: float) -> np.ndarray:
    """Cell weights of the explicit boundary integral: e^(-nu s') e^(-sqrt(nu)(y'-y))
    over the quadrant y' > y, sampled at cell centers."""
    d = y_nodes - y
    out = np.exp(-nu * s_nodes)[None, :] * \
        np.exp(-math.sqrt(nu) * np.maximum(d, 0.0))[:, None]
    out[d < 0, :] = 0.0
    return out


def drift_field_form(sheet: SheetSample, y: float, nu: float,
                     tail_tol: float = DEFAULT_TAIL_TOL,
                     nw: int = PAIR_U_NODES) -> float:
    """Drift functional via the field pairings (the 'does not depend on the
    window location' form)."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    _check_coverage(sheet, y, sheet.s_max, tail_tol)
    W = drift_field_weights(sheet.y_nodes, sheet.s_nodes, y, nu,
                            sheet.s_max, nw=nw, nv=nw)
    return float(np.sum(W * sheet.increments))


def drift_integral_form(sheet: SheetSample, y: float, nu: float,
                        tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Drift functional as the explicit exponential sheet integral."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    reach = math.log(1.0 / tail_tol) / math.sqrt(nu)
    if sheet.y_max - y < reach:
        raise CoverageError(
            f"sheet y_max side short for the exponential: need {reach:.2f} "
            f"above y={y}, have {sheet.y_max - y:.2f}")
    W = drift_integral_weights(sheet.y_nodes, sheet.s_nodes, y, nu)
    return float(np.sum(W * sheet.increments))


def drift_variance_exact(nu: float) -> float:
    """Var of the drift functional: (1/(2 nu)) * (1/(2 sqrt(nu))).

    This is the elementary double integral of e^(-2 nu s') e^(-2 sqrt(nu) u)
    over s' > 0, u > 0.
    """
    return 1.0 / (4.0 * nu ** 1.5)


# ----------------------------------------------------------------------
# Laplace-domain identity for the shifted covariance

def _cm_lower_triangle(nu_t: float, nu_tp: float, gap: float, level: int) -> float:
    # integral over t > t' > 0 of e^(-nu_t t - nu_tp t') K(t, t') where
    # K(t,t') = int_0^{t'} erfc(gap sqrt((a+b)/(4ab)))/(4 sqrt(pi (a+b))) ds',
    # a = t - s', b = t' - s'.  Substitutions: the inner integral uses
    # w^2 = a + b (exact for gap = 0, erfc-flat endpoint otherwise); the
    # triangle maps t = xi, t' = xi (1 - rho^2); xi runs through a rational
    # map of (0, 1).  All integrands are then smooth, so Gauss-Legendre
    # converges spectrally in the level.
    n = 16 * (2 ** level)
    xw, ww = roots_legendre(n)
    xw = 0.5 * (xw + 1.0)
    ww = 0.5 * ww
    xr, wr = xw, ww
    xs, ws = xw, ww
    L = 2.0 / nu_t
    u = xw / (1.0 - xw)
    xi = L * u * u
    jxi = L * 2.0 * u / (1.0 - xw) ** 2
    rho = xr
    XI = xi[:, None]
    R = rho[None, :]
    TP = XI * (1.0 - R * R)
    wlo = np.sqrt(XI) * R
    whi = np.sqrt(XI * (2.0 - R * R))
    if gap == 0.0:
        K = (whi - wlo) / (4.0 * math.sqrt(math.pi))
    else:
        WQ = wlo[:, :, None] + (whi - wlo)[:, :, None] * xs[None, None, :]
        ab4 = np.maximum(WQ ** 4 - (XI * R * R)[:, :, None] ** 2, 0.0)
        arg = np.full_like(WQ, np.inf)
        nz = ab4 > 0
        arg[nz] = gap * WQ[nz] / np.sqrt(ab4[nz])
        K = (whi - wlo) / (4.0 * math.sqrt(math.pi)) * np.einsum(
            "ijk,k->ij", erfc(arg), ws)
    F = np.exp(-nu_t * XI - nu_tp * TP) * K * XI * 2.0 * R
    return float(np.einsum("ij,i,j->", F, jxi * ww, wr))


def cameron_martin_laplace(nu: float, nu2: float, y_gap: float,
                           level: int = 2) -> float:
    """Double Laplace transform of the half-plane covariance kernel applied
    to e^(-nu .), evaluated at nu2, by triangle-split quadrature."""
    if nu <= 0 or nu2 <= 0:
        raise ValueError("decay rates must be positive")
    if y_gap < 0:
        raise ValueError("y_gap must be nonnegative")
    return _cm_lower_triangle(nu2, nu, y_gap, level) \
        + _cm_lower_triangle(nu, nu2, y_gap, level)


def cameron_martin_target(nu: float, nu2: float, y_gap: float) -> float:
    """Closed form g_hat(nu2) g_hat(nu) / ((sqrt(nu2)+sqrt(nu)) (nu2+nu))."""
    gh = lambda v: math.exp(-math.sqrt(v) * y_gap) / (2.0 * math.sqrt(v))
    return gh(nu) * gh(nu2) / ((math.sqrt(nu) + math.sqrt(nu2)) * (nu + nu2))


def verify_cameron_martin_laplace(nu: float, nu2: float, y_gap: float = 0.0,
                                  level: int = 2, tol: float = 1e-4,
                                  seed: int = 0) -> VerificationReport:
    """Relative-error report of quadrature vs the closed Laplace form."""
    from .stats import residual_report
    val = cameron_martin_laplace(nu, nu2, y_gap, level)
    tgt = cameron_martin_target(nu, nu2, y_gap)
    rel = abs(val / tgt - 1.0)
    return residual_report(
        f"laplace covariance identity nu={nu:g} nu2={nu2:g} gap={y_gap:g}",
        rel, tol, seed=seed,
        grid={"level": level, "value": val, "closed_form": tgt})


# ----------------------------------------------------------------------
# weak-form residual

@dataclass(frozen=True)
class SpaceBump:
    """Smooth compactly supported bump profile on the x axis."""

    center: float
    radius: float
    amplitude: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.radius
        out = np.zeros_like(x)
        m = np.abs(u) < 1.0
        um = u[m]
        out[m] = self.amplitude * np.exp(-1.0 / (1.0 - um * um))
        return out

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.radius
        out = np.zeros_like(x)
        m = np.abs(u) < 1.0
        um = u[m]
        one = 1.0 - um * um
        phi = self.amplitude * np.exp(-1.0 / one)
        out[m] = phi * (-2.0 * um) / (self.radius * one * one)
        return out

    def deriv2(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.radius
        out = np.zeros_like(x)
        m = np.abs(u) < 1.0
        um = u[m]
        one = 1.0 - um * um
        phi = self.amplitude * np.exp(-1.0 / one)
        mu = -2.0 * um / (one * one)
        dmu = (-2.0 - 6.0 * um * um) / (one ** 3)
        out[m] = phi * (mu * mu + dmu) / (self.radius * self.radius)
        return out

    def l2sq(self, nq: int = 400) -> float:
        xg, wg = roots_legendre(nq)
        x = self.center + self.radius * xg
        return float(np.sum(self(x) ** 2 * wg) * self.radius)

    def deriv_l2sq(self, nq: int = 400) -> float:
        xg, wg = roots_legendre(nq)
        x = self.center + self.radius * xg
        return float(np.sum(self.deriv(x) ** 2 * wg) * self.radius)


@dataclass(frozen=True)
class TensorTestFunction:
    """Space-time test function f(x,t) = sum_i fx_i(x) ft_i(t), each factor a
    smooth bump; the canonical two-variable element of the weak formulation."""

    terms: tuple  # tuple of (SpaceBump, TestFunction)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("need at least one tensor term")
        g = self.terms[0][1].grid
        if any(ft.grid != g for _, ft in self.terms):
            raise ValueError("time factors not on one grid")

    @property
    def tgrid(self) -> TimeGrid:
        return self.terms[0][1].grid

    @property
    def x_support(self) -> tuple[float, float]:
        lo = min(fx.center - fx.radius for fx, _ in self.terms)
        hi = max(fx.center + fx.radius for fx, _ in self.terms)
        return lo, hi

    def l2sq(self) -> float:
        """||f||^2 over the quadrant, from 1-D factor quadratures."""
        nq = 400
        xg, wg = roots_legendre(nq)
        total = 0.0
        for fx1, ft1 in self.terms:
            for fx2, ft2 in self.terms:
                lo = min(fx1.center - fx1.radius, fx2.center - fx2.radius)
                hi = max(fx1.center + fx1.radius, fx2.center + fx2.radius)
                x = lo + (hi - lo) * 0.5 * (xg + 1.0)
                ipx = float(np.sum(fx1(x) * fx2(x) * wg) * 0.5 * (hi - lo))
                tlo = min(ft1.support[0], ft2.support[0])
                thi = max(ft1.support[1], ft2.support[1])
                t = tlo + (thi - tlo) * 0.5 * (xg + 1.0)
                ipt = float(np.sum(ft1(t) * ft2(t) * wg) * 0.5 * (thi - tlo))
                total += ipx * ipt
        return total


@dataclass
class WeakformPlan:
    """Precomputed sheet-cell weights omega for the residual functional.

    eta(f) = sum_cells omega * dB reproduces, by exact reordering, the
    double sum over the (x, t) tabulation grid of U(x,t) A(x,t) dx dt with

        A = dxx f + halflap_t f^a - sqrt(2) dx quarterlap_t f^a

    and U tabulated from the heat-kernel representation on the same sheet.
    Half-offset lattices (dy = dx/2, ds = dt/2) keep every kernel
    evaluation away from the t = s singularity.
    """

    f: TensorTestFunction
    x_res: int = 40      # x cells per space-bump radius
    ypad: float = 8.0    # sheet margin beyond the x support
    omega: np.ndarray = field(default=None, repr=False)
    geometry: dict = field(default_factory=dict)

    def __post_init__(self):
        f = self.f
        g = f.tgrid
        nt = g.n
        dt = g.dt
        ds = dt / 2.0
        ns = 2 * nt
        xlo, xhi = f.x_support
        rx = min(fx.radius for fx, _ in f.terms)
        dx = rx / self.x_res
        nx = int(math.ceil((xhi - xlo) / dx - 1e-9))
        x = xlo + (np.arange(nx) + 0.5) * dx
        dy = dx / 2.0
        # snap the pad to whole cells so every distance x_i - y_c lands
        # exactly on the half-offset lattice dy (q + 1/2)
        pad_cells = int(math.ceil(self.ypad / dy))
        ylo = xlo - pad_cells * dy
        ny = 2 * nx + 2 * pad_cells
        plan = SpectralPlan(SymGrid(g))
        A = np.zeros((nx, nt))
        for fx, ft in f.terms:
            fta = antisym_extend(ft.values)
            L1 = frac_laplacian(fta, 1.0, plan)[nt:]
            L12 = frac_laplacian(fta, 0.5, plan)[nt:]
            A += fx.deriv2(x)[:, None] * ft.values[None, :]
            A += fx(x)[:, None] * L1[None, :]
            A -= math.sqrt(2.0) * fx.deriv(x)[:, None] * L12[None, :]
        # distance lattice: x_i - y_c = dy (q + 1/2), q = Q0 + 2i - c
        Q0 = int(round((xlo - ylo) / dy))
        qmin = Q0 - (ny - 1)
        qmax = Q0 + 2 * (nx - 1)
        dist = dy * (np.arange(qmin, qmax + 1) + 0.5)
        um = (np.arange(2 * nt) + 0.5) * ds  # half-integer lags m = 2j - k
        Ktab = np.exp(-dist[:, None] ** 2 / (4.0 * um[None, :])) \
            / np.sqrt(4.0 * np.pi * um[None, :])
        NF = 4 * nt
        Khat = np.fft.rfft(Ktab, n=NF, axis=1)
        Bt = np.zeros((nx, NF))
        Bt[:, 0:2 * nt:2] = A * dx * dt
        Bhat = np.fft.rfft(Bt, axis=1)
        Ohat = np.zeros((ny, NF // 2 + 1), dtype=complex)
        crange = np.arange(ny)
        for i in range(nx):
            qidx = (Q0 + 2 * i - crange) - qmin
            Ohat += np.conj(Khat[qidx]) * Bhat[i][None, :]
        self.omega = np.fft.irfft(Ohat, n=NF, axis=1)[:, :ns]
        self.geometry = {
            "y_min": ylo, "y_max": ylo + ny * dy, "s_max": ns * ds,
            "dy": dy, "ds": ds, "nx": nx, "dx": dx,
        }

    def matches(self, sheet: SheetSample) -> bool:
        g = self.geometry
        return (sheet.increments.shape == self.omega.shape
                and abs(sheet.y_min - g["y_min"]) < 1e-9
                and abs(sheet.dy - g["dy"]) < 1e-12
                and abs(sheet.ds - g["ds"]) < 1e-12)

    def residual(self, sheet: SheetSample) -> float:
        if not self.matches(sheet):
            raise CoverageError("sheet geometry does not match the plan")
        return float(np.sum(self.omega * sheet.increments))

    def variance_discrete(self) -> float:
        g = self.geometry
        return float(np.sum(self.omega ** 2) * g["dy"] * g["ds"])


def weakform_residual(sheet: SheetSample, f: TensorTestFunction,
                      plan: WeakformPlan | None = None) -> float:
    """eta(f) on one sheet.  Builds (or reuses) the reordered-weight plan."""
    if plan is None:
        plan = WeakformPlan(f)
    return plan.residual(sheet)


def weakform_residual_reference(sheet: SheetSample, f: TensorTestFunction,
                                x_res: int = 8) -> float:
    """Literal tabulation path: U(x_i, t_j) summed against the bracket.

    Quadratically more work than the plan path; kept as the oracle that the
    reordering is exact.  Use small grids.
    """
    g = f.tgrid
    nt = g.n
    dt = g.dt
    t = g.nodes
    xlo, xhi = f.x_support
    rx = min(fx.radius for fx, _ in f.terms)
    dx = rx / x_res
    nx = int(math.ceil((xhi - xlo) / dx - 1e-9))
    x = xlo + (np.arange(nx) + 0.5) * dx
    plan = SpectralPlan(SymGrid(g))
    A = np.zeros((nx, nt))
    for fx, ft in f.terms:
        fta = antisym_extend(ft.values)
        L1 = frac_laplacian(fta, 1.0, plan)[nt:]
        L12 = frac_laplacian(fta, 0.5, plan)[nt:]
        A += fx.deriv2(x)[:, None] * ft.values[None, :]
        A += fx(x)[:, None] * L1[None, :]
        A -= math.sqrt(2.0) * fx.deriv(x)[:, None] * L12[None, :]
    eta = 0.0
    for i in range(nx):
        for j in range(nt):
            w = point_weights(sheet.y_nodes, sheet.s_nodes, x[i], t[j])
            eta += float(np.sum(w * sheet.increments)) * A[i, j] * dx * dt
    return eta


# ----------------------------------------------------------------------
# binary sheet dumps

SHEET_MAGIC = b"SHT1"
SHEET_VERSION = 1
_HEADER = struct.Struct("<4sI5dQII")  # 64 bytes
assert _HEADER.size == 64


def dump_sheet(sheet: SheetSample, path) -> None:
    """Binary matrix dump: 64-byte header + row-major float64 increments."""
    ncols = sheet.increments.shape[1]
    hdr = _HEADER.pack(SHEET_MAGIC, SHEET_VERSION, sheet.dy, sheet.ds,
                       sheet.y_min, sheet.y_max, sheet.s_max,
                       sheet.seed % (1 << 64), sheet.stream, ncols)
    with open(path, "wb") as fh:
        fh.write(hdr)
        fh.write(np.ascontiguousarray(sheet.increments, dtype=np.float64).tobytes())


def load_sheet(path) -> SheetSample:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, dy, ds, y_min, y_max, s_max, seed, stream, ncols = \
        _HEADER.unpack_from(raw, 0)
    if magic != SHEET_MAGIC:
        raise ValueError("not a sheet dump (bad magic)")
    if version != SHEET_VERSION:
        raise ValueError(f"unsupported sheet dump version {version}")
    body = np.frombuffer(raw, dtype=np.float64, offset=_HEADER.size)
    if ncols == 0 or body.size % ncols:
        raise ValueError("corrupt sheet dump (size does not divide)")
    inc = body.reshape(-1, ncols).copy()
    return SheetSample(y_min=y_min, y_max=y_max, s_max=s_max, dy=dy, ds=ds,
                       seed=seed, stream=stream, increments=inc)
