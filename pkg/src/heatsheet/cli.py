"""Verification suites and the command-line entry point.

Five subcommands, one per suite:

* verify-ops    deterministic operator identities on the time grid
* verify-cov    Monte Carlo covariance and independence checks of the field
* verify-drift  the boundary drift functional, pathwise and in law
* verify-spde   weak-form residual: white-noise law of the paired field
* evolve        spatial dynamics: stationarity preserved over a horizon

Each writes <suite>_report.json into --out (plus trajectory.csv and
final_state.bin for evolve) and exits 0 when every report passes, 1 when
any fails, 2 on a configuration error.  Replica streams are derived as
seed XOR suite tag, then one SeedSequence spawn per replica, so results
are independent of the worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .grid import TimeGrid, SymGrid, TestFunction, bump, antisym_extend
from .kernels import LnuSpec, l_nu, l_nu_laplace
from .fracops import (SpectralPlan, frac_laplacian, op_A1, op_A2,
                      halfroot_conv, a1_a2_residual, A2_TAIL_POWER)
from .gaussfield import (SQRT4PI, cov_u, cov_u_gram, cov_v_gram,
                         coverage_halfwidth, sheet_rng, sheet_sample,
                         point_weights, pair_u_weights, pair_v_weights,
                         drift_field_weights, drift_integral_weights,
                         drift_variance_exact, cameron_martin_laplace,
                         cameron_martin_target, SpaceBump, TensorTestFunction,
                         WeakformPlan, SheetSample, dump_sheet)
from .sde import (EvolveConfig, StationarySampler, stationary_basis, evolve,
                  stability_limit)
from .stats import z_test, residual_report, matrix_compare

# suite tags XORed into the master seed (hex digits of pi: nothing up
# the sleeve, just five fixed distinct words)
OPS_TAG = 0x243F6A8885A308D3
COV_TAG = 0x13198A2E03707344
DRIFT_TAG = 0xA4093822299F31D0
SPDE_TAG = 0x082EFA98EC4E6C89
EVOLVE_TAG = 0x452821E638D01377

U64 = 1 << 64

# default grids: identity suites live on (8, 4096); the weak-form suite
# trades time resolution for replica count; the dynamics suite buys domain
# margin (t_max 16) against truncation backflow at the far end
OPS_T_MAX, OPS_N = 8.0, 4096
SPDE_T_MAX, SPDE_N = 8.0, 512
EVOLVE_T_MAX, EVOLVE_N = 16.0, 1024

COV_POINT_REPLICAS = 20000
COV_GRAM_REPLICAS = 4000
DRIFT_REPLICAS = 4000
SPDE_REPLICAS = 10000
EVOLVE_REPLICAS = 5000

COV_POINT_DS = 1.0 / 512
COV_GRAM_DS = 1.0 / 64
COV_GRAM_DY = 1.0 / 8
GRAM_STREAM_BASE = 1 << 20     # keep gram streams clear of the point block
SPDE_STREAM_STRIDE = 1 << 20   # stream offset between test-function runs

DRIFT_Y_COUNT = 20
DRIFT_Y_STEP = 1.0 / 8         # lattice-aligned probe locations

CHUNK_REPLICAS = 128
CHUNK_CELL_BUDGET = 64_000_000  # float32 buffer cap per worker chunk

# refinement reports: halving dt must shrink the error by this factor
REFINE_GAIN = 1.8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Resolved run parameters; None means 'suite default'."""

    seed: int = 0
    t_max: float | None = None
    n: int | None = None
    dz: float | None = None
    Z: float | None = None
    replicas: int | None = None
    nus: tuple = (1.0, 4.0)
    tail_tol: float = 1e-8
    out_dir: str = "."
    workers: int = 1

    def validate(self):
        if self.n is not None and (self.n < 2 or self.n & (self.n - 1)):
            raise ConfigError("n must be a power of two")
        if not (0 <= self.seed < U64):
            raise ConfigError("seed must fit in 64 bits")
        if self.t_max is not None and self.t_max <= 0:
            raise ConfigError("tmax must be positive")
        if self.dz is not None and self.dz <= 0:
            raise ConfigError("dz must be positive")
        if self.Z is not None and self.Z <= 0:
            raise ConfigError("Z must be positive")
        if self.replicas is not None and self.replicas < 2:
            raise ConfigError("replicas must be at least 2")
        if not self.nus or any(v <= 0 for v in self.nus):
            raise ConfigError("nu values must be positive")
        if not (0.0 < self.tail_tol < 1.0):
            raise ConfigError("tail_tol must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


def suite_seed(cfg: RunConfig, tag: int) -> int:
    return (cfg.seed ^ tag) % U64


def _parallel(total: int, workers: int, task, chunk: int = CHUNK_REPLICAS):
    """Run task(lo, hi) over fixed chunks; chunking is independent of the
    worker count, so outputs written by replica index are reproducible."""
    chunks = [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
    if workers <= 1:
        for c in chunks:
            task(*c)
    else:
        with cf.ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(lambda c: task(*c), chunks))


# ----------------------------------------------------------------------
# verify-ops

# padding for the identity comparisons: the spectral side's periodization
# error is dt-independent, so pad=2 floors the refinement study; pad=4
# pushes the floor below the dt-part at desk resolutions
OPS_PAD = 4


def _ops_bump(grid: TimeGrid) -> TestFunction:
    return bump(0.25 * grid.t_max, 0.125 * grid.t_max,
                t_max=grid.t_max, n=grid.n)


def _interior(grid: TimeGrid, margin: float = 0.5) -> np.ndarray:
    t = grid.nodes
    return (t > margin) & (t < grid.t_max - margin)


def _a2_factorization_err(grid: TimeGrid) -> float:
    h = _ops_bump(grid)
    plan = SpectralPlan(SymGrid(grid), pad=OPS_PAD)
    lhs = op_A2(h)
    rhs = math.sqrt(2.0) * frac_laplacian(
        antisym_extend(h.values), 0.5, plan)[grid.n:]
    m = _interior(grid)
    return float(np.max(np.abs(lhs - rhs)[m]) / h.sup_norm)


def _a1a2_err(grid: TimeGrid) -> float:
    h = _ops_bump(grid)
    plan = SpectralPlan(SymGrid(grid), pad=OPS_PAD)
    r = a1_a2_residual(h, plan=plan)
    return float(np.max(np.abs(r)) / np.max(np.abs(h.deriv_values)))


def suite_ops(cfg: RunConfig) -> list:
    seed = suite_seed(cfg, OPS_TAG)
    grid = TimeGrid(cfg.t_max or OPS_T_MAX, cfg.n or OPS_N)
    fine = TimeGrid(grid.t_max, 2 * grid.n)
    gdesc = {"t_max": grid.t_max, "n": grid.n}
    reports = []

    # factorization of the second operator through the quarter-order one;
    # halving dt must shrink the error by REFINE_GAIN, i.e. the quotient
    # err(dt/2)/err(dt) must drop below 1/REFINE_GAIN
    err = _a2_factorization_err(grid)
    reports.append(residual_report(
        "quarter-order factorization, interior max error",
        err, 1e-2, seed=seed, grid=gdesc))
    err_f = _a2_factorization_err(fine)
    reports.append(residual_report(
        "quarter-order factorization, refinement quotient",
        err_f / max(err, 1e-300), 1.0 / REFINE_GAIN, seed=seed,
        grid={**gdesc, "fine_n": fine.n, "fine_error": err_f}))

    # inversion: convolving the image against the halfroot kernel returns h
    h = _ops_bump(grid)
    a2 = op_A2(h)
    back = halfroot_conv(a2, grid, tail=("power", A2_TAIL_POWER))
    inv_err = float(np.max(np.abs(back - h.values)) / h.sup_norm)
    reports.append(residual_report(
        "halfroot inversion, max error", inv_err, 1e-2, seed=seed, grid=gdesc))

    # composition identity with first-order refinement
    err3 = _a1a2_err(grid)
    reports.append(residual_report(
        "composition identity, residual", err3, 2e-2, seed=seed, grid=gdesc))
    err3_f = _a1a2_err(fine)
    reports.append(residual_report(
        "composition identity, refinement quotient",
        err3_f / max(err3, 1e-300), 1.0 / REFINE_GAIN, seed=seed,
        grid={**gdesc, "fine_n": fine.n, "fine_error": err3_f}))

    # exponential eigenfunctions of the first operator
    tcut = min(4.0, grid.t_max)
    mask = grid.nodes <= tcut
    for nu in cfg.nus:
        f = np.exp(-nu * grid.nodes)
        out = op_A1(f, grid, tail=("exp", nu))
        rel = float(np.max(np.abs(out - math.sqrt(nu) * f)[mask]
                           / (math.sqrt(nu) * f[mask])))
        reports.append(residual_report(
            f"exponential eigenfunction nu={nu:g}", rel, 1e-3,
            seed=seed, grid={**gdesc, "t_cut": tcut}))

    # window integral l: pinned at 0, bounded normalized tail, Laplace value
    spec = LnuSpec(nu=1.0)
    reports.append(residual_report(
        "window integral at t=0", abs(l_nu(spec, 0.0)), 0.0,
        seed=seed, grid={}))
    ts = np.geomspace(10.0, 1000.0, 25)
    sup = max(abs(t ** 1.5 * l_nu(spec, t)) for t in ts)
    reports.append(residual_report(
        "window integral normalized tail bound", sup, 1.0,
        seed=seed, grid={"t_lo": 10.0, "t_hi": 1000.0,
                         "limit": 1.0 / SQRT4PI}))
    lap = l_nu_laplace(spec, 1.0)
    reports.append(residual_report(
        "window integral laplace value", abs(lap - 0.25), 1e-4,
        seed=seed, grid={"value": lap}))
    return reports


# ----------------------------------------------------------------------
# verify-cov

def _cov_point_geometry(tail_tol: float):
    t = 1.0
    ds = COV_POINT_DS
    L = coverage_halfwidth(t, tail_tol)
    dy = math.sqrt(ds)
    ny = 2 * int(math.ceil(L / dy)) + 2   # one spare cell per side
    y_min = -0.5 * ny * dy
    ns = int(round(t / ds))
    return y_min, -y_min, t, dy, ds, ny, ns


def _cov_gram_geometry(t_max: float, tail_tol: float):
    ds = COV_GRAM_DS
    dy = COV_GRAM_DY
    L = coverage_halfwidth(t_max, tail_tol)
    ny = 2 * (int(math.ceil(L / dy)) + 1)
    y_min = -0.5 * ny * dy
    ns = int(round(t_max / ds))
    return y_min, -y_min, t_max, dy, ds, ny, ns


def cov_observables(grid: TimeGrid) -> list:
    centers = 1.0 + 0.8 * np.arange(8)
    return [TestFunction(center=float(c), radius=0.7, grid=grid)
            for c in centers]


def _mc_pairings(W: np.ndarray, ncells: int, scale: float, R: int,
                 seed: int, stream_base: int, workers: int) -> np.ndarray:
    """Monte Carlo pairings X[r] = W @ sheet_r for per-replica streams.

    Drawn in float32 (halves bandwidth; the estimator noise floor is far
    above single precision).  Replica r reproduces sheet_sample(...,
    seed=seed, stream=stream_base + r, dtype=float32) cell for cell.
    """
    nw = W.shape[0]
    X = np.zeros((R, nw))
    W32 = W.astype(np.float32)
    chunk = max(4, min(CHUNK_REPLICAS, CHUNK_CELL_BUDGET // max(ncells, 1)))

    def task(lo, hi):
        buf = np.empty((hi - lo, ncells), dtype=np.float32)
        for r in range(lo, hi):
            rng = sheet_rng(seed, stream_base + r)
            buf[r - lo] = rng.standard_normal(ncells, dtype=np.float32)
        X[lo:hi] = (buf @ W32.T).astype(np.float64) * scale

    _parallel(R, workers, task, chunk=chunk)
    return X


def _cov_se(S: np.ndarray, R: int) -> np.ndarray:
    d = np.diag(S)
    return np.sqrt((np.outer(d, d) + S ** 2) / (R - 1))


def suite_cov(cfg: RunConfig) -> list:
    seed = suite_seed(cfg, COV_TAG)
    t_max = cfg.t_max or OPS_T_MAX
    n = cfg.n or OPS_N
    grid = TimeGrid(t_max, n)
    R_point = cfg.replicas or COV_POINT_REPLICAS
    R_gram = min(cfg.replicas or COV_GRAM_REPLICAS, COV_GRAM_REPLICAS)
    reports = []

    # point variance of the field at (0, 1)
    y0, y1, smax, dy, ds, ny, ns = _cov_point_geometry(cfg.tail_tol)
    yn = y0 + (np.arange(ny) + 0.5) * dy
    sn = (np.arange(ns) + 0.5) * ds
    Wp = point_weights(yn, sn, 0.0, 1.0).reshape(1, -1)
    X = _mc_pairings(Wp, ny * ns, math.sqrt(dy * ds), R_point,
                     seed, 0, cfg.workers)
    var = float(X[:, 0].var(ddof=1))
    se = var * math.sqrt(2.0 / (R_point - 1))
    tgt = cov_u(1.0, 1.0)
    reports.append(z_test(
        var, se, tgt, name="field variance at (0,1)", seed=seed,
        replicas=R_point, grid={"dy": dy, "ds": ds, "ny": ny, "ns": ns}))

    # Gram comparison of field and derivative pairings at x = 0
    hs = cov_observables(grid)
    G1 = cov_u_gram(hs)
    G2 = cov_v_gram(hs)
    y0, y1, smax, dy, ds, ny, ns = _cov_gram_geometry(t_max, cfg.tail_tol)
    yn = y0 + (np.arange(ny) + 0.5) * dy
    sn = (np.arange(ns) + 0.5) * ds
    rows = [pair_u_weights(yn, sn, 0.0, h, t_max) for h in hs]
    rows += [pair_v_weights(yn, sn, 0.0, h, t_max) for h in hs]
    W = np.stack([w.ravel() for w in rows])
    X = _mc_pairings(W, ny * ns, math.sqrt(dy * ds), R_gram,
                     seed, GRAM_STREAM_BASE, cfg.workers)
    m = len(hs)
    S = np.cov(X.T, ddof=1)
    Suu, Svv, Suv = S[:m, :m], S[m:, m:], S[:m, m:]
    gdesc = {"dy": dy, "ds": ds, "ny": ny, "ns": ns, "t_max": t_max}
    reports.append(matrix_compare(
        Suu, G1, _cov_se(S, R_gram)[:m, :m],
        name="field pairing Gram (8x8)",
        seed=seed, replicas=R_gram, grid=gdesc))
    reports.append(matrix_compare(
        Svv, G2, _cov_se(S, R_gram)[m:, m:],
        name="derivative pairing Gram (8x8)",
        seed=seed, replicas=R_gram, grid=gdesc))
    se_uv = np.sqrt((np.outer(np.diag(Suu), np.diag(Svv)) + Suv ** 2)
                    / (R_gram - 1))
    reports.append(matrix_compare(
        Suv, np.zeros_like(Suv), se_uv,
        name="field/derivative cross-covariance vs 0",
        seed=seed, replicas=R_gram, grid=gdesc))
    return reports


# ----------------------------------------------------------------------
# verify-drift

def _drift_geometry(t_max: float, nu: float, tail_tol: float):
    ds = COV_GRAM_DS
    dy = COV_GRAM_DY
    L = coverage_halfwidth(t_max, tail_tol)
    reach = math.log(1.0 / tail_tol) / math.sqrt(nu)
    y_last = (DRIFT_Y_COUNT - 1) * DRIFT_Y_STEP
    lo_cells = int(math.ceil(max(L, reach) / dy)) + 1
    y_min = -lo_cells * dy
    y_max = y_last + lo_cells * dy
    ny = int(round((y_max - y_min) / dy))
    ns = int(round(t_max / ds))
    return y_min, y_max, dy, ds, ny, ns


def _drift_rms(sheet: SheetSample, nu: float, t_max: float,
               yvals: np.ndarray, nw: int) -> float:
    yn, sn = sheet.y_nodes, sheet.s_nodes
    num = den = 0.0
    for y in yvals:
        wf = drift_field_weights(yn, sn, float(y), nu, t_max, nw=nw, nv=nw)
        wi = drift_integral_weights(yn, sn, float(y), nu)
        a = float(np.sum(wf * sheet.increments))
        b = float(np.sum(wi * sheet.increments))
        num += (a - b) ** 2
        den += b * b
    return math.sqrt(num / den)


def suite_drift(cfg: RunConfig) -> list:
    seed = suite_seed(cfg, DRIFT_TAG)
    t_max = cfg.t_max or OPS_T_MAX
    nu = cfg.nus[0]
    R = cfg.replicas or DRIFT_REPLICAS
    y0, y1, dy, ds, ny, ns = _drift_geometry(t_max, nu, cfg.tail_tol)
    gdesc = {"dy": dy, "ds": ds, "ny": ny, "ns": ns, "t_max": t_max,
             "nu": nu}
    reports = []

    # pathwise identity on one shared sheet, probed on the cell-edge lattice
    sheet = sheet_sample(y0, y1, t_max, dy, ds, seed=seed, stream=0)
    yvals = np.arange(DRIFT_Y_COUNT) * DRIFT_Y_STEP
    rms = _drift_rms(sheet, nu, t_max, yvals, nw=32)
    reports.append(residual_report(
        "drift pathwise identity, relative RMS", rms, 5e-2,
        seed=seed, grid=gdesc))
    rms_coarse = _drift_rms(sheet, nu, t_max, yvals, nw=8)
    reports.append(residual_report(
        "drift quadrature refinement gain", rms / max(rms_coarse, 1e-300),
        0.25, seed=seed,
        grid={**gdesc, "coarse_nodes": 8, "fine_nodes": 32,
              "coarse_rms": rms_coarse}))

    # law: variance of the explicit form matches the closed double integral
    yn = y0 + (np.arange(ny) + 0.5) * dy
    sn = (np.arange(ns) + 0.5) * ds
    Wi = drift_integral_weights(yn, sn, 0.0, nu).reshape(1, -1)
    X = _mc_pairings(Wi, ny * ns, math.sqrt(dy * ds), R, seed, 1, cfg.workers)
    var = float(X[:, 0].var(ddof=1))
    se = var * math.sqrt(2.0 / (R - 1))
    reports.append(z_test(
        var, se, drift_variance_exact(nu), name="drift functional variance",
        seed=seed, replicas=R, grid=gdesc))

    # Laplace-domain identity for the shifted covariance kernel, the
    # continuum statement behind the drift construction
    for nu_a in (1.0, 2.0):
        for nu_b in (1.0, 2.0):
            val = cameron_martin_laplace(nu_a, nu_b, 0.0)
            tgt = cameron_martin_target(nu_a, nu_b, 0.0)
            reports.append(residual_report(
                f"laplace covariance identity nu={nu_a:g} nu2={nu_b:g}",
                abs(val / tgt - 1.0), 1e-4, seed=seed,
                grid={"value": val, "closed_form": tgt}))
    return reports


# ----------------------------------------------------------------------
# verify-spde

def spde_test_functions(grid: TimeGrid) -> list:
    ft = bump(2.0, 1.0, t_max=grid.t_max, n=grid.n, grid=grid)
    return [TensorTestFunction(terms=((SpaceBump(0.0, 2.5), ft),)),
            TensorTestFunction(terms=((SpaceBump(0.0, 1.0), ft),))]


def suite_spde(cfg: RunConfig) -> list:
    seed = suite_seed(cfg, SPDE_TAG)
    t_max = cfg.t_max or SPDE_T_MAX
    n = cfg.n or SPDE_N
    grid = TimeGrid(t_max, n)
    R = cfg.replicas or SPDE_REPLICAS
    reports = []
    for fi, f in enumerate(spde_test_functions(grid)):
        plan = WeakformPlan(f)
        g = plan.geometry
        scale = math.sqrt(g["dy"] * g["ds"])
        W = plan.omega.reshape(1, -1)
        X = _mc_pairings(W, plan.omega.size, scale, R, seed,
                         fi * SPDE_STREAM_STRIDE, cfg.workers)
        eta = X[:, 0]
        tgt = f.l2sq()
        gdesc = {"t_max": t_max, "n": n, "x_radius": f.terms[0][0].radius,
                 **{k: g[k] for k in ("dy", "ds", "nx", "dx")}}
        mean = float(eta.mean())
        se_mean = float(eta.std(ddof=1) / math.sqrt(R))
        reports.append(z_test(
            mean, se_mean, 0.0, name=f"weak-form residual mean, f{fi + 1}",
            seed=seed, replicas=R, grid=gdesc))
        var = float(eta.var(ddof=1))
        se_var = var * math.sqrt(2.0 / (R - 1))
        reports.append(z_test(
            var, se_var, tgt, name=f"weak-form residual variance, f{fi + 1}",
            seed=seed, replicas=R, grid=gdesc))
        reports.append(residual_report(
            f"weak-form discrete variance bias, f{fi + 1}",
            abs(plan.variance_discrete() / tgt - 1.0), 2e-2,
            seed=seed, grid=gdesc))
    return reports


# ----------------------------------------------------------------------
# evolve

def evolve_observables(grid: TimeGrid) -> list:
    return [TestFunction(center=c, radius=0.4, grid=grid)
            for c in (1.5, 4.0, 5.8)]


def suite_evolve(cfg: RunConfig):
    seed = suite_seed(cfg, EVOLVE_TAG)
    t_max = cfg.t_max or EVOLVE_T_MAX
    n = cfg.n or EVOLVE_N
    grid = TimeGrid(t_max, n)
    dz = cfg.dz if cfg.dz is not None else stability_limit(grid)
    Z = cfg.Z if cfg.Z is not None else 1.0
    R = cfg.replicas or EVOLVE_REPLICAS

    obs = evolve_observables(grid)
    ecfg = EvolveConfig(dz=dz, Z=Z, observables=tuple(obs), seed=seed)
    ecfg.check_stability(grid)

    basis = stationary_basis(grid)
    sampler = StationarySampler(basis, grid)
    plan = SpectralPlan(SymGrid(grid))
    G1 = cov_u_gram(obs)
    G2 = cov_v_gram(obs)

    m = len(obs)
    UZ = np.zeros((R, m))
    VZ = np.zeros((R, m))
    book = np.zeros(R)
    sample = {}

    def task(lo, hi):
        for r in range(lo, hi):
            rng = sheet_rng(seed, r)
            init = sampler.draw(rng)
            res = evolve(init, ecfg, plan, rng=rng)
            UZ[r] = res.u_obs[-1]
            VZ[r] = res.v_obs[-1]
            book[r] = res.bookkeeping_error
            if r == 0:
                sample["result"] = res

    _parallel(R, cfg.workers, task)

    gdesc = {"t_max": t_max, "n": n, "dz": dz, "Z": Z, "basis": len(basis)}
    reports = [residual_report(
        "telescoping audit, max over replicas", float(book.max()), 1e-10,
        seed=seed, grid=gdesc)]
    for i, h in enumerate(obs):
        lab = f"h{i + 1} (center {h.center:g})"
        for name, data, tgt_var in (("u", UZ[:, i], G1[i, i]),
                                    ("v", VZ[:, i], G2[i, i])):
            mean = float(data.mean())
            se_m = float(data.std(ddof=1) / math.sqrt(R))
            reports.append(z_test(
                mean, se_m, 0.0,
                name=f"terminal {name}-pairing mean, {lab}",
                seed=seed, replicas=R, grid=gdesc))
            var = float(data.var(ddof=1))
            se_v = var * math.sqrt(2.0 / (R - 1))
            reports.append(z_test(
                var, se_v, float(tgt_var),
                name=f"terminal {name}-pairing variance, {lab}",
                seed=seed, replicas=R, grid=gdesc))
    return reports, sample.get("result"), grid, seed


# ----------------------------------------------------------------------
# orchestration

def write_report(path: str, suite: str, cfg: RunConfig, reports: list):
    doc = {
        "suite": suite,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": {
            "seed": cfg.seed, "t_max": cfg.t_max, "n": cfg.n,
            "dz": cfg.dz, "Z": cfg.Z, "replicas": cfg.replicas,
            "nus": list(cfg.nus), "tail_tol": cfg.tail_tol,
            "workers": cfg.workers,
        },
        "reports": [r.to_dict() for r in reports],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _finish(suite: str, fname: str, cfg: RunConfig, reports: list) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_report(os.path.join(cfg.out_dir, fname), suite, cfg, reports)
    ok = True
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.statistic}: estimate {r.estimate:.6g} "
              f"target {r.target:.6g} ({r.rule})")
        ok = ok and r.passed
    return 0 if ok else 1


def cmd_verify_ops(cfg: RunConfig) -> int:
    return _finish("ops", "ops_report.json", cfg, suite_ops(cfg))


def cmd_verify_cov(cfg: RunConfig) -> int:
    return _finish("cov", "cov_report.json", cfg, suite_cov(cfg))


def cmd_verify_drift(cfg: RunConfig) -> int:
    return _finish("drift", "drift_report.json", cfg, suite_drift(cfg))


def cmd_verify_spde(cfg: RunConfig) -> int:
    return _finish("spde", "spde_report.json", cfg, suite_spde(cfg))


def cmd_evolve(cfg: RunConfig) -> int:
    reports, sample, grid, seed = suite_evolve(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    if sample is not None:
        with open(os.path.join(cfg.out_dir, "trajectory.csv"), "w") as fh:
            fh.write(sample.to_csv())
        # final state reuses the binary matrix container: row 0 = u, row 1 = v
        state = sample.final_state
        holder = SheetSample(
            y_min=0.0, y_max=2.0, s_max=grid.t_max, dy=1.0, ds=grid.dt,
            seed=seed, stream=0,
            increments=np.vstack([state.u, state.v]))
        dump_sheet(holder, os.path.join(cfg.out_dir, "final_state.bin"))
    return _finish("evolve", "evolve_report.json", cfg, reports)


COMMANDS = {
    "verify-ops": cmd_verify_ops,
    "verify-cov": cmd_verify_cov,
    "verify-drift": cmd_verify_drift,
    "verify-spde": cmd_verify_spde,
    "evolve": cmd_evolve,
}


def parse_config_file(path: str) -> dict:
    """Flat key=value lines; # starts a comment; keys mirror the flags."""
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
    return out


_CONFIG_KEYS = {
    "seed": int, "tmax": float, "n": int, "dz": float, "Z": float,
    "replicas": int, "workers": int, "out": str, "tail_tol": float,
    "nu": str,
}


def build_config(args) -> RunConfig:
    vals = {}
    if args.config:
        raw = parse_config_file(args.config)
        for k, v in raw.items():
            if k not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key '{k}'")
            try:
                vals[k] = _CONFIG_KEYS[k](v)
            except ValueError:
                raise ConfigError(f"bad value for config key '{k}': {v!r}")
    # flags win over the file
    for k in ("seed", "tmax", "n", "dz", "Z", "replicas", "workers", "out"):
        v = getattr(args, k)
        if v is not None:
            vals[k] = v
    nus = (1.0, 4.0)
    if "nu" in vals:
        try:
            nus = tuple(float(s) for s in str(vals["nu"]).split(",") if s)
        except ValueError:
            raise ConfigError(f"bad nu list: {vals['nu']!r}")
    cfg = RunConfig(
        seed=vals.get("seed", 0),
        t_max=vals.get("tmax"),
        n=vals.get("n"),
        dz=vals.get("dz"),
        Z=vals.get("Z"),
        replicas=vals.get("replicas"),
        nus=nus,
        tail_tol=vals.get("tail_tol", 1e-8),
        out_dir=vals.get("out", "."),
        workers=vals.get("workers", 1),
    )
    cfg.validate()
    return cfg


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="heatsheet",
        description="verification suites for the heat-sheet laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--tmax", type=float, default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--dz", type=float, default=None)
        sp.add_argument("--Z", type=float, default=None)
        sp.add_argument("--replicas", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
