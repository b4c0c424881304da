"""Monte Carlo estimators, hypothesis tests, and the VerificationReport record.

Every report is recomputable: the pass flag follows mechanically from the
stored numbers and the stored rule string, and `recompute_pass` re-derives it.
Estimator reductions are associative merges of (count, mean, M2) triples, so
results are independent of how replicas were chunked across workers up to
floating-point reassociation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import scipy.stats

DEFAULT_K = 4.0


@dataclass
class VerificationReport:
    """One verified statistic: estimate vs target under an explicit rule.

    rule is machine-readable:  "|z| <= K"  for standard-error tests, or
    "estimate <= target" for deterministic residual bounds.
    """

    statistic: str
    estimate: float
    se: float
    target: float
    z: Optional[float]
    rule: str
    passed: bool
    replicas: int = 0
    seed: int = 0
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def recompute_pass(report: VerificationReport) -> bool:
    """Re-derive the pass flag from the stored numbers and rule."""
    rule = report.rule
    if rule.startswith("|z| <="):
        k = float(rule.split("<=")[1])
        if report.se == 0.0:
            return report.estimate == report.target
        z = (report.estimate - report.target) / report.se
        return abs(z) <= k
    if rule == "estimate <= target":
        return report.estimate <= report.target
    if rule.startswith("p >"):
        thresh = float(rule.split(">")[1])
        return report.estimate > thresh
    if rule.startswith("frac_within >="):
        # matrix comparisons store the within-k fraction as the estimate and
        # the worst |z| in se; target holds the required fraction
        need = float(rule.split(">=")[1].split(",")[0])
        kmax = float(rule.split("max|z| <=")[1])
        return report.estimate >= need and report.se <= kmax
    raise ValueError(f"unknown rule: {rule!r}")


def mean_se(samples) -> tuple[float, float]:
    """Sample mean and its standard error (unbiased variance)."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("mean_se needs at least 2 samples")
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    return m, se


def z_test(estimate: float, se: float, target: float, k: float = DEFAULT_K,
           name: str = "", replicas: int = 0, seed: int = 0,
           grid: dict | None = None) -> VerificationReport:
    """Pass iff |estimate - target| <= k * se."""
    if se < 0.0:
        raise ValueError("se must be nonnegative")
    if se == 0.0:
        # degenerate: exact match passes with z = 0, anything else is an
        # infinite-z failure
        z = 0.0 if estimate == target else math.inf
        ok = estimate == target
    else:
        z = (estimate - target) / se
        ok = abs(z) <= k
    return VerificationReport(
        statistic=name, estimate=float(estimate), se=float(se),
        target=float(target), z=float(z), rule=f"|z| <= {k:g}",
        passed=bool(ok), replicas=replicas, seed=seed, grid=grid or {})


def residual_report(name: str, residual: float, tol: float,
                    seed: int = 0, grid: dict | None = None) -> VerificationReport:
    """Deterministic bound: pass iff residual <= tol."""
    return VerificationReport(
        statistic=name, estimate=float(residual), se=0.0, target=float(tol),
        z=None, rule="estimate <= target", passed=bool(residual <= tol),
        replicas=0, seed=seed, grid=grid or {})


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample needs nonempty samples")
    res = scipy.stats.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_report(name: str, a, b, p_threshold: float = 0.01,
              seed: int = 0, grid: dict | None = None) -> VerificationReport:
    stat, p = ks_two_sample(a, b)
    return VerificationReport(
        statistic=name, estimate=float(p), se=0.0, target=float(p_threshold),
        z=None, rule=f"p > {p_threshold:g}", passed=bool(p > p_threshold),
        replicas=min(len(a), len(b)), seed=seed,
        grid=dict(grid or {}, ks_statistic=stat))


def matrix_compare(emp: np.ndarray, analytic: np.ndarray, se: np.ndarray,
                   k: float = DEFAULT_K, name: str = "",
                   frac_required: float = 0.95, replicas: int = 0,
                   seed: int = 0, grid: dict | None = None) -> VerificationReport:
    """Entrywise comparison: pass iff >= 95% of entries lie within k*se of the
    target and no entry strays beyond 2k*se."""
    emp = np.asarray(emp, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    se = np.asarray(se, dtype=float)
    if not (emp.shape == analytic.shape == se.shape):
        raise ValueError("matrix_compare: shape mismatch")
    z = np.abs(emp - analytic) / np.where(se > 0, se, np.inf)
    frac = float(np.mean(z <= k))
    worst = float(z.max())
    ok = frac >= frac_required and worst <= 2.0 * k
    return VerificationReport(
        statistic=name, estimate=frac, se=worst, target=frac_required,
        z=None, rule=f"frac_within >= {frac_required:g}, max|z| <= {2.0 * k:g}",
        passed=bool(ok), replicas=replicas, seed=seed, grid=grid or {})


class RunningMoments:
    """Associative (count, mean, M2) accumulator for streaming replicas."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add_batch(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        nb = x.size
        if nb == 0:
            return self
        mb = float(x.mean())
        m2b = float(((x - mb) ** 2).sum())
        self._merge(nb, mb, m2b)
        return self

    def merge(self, other: "RunningMoments"):
        self._merge(other.count, other.mean, other.m2)
        return self

    def _merge(self, nb: int, mb: float, m2b: float):
        na = self.count
        n = na + nb
        if n == 0:
            return
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * na * nb / n
        self.count = n

    @property
    def variance(self) -> float:
        if self.count < 2:
            raise ValueError("need >= 2 samples")
        return self.m2 / (self.count - 1)

    @property
    def se_of_mean(self) -> float:
        return math.sqrt(self.variance / self.count)

    @property
    def se_of_variance(self) -> float:
        # Gaussian-theory SE of the sample variance: Var * sqrt(2/(n-1))
        return self.variance * math.sqrt(2.0 / (self.count - 1))
