"""Discretization primitives: cell-centered time grids, the antisymmetric
mirror grid, and a small library of smooth compactly supported test functions.

All downstream operators evaluate singular kernels at cell centers only, so
the grids deliberately place no node at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_T_MAX = 8.0
DEFAULT_N = 4096


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform cell-centered grid on [0, t_max].

    Nodes sit at t_k = (k + 1/2) dt for k = 0..n-1, strictly inside
    (0, t_max).  n must be a power of two so the spectral operators
    downstream can use radix-2 transforms.
    """

    t_max: float
    n: int

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if not _is_pow2(self.n):
            raise ValueError("n must be a power of two")

    @property
    def dt(self) -> float:
        return self.t_max / self.n

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dt

    def __eq__(self, other):
        return (
            isinstance(other, TimeGrid)
            and self.t_max == other.t_max
            and self.n == other.n
        )

    def __hash__(self):
        return hash((self.t_max, self.n))


@dataclass(frozen=True)
class SymGrid:
    """Mirror of a TimeGrid over [-t_max, t_max]; 2n cell-centered nodes.

    The node set is symmetric under t -> -t, with no node at the origin.
    """

    base: TimeGrid

    @property
    def n(self) -> int:
        return 2 * self.base.n

    @property
    def dt(self) -> float:
        return self.base.dt

    @property
    def nodes(self) -> np.ndarray:
        pos = self.base.nodes
        return np.concatenate([-pos[::-1], pos])


def antisym_extend(f: np.ndarray) -> np.ndarray:
    """Odd reflection of grid values: returns f^a with f^a(-t) = -f(t).

    The (virtual) origin value is 0 by antisymmetry; it is not a node of
    either grid.  Restricting the result back to the positive half recovers
    f exactly.
    """
    f = np.asarray(f)
    return np.concatenate([-f[..., ::-1], f], axis=-1)


def restrict(fa: np.ndarray) -> np.ndarray:
    """Inverse of antisym_extend: keep the positive-time half."""
    fa = np.asarray(fa)
    m = fa.shape[-1]
    if m % 2:
        raise ValueError("symmetric-grid array must have even length")
    return fa[..., m // 2:]


def pair(f: np.ndarray, g: np.ndarray, grid: TimeGrid) -> float:
    """Discrete L2([0, inf)) pairing <f; g> = sum f(t_k) g(t_k) dt."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape[-1] != grid.n or g.shape[-1] != grid.n:
        raise ValueError("pair: values not on the given grid")
    return float(np.sum(f * g, axis=-1) * grid.dt)


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported bump with closed-form value and derivative.

    h(t) = a * exp(-1 / (1 - ((t - c)/r)^2)) inside |t - c| < r, 0 outside.
    All derivatives vanish at the support boundary, so h is C-infinity in
    exact arithmetic.  Support must sit strictly inside (0, t_max).
    """

    center: float
    radius: float
    grid: TimeGrid
    amplitude: float = 1.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not (0.0 < self.center - self.radius
                and self.center + self.radius < self.grid.t_max):
            raise ValueError(
                "bump support [c-r, c+r] must lie strictly inside (0, t_max)")

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.radius, self.center + self.radius)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = (t - self.center) / self.radius
        out = np.zeros_like(t)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - ui * ui))
        return out

    def deriv(self, t) -> np.ndarray:
        """Closed-form h'(t) = h(t) * (-2u / (r (1-u^2)^2))."""
        t = np.asarray(t, dtype=float)
        u = (t - self.center) / self.radius
        out = np.zeros_like(t)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        phi = self.amplitude * np.exp(-1.0 / (1.0 - ui * ui))
        out[inside] = phi * (-2.0 * ui) / (self.radius * (1.0 - ui * ui) ** 2)
        return out

    def deriv2(self, t) -> np.ndarray:
        """Closed-form second derivative, used by spatial weak-form assembly."""
        t = np.asarray(t, dtype=float)
        u = (t - self.center) / self.radius
        out = np.zeros_like(t)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        one = 1.0 - ui * ui
        phi = self.amplitude * np.exp(-1.0 / one)
        mu = -2.0 * ui / (one * one)
        dmu = (-2.0 - 6.0 * ui * ui) / (one * one * one)
        out[inside] = phi * (mu * mu + dmu) / (self.radius * self.radius)
        return out

    @property
    def values(self) -> np.ndarray:
        """Samples on the grid nodes, cached."""
        if "v" not in self._cache:
            self._cache["v"] = self(self.grid.nodes)
        return self._cache["v"]

    @property
    def deriv_values(self) -> np.ndarray:
        if "d" not in self._cache:
            self._cache["d"] = self.deriv(self.grid.nodes)
        return self._cache["d"]

    @property
    def sup_norm(self) -> float:
        # exact peak value: h(c) = a / e
        return abs(self.amplitude) / np.e


def bump(center: float, radius: float, t_max: float = DEFAULT_T_MAX,
         n: int = DEFAULT_N, amplitude: float = 1.0,
         grid: TimeGrid | None = None) -> TestFunction:
    """Construct the canonical smooth bump test function on a TimeGrid."""
    if grid is None:
        grid = TimeGrid(t_max, n)
    return TestFunction(center, radius, grid, amplitude)
