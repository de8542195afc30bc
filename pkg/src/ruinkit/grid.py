"""Measures on a uniform grid: an atom at the origin plus density samples.

All densities are combined with the trapezoid rule.  Convolution with an
exponential kernel has its own exact-for-piecewise-linear integrator
(:func:`convolve_exponential`) because the Brownian ladder-height law can be
far narrower than the grid spacing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import signal

# kernels with rate * delta above this are folded into the atom
NEAR_DIRAC = 30.0
# kernels with rate * delta between these two are under-resolved by sampling
_RESOLVED = 0.25


class GridMismatchError(ValueError):
    """Two grid objects with different spacing or extent were combined."""


@dataclass(frozen=True)
class Grid:
    """Points ``0, delta, ..., n * delta``."""

    delta: float
    n: int

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"grid spacing must be positive and finite, got {self.delta}")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 cells, got {self.n}")

    @classmethod
    def from_extent(cls, x_max: float, n: int = 4096) -> "Grid":
        return cls(x_max / n, n)

    @property
    def x_max(self) -> float:
        return self.delta * self.n

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.delta

    @property
    def size(self) -> int:
        return self.n + 1

    def index(self, x: float) -> int:
        """Index of the grid point equal to ``x`` (to rounding)."""
        k = x / self.delta
        i = int(round(k))
        if abs(k - i) > 1e-7 or not 0 <= i <= self.n:
            raise ValueError(f"x={x} is not a point of the grid (delta={self.delta}, x_max={self.x_max})")
        return i

    def trapezoid_weights(self, upto: int | None = None) -> np.ndarray:
        m = self.n if upto is None else upto
        w = np.full(m + 1, self.delta)
        w[0] = w[-1] = 0.5 * self.delta
        if m == 0:
            w[:] = 0.0
        return w


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True)
class GridFunction:
    """Nonnegative measure ``atom0 * delta_{origin} + values(y - origin) dy``.

    ``values[i]`` is the density at ``origin + i * grid.delta``.
    """

    grid: Grid
    atom0: float
    values: np.ndarray
    origin: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} density samples, got shape {v.shape}")
        object.__setattr__(self, "values", v)
        if self.atom0 < 0 or not math.isfinite(self.atom0):
            raise ValueError(f"atom must be finite and >= 0, got {self.atom0}")

    @classmethod
    def dirac(cls, grid: Grid, mass: float = 1.0) -> "GridFunction":
        return cls(grid, mass, np.zeros(grid.size))

    @classmethod
    def from_density(cls, grid: Grid, func, atom0: float = 0.0) -> "GridFunction":
        return cls(grid, atom0, np.asarray(func(grid.points), dtype=float))

    @property
    def points(self) -> np.ndarray:
        return self.origin + self.grid.points

    def mass(self) -> float:
        return self.atom0 + float(np.dot(self.grid.trapezoid_weights(), self.values))

    def cumulative(self) -> np.ndarray:
        """Measure of ``[origin, origin + x_i]`` for every grid point."""
        seg = 0.5 * (self.values[1:] + self.values[:-1]) * self.grid.delta
        return self.atom0 + np.concatenate([[0.0], np.cumsum(seg)])

    def integrate(self, func) -> float:
        """``int func(y) mu(dy)`` with ``func`` vectorised over absolute positions."""
        vals = np.asarray(func(self.points), dtype=float)
        return float(self.atom0 * vals[0] + np.dot(self.grid.trapezoid_weights(), vals * self.values))

    def scaled(self, factor: float) -> "GridFunction":
        return GridFunction(self.grid, self.atom0 * factor, self.values * factor, self.origin)

    def weighted(self, func) -> "GridFunction":
        """Multiply the measure by a positive function of the absolute position."""
        w = np.asarray(func(self.points), dtype=float)
        return GridFunction(self.grid, self.atom0 * float(w[0]), self.values * w, self.origin)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self.grid, other.grid)
        if self.origin != other.origin:
            raise GridMismatchError("cannot add grid functions with different origins")
        return GridFunction(self.grid, self.atom0 + other.atom0, self.values + other.values, self.origin)


@dataclass(frozen=True)
class GridCurve:
    """A function sampled on the grid (used for cumulative quantities)."""

    grid: Grid
    values: np.ndarray
    warnings: tuple[str, ...] = field(default=())

    def at(self, x: float) -> float:
        return float(self.values[self.grid.index(x)])

    def __call__(self, x):
        return np.interp(x, self.grid.points, self.values)


def convolve(f: GridFunction, g: GridFunction, method: str = "auto") -> GridFunction:
    """Convolution of two grid measures, truncated at ``x_max``.

    Atoms are carried exactly; density-density products use trapezoid
    weights.  ``method`` is ``"direct"``, ``"fft"`` or ``"auto"``.
    """
    _same_grid(f.grid, g.grid)
    a, b = f.values, g.values
    m = a.size
    if method == "auto":
        method = "direct" if m <= 512 else "fft"
    if method == "direct":
        full = np.convolve(a, b)[:m]
    elif method == "fft":
        full = signal.fftconvolve(a, b)[:m]
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    dens = f.grid.delta * (full - 0.5 * (a[0] * b + b[0] * a))
    dens[0] = 0.0
    dens = dens + f.atom0 * b + g.atom0 * a
    # fft round-off can leave tiny negatives in the far tail
    dens = np.clip(dens, 0.0, None)
    return GridFunction(f.grid, f.atom0 * g.atom0, dens, f.origin + g.origin)


def _exp_cell_weights(z: float) -> tuple[float, float]:
    """``int_0^1 e^{-z s} (1 - s) ds`` and ``int_0^1 e^{-z s} s ds``."""
    if z < 0.1:
        a1 = 0.0
        total = 0.0
        term = 1.0
        for n in range(14):
            if n > 0:
                term *= -z / n
            a1 += term / (n + 2)
            total += term / (n + 1)
        return total - a1, a1
    e = math.exp(-z)
    total = -math.expm1(-z) / z
    a1 = (-math.expm1(-z) - z * e) / z**2
    return total - a1, a1


def exp_filter_forward(values: np.ndarray, delta: float, rate: float) -> np.ndarray:
    """``E(x_i) = int_0^{x_i} e^{-rate (x_i - s)} f(s) ds`` for piecewise-linear ``f``."""
    z = rate * delta
    a0, a1 = _exp_cell_weights(z)
    src = np.empty_like(values)
    src[0] = 0.0
    src[1:] = delta * (a0 * values[1:] + a1 * values[:-1])
    return signal.lfilter([1.0], [1.0, -math.exp(-z)], src)


def exp_filter_backward(values: np.ndarray, delta: float, rate: float) -> np.ndarray:
    """``F(x_i) = int_{x_i}^{x_max} e^{-rate (v - x_i)} g(v) dv`` for piecewise-linear ``g``."""
    z = rate * delta
    a0, a1 = _exp_cell_weights(z)
    src = np.empty_like(values)
    src[-1] = 0.0
    src[:-1] = delta * (a0 * values[:-1] + a1 * values[1:])
    return signal.lfilter([1.0], [1.0, -math.exp(-z)], src[::-1])[::-1]


def convolve_exponential(f: GridFunction, weight: float, rate: float) -> GridFunction:
    """Convolution of ``f`` with the density ``weight * exp(-rate * y)``.

    Exact for piecewise-linear densities.  When ``rate * delta`` exceeds
    :data:`NEAR_DIRAC` the kernel acting on the atom of ``f`` is folded
    into an atom of mass ``atom0 * weight / rate``.
    """
    if rate <= 0:
        raise ValueError(f"exponential kernel needs a positive rate, got {rate}")
    grid = f.grid
    z = rate * grid.delta
    dens = weight * exp_filter_forward(f.values, grid.delta, rate)
    atom = 0.0
    if z > NEAR_DIRAC:
        atom = f.atom0 * weight / rate
        # boundary-layer limit of the smoothed density at the origin
        dens[0] = f.values[0] * weight / rate
    else:
        if _RESOLVED < z and f.atom0 > 0:
            warnings.warn(
                f"exponential kernel with rate*delta={z:.3g} is under-resolved; refine the grid",
                RuntimeWarning,
                stacklevel=2,
            )
        dens = dens + f.atom0 * weight * np.exp(-rate * grid.points)
    return GridFunction(grid, atom, dens, f.origin)


class SeriesResult(NamedTuple):
    """Sum of a geometric convolution series and its truncation data."""

    function: GridFunction
    terms: int
    tail_bound: float


def geometric_convolution_series(
    base: GridFunction, weight: float, lead: GridFunction, tol: float = 1e-12, max_terms: int = 100_000
) -> SeriesResult:
    """``sum_{n >= 0} weight^n (lead * base^{*n})``.

    Summation stops once ``tail_bound``, a bound on the mass of the
    neglected terms, drops below ``tol``.
    """
    if not 0 <= weight < 1:
        raise ValueError(f"series weight must lie in [0, 1), got {weight}")
    _same_grid(base.grid, lead.grid)
    ratio = weight * base.mass()
    if ratio >= 1:
        raise ValueError(f"series does not converge: weight * mass(base) = {ratio}")
    acc = lead
    term = lead
    n = 0
    factor = 1.0
    scale = lead.mass() / (1.0 - ratio)
    while True:
        factor *= ratio
        n += 1
        if factor * scale < tol or weight == 0:
            break
        if n > max_terms:
            raise RuntimeError("geometric convolution series did not reach tolerance")
        term = convolve(term, base).scaled(weight)
        acc = acc + term
    tail = factor * scale
    return SeriesResult(acc, n, tail)
