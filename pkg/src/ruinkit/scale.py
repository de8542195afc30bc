"""Pollaczek-Khinchine survival probabilities and q-scale functions on a grid.

The tilted 0-scale function is obtained from the ladder decomposition of the
all-time supremum,

    W_Phi(x) = P~(sup Y <= x) / psi~'(0+),   psi~'(0+) = c~ (1 - rho~),

with the survival probability given by the geometric convolution series of
unit-mass ladder laws.  Its derivative is read off the same series, so the
bounded-variation atom ``1 / c~`` at the origin is carried exactly.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .grid import (
    NEAR_DIRAC,
    Grid,
    GridCurve,
    GridFunction,
    SeriesResult,
    convolve,
    convolve_exponential,
    exp_filter_forward,
    geometric_convolution_series,
)
from .levy_model import LevyModel
from .tilt import TiltedModel, tilt_model

MAX_GRID_CELLS = 2**17


def default_grid(model: LevyModel, q: float = 0.0, x: float = 0.0, cells: int | None = None) -> Grid:
    """A grid resolving the claim law, the Brownian ladder law and the survival tail.

    ``x`` (and 0) are always grid points.  When ``cells`` is given the extent
    rule still applies but the spacing is ``x_max / cells``.
    """
    tm = tilt_model(model, q)
    measure = model.measure
    claim_scale = measure.mean / measure.lam
    tail_len = measure.cutoff(1e-15)
    # diffusion approximation of the tilted adjustment coefficient, halved to stay conservative
    m2 = 2.0 * integrate.quad(lambda y: y * float(tm.tilted_tail(y)), 0.0, tail_len, limit=200)[0]
    lundberg = 2.0 * tm.c_tilde * (1.0 - tm.rho_tilde) / (m2 + model.sigma**2)
    decay = min(0.5 * lundberg, 1.0 / claim_scale)
    x_max = max(4.0 * x, x + tail_len, 25.0 / decay)
    if cells is None:
        delta = claim_scale / 200.0
        r = tm.g_rate
        if np.isfinite(r) and r * delta < NEAR_DIRAC:
            delta = min(delta, 0.1 / r)
        cells = int(math.ceil(x_max / delta))
        cells = min(cells, MAX_GRID_CELLS)
    delta = x_max / cells
    if x > 0:
        # stretch the spacing slightly so that x lands on the grid
        k = max(1, int(round(x / delta)))
        delta = x / k
        cells = int(math.ceil(x_max / delta))
    return Grid(delta, cells)


@dataclass(frozen=True)
class ScaleParts:
    """Everything derived from the ladder series for one ``(model, q, grid)``."""

    tilted: TiltedModel
    grid: Grid
    renewal: SeriesResult  # sum_n rho~^n (L~ * G~)^{*n}
    survival: np.ndarray  # 1 - theta~(x)
    w_tilted: np.ndarray  # W_Phi(x)
    w_tilted_prime: GridFunction  # W_Phi'(dx), atom 1/c~ when sigma = 0
    warnings: tuple[str, ...]


@functools.lru_cache(maxsize=64)
def scale_parts(model: LevyModel, q: float, grid: Grid) -> ScaleParts:
    tm = tilt_model(model, q)
    rho_t = tm.rho_tilde
    c_t = tm.c_tilde
    pts = grid.points
    notes: list[str] = []
    if rho_t <= 0:
        unit = GridFunction.dirac(grid)
        weight = 0.0
    else:
        unit = GridFunction(grid, 0.0, tm.tilted_tail(pts) / (c_t * rho_t))
        weight = rho_t
    r = tm.g_rate
    base = unit if model.sigma == 0 else convolve_exponential(unit, r, r)
    renewal = geometric_convolution_series(base, weight, GridFunction.dirac(grid))
    u = renewal.function
    if model.sigma == 0:
        cum = u.cumulative()
        wprime = u.scaled(1.0 / c_t)
    else:
        # (G~ * U)[0, x] = U[0, x] - int_[0,x] e^{-r (x - y)} U(dy)
        smooth = exp_filter_forward(u.values, grid.delta, r)
        cum = u.cumulative() - u.atom0 * np.exp(-r * pts) - smooth
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            wprime = convolve_exponential(u, r, r).scaled(1.0 / c_t)
        notes.extend(str(w.message) for w in caught)
    # discretisation error can push the far tail a hair past 1
    survival = np.clip((1.0 - rho_t) * cum, 0.0, 1.0)
    w_t = cum / c_t
    limit = 1.0 / (c_t * (1.0 - rho_t))
    if abs(w_t[-1] - limit) > 1e-3 * limit:
        notes.append(
            f"grid extent {grid.x_max:g} too short: W_Phi(x_max) = {w_t[-1]:.6g}, limit {limit:.6g}"
        )
    return ScaleParts(tm, grid, renewal, survival, w_t, wprime, tuple(notes))


def pk_survival(tilted: TiltedModel, grid: Grid) -> GridCurve:
    """``x -> 1 - theta~(x)``, the (tilted) probability that ``sup Y <= x``."""
    parts = scale_parts(tilted.base, tilted.q, grid)
    return GridCurve(grid, parts.survival, parts.warnings)


def ruin_probability(model: LevyModel, grid: Grid) -> GridCurve:
    """``P(tau_x < inf)`` on the grid."""
    parts = scale_parts(model, 0.0, grid)
    return GridCurve(grid, 1.0 - parts.survival, parts.warnings)


def scale_function_tilted(tilted: TiltedModel, grid: Grid) -> GridCurve:
    """``W_Phi(q)``, the 0-scale function of the tilted process."""
    parts = scale_parts(tilted.base, tilted.q, grid)
    if parts.warnings:
        for note in parts.warnings:
            warnings.warn(note, RuntimeWarning, stacklevel=2)
    return GridCurve(grid, parts.w_tilted, parts.warnings)


def scale_function(model: LevyModel, q: float, grid: Grid) -> GridCurve:
    """``W^(q)(x) = e^{Phi(q) x} W_Phi(q)(x)``; zero for negative arguments."""
    parts = scale_parts(model, q, grid)
    with np.errstate(over="raise"):
        vals = np.exp(parts.tilted.phi_q * grid.points) * parts.w_tilted
    return GridCurve(grid, vals, parts.warnings)


def z_scale_function(model: LevyModel, q: float, grid: Grid) -> GridCurve:
    """``Z^(q)(x) = 1 + q int_0^x W^(q)(y) dy``."""
    w = scale_function(model, q, grid).values
    seg = 0.5 * (w[1:] + w[:-1]) * grid.delta
    return GridCurve(grid, 1.0 + q * np.concatenate([[0.0], np.cumsum(seg)]))


def f1(model: LevyModel, q: float, grid: Grid) -> GridFunction:
    """``f1(x) = e^{Phi(q) x} W_Phi(q)'(x) = W^(q)'(x) - Phi(q) W^(q)(x)``.

    For ``sigma = 0`` the result has the atom ``1 / c`` at the origin.
    """
    parts = scale_parts(model, q, grid)
    phi = parts.tilted.phi_q
    return parts.w_tilted_prime.weighted(lambda x: np.exp(phi * x))


def central_difference(curve: np.ndarray, delta: float) -> np.ndarray:
    """Second-order derivative estimate with one-sided stencils at the ends."""
    return np.gradient(curve, delta, edge_order=2)


def convolve_f1(model: LevyModel, q: float, grid: Grid, values: np.ndarray) -> np.ndarray:
    """``(f1 * g)(x_i)`` at every grid point for a density ``g`` sampled on the grid.

    Uses ``f1 * g = e^{Phi x} (W_Phi' * e^{-Phi z} g)`` and applies the
    Brownian ladder kernel of ``W_Phi'`` exactly, so a sharp ladder law does
    not have to be resolved by the grid.
    """
    parts = scale_parts(model, q, grid)
    tm = parts.tilted
    pts = grid.points
    damped = GridFunction(grid, 0.0, np.exp(-tm.phi_q * pts) * np.asarray(values, dtype=float))
    inner = convolve(parts.renewal.function, damped)
    if model.sigma > 0:
        r = tm.g_rate
        inner = convolve_exponential(inner, r, r)
    return np.exp(tm.phi_q * pts) * inner.values / tm.c_tilde
