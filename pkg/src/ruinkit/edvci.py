"""Expected discounted value of capital injections.

Whenever the surplus jumps to a new lowest level below zero the owners
inject exactly the new shortfall.  With ``kappa`` the discounted probability
of ruin, ``varphi`` the discounted deficit at ruin, ``xi`` and ``delta`` the
transform and discounted level of the first jump record from a fresh start,

    V(q, x) = varphi(q, x) + delta / (1 - xi) * kappa(q, x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction, exp_filter_backward
from .levy_model import LevyModel, ModelError, phi_inverse
from .scale import convolve_f1, default_grid, f1, scale_function, scale_parts, z_scale_function


def _discounted_tail_transform(grid: Grid, phi: float, values: np.ndarray) -> np.ndarray:
    """``e^{Phi x} int_x^inf e^{-Phi v} g(v) dv`` on the grid (``g`` negligible past ``x_max``).

    The filter is exact for piecewise-linear ``g``; subtracting the filtered
    interpolation error ``delta^2 g'' / 12`` lifts it to fourth order.
    """
    g = np.asarray(values, dtype=float)
    d = grid.delta
    curvature = np.gradient(np.gradient(g, d, edge_order=2), d, edge_order=2)
    return exp_filter_backward(g - d * d / 12.0 * curvature, d, phi)


def h_func(model: LevyModel, q: float, grid: Grid) -> GridFunction:
    """``h(x) = e^{Phi x} int_x^inf e^{-Phi v} I(v) dv`` with ``I`` the integrated Levy tail."""
    phi = phi_inverse(model, q)
    vals = model.measure.integrated_tail(grid.points)
    return GridFunction(grid, 0.0, _discounted_tail_transform(grid, phi, vals))


def t_func(model: LevyModel, q: float, grid: Grid) -> GridFunction:
    """``t(x) = e^{Phi x} int_x^inf e^{-Phi v} N(v) dv`` with ``N`` the Levy tail."""
    phi = phi_inverse(model, q)
    vals = model.measure.tail(grid.points)
    return GridFunction(grid, 0.0, _discounted_tail_transform(grid, phi, vals))


def _grid_for(model: LevyModel, q: float, x: float, grid: Grid | None) -> tuple[Grid, int]:
    if x < 0:
        raise ValueError(f"initial surplus must be >= 0, got {x}")
    g = grid if grid is not None else default_grid(model, q, x)
    return g, g.index(x)


def kappa_jump(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> float:
    """``E[e^{-q tau_x}; tau_x < inf, ruin by a claim] = (f1 * t)(x)``."""
    g, i = _grid_for(model, q, x, grid)
    return float(convolve_f1(model, q, g, t_func(model, q, g).values)[i])


def kappa_creep(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> float:
    """``E[e^{-q tau_x}; tau_x < inf, ruin by diffusion] = sigma^2 / 2 * f1(x)``."""
    if model.sigma == 0:
        return 0.0
    if x == 0:
        return 1.0
    g, i = _grid_for(model, q, x, grid)
    return float(0.5 * model.sigma**2 * f1(model, q, g).values[i])


def kappa(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> float:
    """Laplace transform of the ruin time, ``E[e^{-q tau_x}; tau_x < inf]``."""
    return kappa_jump(model, q, x, grid) + kappa_creep(model, q, x, grid)


def varphi(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> float:
    """Expected discounted deficit at ruin, ``(f1 * h)(x)``."""
    g, i = _grid_for(model, q, x, grid)
    return float(convolve_f1(model, q, g, h_func(model, q, g).values)[i])


def xi(model: LevyModel, q: float) -> float:
    """``E[e^{-q tau}; tau < inf]`` for the first jump record ``tau`` started from 0.

    Equals ``1 - 2q / (Phi (2c + sigma^2 Phi))``; the ``q -> 0`` limit is ``rho``.
    """
    if q < 0:
        raise ModelError(f"q must be >= 0, got {q}")
    if q == 0:
        return model.rho
    phi = phi_inverse(model, q)
    return 1.0 - 2.0 * q / (phi * (2.0 * model.c + model.sigma**2 * phi))


def delta(model: LevyModel, q: float) -> float:
    """``E[e^{-q tau} Y_tau; tau < inf]`` for the first jump record started from 0."""
    if q <= 0:
        raise ModelError(f"the discounted record level needs q > 0, got {q}")
    phi = phi_inverse(model, q)
    a = phi * (2.0 * model.c + phi * model.sigma**2)
    return 2.0 * model.c / a * (2.0 * q / a + model.rho - 1.0)


@dataclass(frozen=True)
class EdvciReport:
    q: float
    x: float
    varphi: float
    kappa: float
    kappa_jump: float
    xi: float
    delta: float
    V: float
    classical_V: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def edvci_value(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> EdvciReport:
    """Total expected discounted capital injections for initial surplus ``x``."""
    if not q > 0:
        raise ModelError(f"injection values need q > 0, got {q}")
    g, _ = _grid_for(model, q, x, grid)
    xv, dv = xi(model, q), delta(model, q)
    if xv >= 1:
        raise ArithmeticError(f"record transform xi = {xv} >= 1; injection series diverges")
    kj = kappa_jump(model, q, x, g)
    k = kj + kappa_creep(model, q, x, g)
    vp = varphi(model, q, x, g)
    value = vp + dv / (1.0 - xv) * k
    classical = None
    if model.sigma == 0:
        classical = classical_V(model, q, x, g)
        if not math.isclose(classical, value, rel_tol=1e-9, abs_tol=1e-12):
            raise ArithmeticError(f"classical reduction disagrees: {classical} vs {value}")
    return EdvciReport(q, x, vp, k, kj, xv, dv, value, classical)


def _renewal_density(eta: np.ndarray, atom: float, delta_: float) -> np.ndarray:
    """Solve ``u = atom * eta + eta * u`` (trapezoid Volterra recursion) for the density ``u``."""
    n = eta.size
    u = np.zeros(n)
    u[0] = atom * eta[0]
    denom = 1.0 - 0.5 * delta_ * eta[0]
    for i in range(1, n):
        # trapezoid over [0, x_i] with the implicit endpoint moved to the left side
        s = 0.5 * u[0] * eta[i] + np.dot(u[1:i], eta[i - 1 : 0 : -1])
        u[i] = (atom * eta[i] + delta_ * s) / denom
    return u


def classical_V(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> float:
    """Injection value of the unperturbed model from its own closed-form ingredients.

    ``W_Phi'`` is the renewal density of ``eta = N_Phi / c`` with atom ``1/c``,
    ``xi = 1 - q/(c Phi)`` and ``delta = (q - (c - E S_1) Phi) / (c Phi^2)``.
    """
    if model.sigma != 0:
        raise ModelError("the classical reduction needs sigma = 0")
    g, i = _grid_for(model, q, x, grid)
    c = model.c
    phi = phi_inverse(model, q)
    pts = g.points[: i + 1]
    eta = model.measure.tilted_tail(pts, phi) / c
    w_dens = _renewal_density(eta, 1.0 / c, g.delta)
    f1_dens = np.exp(phi * pts) * w_dens
    f1_atom = 1.0 / c

    def conv_at_x(vals: np.ndarray) -> float:
        tail_part = vals[::-1]
        wts = np.full(i + 1, g.delta)
        wts[0] = wts[-1] = 0.5 * g.delta
        if i == 0:
            wts[:] = 0.0
        return f1_atom * vals[i] + float(np.dot(wts, f1_dens * tail_part))

    hv = h_func(model, q, g).values[: i + 1]
    tv = t_func(model, q, g).values[: i + 1]
    xi0 = 1.0 - q / (c * phi)
    delta0 = (q - (c - model.measure.mean) * phi) / (c * phi**2)
    return conv_at_x(hv) + delta0 / (1.0 - xi0) * conv_at_x(tv)


def z_kappa(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> float:
    """``Z^(q)(x) - q / Phi(q) W^(q)(x)``: the ruin-time transform from the scale functions."""
    g, i = _grid_for(model, q, x, grid)
    if q == 0:
        return 1.0 - scale_parts(model, 0.0, g).survival[i]
    phi = phi_inverse(model, q)
    return float(z_scale_function(model, q, g).values[i] - q / phi * scale_function(model, q, g).values[i])
