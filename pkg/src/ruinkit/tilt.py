"""Exponential change of measure at the right inverse ``Phi(q)`` and the
ladder-type laws G, H (and their tilted versions) it acts on.

Under the tilted measure the model keeps its form with premium rate
``c + sigma^2 Phi(q)`` and Levy measure ``e^{-Phi(q) u} nu(du)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction, convolve_exponential
from .levy_model import LevyModel, ModelError, phi_inverse


@dataclass(frozen=True)
class TiltedModel:
    """Model seen under the measure change with density ``exp(-Phi(q) Y_t - q t)``."""

    base: LevyModel
    q: float
    phi_q: float
    c_tilde: float
    tilted_mean: float

    @property
    def rho_tilde(self) -> float:
        return self.tilted_mean / self.c_tilde

    @property
    def sigma(self) -> float:
        return self.base.sigma

    def tilted_tail(self, u):
        return self.base.measure.tilted_tail(u, self.phi_q)

    @property
    def g_rate(self) -> float:
        """Rate of the exponential law of the all-time supremum of ``-c~ t - sigma B``."""
        if self.base.sigma == 0:
            return np.inf
        return 2.0 * self.c_tilde / self.base.sigma**2


def tilt_model(model: LevyModel, q: float) -> TiltedModel:
    if q < 0:
        raise ModelError(f"q must be >= 0, got {q}")
    phi = phi_inverse(model, q)
    c_t = model.c + model.sigma**2 * phi
    return TiltedModel(model, float(q), phi, c_t, model.measure.tilted_mean(phi))


def _as_tilted(model_or_tilted) -> TiltedModel:
    if isinstance(model_or_tilted, TiltedModel):
        return model_or_tilted
    return tilt_model(model_or_tilted, 0.0)


def g_density(model_or_tilted, grid: Grid) -> GridFunction:
    """Law of ``sup_t (-c t - sigma B_t)``: Exp(2c/sigma^2), or a Dirac at 0 when ``sigma = 0``."""
    tm = _as_tilted(model_or_tilted)
    if tm.sigma == 0:
        return GridFunction.dirac(grid)
    r = tm.g_rate
    return GridFunction.from_density(grid, lambda y: r * np.exp(-r * y))


def h_density(model_or_tilted, grid: Grid) -> GridFunction:
    """Defective law of the overshoot over the running supremum at the first jump record.

    Density ``N_Phi(u) / c~``; total mass ``rho~``.
    """
    tm = _as_tilted(model_or_tilted)
    return GridFunction.from_density(grid, lambda u: tm.tilted_tail(u) / tm.c_tilde)


def overshoot_law_at_tau(model_or_tilted, grid: Grid) -> GridFunction:
    """Defective law of ``Y_tau`` (``H * G``), ``tau`` the first jump record from 0."""
    tm = _as_tilted(model_or_tilted)
    h = h_density(tm, grid)
    if tm.sigma == 0:
        return h
    r = tm.g_rate
    return convolve_exponential(h, r, r)


def discounted_overshoot_law(tm: TiltedModel, grid: Grid) -> GridFunction:
    """``e^{Phi u} (H~ * G~)(du) = E[e^{-q tau}; Y_tau in du, tau < inf]``.

    Built directly from the bounded pieces ``e^{Phi u} H~(du)`` and
    ``e^{Phi u} G~(du)`` so nothing exponentially large is formed.
    Its mass is the Laplace transform of the first jump-record time.
    """
    measure = tm.base.measure
    phi = tm.phi_q
    h_q = GridFunction.from_density(grid, lambda u: measure.discounted_tail(u, phi) / tm.c_tilde)
    if tm.sigma == 0:
        return h_q
    r = tm.g_rate
    return convolve_exponential(h_q, r, r - phi)
