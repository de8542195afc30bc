"""Risk model primitives: Levy measures of the claims subordinator, Laplace
exponents and the right inverse of the Laplace exponent.

The surplus is ``R_t = x + c t - S_t + sigma B_t`` where ``S`` is a driftless
subordinator with Levy measure ``nu``.  Every downstream formula consumes the
measure only through tail-type primitives, which is what
:class:`LevyMeasureSpec` exposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special


# smaller positive volatilities overflow the ladder-height rate 2c / sigma^2
SIGMA_MIN = 1e-100


class ModelError(ValueError):
    """Invalid model parameters (non-finite, non-positive, net profit violated)."""


def _check_finite(**params: float) -> None:
    for name, value in params.items():
        if not np.isfinite(value):
            raise ModelError(f"{name} must be finite, got {value!r}")


def _check_positive(**params: float) -> None:
    _check_finite(**params)
    for name, value in params.items():
        if value <= 0:
            raise ModelError(f"{name} must be > 0, got {value!r}")


class LevyMeasureSpec:
    """Levy measure of the claims subordinator.

    Use the constructors :meth:`exponential`, :meth:`gamma`, :meth:`uniform`
    and :meth:`tabulated`.  All methods are vectorised over ``y``.

    Instances hash by identity so that they can key computation caches.
    """

    kind: str

    def __init__(self, kind: str, params: dict[str, float], table=None):
        self.kind = kind
        self.params = dict(params)
        self._table = table

    # -- constructors ---------------------------------------------------
    @classmethod
    def exponential(cls, lam: float, mu: float) -> "LevyMeasureSpec":
        """Compound Poisson, rate ``lam``, Exp(``mu``) claim sizes."""
        _check_positive(lam=lam, mu=mu)
        return cls("compound_poisson_exponential", {"lam": float(lam), "mu": float(mu)})

    @classmethod
    def gamma(cls, lam: float, shape: float, rate: float) -> "LevyMeasureSpec":
        """Compound Poisson, rate ``lam``, Gamma(``shape``, ``rate``) claim sizes."""
        _check_positive(lam=lam, shape=shape, rate=rate)
        return cls(
            "compound_poisson_gamma",
            {"lam": float(lam), "shape": float(shape), "rate": float(rate)},
        )

    @classmethod
    def uniform(cls, lam: float, a: float, b: float) -> "LevyMeasureSpec":
        """Compound Poisson, rate ``lam``, Uniform(``a``, ``b``) claim sizes."""
        _check_positive(lam=lam, b=b)
        _check_finite(a=a)
        if not 0 <= a < b:
            raise ModelError(f"uniform claims need 0 <= a < b, got a={a}, b={b}")
        return cls("compound_poisson_uniform", {"lam": float(lam), "a": float(a), "b": float(b)})

    @classmethod
    def tabulated(cls, y, tail) -> "LevyMeasureSpec":
        """Measure given by samples of its tail ``nu(y, inf)`` on an increasing grid.

        The grid must start at 0 and the tail must be nonincreasing; it is
        treated as zero beyond the last grid point.  Density, integrated tail
        and tilted tail are derived with the trapezoid rule on the table.
        """
        y = np.asarray(y, dtype=float)
        tail = np.asarray(tail, dtype=float)
        if y.ndim != 1 or y.shape != tail.shape or y.size < 3:
            raise ModelError("tabulated tail needs matching 1-d arrays with >= 3 points")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(tail))):
            raise ModelError("tabulated tail contains non-finite values")
        if y[0] != 0.0 or np.any(np.diff(y) <= 0):
            raise ModelError("tabulated grid must start at 0 and be strictly increasing")
        if np.any(tail < 0) or np.any(np.diff(tail) > 0):
            raise ModelError("tabulated tail must be nonnegative and nonincreasing")
        if tail[0] <= 0:
            raise ModelError("tabulated tail is identically zero")
        # integrated tail from the right: I(y_k) = int_{y_k}^{y_end} N
        seg = 0.5 * (tail[1:] + tail[:-1]) * np.diff(y)
        itail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        dens = -np.gradient(tail, y)
        dens = np.clip(dens, 0.0, None)
        return cls(
            "tabulated",
            {"lam": float(tail[0]), "y_max": float(y[-1])},
            table=(y, tail, itail, dens),
        )

    # -- primitives -----------------------------------------------------
    @property
    def is_compound_poisson_parametric(self) -> bool:
        return self.kind != "tabulated"

    @property
    def lam(self) -> float:
        """Total mass ``nu(0, inf)`` (claim arrival rate for compound Poisson)."""
        return self.params["lam"]

    def density(self, y):
        y = np.asarray(y, dtype=float)
        p = self.params
        if self.kind == "compound_poisson_exponential":
            return np.where(y >= 0, p["lam"] * p["mu"] * np.exp(-p["mu"] * np.maximum(y, 0)), 0.0)
        if self.kind == "compound_poisson_gamma":
            k, r = p["shape"], p["rate"]
            yy = np.maximum(y, 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                logd = k * math.log(r) + (k - 1) * np.log(yy) - r * yy - special.gammaln(k)
                out = p["lam"] * np.exp(logd)
            return np.where(y > 0, out, 0.0)
        if self.kind == "compound_poisson_uniform":
            a, b = p["a"], p["b"]
            return np.where((y > a) & (y < b), p["lam"] / (b - a), 0.0)
        ty, _, _, td = self._table
        return np.interp(y, ty, td, left=0.0, right=0.0)

    def tail(self, y):
        """``N(y) = nu(y, inf)``."""
        y = np.asarray(y, dtype=float)
        p = self.params
        yy = np.maximum(y, 0.0)
        if self.kind == "compound_poisson_exponential":
            return p["lam"] * np.exp(-p["mu"] * yy)
        if self.kind == "compound_poisson_gamma":
            return p["lam"] * special.gammaincc(p["shape"], p["rate"] * yy)
        if self.kind == "compound_poisson_uniform":
            a, b = p["a"], p["b"]
            return p["lam"] * np.clip((b - yy) / (b - a), 0.0, 1.0)
        ty, tt, _, _ = self._table
        return np.interp(yy, ty, tt, right=0.0)

    def integrated_tail(self, y):
        """``I(y) = int_y^inf N(s) ds = int (s - y)^+ nu(ds)``."""
        y = np.asarray(y, dtype=float)
        p = self.params
        yy = np.maximum(y, 0.0)
        if self.kind == "compound_poisson_exponential":
            return p["lam"] * np.exp(-p["mu"] * yy) / p["mu"]
        if self.kind == "compound_poisson_gamma":
            k, r = p["shape"], p["rate"]
            return p["lam"] * (k / r * special.gammaincc(k + 1, r * yy) - yy * special.gammaincc(k, r * yy))
        if self.kind == "compound_poisson_uniform":
            a, b = p["a"], p["b"]
            lo = np.maximum(yy, a)
            # int_{lo}^{b} (s - y) ds / (b - a)
            val = ((b - yy) ** 2 - (lo - yy) ** 2) / (2 * (b - a))
            return p["lam"] * np.where(yy < b, val, 0.0)
        ty, tt, ti, _ = self._table
        # linear interpolation of N inside the cell containing y
        idx = np.clip(np.searchsorted(ty, yy, side="right") - 1, 0, ty.size - 2)
        y0, y1 = ty[idx], ty[idx + 1]
        n0, n1 = tt[idx], tt[idx + 1]
        ny = n0 + (n1 - n0) * (yy - y0) / (y1 - y0)
        partial = 0.5 * (ny + n1) * (y1 - yy)
        return np.where(yy >= ty[-1], 0.0, partial + ti[idx + 1])

    def tilted_tail(self, y, theta: float):
        """``N_theta(y) = int_(y, inf) e^{-theta s} nu(ds)``."""
        y = np.asarray(y, dtype=float)
        if theta == 0:
            return self.tail(y)
        return np.exp(-theta * np.maximum(y, 0.0)) * self.discounted_tail(y, theta)

    def discounted_tail(self, y, theta: float):
        """``e^{theta y} N_theta(y) = int_(y, inf) e^{-theta (s - y)} nu(ds)``.

        Bounded by ``N(y)``; evaluated without forming ``e^{theta y}``.
        """
        y = np.asarray(y, dtype=float)
        if theta < 0:
            raise ModelError("tilt parameter must be >= 0")
        p = self.params
        yy = np.maximum(y, 0.0)
        if theta == 0:
            return self.tail(y)
        if self.kind == "compound_poisson_exponential":
            mu = p["mu"]
            return p["lam"] * mu / (mu + theta) * np.exp(-mu * yy)
        if self.kind == "compound_poisson_gamma":
            k, r = p["shape"], p["rate"]
            q = special.gammaincc(k, (r + theta) * yy)
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                out = p["lam"] * (r / (r + theta)) ** k * np.exp(theta * yy + np.log(q))
            return np.where(q > 0, out, 0.0)
        if self.kind == "compound_poisson_uniform":
            a, b = p["a"], p["b"]
            lo = np.maximum(yy, a)
            val = (np.exp(-theta * (lo - yy)) - np.exp(-theta * (b - yy))) / theta
            return p["lam"] / (b - a) * np.where(yy < b, val, 0.0)
        # tabulated: integrate by parts, e^{th y} N_th(y) = N(y) - th int_y^inf e^{-th (s-y)} N(s) ds
        ty, tt, _, _ = self._table
        out = np.empty_like(yy)
        for i, yi in np.ndenumerate(yy):
            if yi >= ty[-1]:
                out[i] = 0.0
                continue
            s = np.concatenate([[yi], ty[ty > yi]])
            ns = np.interp(s, ty, tt)
            out[i] = ns[0] - theta * integrate.trapezoid(np.exp(-theta * (s - yi)) * ns, s)
        return np.clip(out, 0.0, None)

    @property
    def mean(self) -> float:
        """``E[S_1] = int y nu(dy)``."""
        p = self.params
        if self.kind == "compound_poisson_exponential":
            return p["lam"] / p["mu"]
        if self.kind == "compound_poisson_gamma":
            return p["lam"] * p["shape"] / p["rate"]
        if self.kind == "compound_poisson_uniform":
            return p["lam"] * 0.5 * (p["a"] + p["b"])
        return float(self._table[2][0])

    def tilted_mean(self, theta: float) -> float:
        """``int y e^{-theta y} nu(dy)``."""
        if theta == 0:
            return self.mean
        p = self.params
        if self.kind == "compound_poisson_exponential":
            return p["lam"] * p["mu"] / (p["mu"] + theta) ** 2
        if self.kind == "compound_poisson_gamma":
            k, r = p["shape"], p["rate"]
            return p["lam"] * k * r**k / (r + theta) ** (k + 1)
        if self.kind == "compound_poisson_uniform":
            a, b = p["a"], p["b"]
            # int_a^b y e^{-th y} dy
            def prim(s):
                return -np.exp(-theta * s) * (theta * s + 1) / theta**2
            return p["lam"] / (b - a) * float(prim(b) - prim(a))
        ty, _, _, _ = self._table
        return float(integrate.trapezoid(self.tilted_tail(ty, theta), ty))

    def laplace_exponent(self, alpha: float) -> float:
        """``psi_S(alpha) = int (e^{alpha y} - 1) nu(dy)`` for ``alpha <= 0``."""
        if alpha > 0:
            raise ModelError(f"psi_S is only evaluated for alpha <= 0, got {alpha}")
        if alpha == 0:
            return 0.0
        p = self.params
        lam = p["lam"]
        if self.kind == "compound_poisson_exponential":
            return lam * (p["mu"] / (p["mu"] - alpha) - 1.0)
        if self.kind == "compound_poisson_gamma":
            return lam * ((p["rate"] / (p["rate"] - alpha)) ** p["shape"] - 1.0)
        if self.kind == "compound_poisson_uniform":
            a, b = p["a"], p["b"]
            mgf = (math.exp(alpha * b) - math.exp(alpha * a)) / (alpha * (b - a))
            return lam * (mgf - 1.0)
        # by parts: int (e^{a y} - 1) nu(dy) = a int e^{a y} N(y) dy
        ty, tt, _, _ = self._table
        return float(alpha * integrate.trapezoid(np.exp(alpha * ty) * tt, ty))

    def cutoff(self, rel: float = 1e-14) -> float:
        """Smallest ``y`` with ``N(y) <= rel * N(0)`` (capped at 50 mean-claim scales)."""
        p = self.params
        if self.kind == "compound_poisson_uniform":
            return p["b"]
        if self.kind == "tabulated":
            return p["y_max"]
        scale = self.mean / self.lam
        cap = 50.0 * scale
        target = rel * self.lam
        if float(self.tail(cap)) > target:
            return cap
        return float(optimize.brentq(lambda s: float(self.tail(s)) - target, 0.0, cap, xtol=1e-12))

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density is not smooth."""
        if self.kind == "compound_poisson_uniform":
            return (self.params["a"], self.params["b"])
        return ()

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"LevyMeasureSpec({self.kind}, {args})"


@dataclass(frozen=True)
class LevyModel:
    """Brownian-perturbed subordinator risk model.

    Parameters
    ----------
    c : float
        Premium rate, ``c > 0``.
    sigma : float
        Volatility of the Brownian perturbation, ``sigma >= 0``.
    measure : LevyMeasureSpec
        Levy measure of the claims subordinator.
    """

    c: float
    sigma: float
    measure: LevyMeasureSpec

    def __post_init__(self):
        _check_positive(c=self.c)
        _check_finite(sigma=self.sigma)
        if self.sigma < 0:
            raise ModelError(f"sigma must be >= 0, got {self.sigma}")
        if 0 < self.sigma < SIGMA_MIN:
            raise ModelError(f"sigma must be 0 or at least {SIGMA_MIN:g}, got {self.sigma}")
        if not self.measure.mean < self.c:
            raise ModelError(
                f"net profit condition fails: E[S_1] = {self.measure.mean:g} >= c = {self.c:g}"
            )

    @property
    def rho(self) -> float:
        return rho(self)


def psi_subordinator(model: LevyModel, alpha: float) -> float:
    """Laplace exponent of the claims subordinator, ``alpha <= 0``."""
    return model.measure.laplace_exponent(alpha)


def psi(model: LevyModel, beta: float) -> float:
    """Laplace exponent of ``X = ct - S + sigma B``, ``beta >= 0``."""
    if beta < 0:
        raise ModelError(f"psi is only evaluated for beta >= 0, got {beta}")
    return model.c * beta + model.measure.laplace_exponent(-beta) + 0.5 * model.sigma**2 * beta**2


def psi_prime(model: LevyModel, beta: float) -> float:
    """Derivative of :func:`psi`; ``c - int y e^{-beta y} nu(dy) + sigma^2 beta``."""
    return model.c - model.measure.tilted_mean(beta) + model.sigma**2 * beta


def phi_inverse(model: LevyModel, q: float) -> float:
    """Right inverse ``Phi(q) = sup{beta >= 0 : psi(beta) = q}``."""
    if q < 0 or not np.isfinite(q):
        raise ModelError(f"q must be finite and >= 0, got {q}")
    if q == 0:
        # psi'(0+) = c - E[S_1] > 0, so 0 is the largest root
        return 0.0
    # psi is convex with psi'(0) = c - E S_1 > 0, so the root is at most q / psi'(0)
    hi = q / psi_prime(model, 0.0)
    while psi(model, hi) < q:
        hi *= 2.0
    root = optimize.brentq(
        lambda b: psi(model, max(b, 0.0)) - q, 0.0, hi, xtol=hi * 1e-17, rtol=4 * np.finfo(float).eps, maxiter=500
    )
    # one Newton polish; psi is convex and increasing here
    d = psi_prime(model, root)
    if d > 0:
        cand = root - (psi(model, root) - q) / d
        if abs(psi(model, cand) - q) < abs(psi(model, root) - q):
            root = cand
    return float(root)


def rho(model: LevyModel) -> float:
    """``E[S_1] / c``."""
    return model.measure.mean / model.c
