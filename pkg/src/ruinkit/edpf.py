"""Gerber-Shiu penalty functions and their extension to every later jump record.

Penalty arguments follow one convention throughout:

* ``first(surplus_prior, deficit)`` is charged at ruin, with
  ``surplus_prior = x - Y_{tau_x-}`` and ``deficit = Y_{tau_x} - x``;
* ``F(level_before, level_after)`` is charged at each later jump record, with
  the running supremum of ``Y`` before and after the jump.

All penalty callables must accept numpy arrays.
"""

from __future__ import annotations

import math
import re
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal

from .edvci import _discounted_tail_transform, xi
from .grid import Grid, GridFunction, convolve, geometric_convolution_series
from .levy_model import LevyModel, phi_inverse
from .scale import convolve_f1, default_grid, f1, scale_function, scale_parts
from .tilt import discounted_overshoot_law, tilt_model

FirstPenalty = Callable[[np.ndarray, np.ndarray], np.ndarray]
RecordPenalty = Callable[[np.ndarray, np.ndarray], np.ndarray]


class PenaltyError(ValueError):
    """A penalty violates the declared contract."""


@dataclass(frozen=True)
class PenaltySpec:
    """Penalties at ruin and at the later jump records.

    ``subsequent[k]`` is charged at the ``(k + 2)``-th record (ruin being
    the first).  Past the end of the list ``tail`` decides: ``"zero"`` stops
    charging, ``"repeat"`` keeps applying the last entry.  ``bound`` must
    dominate every penalty value; it drives the truncation estimate.
    """

    first: FirstPenalty
    subsequent: tuple[RecordPenalty, ...] = ()
    tail: str = "zero"
    bound: float = math.inf
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.tail not in ("zero", "repeat"):
            raise PenaltyError(f"tail rule must be 'zero' or 'repeat', got {self.tail!r}")
        if self.tail == "repeat" and not self.subsequent:
            raise PenaltyError("a repeating tail needs at least one subsequent penalty")
        object.__setattr__(self, "subsequent", tuple(self.subsequent))

    @classmethod
    def stationary(cls, first: FirstPenalty, every: RecordPenalty, bound: float = math.inf, name: str = "custom"):
        return cls(first, (every,), "repeat", bound, name)

    @property
    def has_records(self) -> bool:
        return bool(self.subsequent)

    def record_penalty(self, n: int) -> RecordPenalty | None:
        """Penalty for the ``n``-th record (``n >= 2``), or None if it is zero."""
        k = n - 2
        if k < len(self.subsequent):
            return self.subsequent[k]
        return self.subsequent[-1] if self.tail == "repeat" else None

    def validate(self, scale: float = 10.0, samples: int = 257, seed: int = 0) -> None:
        """Check ``first(., 0) = 0``, nonnegativity and the declared bound on a sample."""
        rng = np.random.default_rng(seed)
        a = np.concatenate([np.linspace(0.0, scale, samples), rng.uniform(0.0, scale, samples)])
        b = np.concatenate([np.linspace(scale, 0.0, samples), rng.uniform(0.0, scale, samples)])
        zero = np.asarray(self.first(a, np.zeros_like(a)), dtype=float)
        if np.any(np.abs(zero) > 0):
            raise PenaltyError("the penalty at ruin must vanish for zero deficit")
        checks = [np.asarray(self.first(a, b), dtype=float)]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        checks.extend(np.asarray(f(lo, hi), dtype=float) for f in self.subsequent)
        for vals in checks:
            if np.any(~np.isfinite(vals)) or np.any(vals < 0):
                raise PenaltyError("penalties must be finite and nonnegative")
            if np.any(vals > self.bound * (1 + 1e-12)):
                raise PenaltyError(f"penalty exceeds its declared bound {self.bound}")


# named penalties -----------------------------------------------------------------

def _deficit(surplus_prior, deficit):
    return np.asarray(deficit, dtype=float) * np.ones_like(surplus_prior, dtype=float)


def _indicator(surplus_prior, deficit):
    return (np.asarray(deficit) > 0).astype(float) * np.ones_like(surplus_prior, dtype=float)


def _capped_deficit(cap):
    def w(surplus_prior, deficit):
        return np.minimum(np.asarray(deficit, dtype=float), cap) * np.ones_like(surplus_prior, dtype=float)

    return w


def _increment(level_before, level_after):
    return np.asarray(level_after, dtype=float) - level_before


def _capped_increment(cap):
    def f(level_before, level_after):
        return np.minimum(np.asarray(level_after, dtype=float) - level_before, cap)

    return f


_FIRST = {"deficit": (0, _deficit), "indicator": (0, _indicator), "capped_deficit": (1, _capped_deficit)}
_RECORD = {"increment": (0, _increment), "capped_increment": (1, _capped_increment)}
_NAME = re.compile(r"^([a-z_]+)(?:\(([^)]*)\)|:(.*))?$")


def _parse_one(token: str, table: dict) -> tuple[Callable, float | None, str]:
    m = _NAME.match(token.strip())
    if not m or m.group(1) not in table:
        raise PenaltyError(f"unknown penalty {token!r}; choose from {sorted(table)}")
    name = m.group(1)
    raw = m.group(2) if m.group(2) is not None else m.group(3)
    params = [float(p) for p in raw.split(",") if p.strip()] if raw else []
    nparams, maker = table[name]
    if len(params) != nparams:
        raise PenaltyError(f"penalty {name!r} takes {nparams} parameter(s), got {len(params)}")
    if nparams:
        cap = params[0]
        if not (cap > 0 and math.isfinite(cap)):
            raise PenaltyError(f"penalty cap must be positive and finite, got {cap}")
        return maker(cap), cap, token.strip()
    bound = 1.0 if name == "indicator" else None
    return maker, bound, token.strip()


def named_penalty(spec: str) -> PenaltySpec:
    """Build a penalty from ``"first[+record]"``, e.g. ``"capped_deficit:2+capped_increment:2"``.

    Names at ruin: ``deficit``, ``indicator``, ``capped_deficit:K``.
    Names for every later record: ``increment``, ``capped_increment:K``.
    Parameters may also be written as ``name(K)``.
    """
    parts = spec.split("+")
    if len(parts) > 2:
        raise PenaltyError(f"at most one record penalty may follow the ruin penalty: {spec!r}")
    first, b1, _ = _parse_one(parts[0], _FIRST)
    if len(parts) == 1:
        return PenaltySpec(first, (), "zero", b1 if b1 is not None else math.inf, spec)
    rec, b2, _ = _parse_one(parts[1], _RECORD)
    bound = max(b1 if b1 is not None else math.inf, b2 if b2 is not None else math.inf)
    return PenaltySpec.stationary(first, rec, bound, spec)


# building blocks -----------------------------------------------------------------

def _grid_and_index(model: LevyModel, q: float, x: float, grid: Grid | None, strict: bool = True):
    if x < 0 or (strict and x == 0):
        raise ValueError(f"initial surplus must be {'>' if strict else '>='} 0, got {x}")
    g = grid if grid is not None else default_grid(model, q, x)
    return g, g.index(x)


def penalty_rate(model: LevyModel, w: FirstPenalty, grid: Grid) -> np.ndarray:
    """``g(v) = int_0^inf w(v, d) nu(v + d) dd`` at every grid point ``v``.

    ``v`` is the surplus just before the claim, ``d`` the resulting deficit.
    """
    measure = model.measure
    v = grid.points
    upper = measure.cutoff(1e-16)
    pts = [p for p in measure.breakpoints() if 0 < p < upper]

    def integrand(d):
        return np.asarray(w(v, np.full_like(v, d)), dtype=float) * measure.density(v + d)

    res, _ = integrate.quad_vec(integrand, 0.0, upper, epsabs=1e-14, epsrel=1e-11, points=pts or None, limit=2000)
    return res


def f2(model: LevyModel, q: float, penalty_first: FirstPenalty, grid: Grid) -> GridFunction:
    """``f2(x) = e^{Phi x} int_x^inf e^{-Phi v} g(v) dv`` with ``g`` from :func:`penalty_rate`."""
    phi = phi_inverse(model, q)
    vals = _discounted_tail_transform(grid, phi, penalty_rate(model, penalty_first, grid))
    return GridFunction(grid, 0.0, vals)


def classic_edpf(model: LevyModel, q: float, x: float, w: FirstPenalty, grid: Grid | None = None) -> float:
    """``E[e^{-q tau_x} w(x - Y_{tau_x-}, Y_{tau_x} - x); tau_x < inf] = (f1 * f2)(x)``."""
    g, i = _grid_and_index(model, q, x, grid, strict=False)
    return float(convolve_f1(model, q, g, f2(model, q, w, g).values)[i])


def edpf_scale_form(model: LevyModel, q: float, x: float, w: FirstPenalty, grid: Grid | None = None) -> float:
    """The same value through the killed resolvent ``e^{-Phi v} W^(q)(x) - W^(q)(x - v)``."""
    g, i = _grid_and_index(model, q, x, grid, strict=False)
    phi = phi_inverse(model, q)
    rate = penalty_rate(model, w, g)
    wq = scale_function(model, q, g).values
    first = wq[i] * float(np.dot(g.trapezoid_weights(), np.exp(-phi * g.points) * rate))
    if i == 0:
        return first
    wts = g.trapezoid_weights(i)
    second = float(np.dot(wts, wq[i::-1] * rate[: i + 1]))
    return float(first - second)


def discounted_deficit_law(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> GridFunction:
    """``E[e^{-q tau_x}; Y_{tau_x} - x in dd, tau_x < inf]`` in deficit coordinates.

    The atom at 0 is the creeping part ``sigma^2 / 2 * f1(x)``.  The result
    has ``origin = 0``; add ``x`` to read it as a law of ``Y_{tau_x}``.
    """
    g, i = _grid_and_index(model, q, x, grid, strict=False)
    phi = phi_inverse(model, q)
    measure = model.measure
    d = g.points
    wq = scale_function(model, q, g).values
    dens = wq[i] * measure.discounted_tail(d, phi)
    if i > 0:
        # int_0^x W(x - v) nu(d + v) dv as a correlation over the grid
        ext = measure.density(np.arange(g.n + i + 1) * g.delta)
        kern = g.trapezoid_weights(i) * wq[i::-1]
        dens = dens - signal.correlate(ext, kern, mode="valid", method="auto")[: g.size]
    dens = np.clip(dens, 0.0, None)
    atom = 0.0
    if model.sigma > 0:
        atom = 1.0 if i == 0 else 0.5 * model.sigma**2 * float(f1(model, q, g).values[i])
    return GridFunction(g, atom, dens)


def overshoot_dist_Tx(model: LevyModel, q: float, x: float, grid: Grid | None = None) -> GridFunction:
    """Law of ``Y_{tau_x}`` on ``{tau_x < inf}`` under the measure tilted at ``Phi(q)``.

    Supported on ``[x, inf)``: the returned measure has ``origin = x``; the
    atom is the creeping probability.  Its mass is the tilted ruin probability.
    """
    if x <= 0:
        raise ValueError(f"initial surplus must be > 0, got {x}")
    law = discounted_deficit_law(model, q, x, grid)
    phi = phi_inverse(model, q)
    tilted = law.weighted(lambda d: np.exp(-phi * (x + d)))
    return GridFunction(tilted.grid, tilted.atom0, tilted.values, origin=x)


def n_distribution(model: LevyModel, q: float, x: float, n: int, grid: Grid | None = None) -> float:
    """Tilted probability of ruin followed by exactly ``n`` further jump records.

    Equals ``(1 - rho~) rho~^n P~(tau_x < inf)``; with ``q = 0`` it is the
    plain probability.
    """
    if n < 0:
        raise ValueError(f"record count must be >= 0, got {n}")
    g, i = _grid_and_index(model, q, x, grid)
    ruin = 1.0 - scale_parts(model, q, g).survival[i]
    return n_distribution_normalized(model, q, n) * ruin


def n_distribution_normalized(model: LevyModel, q: float, n: int) -> float:
    """``(1 - rho~) rho~^n``: the record-count law given ruin."""
    if n < 0:
        raise ValueError(f"record count must be >= 0, got {n}")
    rt = tilt_model(model, q).rho_tilde
    return (1.0 - rt) * rt**n


# extended penalty ------------------------------------------------------------------

@dataclass(frozen=True)
class ExtendedEdpfResult:
    value: float
    at_ruin: float
    records: tuple[float, ...]
    truncation_bound: float


def _support_end(f: GridFunction, rel: float = 1e-16) -> int:
    """Last index carrying more than ``rel`` of the total mass in its tail."""
    cum = f.cumulative()
    total = cum[-1]
    if total <= 0:
        return 0
    tail = total - cum
    idx = np.nonzero(tail > rel * total)[0]
    return int(min(f.grid.n, (idx[-1] + 1) if idx.size else 0))


def _record_charge(F: RecordPenalty, start: GridFunction, jump: GridFunction, x: float, chunk: int = 256) -> float:
    """``int int F(x + d, x + d + u) jump(du) start(dd)``."""
    grid = start.grid
    nd = _support_end(start)
    nu = _support_end(jump)
    d = grid.points[: nd + 1]
    u = grid.points[: nu + 1]
    wd = start.values[: nd + 1] * grid.trapezoid_weights(nd)
    wd[0] += start.atom0
    wu = jump.values[: nu + 1] * grid.trapezoid_weights(nu)
    wu[0] += jump.atom0
    total = 0.0
    for lo in range(0, d.size, chunk):
        dd = d[lo : lo + chunk, None]
        vals = np.asarray(F(x + dd, x + dd + u[None, :]), dtype=float)
        total += float(wd[lo : lo + chunk] @ (vals @ wu))
    return total


def extended_edpf(
    model: LevyModel, q: float, x: float, penalty: PenaltySpec, grid: Grid | None = None, tol: float = 1e-10
) -> ExtendedEdpfResult:
    """Expected discounted sum of penalties at ruin and at every later jump record.

    The ``n``-th record (``n >= 2``) is reached from the deficit law at ruin
    through ``n - 2`` further discounted record steps, each distributed as
    ``E[e^{-q tau}; Y_tau in du]`` from a fresh start.
    """
    g, _ = _grid_and_index(model, q, x, grid)
    at_ruin = classic_edpf(model, q, x, penalty.first, g)
    if not penalty.has_records:
        return ExtendedEdpfResult(at_ruin, at_ruin, (), 0.0)
    xv = xi(model, q)
    if xv >= 1:
        raise ArithmeticError(f"record transform xi = {xv} >= 1; the record series diverges")
    step = discounted_overshoot_law(tilt_model(model, q), g)
    state = discounted_deficit_law(model, q, x, g)
    charges = []
    n = 2
    # explicit part of the list
    while n - 2 < len(penalty.subsequent) - (1 if penalty.tail == "repeat" else 0):
        F = penalty.record_penalty(n)
        charges.append(_record_charge(F, state, step, x))
        state = convolve(state, step)
        n += 1
    bound = 0.0
    if penalty.tail == "repeat":
        F = penalty.subsequent[-1]
        step_mass = step.mass()
        renewal = geometric_convolution_series(step.scaled(1.0 / step_mass), step_mass, state, tol=tol)
        charges.append(_record_charge(F, renewal.function, step, x))
        if math.isfinite(penalty.bound):
            bound = penalty.bound * step_mass * renewal.tail_bound
        else:
            bound = math.inf
    return ExtendedEdpfResult(at_ruin + sum(charges), at_ruin, tuple(charges), bound)
