"""Exact-in-law path simulation of ``Y_t = -c t + S_t - sigma B_t``.

Paths advance in lockstep, one inter-claim interval per step.  Between
claims the Brownian part is handled with closed-form laws of Brownian
motion with drift:

* before ruin, whether and when ``Y`` creeps over ``x`` (first-passage
  probability and inverse-Gaussian passage time) and otherwise the endpoint
  conditioned on staying below ``x``;
* after ruin, the endpoint and the bridge maximum, which moves the running
  supremum against which the next claim is compared.

Ruin is the first time ``Y > x``.  Every later claim that lifts ``Y``
strictly above its running supremum is a jump record; the penalty and
injection estimators are sums over these records.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .levy_model import LevyModel, ModelError
from .rng import CounterStream

EPS_DISC = 1e-6
SUBSTEP = 1e-3

# slots of the per-step counter; each slot yields two uniforms
_SLOT_CLOCK = 0  # inter-arrival time, claim size
_SLOT_DIFF = 1  # post-ruin endpoint and maximum, or pre-ruin passage decision and passage normal
_SLOT_PASS = 2  # passage uniform, conditioned endpoint
_SLOT_CREEP = 3  # endpoint and maximum of the segment after creeping
_SLOT_SUB = 16  # first slot used by the sub-stepping fallback


@dataclass(frozen=True)
class SimConfig:
    """What to simulate.

    ``t_max`` of None means a discount-driven horizon ``-ln(EPS_DISC) / q``.
    With ``start_ruined`` the path starts at ``Y = 0`` already past the
    barrier, so the first jump record from a fresh start is observed.
    """

    model: LevyModel
    x: float = 0.0
    q: float = 0.0
    paths: int = 100_000
    seed: int = 0
    t_max: float | None = None
    bridge_correction: bool = True
    start_ruined: bool = False
    max_records: int | None = None

    def __post_init__(self):
        if not self.model.measure.is_compound_poisson_parametric:
            raise ModelError("only parametric compound Poisson claims can be simulated")
        if self.paths < 1:
            raise ValueError(f"paths must be >= 1, got {self.paths}")
        if self.x < 0:
            raise ValueError(f"initial surplus must be >= 0, got {self.x}")
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        if self.t_max is None and self.q == 0:
            raise ValueError("q = 0 needs an explicit t_max")
        if self.t_max is not None and not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @property
    def horizon(self) -> float:
        if self.t_max is not None:
            return float(self.t_max)
        return -math.log(EPS_DISC) / self.q


@dataclass(frozen=True)
class Record:
    """A jump record after ruin.

    ``level_before`` is ``Y`` at the previous record (``Y`` at ruin for the
    first one); ``sup_before`` is the running supremum just before the jump,
    which exceeds ``level_before`` when the diffusion lifted it in between.
    """

    time: float
    level_before: float
    sup_before: float
    level_after: float

    @property
    def increment(self) -> float:
        return self.level_after - self.level_before


@dataclass(frozen=True)
class RuinPathRecord:
    """One trajectory: ruin data and the jump records after ruin."""

    ruined: bool
    ruin_time: float
    surplus_prior: float
    deficit: float
    ruin_by_jump: bool
    records: tuple[Record, ...] = field(default=())
    truncated: bool = True

    @property
    def N(self) -> int:
        """Records counted from ruin, ruin itself included when caused by a claim."""
        return len(self.records) + int(self.ruin_by_jump)


@dataclass
class SimulationBatch:
    """Column-wise output for a block of paths.

    ``rec_*`` arrays list the post-ruin jump records of all paths, grouped by
    path in time order; ``rec_path`` holds the path index of each record.
    """

    paths: np.ndarray
    ruined: np.ndarray
    ruin_time: np.ndarray
    surplus_prior: np.ndarray
    deficit: np.ndarray
    by_jump: np.ndarray
    rec_path: np.ndarray
    rec_time: np.ndarray
    rec_before: np.ndarray
    rec_sup: np.ndarray
    rec_after: np.ndarray
    horizon: float

    def record_counts(self) -> np.ndarray:
        return np.bincount(self.rec_path - self.paths[0], minlength=self.paths.size) if self.paths.size else np.zeros(0)

    def path(self, k: int) -> RuinPathRecord:
        sel = self.rec_path == self.paths[k]
        recs = tuple(
            Record(float(t), float(b), float(m), float(a))
            for t, b, m, a in zip(self.rec_time[sel], self.rec_before[sel], self.rec_sup[sel], self.rec_after[sel])
        )
        return RuinPathRecord(
            bool(self.ruined[k]),
            float(self.ruin_time[k]),
            float(self.surplus_prior[k]),
            float(self.deficit[k]),
            bool(self.by_jump[k]),
            recs,
        )


# claim laws ----------------------------------------------------------------------

def _claim_sampler(model: LevyModel) -> Callable[[np.ndarray], np.ndarray]:
    m = model.measure
    p = m.params
    if m.kind == "compound_poisson_exponential":
        return lambda u: -np.log(u) / p["mu"]
    if m.kind == "compound_poisson_gamma":
        return lambda u: special.gammainccinv(p["shape"], u) / p["rate"]
    if m.kind == "compound_poisson_uniform":
        return lambda u: p["a"] + (p["b"] - p["a"]) * u
    raise ModelError(f"cannot sample claims of kind {m.kind!r}")


# Brownian pieces -----------------------------------------------------------------

def _bridge_max(a, b, var, u):
    """Maximum of a Brownian bridge from ``a`` to ``b`` with total variance ``var``, by inversion."""
    k = -0.5 * var * np.log(u)
    return 0.5 * (a + b + np.sqrt((a - b) ** 2 + 4.0 * k))


def _inverse_gaussian(mean, shape, z, u):
    """Michael-Schucany-Haas transform of a standard normal ``z`` and a uniform ``u``."""
    y = z * z
    my = mean * y
    root = np.sqrt(4.0 * mean * shape * y + my * my)
    x1 = mean + mean * (my - root) / (2.0 * shape)
    return np.where(u <= mean / (mean + x1), x1, mean * mean / x1)


def _endpoint_below(a, x, c, sigma, T, u, iters: int = 64):
    """Endpoint of ``a - c t - sigma B_t`` at ``T`` conditioned on staying below ``x`` on ``[0, T]``."""
    s = sigma * np.sqrt(T)
    refl = np.exp(-2.0 * c * (x - a) / sigma**2)

    def cdf(b):
        return special.ndtr((b - a + c * T) / s) - refl * special.ndtr((b - 2.0 * x + a + c * T) / s)

    target = u * cdf(x)
    lo = np.minimum(a - c * T - 40.0 * s, x - 1e-300)
    hi = np.asarray(x, dtype=float) + np.zeros_like(a)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# engine ------------------------------------------------------------------------

def simulate_batch(config: SimConfig, first_path: int = 0, count: int | None = None) -> SimulationBatch:
    """Simulate paths ``first_path, ..., first_path + count - 1``."""
    n = config.paths - first_path if count is None else count
    model = config.model
    c, sigma = model.c, model.sigma
    lam = model.measure.lam
    claim = _claim_sampler(model)
    stream = CounterStream(config.seed)
    horizon = config.horizon
    x = float(config.x)

    paths = np.arange(first_path, first_path + n, dtype=np.int64)
    t = np.zeros(n)
    y = np.zeros(n)
    ybar = np.zeros(n)
    last = np.zeros(n)  # level of the latest record, or of ruin
    ruined = np.zeros(n, dtype=bool)
    ruin_time = np.full(n, np.inf)
    prior = np.zeros(n)
    deficit = np.zeros(n)
    by_jump = np.zeros(n, dtype=bool)
    n_rec = np.zeros(n, dtype=np.int64)
    if config.start_ruined:
        ruined[:] = True
        ruin_time[:] = 0.0
        x = 0.0
    active = np.ones(n, dtype=bool)
    rec_chunks: list[tuple[np.ndarray, ...]] = []
    step = 0
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        pid = paths[idx]
        u_clock, u_claim = stream.uniforms(pid, step, _SLOT_CLOCK)
        dt = -np.log(u_clock) / lam
        room = horizon - t[idx]
        claim_in = dt <= room
        seg = np.minimum(dt, room)

        pre = ~ruined[idx]
        post = ~pre
        end = np.empty(idx.size)
        # post-ruin diffusion: endpoint and running supremum
        if np.any(post):
            p = np.nonzero(post)[0]
            a = y[idx[p]]
            if sigma > 0:
                if config.bridge_correction:
                    u1, u2 = stream.uniforms(pid[p], step, _SLOT_DIFF)
                    b = a - c * seg[p] + sigma * np.sqrt(seg[p]) * special.ndtri(u1)
                    m = _bridge_max(a, b, sigma**2 * seg[p], u2)
                else:
                    b, m = _substep_free(stream, pid[p], step, a, c, sigma, seg[p])
                ybar[idx[p]] = np.maximum(ybar[idx[p]], m)
                end[p] = b
            else:
                end[p] = a - c * seg[p]
        creep_now = np.zeros(idx.size, dtype=bool)
        if np.any(pre):
            p = np.nonzero(pre)[0]
            a = y[idx[p]]
            if sigma > 0:
                if config.bridge_correction:
                    hit, t_hit, b = _pre_ruin_bridge(stream, pid[p], step, a, x, c, sigma, seg[p])
                else:
                    hit, t_hit, b = _substep_barrier(stream, pid[p], step, a, x, c, sigma, seg[p])
                end[p] = b
                if np.any(hit):
                    h = p[hit]
                    gi = idx[h]
                    ruined[gi] = True
                    ruin_time[gi] = t[gi] + t_hit[hit]
                    prior[gi] = 0.0
                    deficit[gi] = 0.0
                    creep_now[h] = True
                    # remainder of the interval after creeping, started at the barrier
                    rest = np.maximum(seg[h] - t_hit[hit], 0.0)
                    u1, u2 = stream.uniforms(pid[h], step, _SLOT_CREEP)
                    bb = x - c * rest + sigma * np.sqrt(rest) * special.ndtri(u1)
                    mm = _bridge_max(np.full(h.size, x), bb, sigma**2 * rest, u2)
                    ybar[gi] = np.maximum(x, mm)
                    last[gi] = x
                    end[h] = bb
            else:
                end[p] = a - c * seg[p]

        # the claim at the end of the interval
        jump = np.where(claim_in, claim(u_claim), 0.0)
        after = end + jump
        gidx = idx
        y[gidx] = after
        t[gidx] = t[gidx] + seg

        newly = pre & ~creep_now & claim_in & (after > x)
        if np.any(newly):
            gi = gidx[newly]
            ruined[gi] = True
            ruin_time[gi] = t[gi]
            prior[gi] = x - end[newly]
            deficit[gi] = after[newly] - x
            by_jump[gi] = True
            ybar[gi] = after[newly]
            last[gi] = after[newly]

        was_post = (post | creep_now) & claim_in
        rec = was_post & (after > ybar[gidx])
        if np.any(rec):
            gi = gidx[rec]
            rec_chunks.append((paths[gi], t[gi].copy(), last[gi].copy(), ybar[gi].copy(), after[rec].copy()))
            ybar[gi] = after[rec]
            last[gi] = after[rec]
            n_rec[gi] += 1

        done = ~claim_in
        if config.max_records is not None:
            done |= n_rec[gidx] >= config.max_records
        active[gidx[done]] = False
        step += 1

    if rec_chunks:
        cols = [np.concatenate(z) for z in zip(*rec_chunks)]
        order = np.lexsort((cols[1], cols[0]))
        rec_path, rec_time, rec_before, rec_sup, rec_after = (col[order] for col in cols)
    else:
        rec_path = np.zeros(0, dtype=np.int64)
        rec_time = rec_before = rec_sup = rec_after = np.zeros(0)
    ruin_time[~ruined] = np.inf
    return SimulationBatch(
        paths, ruined, ruin_time, prior, deficit, by_jump, rec_path, rec_time, rec_before, rec_sup, rec_after, horizon
    )


def _pre_ruin_bridge(stream, pid, step, a, x, c, sigma, T):
    """Exact creeping check and endpoint for one interval below the barrier."""
    d = x - a
    u_hit, z_raw = stream.uniforms(pid, step, _SLOT_DIFF)
    u_ig, u_end = stream.uniforms(pid, step, _SLOT_PASS)
    reach = u_hit < np.exp(-2.0 * c * d / sigma**2)
    t_hit = np.full(a.size, np.inf)
    # started on the barrier: the diffusion crosses it immediately
    t_hit[d <= 0] = 0.0
    r = np.nonzero(reach & (d > 0))[0]
    if r.size:
        t_hit[r] = _inverse_gaussian(d[r] / c, d[r] ** 2 / sigma**2, special.ndtri(z_raw[r]), u_ig[r])
    hit = t_hit <= T
    b = np.empty(a.size)
    miss = np.nonzero(~hit)[0]
    if miss.size:
        b[miss] = _endpoint_below(a[miss], x, c, sigma, T[miss], u_end[miss])
    b[hit] = x
    return hit, t_hit, b


def _substep_paths(stream, pid, step, a, c, sigma, T):
    """Gaussian increments on a ``SUBSTEP`` grid; yields the running value after every substep."""
    k_max = int(np.ceil(np.max(T) / SUBSTEP)) if T.size else 0
    cur = a.copy()
    for k in range(k_max):
        h = np.clip(T - k * SUBSTEP, 0.0, SUBSTEP)
        u1, _ = stream.uniforms(pid, step, _SLOT_SUB + k)
        cur = cur - c * h + sigma * np.sqrt(h) * special.ndtri(u1)
        yield k, h, cur


def _substep_barrier(stream, pid, step, a, x, c, sigma, T):
    """Sub-stepped fallback for :func:`_pre_ruin_bridge` (crossings between substeps are missed)."""
    hit = np.zeros(a.size, dtype=bool)
    t_hit = np.full(a.size, np.inf)
    end = a.copy()
    for k, h, cur in _substep_paths(stream, pid, step, a, c, sigma, T):
        live = ~hit & (h > 0)
        end = np.where(live, cur, end)
        crossed = live & (cur > x)
        t_hit = np.where(crossed, k * SUBSTEP + h, t_hit)
        hit |= crossed
    return hit, t_hit, np.where(hit, x, end)


def _substep_free(stream, pid, step, a, c, sigma, T):
    m = a.copy()
    end = a.copy()
    for _, h, cur in _substep_paths(stream, pid, step, a, c, sigma, T):
        live = h > 0
        end = np.where(live, cur, end)
        m = np.where(live, np.maximum(m, cur), m)
    return end, m


def simulate(config: SimConfig, batch_size: int = 50_000) -> SimulationBatch:
    """All paths of ``config``; batching does not change any result."""
    parts = [
        simulate_batch(config, start, min(batch_size, config.paths - start))
        for start in range(0, config.paths, batch_size)
    ]
    if len(parts) == 1:
        return parts[0]
    cat = {name: np.concatenate([getattr(p, name) for p in parts]) for name in SimulationBatch.__dataclass_fields__ if name != "horizon"}
    return SimulationBatch(horizon=parts[0].horizon, **cat)


def simulate_path(config: SimConfig, path_index: int) -> RuinPathRecord:
    """One trajectory; identical to the same path inside any batch."""
    batch = simulate_batch(config, path_index, 1)
    rec = batch.path(0)
    truncated = config.max_records is None or len(rec.records) < config.max_records
    return RuinPathRecord(rec.ruined, rec.ruin_time, rec.surplus_prior, rec.deficit, rec.ruin_by_jump, rec.records, truncated)


# estimators ----------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    paths: int
    horizon_bias: float = 0.0

    def __iter__(self):
        return iter((self.value, self.se))

    def within(self, target: float, k: float = 3.0, rel: float = 0.0) -> bool:
        return abs(self.value - target) <= max(k * self.se, rel * abs(target))


def _mean_se(samples: np.ndarray) -> tuple[float, float]:
    n = samples.size
    mean = math.fsum(samples) / n
    se = float(np.std(samples, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    return mean, se


def _discount(q: float, times: np.ndarray) -> np.ndarray:
    return np.exp(-q * np.where(np.isfinite(times), times, 0.0)) * np.isfinite(times)


def _record_sums(batch: SimulationBatch, values: np.ndarray) -> np.ndarray:
    return np.bincount(batch.rec_path - batch.paths[0], weights=values, minlength=batch.paths.size)


def payoffs(batch: SimulationBatch, q: float, target: str, penalty=None, n: int | None = None) -> np.ndarray:
    """Per-path payoff of ``target`` (see :func:`estimate`)."""
    disc = _discount(q, batch.ruin_time)
    if target == "ruin_probability":
        return batch.ruined.astype(float)
    if target == "kappa":
        return disc
    if target == "varphi":
        return disc * batch.deficit
    if target == "classic_edpf":
        w = np.asarray(penalty.first(batch.surplus_prior, batch.deficit), dtype=float)
        return disc * np.where(batch.by_jump, w, 0.0)
    if target in ("xi", "delta"):
        first = np.full(batch.paths.size, np.inf)
        level = np.zeros(batch.paths.size)
        counts = batch.record_counts()
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]]) if counts.size else counts
        has = counts > 0
        first[has] = batch.rec_time[starts[has]]
        level[has] = batch.rec_after[starts[has]]
        d = _discount(q, first)
        return d if target == "xi" else d * level
    if target == "n_law":
        counts = batch.record_counts()
        return (batch.ruined & (counts == n)).astype(float)
    if target == "edvci":
        rec = _discount(q, batch.rec_time) * (batch.rec_after - batch.rec_before)
        return disc * batch.deficit + _record_sums(batch, rec)
    if target == "extended_edpf":
        at_ruin = payoffs(batch, q, "classic_edpf", penalty)
        counts = batch.record_counts()
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]]) if counts.size else counts
        # rank of each record after ruin: 2 for the first one
        rank = np.arange(batch.rec_path.size) - np.repeat(starts, counts) + 2
        vals = np.zeros(batch.rec_path.size)
        for r in np.unique(rank):
            F = penalty.record_penalty(int(r))
            if F is None:
                continue
            sel = rank == r
            vals[sel] = np.asarray(F(batch.rec_before[sel], batch.rec_after[sel]), dtype=float)
        return at_ruin + _record_sums(batch, _discount(q, batch.rec_time) * vals)
    raise ValueError(f"unknown target {target!r}")


TARGETS = ("ruin_probability", "kappa", "varphi", "classic_edpf", "xi", "delta", "n_law", "edvci", "extended_edpf")


def estimate(config: SimConfig, target: str, penalty=None, n: int | None = None) -> Estimate:
    """Monte Carlo estimate and standard error of an analytic target.

    ``xi`` and ``delta`` are observed from a fresh start at level 0, so
    ``config.x`` is ignored for them.  ``n_law`` needs ``n``;
    ``classic_edpf`` and ``extended_edpf`` need a penalty.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {TARGETS}")
    needs_q = target in ("kappa", "varphi", "xi", "delta", "edvci", "extended_edpf", "classic_edpf")
    if needs_q and config.q == 0 and config.t_max is None:
        raise ValueError(f"target {target!r} needs q > 0 or an explicit t_max")
    if target in ("xi", "delta"):
        cfg = SimConfig(config.model, 0.0, config.q, config.paths, config.seed, config.t_max,
                        config.bridge_correction, start_ruined=True, max_records=1)
    else:
        cfg = config
    if target == "n_law" and n is None:
        raise ValueError("n_law needs a record count n")
    if target in ("classic_edpf", "extended_edpf") and penalty is None:
        raise ValueError(f"{target} needs a penalty")
    batch = simulate(cfg)
    samples = payoffs(batch, cfg.q, target, penalty, n)
    value, se = _mean_se(samples)
    bias = 0.0
    if cfg.q > 0 and cfg.t_max is None:
        bias = float(np.max(np.abs(samples), initial=0.0)) * EPS_DISC
    return Estimate(value, se, cfg.paths, bias)


def estimate_many(config: SimConfig, targets: dict[str, dict]) -> dict[str, Estimate]:
    """Several targets from one set of simulated paths (``xi``/``delta`` excluded)."""
    batch = simulate(config)
    out = {}
    for name, opts in targets.items():
        kind = opts.get("target", name)
        if kind in ("xi", "delta"):
            raise ValueError("xi and delta need their own fresh-start simulation")
        value, se = _mean_se(payoffs(batch, config.q, kind, opts.get("penalty"), opts.get("n")))
        out[name] = Estimate(value, se, config.paths)
    return out


def record_count_frequencies(batch: SimulationBatch, n_max: int) -> np.ndarray:
    """Counts of ruined paths with ``0, 1, ..., n_max - 1`` post-ruin records and ``>= n_max``."""
    counts = batch.record_counts()[batch.ruined]
    return np.bincount(np.minimum(counts, n_max), minlength=n_max + 1)
