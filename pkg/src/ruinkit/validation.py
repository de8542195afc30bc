"""Analytic-versus-oracle acceptance suite (criteria 1 to 10)."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import edpf, edvci
from .levy_model import LevyMeasureSpec, LevyModel, phi_inverse, psi
from .mc_sim import SimConfig, estimate, record_count_frequencies, simulate
from .scale import default_grid, ruin_probability, scale_parts


def model_m1() -> LevyModel:
    """``c = 1.5``, no diffusion, unit-rate Exp(1) claims."""
    return LevyModel(1.5, 0.0, LevyMeasureSpec.exponential(1.0, 1.0))


def model_m2() -> LevyModel:
    """M1 plus unit volatility."""
    return LevyModel(1.5, 1.0, LevyMeasureSpec.exponential(1.0, 1.0))


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool = True
    details: list[dict] = field(default_factory=list)

    def check(self, ok: bool, **info) -> None:
        self.passed &= bool(ok)
        self.details.append({"ok": bool(ok), **info})

    def lines(self) -> list[str]:
        head = f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"
        body = [
            "    " + ("ok  " if d["ok"] else "BAD ") + " ".join(f"{k}={_fmt(v)}" for k, v in d.items() if k != "ok")
            for d in self.details
        ]
        return [head, *body]


def _mc(est, target: float, k: float = 3.0, rel: float = 0.0) -> dict:
    tol = max(k * est.se, rel * abs(target))
    return {"analytic": target, "mc": est.value, "se": est.se, "tol": tol, "ok_": abs(est.value - target) <= tol}


def _mc_check(res: CriterionResult, label: str, est, target: float, k: float = 3.0, rel: float = 0.0, **info):
    d = _mc(est, target, k, rel)
    ok = d.pop("ok_")
    res.check(ok, case=label, **info, **d)


def criterion_1(**_) -> CriterionResult:
    res = CriterionResult(1, "right inverse of the Laplace exponent")
    m1, m2 = model_m1(), model_m2()
    p1 = phi_inverse(m1, 1.0)
    res.check(abs(p1 - 1.0) < 1e-10, case="M1 Phi(1)", value=p1, error=abs(p1 - 1.0))
    p2 = phi_inverse(m2, 1.0)
    resid = abs(psi(m2, p2) - 1.0)
    res.check(resid < 1e-10, case="M2 psi(Phi(1))-1", value=p2, residual=resid)
    return res


def laplace_of_scale(model: LevyModel, q: float, lam_l: float) -> float:
    """Trapezoid value of ``int_0^inf e^{-lam_l y} W^(q)(y) dy`` on the default grid."""
    grid = default_grid(model, q)
    parts = scale_parts(model, q, grid)
    phi = parts.tilted.phi_q
    a = lam_l - phi
    y = grid.points
    body = float(np.dot(grid.trapezoid_weights(), np.exp(-a * y) * parts.w_tilted))
    # beyond the grid W_Phi sits at its limit
    limit = 1.0 / (parts.tilted.c_tilde * (1.0 - parts.tilted.rho_tilde))
    return body + limit * math.exp(-a * grid.x_max) / a


def criterion_2(**_) -> CriterionResult:
    res = CriterionResult(2, "Laplace transform of the q-scale function")
    for name, model in (("M1", model_m1()), ("M2", model_m2())):
        for q in (0.0, 0.5, 1.0):
            phi = phi_inverse(model, q)
            for shift in (0.5, 1.0, 2.0):
                lam_l = phi + shift
                num = laplace_of_scale(model, q, lam_l)
                exact = 1.0 / (psi(model, lam_l) - q)
                rel = abs(num / exact - 1.0)
                res.check(rel < 1e-3, case=name, q=q, lam=lam_l, numeric=num, exact=exact, rel_err=rel)
    return res


def criterion_3(paths: int, seed: int, **_) -> CriterionResult:
    res = CriterionResult(3, "classical ruin probability")
    m1 = model_m1()
    for k, x in enumerate((0.5, 1.0, 2.0)):
        grid = default_grid(m1, 0.0, x)
        val = ruin_probability(m1, grid).at(x)
        closed = m1.rho * math.exp(-(1.0 - 1.0 / m1.c) * x)
        res.check(abs(val - closed) < 1e-4, case="P-K vs closed form", x=x, analytic=val, closed=closed)
        est = estimate(SimConfig(m1, x, 0.0, paths, seed + 300 + k, t_max=200.0), "ruin_probability")
        _mc_check(res, "P-K vs MC", est, val, x=x)
    return res


def criterion_4(paths: int, seed: int, **_) -> CriterionResult:
    res = CriterionResult(4, "first jump record transforms xi and delta")
    m1, m2 = model_m1(), model_m2()
    q = 1.0
    x1, d1 = edvci.xi(m1, q), edvci.delta(m1, q)
    res.check(abs(x1 - 1 / 3) < 1e-12 and abs(d1 - 1 / 3) < 1e-12, case="M1 closed form", xi=x1, delta=d1)
    for k, (name, model) in enumerate((("M1", m1), ("M2", m2))):
        cfg = SimConfig(model, 0.0, q, paths, seed + 400 + k)
        _mc_check(res, f"{name} xi", estimate(cfg, "xi"), edvci.xi(model, q))
        _mc_check(res, f"{name} delta", estimate(cfg, "delta"), edvci.delta(model, q))
    return res


def criterion_5(paths: int, seed: int, **_) -> CriterionResult:
    res = CriterionResult(5, "expected discounted capital injections")
    m1 = model_m1()
    rep = edvci.edvci_value(m1, 1.0, 0.0)
    res.check(abs(rep.V - 0.5) < 1e-6, case="M1 q=1 x=0 exact", V=rep.V)
    est = estimate(SimConfig(m1, 0.0, 1.0, paths, seed + 500), "edvci")
    _mc_check(res, "M1 q=1 x=0 MC", est, rep.V)
    k = 1
    for name, model in (("M1", m1), ("M2", model_m2())):
        for q in (0.5, 1.0):
            for x in (0.5, 1.0):
                v = edvci.edvci_value(model, q, x).V
                est = estimate(SimConfig(model, x, q, paths, seed + 500 + k), "edvci")
                _mc_check(res, name, est, v, rel=0.02, q=q, x=x)
                k += 1
    return res


def criterion_6(**_) -> CriterionResult:
    res = CriterionResult(6, "classical reduction")
    m1 = model_m1()
    perturbed = LevyModel(m1.c, 1e-3, m1.measure)
    for q in (0.5, 1.0, 2.0):
        for x in (0.0, 0.5, 1.0, 2.0):
            rep = edvci.edvci_value(m1, q, x)
            diff = abs(rep.V - rep.classical_V)
            res.check(diff < 1e-10, case="sigma=0 two paths", q=q, x=x, V=rep.V, classical=rep.classical_V, diff=diff)
    for q in (0.5, 1.0):
        for x in (0.5, 1.0, 2.0):
            base = edvci.edvci_value(m1, q, x).classical_V
            v = edvci.edvci_value(perturbed, q, x).V
            rel = abs(v / base - 1.0)
            res.check(rel < 0.01, case="sigma=1e-3 vs classical", q=q, x=x, V=v, classical=base, rel=rel)
    return res


def criterion_7(paths: int, seed: int, **_) -> CriterionResult:
    res = CriterionResult(7, "law of the number of records after ruin")
    m1 = model_m1()
    batch = simulate(SimConfig(m1, 1.0, 0.0, paths, seed + 700, t_max=200.0))
    n_max = 7
    freq = record_count_frequencies(batch, n_max)
    probs = np.array([edpf.n_distribution_normalized(m1, 0.0, n) for n in range(n_max)])
    probs = np.append(probs, 1.0 - probs.sum())
    expected = freq.sum() * probs
    chi2, p = stats.chisquare(freq, expected)
    res.check(p > 0.01, case="chi-square over n=0..6 and >=7", ruined=int(freq.sum()), chi2=float(chi2), p_value=float(p))
    analytic = edpf.n_distribution(m1, 0.0, 1.0, 0)
    emp = float(freq[0]) / paths
    se = math.sqrt(emp * (1 - emp) / paths)
    res.check(abs(emp - analytic) <= 3 * se, case="P(ruin, no further record)", analytic=analytic, mc=emp, se=se)
    return res


def criterion_8(paths: int, seed: int, **_) -> CriterionResult:
    res = CriterionResult(8, "extended penalty function")
    m2 = model_m2()
    pen = edpf.named_penalty("capped_deficit:2+capped_increment:2")
    out = edpf.extended_edpf(m2, 0.5, 1.0, pen)
    res.check(out.truncation_bound < 1e-10, case="series truncation", bound=out.truncation_bound)
    est = estimate(SimConfig(m2, 1.0, 0.5, paths, seed + 800), "extended_edpf", penalty=pen)
    _mc_check(res, "M2 q=0.5 x=1", est, out.value)
    return res


def criterion_9(**_) -> CriterionResult:
    res = CriterionResult(9, "convolution and resolvent forms of the penalty function")
    w = edpf.named_penalty("deficit").first
    for name, model in (("M1", model_m1()), ("M2", model_m2())):
        for q in (0.5, 1.0):
            for x in (0.5, 1.0, 2.0):
                grid = default_grid(model, q, x)
                a = edpf.classic_edpf(model, q, x, w, grid)
                b = edpf.edpf_scale_form(model, q, x, w, grid)
                rel = abs(a / b - 1.0)
                res.check(rel < 1e-3, case=name, q=q, x=x, convolution=a, resolvent=b, rel=rel)
    return res


def criterion_10(paths: int, seed: int, **_) -> CriterionResult:
    res = CriterionResult(10, "determinism of simulated estimates")
    m2 = model_m2()
    cfg = SimConfig(m2, 1.0, 1.0, paths, seed + 1000)
    a = estimate(cfg, "edvci")
    b = estimate(cfg, "edvci")
    same = repr((a.value, a.se)) == repr((b.value, b.se))
    res.check(same, case="same seed twice", first=a.value, second=b.value)
    return res


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_validation(paths: int = 100_000, seed: int = 0, only: list[int] | None = None) -> list[CriterionResult]:
    chosen = sorted(CRITERIA) if only is None else sorted(only)
    return [CRITERIA[n](paths=paths, seed=seed) for n in chosen]


def report_text(results: list[CriterionResult], paths: int, seed: int) -> str:
    lines = [f"ruinkit validation report (paths={paths}, seed={seed})"]
    for r in results:
        lines.extend(r.lines())
    passed = sum(r.passed for r in results)
    lines.append(f"summary: {passed}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"
