import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruinkit import edpf, edvci
from ruinkit.levy_model import LevyMeasureSpec, LevyModel, phi_inverse
from ruinkit.scale import default_grid, ruin_probability
from ruinkit.tilt import tilt_model


def test_named_penalties_parse():
    p = edpf.named_penalty("capped_deficit:2+capped_increment:2")
    assert p.bound == 2 and p.tail == "repeat"
    np.testing.assert_allclose(p.first(np.zeros(3), np.array([0.5, 2.0, 5.0])), [0.5, 2.0, 2.0])
    f = p.record_penalty(7)
    np.testing.assert_allclose(f(np.array([1.0, 1.0]), np.array([1.5, 9.0])), [0.5, 2.0])
    assert edpf.named_penalty("capped_deficit(3)").bound == 3
    assert edpf.named_penalty("deficit").record_penalty(2) is None


@pytest.mark.parametrize("bad", ["", "bogus", "capped_deficit:-1", "deficit+nothing", "capped_deficit:x"])
def test_bad_penalty_names(bad):
    with pytest.raises(ValueError):
        edpf.named_penalty(bad)


def test_validate_rejects_creeping_penalty():
    spec = edpf.PenaltySpec(lambda u, v: np.ones_like(v))
    with pytest.raises(edpf.PenaltyError):
        spec.validate()


def test_validate_rejects_broken_bound():
    spec = edpf.PenaltySpec(lambda u, v: v, bound=1.0)
    with pytest.raises(edpf.PenaltyError):
        spec.validate()


def test_record_penalty_tail_rules():
    inc = lambda a, b: b - a  # noqa: E731
    finite = edpf.PenaltySpec(lambda u, v: v, (inc,), "zero")
    assert finite.record_penalty(2) is inc and finite.record_penalty(3) is None
    assert edpf.PenaltySpec.stationary(lambda u, v: v, inc).record_penalty(50) is inc


@pytest.mark.parametrize("q", [0.5, 1.0])
def test_deficit_penalty_is_varphi(m1, m2, q):
    w = edpf.named_penalty("deficit").first
    for model in (m1, m2):
        for x in (0.5, 1.0):
            assert edpf.classic_edpf(model, q, x, w) == pytest.approx(edvci.varphi(model, q, x), rel=1e-6)


def test_indicator_penalty_is_jump_ruin_transform(m2):
    w = edpf.named_penalty("indicator").first
    for x in (0.5, 1.0):
        assert edpf.classic_edpf(m2, 1.0, x, w) == pytest.approx(edvci.kappa_jump(m2, 1.0, x), rel=1e-4)


def test_gerber_shiu_joint_law_exponential_claims(m1):
    # for Exp(mu) claims the deficit is Exp(mu) given ruin by a claim, independent of the rest
    w = lambda u, v: v**2  # noqa: E731
    q, x = 0.5, 1.0
    assert edpf.classic_edpf(m1, q, x, w) == pytest.approx(2 * edvci.kappa(m1, q, x), rel=1e-4)


@pytest.mark.parametrize("name", ["deficit", "indicator", "capped_deficit:0.5"])
def test_convolution_and_resolvent_forms_agree(m1, m2, name):
    w = edpf.named_penalty(name).first
    for model in (m1, m2):
        for x in (0.5, 1.0, 2.0):
            grid = default_grid(model, 0.5, x)
            a = edpf.classic_edpf(model, 0.5, x, w, grid)
            b = edpf.edpf_scale_form(model, 0.5, x, w, grid)
            assert a == pytest.approx(b, rel=1e-3)


def test_deficit_law_mass_is_ruin_probability(m2):
    x = 1.0
    grid = default_grid(m2, 0.0, x)
    law = edpf.discounted_deficit_law(m2, 0.0, x, grid)
    assert law.mass() == pytest.approx(ruin_probability(m2, grid).at(x), abs=1e-5)


def test_tilt_undo_identity(m2):
    q, x = 1.0, 1.0
    phi = phi_inverse(m2, q)
    tx = edpf.overshoot_dist_Tx(m2, q, x)
    undone = tx.integrate(lambda v: np.exp(phi * (v - 0.0)))
    assert undone == pytest.approx(edvci.kappa(m2, q, x), rel=1e-3)


def test_record_count_law_sums_to_ruin(m1):
    x = 1.0
    total = sum(edpf.n_distribution(m1, 0.0, x, n) for n in range(200))
    grid = default_grid(m1, 0.0, x)
    assert total == pytest.approx(ruin_probability(m1, grid).at(x), rel=1e-9)
    assert edpf.n_distribution_normalized(m1, 0.0, 0) == pytest.approx(1 - tilt_model(m1, 0.0).rho_tilde)


@pytest.mark.parametrize("q, x", [(0.5, 1.0), (1.0, 0.5)])
def test_increment_penalties_reproduce_injection_value(m1, m2, q, x):
    pen = edpf.named_penalty("deficit+increment")
    for model in (m1, m2):
        out = edpf.extended_edpf(model, q, x, pen)
        # unbounded increments give no certified truncation bound
        assert out.truncation_bound == math.inf
        assert out.value == pytest.approx(edvci.edvci_value(model, q, x).V, rel=1e-4)


def test_bounded_penalty_series_tail(m2):
    out = edpf.extended_edpf(m2, 0.5, 1.0, edpf.named_penalty("capped_deficit:2+capped_increment:2"))
    assert out.truncation_bound < 1e-10


def test_extended_without_records_is_classic(m2):
    pen = edpf.named_penalty("capped_deficit:2")
    out = edpf.extended_edpf(m2, 0.5, 1.0, pen)
    assert out.value == pytest.approx(edpf.classic_edpf(m2, 0.5, 1.0, pen.first), rel=1e-9)
    assert out.records == ()


def test_single_later_record_charged_once(m1):
    # one unit at the second record only: E[e^{-q tau2}; tau2 < inf] = kappa_jump * xi for Exp claims
    pen = edpf.PenaltySpec(lambda u, v: np.zeros_like(v), (lambda a, b: np.ones_like(b),), "zero", bound=1.0)
    q, x = 1.0, 1.0
    out = edpf.extended_edpf(m1, q, x, pen)
    assert out.value == pytest.approx(edvci.kappa(m1, q, x) * edvci.xi(m1, q), rel=1e-4)


@settings(max_examples=6)
@given(st.floats(0.2, 3.0), st.floats(0.0, 1.0))
def test_extended_is_monotone_and_nonnegative(cap, bump):
    model = LevyModel(1.5, 1.0, LevyMeasureSpec.exponential(1.0, 1.0))
    low = edpf.named_penalty(f"capped_deficit:{cap}+capped_increment:{cap}")
    first = low.first
    rec = low.subsequent[0]
    high = edpf.PenaltySpec.stationary(first, lambda a, b: rec(a, b) + bump * (b > a), bound=cap + bump)
    a = edpf.extended_edpf(model, 0.7, 1.0, low).value
    b = edpf.extended_edpf(model, 0.7, 1.0, high).value
    assert 0 <= a <= b + 1e-12
    assert math.isfinite(b)
