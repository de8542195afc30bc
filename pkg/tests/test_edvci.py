import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruinkit import edvci
from ruinkit.levy_model import LevyMeasureSpec, LevyModel, ModelError, phi_inverse
from ruinkit.scale import default_grid

from oracles import creep_laplace, discounted_deficit, ruin_laplace


def test_m1_record_transforms(m1):
    assert edvci.xi(m1, 1.0) == pytest.approx(1 / 3, abs=1e-12)
    assert edvci.delta(m1, 1.0) == pytest.approx(1 / 3, abs=1e-12)


def test_xi_limit_at_zero_discount(m2):
    assert edvci.xi(m2, 0.0) == pytest.approx(m2.rho)
    assert edvci.xi(m2, 1e-7) == pytest.approx(m2.rho, abs=1e-5)


def test_m1_value_at_zero_surplus(m1):
    assert edvci.edvci_value(m1, 1.0, 0.0).V == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0])
def test_pieces_against_closed_forms(m1, m2, q, x):
    for model in (m1, m2):
        args = (model.c, model.sigma, 1.0, 1.0, q, x)
        grid = default_grid(model, q, x)
        assert edvci.kappa(model, q, x, grid) == pytest.approx(ruin_laplace(*args), abs=5e-6)
        assert edvci.kappa_creep(model, q, x, grid) == pytest.approx(creep_laplace(*args), abs=5e-6)
        assert edvci.varphi(model, q, x, grid) == pytest.approx(discounted_deficit(*args), abs=5e-6)


def test_kappa_matches_scale_function_form(m2):
    for x in (0.5, 1.0, 2.0):
        assert edvci.kappa(m2, 1.0, x) == pytest.approx(edvci.z_kappa(m2, 1.0, x), abs=1e-5)


def test_creeping_certain_at_zero(m2):
    assert edvci.kappa_creep(m2, 1.0, 0.0) == 1.0
    assert edvci.kappa_jump(m2, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_decomposition_is_exact(m2):
    rep = edvci.edvci_value(m2, 0.5, 1.0)
    assert rep.V - rep.varphi == pytest.approx(rep.delta / (1 - rep.xi) * rep.kappa, rel=1e-14)


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
def test_classical_path_agrees(m1, q):
    for x in (0.0, 0.5, 1.0, 2.0):
        rep = edvci.edvci_value(m1, q, x)
        assert abs(rep.V - rep.classical_V) < 1e-10


def test_gamma_classical_path_agrees():
    model = LevyModel(2.0, 0.0, LevyMeasureSpec.gamma(1.0, 2.0, 1.5))
    rep = edvci.edvci_value(model, 0.7, 1.0)
    assert abs(rep.V - rep.classical_V) < 1e-10


def test_small_volatility_approaches_classical(m1):
    perturbed = LevyModel(m1.c, 1e-3, m1.measure)
    for x in (0.5, 1.0, 2.0):
        base = edvci.edvci_value(m1, 1.0, x).V
        assert edvci.edvci_value(perturbed, 1.0, x).V == pytest.approx(base, rel=1e-2)


def test_h_and_t_closed_forms(m2):
    # Exp(1) claims: I(v) = N(v) = e^{-v}, so both transforms equal e^{-x} / (1 + Phi)
    q = 1.0
    grid = default_grid(m2, q)
    phi = phi_inverse(m2, q)
    exact = np.exp(-grid.points) / (1 + phi)
    upto = int(np.searchsorted(grid.points, min(10.0, grid.x_max / 2)))
    np.testing.assert_allclose(edvci.h_func(m2, q, grid).values[:upto], exact[:upto], atol=1e-9)
    np.testing.assert_allclose(edvci.t_func(m2, q, grid).values[:upto], exact[:upto], atol=1e-9)


def test_zero_discount_rejected(m1):
    with pytest.raises(ModelError):
        edvci.edvci_value(m1, 0.0, 1.0)


def test_report_dict_keys(m2):
    d = edvci.edvci_value(m2, 1.0, 1.0).as_dict()
    assert set(d) == {"q", "x", "varphi", "kappa", "kappa_jump", "xi", "delta", "V", "classical_V"}
    assert d["classical_V"] is None


@settings(max_examples=8)
@given(st.sampled_from([0.0, 0.5, 1.0]), st.floats(0.3, 2.0))
def test_value_decreases_in_surplus_and_discount(sigma, q):
    model = LevyModel(1.5, sigma, LevyMeasureSpec.exponential(1.0, 1.0))
    xs = (0.0, 0.5, 1.0, 2.0)
    vals = [edvci.edvci_value(model, q, x).V for x in xs]
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))
    heavier = [edvci.edvci_value(model, q + 0.5, x).V for x in xs]
    assert all(h <= v + 1e-9 for h, v in zip(heavier, vals))
