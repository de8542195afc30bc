import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ruinkit.grid import (
    Grid,
    GridFunction,
    GridMismatchError,
    convolve,
    convolve_exponential,
    exp_filter_backward,
    exp_filter_forward,
    geometric_convolution_series,
)


def test_grid_index_and_weights():
    g = Grid(0.25, 8)
    assert g.index(1.5) == 6
    assert g.trapezoid_weights().sum() == pytest.approx(g.x_max)
    with pytest.raises(ValueError):
        g.index(0.3)


def test_convolution_of_exponentials_is_gamma():
    g = Grid(0.005, 4000)
    e = GridFunction.from_density(g, lambda y: np.exp(-y))
    out = convolve(e, e)
    assert np.max(np.abs(out.values - g.points * np.exp(-g.points))) < 1e-5


def test_dirac_is_the_identity():
    g = Grid(0.01, 500)
    f = GridFunction.from_density(g, lambda y: np.exp(-2 * y), atom0=0.3)
    out = convolve(GridFunction.dirac(g), f)
    assert out.atom0 == pytest.approx(0.3)
    np.testing.assert_allclose(out.values, f.values, atol=1e-15)


def test_direct_and_fft_agree():
    g = Grid(0.01, 700)
    a = GridFunction.from_density(g, lambda y: np.exp(-y) * (1 + np.sin(y)), atom0=0.2)
    b = GridFunction.from_density(g, lambda y: y * np.exp(-3 * y))
    np.testing.assert_allclose(convolve(a, b, "direct").values, convolve(a, b, "fft").values, atol=1e-12)


def test_grid_mismatch_rejected():
    a = GridFunction.dirac(Grid(0.1, 10))
    b = GridFunction.dirac(Grid(0.2, 10))
    with pytest.raises(GridMismatchError):
        convolve(a, b)


def test_exponential_filters_exact_on_linear():
    g = Grid(0.1, 50)
    y = g.points
    fwd = exp_filter_forward(y.copy(), g.delta, 2.0)
    # int_0^x e^{-2 (x - s)} s ds
    exact = x_exact = (2 * y - 1 + np.exp(-2 * y)) / 4
    np.testing.assert_allclose(fwd, exact, atol=1e-13)
    bwd = exp_filter_backward(np.ones_like(y), g.delta, 2.0)
    np.testing.assert_allclose(bwd, (1 - np.exp(-2 * (g.x_max - y))) / 2, atol=1e-13)
    assert x_exact is exact


def test_convolve_exponential_matches_sampled_convolution():
    g = Grid(0.002, 5000)
    f = GridFunction.from_density(g, lambda y: np.exp(-y), atom0=0.5)
    out = convolve_exponential(f, 3.0, 3.0)
    y = g.points
    # Exp(1) * Exp(3) density plus the atom passed through the kernel
    exact = 1.5 * (np.exp(-y) - np.exp(-3 * y)) + 0.5 * 3 * np.exp(-3 * y)
    assert np.max(np.abs(out.values - exact)) < 1e-6


def test_narrow_kernel_becomes_an_atom():
    g = Grid(0.1, 100)
    f = GridFunction.dirac(g, 0.4)
    out = convolve_exponential(f, 1000.0, 1000.0)
    assert out.atom0 == pytest.approx(0.4)


def test_under_resolved_kernel_warns():
    g = Grid(0.1, 100)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        convolve_exponential(GridFunction.dirac(g), 5.0, 5.0)
    assert any("under-resolved" in str(w.message) for w in caught)


def test_geometric_series_of_exponentials():
    # sum_n (1/2)^n Exp(1)^{*n} has density 0.5 e^{-y/2} and unit atom
    g = Grid(0.005, 8000)
    base = GridFunction.from_density(g, lambda y: np.exp(-y))
    res = geometric_convolution_series(base, 0.5, GridFunction.dirac(g))
    assert res.tail_bound < 1e-12
    assert res.function.atom0 == pytest.approx(1.0)
    assert np.max(np.abs(res.function.values - 0.5 * np.exp(-0.5 * g.points))) < 1e-5


def test_geometric_series_rejects_divergence():
    g = Grid(0.1, 10)
    with pytest.raises(ValueError):
        geometric_convolution_series(GridFunction.dirac(g), 1.0, GridFunction.dirac(g))


densities = st.lists(st.floats(0.0, 5.0), min_size=3, max_size=40)


@given(densities, densities, st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_mass_is_multiplicative(a, b, atom_a, atom_b):
    # supports kept inside the first third so nothing is truncated
    n = 3 * max(len(a), len(b)) + 3
    g = Grid(0.1, n)
    va = np.zeros(n + 1)
    vb = np.zeros(n + 1)
    va[1:len(a) + 1] = a
    vb[1:len(b) + 1] = b
    f = GridFunction(g, atom_a, va)
    h = GridFunction(g, atom_b, vb)
    out = convolve(f, h)
    assert out.mass() == pytest.approx(f.mass() * h.mass(), rel=1e-9, abs=1e-12)


@given(st.floats(0.05, 20.0), st.floats(0.0, 1.0))
def test_exponential_convolution_preserves_mass(rate, atom):
    g = Grid(0.01, int(math.ceil(60 / rate / 0.01)) if rate < 1 else 6000)
    f = GridFunction.from_density(g, lambda y: np.where(y < 1, 1.0, 0.0), atom0=atom)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = convolve_exponential(f, rate, rate)
    assert out.mass() == pytest.approx(f.mass(), rel=5e-3)
