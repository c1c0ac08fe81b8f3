import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovkit.grid import (INF, SampledFunction, Weight, dilate, dilate_callable, forward_transform,
                           inverse_transform, lp_norm_values, make_grid, parse_extended, translate,
                           weighted_lp_norm)

# Cell integrals of |x|^gamma computed with scipy.integrate.quad / dblquad on
# the cells [0,1], [1,2] (1D) and [0,1]^2, [1,2]x[0,1] (2D), then frozen.
MASS_1D = {0.5: (0.6666666666666669, 1.21895141649746), -0.5: (1.9999999999999991, 0.8284271247461902)}
MASS_2D = {0.5: (0.8558161189806087, 1.2628139732982766), -1.0: (1.7627471740390865, 0.6433119512589313)}


def test_grid_geometry():
    g = make_grid(1, 8.0, 16)
    assert g.spacing == 1.0
    assert g.cell_volume == 1.0
    np.testing.assert_allclose(g.axis_points()[:3], [-7.5, -6.5, -5.5])
    assert make_grid(2, 4.0, 32).shape == (32, 32)


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(1, 8.0, 100)
    with pytest.raises(ValueError):
        make_grid(3, 8.0, 16)
    with pytest.raises(ValueError):
        make_grid(1, -1.0, 16)


@pytest.mark.parametrize("gamma", [0.5, -0.5])
def test_power_masses_1d_match_quadrature(gamma):
    m = Weight.power(make_grid(1, 8.0, 16), gamma).cell_mass
    np.testing.assert_allclose(m[8:10], MASS_1D[gamma], rtol=1e-12)
    np.testing.assert_allclose(m[7], m[8], rtol=1e-14)


@pytest.mark.parametrize("gamma", [0.5, -1.0])
def test_power_masses_2d_match_quadrature(gamma):
    m = Weight.power(make_grid(2, 8.0, 16), gamma).cell_mass
    np.testing.assert_allclose([m[8, 8], m[9, 8]], MASS_2D[gamma], rtol=1e-10)
    assert m[9, 8] == pytest.approx(m[8, 9], rel=1e-13)


def test_non_integrable_power_rejected():
    with pytest.raises(ValueError):
        Weight.power(make_grid(1, 8.0, 16), -1.0)


def test_constant_one_transform():
    g = make_grid(1, 2.0, 64)
    c = forward_transform(SampledFunction(g, np.ones(64)))
    assert c[0] == pytest.approx(1.0)
    assert np.max(np.abs(c[1:])) < 1e-15


def test_lp_norm_of_indicator():
    g = make_grid(1, 1.0, 64)
    one = SampledFunction(g, np.ones(64))
    assert weighted_lp_norm(one, None, 2) == pytest.approx(math.sqrt(2))
    assert weighted_lp_norm(one, None, INF) == 1.0
    # int_{-1}^{1} |x|^{1/2} dx = 4/3
    assert weighted_lp_norm(one, Weight.power(g, 0.5), 1) == pytest.approx(4 / 3, rel=1e-12)


def test_parse_extended():
    assert parse_extended("inf") == INF
    assert parse_extended(2) == 2.0
    with pytest.raises(ValueError):
        parse_extended("x")


def test_sampled_function_immutable():
    f = SampledFunction.zeros(make_grid(1, 1.0, 16))
    with pytest.raises(AttributeError):
        f.values = None
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        SampledFunction(make_grid(1, 1.0, 16), np.full(16, np.nan))


def test_translate_requires_lattice_shift():
    g = make_grid(1, 8.0, 16)
    f = SampledFunction.from_callable(g, lambda x: np.exp(-x ** 2))
    assert translate(f, 1.0).values[9] == f.values[8]
    with pytest.raises(ValueError):
        translate(f, 0.3)


def test_dilate_matches_analytic():
    g = make_grid(1, 8.0, 512)
    fn = lambda x: np.exp(-x ** 2)
    f = SampledFunction.from_callable(g, fn)
    exact = SampledFunction.from_callable(g, dilate_callable(fn, 2, 2.0, 1))
    np.testing.assert_allclose(dilate(f, 2, 2.0).values, exact.values, atol=1e-10)


def test_dilate_refuses_under_resolved():
    g = make_grid(1, 8.0, 64)
    f = SampledFunction.from_callable(g, lambda x: np.exp(-x ** 2))
    with pytest.raises(ValueError):
        dilate(f, 6, 2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1, 2]))
def test_transform_roundtrip(seed, dim):
    g = make_grid(dim, 3.0, 32)
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    f = SampledFunction(g, vals)
    back = inverse_transform(g, forward_transform(f))
    np.testing.assert_allclose(back.values, vals, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(1.0, 6.0), st.floats(-0.9, 2.0))
def test_lp_norm_homogeneous_and_triangle(seed, p, alpha):
    g = make_grid(1, 2.0, 64)
    w = Weight.power(g, alpha)
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=64), rng.normal(size=64)
    na, nb = lp_norm_values(a, g, p, w), lp_norm_values(b, g, p, w)
    assert lp_norm_values(3 * a, g, p, w) == pytest.approx(3 * na, rel=1e-12)
    assert lp_norm_values(a + b, g, p, w) <= na + nb + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(-2, 2), st.floats(1.0, 4.0), st.floats(-0.5, 1.5))
def test_dilation_scales_power_weight_norm(n, p, alpha):
    # ||2^{n/p} f(2^n .)||_{L_p(|x|^alpha)} = 2^{-n alpha/p} ||f|| for the exact integral
    g = make_grid(1, 16.0, 4096)
    w = Weight.power(g, alpha)
    fn = lambda x: np.exp(-x ** 2)
    f0 = SampledFunction.from_callable(g, fn)
    fn_ = SampledFunction.from_callable(g, dilate_callable(fn, n, p, 1))
    ratio = weighted_lp_norm(fn_, w, p) / weighted_lp_norm(f0, w, p)
    assert ratio == pytest.approx(2.0 ** (-n * alpha / p), rel=2e-2)
