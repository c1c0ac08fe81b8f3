import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from besovkit.grid import INF, SampledFunction, Weight, make_grid
from besovkit.norms import (NormSpec, compute_norm, diff_profile, difference, difference_coefficients,
                            offset_nodes, peetre_r, poly_dichotomy, quantity, weight_exponents)
from besovkit.scaling import ScalingFunction

PHI = ScalingFunction.power(0.7)


def _gauss(g, c=0.0):
    return SampledFunction.from_callable(g, lambda x: np.exp(-(x - c) ** 2))


def _phi_hat(r):
    # independent transcription of the smooth low-pass profile
    r = abs(r)
    if r <= 1:
        return 1.0
    if r >= 2:
        return 0.0
    a, b = math.exp(-1 / (2 - r)), math.exp(-1 / (r - 1))
    return a / (a + b)


def _gauss_seminorm_sq(s, cap):
    # ||f(.+h) - f||_2^2 = 2 sqrt(pi/2) (1 - exp(-h^2/2)) for f = exp(-x^2), both signs of h
    return 2 * integrate.quad(lambda h: h ** (-2 * s - 1) * 2 * math.sqrt(math.pi / 2)
                              * (1 - math.exp(-h * h / 2)), 0, cap, epsabs=1e-14)[0]


def test_frequency_norm_of_single_mode():
    g = make_grid(1, 4.0, 256)
    k = 10
    xi = math.pi * k / g.R
    f = SampledFunction.from_callable(g, lambda x: np.cos(xi * x))
    res = compute_norm(f, NormSpec(2, 2, PHI))
    nf = math.sqrt(g.R)
    bands = [(2.0 ** (0.7 * j) * (_phi_hat(xi / 2 ** j) - _phi_hat(xi / 2 ** (j - 1)))) ** 2 for j in range(1, 7)]
    ref = _phi_hat(xi) * nf + nf * math.sqrt(sum(bands))
    assert res.total == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("N,tol", [(1024, 1e-3), (2048, 6e-4)])
def test_local_difference_norm_matches_quadrature(N, tol):
    g = make_grid(1, 8.0, N)
    res = compute_norm(_gauss(g), NormSpec(2, 2, PHI, 1, None, "B_diff_local"))
    ref = (math.pi / 2) ** 0.25 + math.sqrt(_gauss_seminorm_sq(0.7, 1.0))
    assert res.total == pytest.approx(ref, rel=tol)


def test_global_homogeneous_difference_matches_quadrature():
    g = make_grid(1, 8.0, 1024)
    res = compute_norm(_gauss(g), NormSpec(2, 2, PHI, 1, None, "B_diff_global", homogeneous=True))
    assert res.lp_term == 0.0
    assert res.total == pytest.approx(math.sqrt(_gauss_seminorm_sq(0.7, 4.0)), rel=1e-3)


def test_zero_function_has_zero_norm():
    g = make_grid(1, 4.0, 256)
    for v in ("B_freq", "F_freq", "Q0", "Q1", "Q2", "Q3", "Q4", "Q5", "B_diff_local", "F_diff_global"):
        assert compute_norm(SampledFunction.zeros(g), NormSpec(2, 2, PHI, 1, None, v)).total == 0.0


def test_fubini_identity_p_equals_q():
    g = make_grid(1, 8.0, 1024)
    f = _gauss(g)
    w = Weight.power(g, 0.5)
    b = compute_norm(f, NormSpec(2, 2, PHI, 1, w, "B_freq")).total
    fval = compute_norm(f, NormSpec(2, 2, PHI, 1, w, "F_freq")).total
    assert fval == pytest.approx(b, rel=1e-12)


def test_q2_equals_q3_for_first_order():
    g = make_grid(1, 8.0, 1024)
    spec = NormSpec(2, 2, PHI, 1)
    assert quantity(_gauss(g), spec, 2) == pytest.approx(quantity(_gauss(g), spec, 3), rel=1e-14)


def test_q1_is_flagged_upper_bound():
    g = make_grid(1, 8.0, 1024)
    assert compute_norm(_gauss(g), NormSpec(2, 2, PHI, 1, None, "Q1")).upper_bound


def test_peetre_default_and_override():
    g = make_grid(1, 8.0, 256)
    assert peetre_r(NormSpec(2, 2, PHI), g) == pytest.approx(1.5)
    assert peetre_r(NormSpec(2, 2, PHI, variant="Q4", r=0.5), g) == 0.5
    assert weight_exponents(None, 2.0) == (1.0, INF)


def test_q_inf_takes_maximum():
    g = make_grid(1, 8.0, 1024)
    res = compute_norm(_gauss(g), NormSpec(2, INF, PHI))
    assert res.scale_term == pytest.approx(max(c for _, c in res.breakdown))


def test_spec_validation():
    with pytest.raises(ValueError):
        NormSpec(1.0, 2, PHI)
    with pytest.raises(ValueError):
        NormSpec(2, 2, ScalingFunction.power(1.5), L=1)
    with pytest.raises(ValueError):
        NormSpec(INF, 2, PHI, variant="F_freq")
    with pytest.raises(ValueError):
        NormSpec(2, 2, PHI, variant="Q4", homogeneous=True)


def test_difference_norm_support_guard():
    g = make_grid(1, 4.0, 256)
    with pytest.raises(ValueError):
        compute_norm(_gauss(g, 2.5), NormSpec(2, 2, PHI, 1, None, "B_diff_local"))


def test_band_guard():
    g = make_grid(1, 4.0, 64)
    rough = SampledFunction(g, (-1.0) ** np.arange(64))
    with pytest.raises(ValueError):
        compute_norm(rough, NormSpec(2, 2, PHI))


def test_offset_nodes_tile():
    k, wt = offset_nodes(1000, 16, 8, end=1000.0)
    assert list(k[:16]) == list(range(1, 17))
    assert wt.sum() == pytest.approx(1000.0 - 0.5)


def test_diff_profile_sorted():
    g = make_grid(1, 8.0, 256)
    h, mu, vals = diff_profile(_gauss(g), NormSpec(2, 2, PHI, 1, None, "B_diff_local"))
    assert np.all(np.diff(h) >= 0) and np.all(mu > 0) and np.all(vals >= 0)


def test_difference_coefficients_exact_zero():
    # D_h^2 x^2 = 2 h^2, D_h^2 of any affine polynomial vanishes
    assert difference_coefficients([0, 0, 1], 2) == {(0, 2): 2}
    assert difference_coefficients([5, -3], 2) == {}


@pytest.mark.parametrize("L", [1, 2, 3])
def test_poly_dichotomy(L):
    spec = NormSpec(2, 2, ScalingFunction.power(L - 0.5), L)
    for deg in range(0, 5):
        res = poly_dichotomy([1.0] * (deg + 1), spec)
        assert res.verdict == ("vanishes" if deg < L else "diverges")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=6), st.integers(1, 4))
def test_difference_annihilates_low_degree(coeffs, L):
    g = make_grid(1, 8.0, 64)
    x = g.axis_points()
    coeffs = coeffs[:L]
    f = SampledFunction(g, np.polyval(coeffs[::-1], x))
    d = difference(f, 0.25, L).values
    # away from the periodic seam every entry is an exact combination of the samples
    inner = d[: 64 - 4 * L]
    assert np.max(np.abs(inner)) <= 1e-9 * max(1.0, np.abs(f.values).max())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 3))
def test_binomial_and_iterated_differences_agree(seed, L):
    g = make_grid(1, 4.0, 64)
    f = SampledFunction(g, np.random.default_rng(seed).normal(size=64))
    np.testing.assert_allclose(difference(f, 0.5, L).values, difference(f, 0.5, L, "iterated").values,
                               atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0), st.sampled_from(["B_freq", "F_freq", "Q0", "Q4", "B_diff_local"]))
def test_norm_homogeneity(c, variant):
    g = make_grid(1, 8.0, 256)
    f = _gauss(g)
    spec = NormSpec(2, 2, PHI, 1, None, variant)
    assert compute_norm(f * c, spec).total == pytest.approx(c * compute_norm(f, spec).total, rel=1e-10)


@pytest.mark.parametrize("variant,L,s", [("Q2", 1, 0.7), ("Q3", 2, 1.5)])
def test_scale_quadrature_converged(variant, L, s):
    # 16 log-trapezoid nodes per octave against a 64-node reference
    g = make_grid(1, 4.0, 4096)
    f = SampledFunction.from_callable(g, lambda x: np.exp(-8 * x ** 2) * np.cos(20 * x))
    spec = NormSpec(2, 2, ScalingFunction.power(s), L, Weight.power(g, 0.5), variant)
    ref = compute_norm(f, NormSpec(2, 2, spec.phi, L, spec.weight, variant, nodes_per_octave=64)).total
    assert compute_norm(f, spec).total == pytest.approx(ref, rel=1e-5)


@pytest.mark.parametrize("variant", ["B_diff_local", "F_diff_local", "B_diff_global"])
def test_difference_norm_cutoff_stability(variant):
    vals = []
    for N in (512, 1024):
        g = make_grid(1, 8.0, N)
        vals.append(compute_norm(_gauss(g), NormSpec(2, 2, PHI, 1, Weight.power(g, 0.5), variant)).total)
    assert vals[1] == pytest.approx(vals[0], rel=0.05)
