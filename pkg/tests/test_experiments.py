import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from besovkit.experiments import (BaseProbe, CounterexampleReport, EquivalenceReport, ProbeFamily,
                                  _linear_fit, admissibility, check_probe, counterexample_run,
                                  embedding_check, equivalence_study, equivalence_suite,
                                  lemma_inequality_suite, peetre_domination, shifted_growth,
                                  sup_difference_quantity)
from besovkit.grid import SampledFunction, Weight, make_grid
from besovkit.norms import NormSpec, compute_norm
from besovkit.scaling import ScalingFunction

PHI = ScalingFunction.power(0.7)


@pytest.fixture(scope="module")
def family():
    g = make_grid(1, 4.0, 4096)
    return ProbeFamily(g, 2.0, (BaseProbe("gaussian"), BaseProbe("random_bandlimited", seed=3)), (2, 3))


def test_probe_ids_and_shift(family):
    keys = family.keys()
    assert len(keys) == 4
    assert family.pid(keys[0]) == "gaussian(width=1)|n=2|shift=0"
    fam = ProbeFamily(family.grid, 2.0, (BaseProbe("gaussian"),), (2,), shifts=(0.0, 1.0))
    a, b = [p.function.values for p in fam.probes()]
    cells = round(0.25 / family.grid.spacing)
    np.testing.assert_allclose(np.roll(a, cells), b, atol=1e-14)


def test_probe_guards():
    g = make_grid(1, 4.0, 256)
    with pytest.raises(ValueError):
        check_probe(SampledFunction.from_callable(g, lambda x: np.exp(-(x - 3) ** 2)))
    with pytest.raises(ValueError):
        BaseProbe("square")
    with pytest.raises(ValueError):
        ProbeFamily(g, 2.0, (BaseProbe("gaussian"),), (6,)).probes()


def test_admissibility():
    g = make_grid(1, 4.0, 256)
    assert admissibility(NormSpec(2, 2, PHI)) == (0.0, True)
    thr, ok = admissibility(NormSpec(2, 2, ScalingFunction.power(0.2), 1, Weight.power(g, 0.5)))
    assert thr == pytest.approx(0.25) and not ok
    thr, ok = admissibility(NormSpec(2, 2, ScalingFunction.power(0.6), 1, Weight.power(g, 0.5), "F_freq"))
    assert thr == pytest.approx(0.75) and not ok


def test_report_statistics():
    rep = EquivalenceReport("A", "B", ("p", "q"), (1.0, 2.0), ("r",), (4.0,))
    assert rep.spread == 2.0 and rep.extended_spread == 4.0
    assert rep.growth == pytest.approx(1.0)
    assert not rep.stable and not rep.verdict
    with pytest.raises(ValueError):
        EquivalenceReport("A", "B", ("p",), (0.0,), (), ())


def test_self_equivalence(family):
    rep = equivalence_study(family, NormSpec(2, 2, PHI), NormSpec(2, 2, PHI))
    assert rep.spread == 1.0 and rep.extended_spread == 1.0 and rep.verdict


def test_suite_orientation_and_csv(family):
    rep = equivalence_suite(family, NormSpec(2, 2, PHI), ["B_freq", "Q0", "Q4"], peetre_r=0.5, octaves=1)
    assert len(rep.reports) == 3
    pair = rep.pair("Q0", "B_freq")
    f = family.make(family.keys()[0]).function
    ratio = compute_norm(f, NormSpec(2, 2, PHI, variant="Q0")).total / compute_norm(f, NormSpec(2, 2, PHI)).total
    assert pair.ratios[0] == pytest.approx(ratio, rel=1e-12)
    lines = rep.csv_text().strip().splitlines()
    assert lines[0] == "variant_a,variant_b,probe,range,ratio"
    assert len(lines) == 1 + 3 * 6
    with pytest.raises(KeyError):
        rep.pair("Q2", "Q3")


def test_linear_fit_matches_scipy():
    rng = np.random.default_rng(0)
    x = np.arange(10.0)
    y = 0.3 * x + 1 + 0.01 * rng.normal(size=10)
    ref = stats.linregress(x, y)
    slope, icpt, r2 = _linear_fit(x, y)
    assert slope == pytest.approx(ref.slope, rel=1e-12)
    assert icpt == pytest.approx(ref.intercept, rel=1e-12)
    assert r2 == pytest.approx(ref.rvalue ** 2, rel=1e-12)


def _cx(expected, slope, r2, growth=0.0):
    return CounterexampleReport(0.5, 0.1, 2, 2, (0,), (1.0,), (0,), (1.0,), (0,), (1.0,), (0,),
                                growth, expected, slope, r2)


def test_counterexample_growth_classification():
    assert _cx(0.3, 1.0, 0.5, 0.29).growth_ok
    assert not _cx(0.3, 1.0, 0.5, 0.2).growth_ok
    assert _cx(0.0, 2.0, 0.99).growth_kind == "logarithmic"
    assert _cx(0.0, 2.0, 0.99).growth_ok
    assert not _cx(0.0, 2.0, 0.9).growth_ok
    assert _cx(-0.2, 0.0, 1.0).growth_kind == "bounded"


def test_counterexample_small_grids():
    rep = counterexample_run(0.5, 0.1, n_max=2, dilation_grid=make_grid(1, 64.0, 2 ** 14),
                             cap_grid=make_grid(1, 256.0, 2 ** 11), n_seminorm=2)
    assert rep.expected_exponent == pytest.approx(0.3)
    assert rep.lp_ok
    assert np.all(np.diff(rep.cap_integrals) > 0)
    with pytest.raises(ValueError):
        counterexample_run(0.5, 0.7)


def test_lemma_chain(family):
    rep = lemma_inequality_suite(family, NormSpec(2, 2, PHI))
    assert all(rep.passed)
    assert rep.constants[1] <= 1 + 1e-9 and rep.constants[2] <= 1 + 1e-9


def test_sup_quantity_dominates_norm(family):
    f = family.make(family.keys()[0]).function
    spec = NormSpec(2, 2, PHI, 1, None, "B_diff_local", dense_offsets=family.grid.N)
    x0 = sup_difference_quantity(f, spec)
    assert compute_norm(f, spec).total <= x0 * (1 + 1e-12)
    assert x0 <= sup_difference_quantity(f, spec, True) * (1 + 1e-12)


def test_embedding_rejects_bad_phi(family):
    with pytest.raises(ValueError):
        embedding_check(family, ScalingFunction.power(0.4), 2.0, 2.0, 1)


def test_peetre_domination_small():
    g = make_grid(1, 8.0, 1024)
    probes = [SampledFunction.from_callable(g, lambda x: np.exp(-x ** 2 / 0.5))]
    rep = peetre_domination(probes, 1.0, range(2, 5))
    assert rep.finite and rep.stable
    assert all(0 < m <= 1 + 1e-12 for m in rep.max_ratios)


def test_shifted_growth_bound():
    g = make_grid(1, 16.0, 512)
    x = g.axis_points()
    probes = [SampledFunction(g, (np.abs(x) < 0.25).astype(float))]
    rep = shifted_growth(probes, None, 2.0, 1.5, 4.0, zs=(0, 1, 2, 4))
    assert rep.bound == pytest.approx(0.5 * (2 / 1.5 + 0.25 - 1))
    assert rep.probe_norms[0] >= 1.0
    assert rep.to_dict()["passed"] == rep.passed


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=2, max_size=8), st.floats(0.1, 10.0))
def test_spread_scale_invariant(ratios, c):
    a = EquivalenceReport("A", "B", tuple(map(str, range(len(ratios)))), tuple(ratios), (), ())
    b = EquivalenceReport("A", "B", a.probe_ids, tuple(c * r for r in ratios), (), ())
    assert a.spread >= 1.0
    assert b.spread == pytest.approx(a.spread, rel=1e-12)
    assert a.extended_spread == a.spread and a.stable
