"""Verification experiments: equivalence studies, the power-weight counterexample,
the Sobolev-type embedding, the inequality chain and the maximal-function bounds.

"Equivalence" of two norms is tested empirically.  The ratio of the two norms
is computed over a family of dilated and translated probes; the pair passes
when the spread ``max/min`` of the ratios is below ``SPREAD_THRESHOLD`` and
does not grow by more than ``STABILITY_TOL`` when the dilation range is
extended by two octaves towards finer scales.  Constants are never known, so
only boundedness and scale-stability are asserted.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .grid import (INF, Grid, SampledFunction, Weight, dilate_callable, lp_norm_values,
                   make_grid, shift_values, weighted_lp_norm)
from .lp_decomp import decompose
from .maximal_ops import maximal_power_mean, peetre_maximal, PeetreSpec, shifted_operator_norm_probe
from .norms import (GUARD_TOL, SUPPORT_TOL, NormSpec, NormVariant, _aggregate, _diff_family,
                    compute_norm, diff_cap, diff_profile, inner_energy_fraction, weight_exponents)
from .scaling import ScalingFunction, class_check
from .weights import besov_threshold, tl_threshold

SPREAD_THRESHOLD = 10.0
# largest admissible relative growth of the spread under a 2-octave extension;
# pinned from pilot runs on the unweighted power case (observed <= 3.3%)
STABILITY_TOL = 0.05
EXTENSION_OCTAVES = 2
MIN_CELLS = 8


def thread_count() -> int:
    """Worker threads for probe-level parallelism (``BKT_THREADS``, default 1)."""
    raw = os.environ.get("BKT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"BKT_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded when ``BKT_THREADS > 1``."""
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------

def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class BaseProbe:
    """Undilated probe shape.

    ``gaussian``: ``exp(-|x|^2 / (2 width^2))``.  ``bump``: the C-infinity bump
    ``exp(1 - 1/(1 - |x/width|^2))`` supported in ``|x| < width``.
    ``random_bandlimited``: ``packets`` Gaussian wave packets of envelope
    ``width`` whose carrier frequencies are drawn (seeded) from
    ``band / width``; their spectra are Gaussians around those carriers.
    """

    kind: str
    width: float = 1.0
    seed: int = 0
    band: tuple = (1.0, 4.0)
    packets: int = 3

    def __post_init__(self):
        if self.kind not in ("gaussian", "bump", "random_bandlimited"):
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if not self.width > 0:
            raise ValueError("probe width must be positive")

    @property
    def label(self) -> str:
        if self.kind == "random_bandlimited":
            return f"random_bandlimited(seed={self.seed},band={self.band[0]:g}-{self.band[1]:g})"
        return f"{self.kind}(width={self.width:g})"

    def function(self, dim: int) -> Callable:
        w = self.width
        if self.kind == "gaussian":
            return lambda *x: np.exp(-sum(c * c for c in x) / (2 * w * w))
        if self.kind == "bump":
            return lambda *x: _bump(np.sqrt(sum(c * c for c in x)) / w)
        rng = np.random.default_rng(self.seed)
        amp = rng.normal(size=self.packets)
        centers = rng.uniform(-0.5 * w, 0.5 * w, size=(self.packets, dim))
        freqs = rng.uniform(self.band[0], self.band[1], size=self.packets) / w
        dirs = rng.normal(size=(self.packets, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        phases = rng.uniform(0, 2 * math.pi, size=self.packets)

        def fn(*x):
            out = 0.0
            for i in range(self.packets):
                d2 = sum((c - centers[i, a]) ** 2 for a, c in enumerate(x))
                arg = sum(freqs[i] * dirs[i, a] * (c - centers[i, a]) for a, c in enumerate(x))
                out = out + amp[i] * np.exp(-d2 / (2 * w * w)) * np.cos(arg + phases[i])
            return out

        return fn


@dataclass(frozen=True)
class Probe:
    key: tuple  # (base index, n, shift index): the sort key
    pid: str
    function: SampledFunction


@dataclass(frozen=True)
class ProbeFamily:
    """Dilates ``2^(n d/p) g(2^n x)`` of the base shapes, optionally translated.

    ``shifts`` are in units of the dilated width and are rounded to whole
    cells, so every translation ``x -> g(x - shift)`` is an exact lattice shift.
    """

    grid: Grid
    p: float
    bases: tuple
    dilations: tuple
    shifts: tuple = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        object.__setattr__(self, "dilations", tuple(int(n) for n in self.dilations))
        object.__setattr__(self, "shifts", tuple(float(s) for s in self.shifts))
        if not self.bases or not self.dilations:
            raise ValueError("probe family needs at least one base and one dilation")

    def extended(self, octaves: int = EXTENSION_OCTAVES) -> "ProbeFamily":
        top = max(self.dilations)
        return replace(self, dilations=self.dilations + tuple(range(top + 1, top + octaves + 1)))

    def keys(self) -> list:
        return [(b, n, s) for b in range(len(self.bases)) for n in self.dilations
                for s in range(len(self.shifts))]

    def pid(self, key) -> str:
        b, n, s = key
        return f"{self.bases[b].label}|n={n}|shift={self.shifts[s]:g}"

    def make(self, key) -> Probe:
        b, n, s = key
        base = self.bases[b]
        width = base.width * 2.0 ** (-n)
        if width / self.grid.spacing < MIN_CELLS:
            raise ValueError(f"probe {self.pid(key)} is resolved by fewer than {MIN_CELLS} cells")
        fn = dilate_callable(base.function(self.grid.dim), n, self.p, self.grid.dim)
        vals = np.asarray(fn(*self.grid.coords()), dtype=complex)
        cells = int(round(self.shifts[s] * width / self.grid.spacing))
        if cells:
            vals = shift_values(vals, (-cells,) * self.grid.dim)
        f = SampledFunction(self.grid, vals)
        check_probe(f, self.pid(key))
        return Probe(key, self.pid(key), f)

    def probes(self) -> list:
        return _pmap(self.make, self.keys())


def check_probe(f: SampledFunction, name: str = "probe") -> None:
    """Raise unless ``f`` keeps all but 1e-8 of its energy in the inner half-box and
    in the resolvable bands."""
    if inner_energy_fraction(f) > SUPPORT_TOL:
        raise ValueError(f"{name} leaks energy outside the inner half-box")
    d = decompose(f, use_cache=False)
    tot = float(np.sum(np.abs(f.values) ** 2))
    if np.sum(np.abs(d.residual.values) ** 2) > GUARD_TOL * tot:
        raise ValueError(f"{name} carries energy beyond the resolvable bands")


# ---------------------------------------------------------------------------
# equivalence studies
# ---------------------------------------------------------------------------

def admissibility(spec: NormSpec) -> tuple:
    """``(threshold, admissible)``: the lower class exponent the equivalences need.

    B side: ``(d/p)(R_w + 1/Gamma_w - 1)``; F side: ``d R_w / p``.  The spec is
    admissible when the claimed lower exponent of ``phi`` exceeds it.
    """
    w = spec.effective_weight
    dim = w.grid.dim if w is not None else 1
    r_w, gamma_w = weight_exponents(w, spec.p)
    if spec.side == "B":
        thr = besov_threshold(r_w, gamma_w, spec.p, dim)
    else:
        thr = tl_threshold(r_w, spec.p, dim)
    return float(thr), bool(spec.phi.claimed_class[0] > thr)


def _spread(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(v.max() / v.min())


@dataclass(frozen=True)
class EquivalenceReport:
    variant_a: str
    variant_b: str
    probe_ids: tuple
    ratios: tuple
    extended_ids: tuple
    extended_ratios: tuple
    admissible: bool = True
    threshold: float = SPREAD_THRESHOLD
    tol: float = STABILITY_TOL

    def __post_init__(self):
        r = np.asarray(self.ratios + self.extended_ratios, dtype=float)
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("norm ratios must be positive and finite")

    @property
    def min(self) -> float:
        return float(min(self.ratios))

    @property
    def max(self) -> float:
        return float(max(self.ratios))

    @property
    def spread(self) -> float:
        return _spread(self.ratios)

    @property
    def extended_spread(self) -> float:
        return _spread(self.ratios + self.extended_ratios)

    @property
    def growth(self) -> float:
        """Relative growth of the spread under the extension."""
        return self.extended_spread / self.spread - 1.0

    @property
    def stable(self) -> bool:
        return self.extended_spread <= self.spread * (1.0 + self.tol)

    @property
    def verdict(self) -> bool:
        return self.spread < self.threshold and self.stable

    def to_dict(self) -> dict:
        return {"variant_a": self.variant_a, "variant_b": self.variant_b,
                "min": self.min, "max": self.max, "spread": self.spread,
                "extended_spread": self.extended_spread, "growth": self.growth,
                "stable": self.stable, "verdict": self.verdict, "admissible": self.admissible,
                "threshold": self.threshold, "tol": self.tol,
                "probes": [{"id": i, "ratio": r} for i, r in zip(self.probe_ids, self.ratios)],
                "extended_probes": [{"id": i, "ratio": r}
                                    for i, r in zip(self.extended_ids, self.extended_ratios)]}

    def csv_rows(self) -> list:
        rows = [(self.variant_a, self.variant_b, i, "base", r)
                for i, r in zip(self.probe_ids, self.ratios)]
        rows += [(self.variant_a, self.variant_b, i, "extension", r)
                 for i, r in zip(self.extended_ids, self.extended_ratios)]
        return rows


def norm_table(family: ProbeFamily, specs: dict, octaves: int = EXTENSION_OCTAVES) -> tuple:
    """Evaluate every spec once on every probe of the extended family.

    Returns ``(base_keys, extra_keys, table)`` with ``table[name][key]`` the
    norm; keys are sorted so that results never depend on scheduling.
    """
    ext = family.extended(octaves)
    base_keys = sorted(family.keys())
    extra_keys = sorted(set(ext.keys()) - set(base_keys))

    def run(key):
        f = ext.make(key).function
        return key, {name: compute_norm(f, s).total for name, s in specs.items()}

    results = sorted(_pmap(run, base_keys + extra_keys))
    table = {name: {k: vals[name] for k, vals in results} for name in specs}
    return base_keys, extra_keys, table


def _report(family, base_keys, extra_keys, table, a, b, admissible, threshold, tol):
    return EquivalenceReport(
        a, b,
        tuple(family.pid(k) for k in base_keys),
        tuple(table[a][k] / table[b][k] for k in base_keys),
        tuple(family.pid(k) for k in extra_keys),
        tuple(table[a][k] / table[b][k] for k in extra_keys),
        admissible, threshold, tol)


def equivalence_study(family: ProbeFamily, spec_a: NormSpec, spec_b: NormSpec,
                      threshold: float = SPREAD_THRESHOLD, tol: float = STABILITY_TOL,
                      octaves: int = EXTENSION_OCTAVES) -> EquivalenceReport:
    """Ratios ``||f||_A / ||f||_B`` over the family and its 2-octave extension."""
    adm = admissibility(spec_a)[1] and admissibility(spec_b)[1]
    if spec_a == spec_b:
        specs = {"A": spec_a}
        names = ("A", "A")
    else:
        specs = {"A": spec_a, "B": spec_b}
        names = ("A", "B")
    base, extra, table = norm_table(family, specs, octaves)
    rep = _report(family, base, extra, table, *names, adm, threshold, tol)
    return replace(rep, variant_a=spec_a.variant.value, variant_b=spec_b.variant.value)


@dataclass(frozen=True)
class SuiteReport:
    spec: NormSpec
    admissible: bool
    threshold_exponent: float
    reports: tuple

    @property
    def verdict(self) -> bool:
        return all(r.verdict for r in self.reports)

    def pair(self, a, b) -> EquivalenceReport:
        a, b = NormVariant(a).value, NormVariant(b).value
        for r in self.reports:
            if {r.variant_a, r.variant_b} == {a, b}:
                return r
        raise KeyError(f"pair ({a}, {b}) not in suite")

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "class_threshold": self.threshold_exponent,
                "verdict": self.verdict, "pairs": [r.to_dict() for r in self.reports]}

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant_a", "variant_b", "probe", "range", "ratio"])
        for r in self.reports:
            for row in r.csv_rows():
                w.writerow(row[:4] + (repr(float(row[4])),))
        return buf.getvalue()


DEFAULT_SUITE = (NormVariant.B_FREQ, NormVariant.Q0, NormVariant.Q2, NormVariant.Q3,
                 NormVariant.Q4, NormVariant.Q5, NormVariant.B_DIFF_LOCAL, NormVariant.B_DIFF_GLOBAL)


def equivalence_suite(family: ProbeFamily, spec: NormSpec, variants: Iterable = DEFAULT_SUITE,
                      peetre_r: Optional[float] = None, threshold: float = SPREAD_THRESHOLD,
                      tol: float = STABILITY_TOL, octaves: int = EXTENSION_OCTAVES) -> SuiteReport:
    """All pairwise equivalence reports among ``variants`` built from ``spec``.

    Each norm is evaluated once per probe.  ``peetre_r`` overrides the Peetre
    parameter of ``Q4``/``Q5``; any ``r`` in ``(0, R_{w,p})`` is admissible.
    """
    variants = [NormVariant(v) for v in variants]
    specs = {}
    for v in variants:
        kw = {"r": peetre_r} if v in (NormVariant.Q4, NormVariant.Q5) and peetre_r is not None else {}
        specs[v.value] = spec.with_variant(v, **kw)
    thr, adm = admissibility(spec)
    base, extra, table = norm_table(family, specs, octaves)
    reports = []
    for i, a in enumerate(variants):
        for b in variants[i + 1:]:
            reports.append(_report(family, base, extra, table, b.value, a.value, adm, threshold, tol))
    return SuiteReport(spec, adm, thr, tuple(reports))


# ---------------------------------------------------------------------------
# counterexample with power weights
# ---------------------------------------------------------------------------

def f0_callable(x):
    """Smooth bump with ``|f0| >= 1`` on ``(-1, 1)`` and support in ``(-2, 2)``."""
    return 1.4 * _bump(np.asarray(x, dtype=float) / 2.0)


def _linear_fit(x, y) -> tuple:
    """Least-squares ``(slope, intercept, r2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), r2


@dataclass(frozen=True)
class CounterexampleReport:
    alpha: float
    theta: float
    p: float
    q: float
    lp_ns: tuple
    lp_ratios: tuple          # measured / predicted L_p(w) norms
    seminorm_ns: tuple
    seminorm_ratios: tuple    # measured / predicted homogeneous seminorms
    cap_exponents: tuple      # H = 2^k
    cap_integrals: tuple      # q-th power of the capped seminorm
    fit_exponents: tuple      # k values whose increments enter the fit
    growth_exponent: float    # per octave of H
    expected_exponent: float
    log_slope: float          # slope of the capped integral against k
    log_r2: float
    lp_tol: float = 0.02
    seminorm_tol: float = 0.05
    exponent_tol: float = 0.10

    @property
    def lp_ok(self) -> bool:
        return all(abs(r - 1.0) <= self.lp_tol for r in self.lp_ratios)

    @property
    def seminorm_ok(self) -> bool:
        return all(abs(r - 1.0) <= self.seminorm_tol for r in self.seminorm_ratios)

    @property
    def growth_kind(self) -> str:
        if self.expected_exponent > 0:
            return "power"
        return "logarithmic" if self.expected_exponent == 0 else "bounded"

    @property
    def growth_ok(self) -> bool:
        if self.growth_kind == "power":
            return abs(self.growth_exponent / self.expected_exponent - 1.0) <= self.exponent_tol
        if self.growth_kind == "logarithmic":
            return self.log_slope > 0 and self.log_r2 > 0.95
        return abs(self.growth_exponent) < 0.1 or self.growth_exponent < 0

    @property
    def strict_inclusion(self) -> bool:
        """The global difference seminorm is unbounded on a family bounded in the
        band norm, so the global space is strictly smaller."""
        return self.lp_ok and self.seminorm_ok and self.growth_ok and self.growth_kind != "bounded"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        d.update(lp_ok=self.lp_ok, seminorm_ok=self.seminorm_ok, growth_kind=self.growth_kind,
                 growth_ok=self.growth_ok, strict_inclusion=self.strict_inclusion)
        return d


def counterexample_run(alpha: float = 0.5, theta: float = 0.1, p: float = 2.0, q: float = 2.0,
                       n_max: int = 4, dilation_grid: Optional[Grid] = None,
                       cap_grid: Optional[Grid] = None, fit_octaves: int = 3,
                       n_seminorm: int = 3) -> CounterexampleReport:
    """Dilation laws and cap growth for ``w = |x|^alpha``, ``phi = power(theta)``.

    The dilation laws for ``f_n = 2^(n/p) f0(2^n x)`` are measured on
    ``dilation_grid`` (default ``R = 256``, ``N = 2^17``).  The growth of the
    homogeneous global difference seminorm of ``f0`` capped at ``H = 2^k`` is
    measured on ``cap_grid`` (default ``R = 2^13``, ``N = 2^15``, so that
    ``H`` reaches ``2^12``); the exponent is the slope of ``log2`` of the
    per-octave increments over the last ``fit_octaves`` octaves.
    """
    if not 0 < alpha < p - 1:
        raise ValueError("alpha must lie in (0, p - 1)")
    if theta > alpha / p + 1e-12:
        raise ValueError("the counterexample needs theta <= alpha / p")
    dg = dilation_grid or make_grid(1, 256.0, 2 ** 17)
    cg = cap_grid or make_grid(1, 2.0 ** 13, 2 ** 15)
    if 4.0 * 2.0 ** (-n_max) / dg.spacing < MIN_CELLS:
        raise ValueError(f"n_max = {n_max} is not resolved on the dilation grid")
    phi = ScalingFunction.power(theta)
    w = Weight.power(dg, alpha)

    def fn(n):
        return SampledFunction.from_callable(dg, dilate_callable(f0_callable, n, p, 1))

    lp_ns = tuple(range(n_max + 1))
    lp0 = weighted_lp_norm(fn(0), w, p)
    lp_ratios = tuple(weighted_lp_norm(fn(n), w, p) / (lp0 * 2.0 ** (-n * alpha / p)) for n in lp_ns)

    spec = NormSpec(p, q, phi, 1, w, NormVariant.B_FREQ, homogeneous=True)
    sn = tuple(range(min(n_seminorm, n_max) + 1))
    s0 = compute_norm(fn(0), spec).total
    sem = tuple(compute_norm(fn(n), spec).total / (s0 * 2.0 ** (n * (theta - alpha / p))) for n in sn)

    kmax = int(math.floor(math.log2(cg.R / 2)))
    cspec = NormSpec(p, q, phi, 1, Weight.power(cg, alpha), NormVariant.B_DIFF_GLOBAL,
                     homogeneous=True, dense_offsets=cg.N)
    f = SampledFunction.from_callable(cg, f0_callable)
    r, mu, val = diff_profile(f, cspec, 2.0 ** kmax)
    ks = tuple(range(0, kmax + 1))
    cum = np.cumsum(mu * val)
    integ = tuple(float(cum[np.searchsorted(r, 2.0 ** k * (1 + 1e-9), side="right") - 1]) for k in ks)
    incr = np.diff(integ)
    fit_k = tuple(range(kmax - fit_octaves, kmax))
    if min(fit_k) < 0 or np.any(incr[list(fit_k)] <= 0):
        raise ValueError("cap grid too small for the growth fit")
    expo = _linear_fit(fit_k, np.log2(incr[list(fit_k)]))[0]
    lin = _linear_fit(ks[2:], integ[2:])
    return CounterexampleReport(alpha, theta, p, q, lp_ns, lp_ratios, sn, sem, ks, integ, fit_k,
                                expo, q * (alpha / p - theta), lin[0], lin[2])


# ---------------------------------------------------------------------------
# embedding into generalized Hoelder spaces
# ---------------------------------------------------------------------------

def holder_norm(f: SampledFunction, phi_tilde: ScalingFunction, L: int) -> float:
    """``||f||_inf + sup_{|h| <= 1} phi_tilde(1/|h|) ||D_h^L f||_inf`` over lattice and
    sub-cell offsets."""
    spec = NormSpec(INF, INF, phi_tilde, L, None, NormVariant.B_DIFF_LOCAL,
                    dense_offsets=f.grid.N)
    return compute_norm(f, spec).total


@dataclass(frozen=True)
class EmbeddingReport:
    phi_tilde_class: dict
    admissible: bool
    probe_ids: tuple
    holder: tuple
    f_norm: tuple
    extended_ids: tuple
    extended_holder: tuple
    extended_f_norm: tuple
    threshold: float = SPREAD_THRESHOLD
    tol: float = STABILITY_TOL

    @property
    def ratios(self) -> tuple:
        return tuple(a / b for a, b in zip(self.holder, self.f_norm))

    @property
    def extended_ratios(self) -> tuple:
        return tuple(a / b for a, b in zip(self.extended_holder, self.extended_f_norm))

    @property
    def constant(self) -> float:
        return max(self.ratios)

    @property
    def extended_constant(self) -> float:
        return max(self.ratios + self.extended_ratios)

    @property
    def spread(self) -> float:
        return _spread(self.ratios)

    @property
    def stable(self) -> bool:
        return self.extended_constant <= self.constant * (1 + self.tol)

    @property
    def verdict(self) -> bool:
        return self.admissible and self.spread < self.threshold and self.stable

    def to_dict(self) -> dict:
        return {"phi_tilde_class": self.phi_tilde_class, "admissible": self.admissible,
                "constant": self.constant, "extended_constant": self.extended_constant,
                "spread": self.spread, "stable": self.stable, "verdict": self.verdict,
                "probes": [{"id": i, "holder": a, "f_norm": b, "ratio": a / b}
                           for i, a, b in zip(self.probe_ids, self.holder, self.f_norm)],
                "extended_probes": [{"id": i, "holder": a, "f_norm": b, "ratio": a / b}
                                    for i, a, b in zip(self.extended_ids, self.extended_holder,
                                                       self.extended_f_norm)]}


def embedding_check(family: ProbeFamily, phi: ScalingFunction, p: float, q: float, L: int,
                    weight: Optional[Weight] = None, octaves: int = EXTENSION_OCTAVES) -> EmbeddingReport:
    """Compare ``||f||_{C^{phi~}_L}`` with ``||f||_{F^phi_{p,q}}``, ``phi~ = phi / lam^(d/p)``.

    Raises when ``phi~`` does not look like a member of ``I_o(0, M)``.
    """
    d = family.grid.dim
    phi_t = phi.sobolev_shift(d, p)
    cls = class_check(phi_t, 0.0, float(L))
    if not cls.consistent_I_o:
        raise ValueError("phi / lam^(d/p) is not in I_o(0, L): embedding hypothesis fails")
    spec = NormSpec(p, q, phi, L, weight, NormVariant.F_FREQ)

    def run(key):
        f = ext.make(key).function
        return key, holder_norm(f, phi_t, L), compute_norm(f, spec).total

    ext = family.extended(octaves)
    base_keys = sorted(family.keys())
    extra_keys = sorted(set(ext.keys()) - set(base_keys))
    res = dict((k, (a, b)) for k, a, b in _pmap(run, base_keys + extra_keys))
    return EmbeddingReport(cls.to_dict(), True,
                           tuple(ext.pid(k) for k in base_keys),
                           tuple(res[k][0] for k in base_keys), tuple(res[k][1] for k in base_keys),
                           tuple(ext.pid(k) for k in extra_keys),
                           tuple(res[k][0] for k in extra_keys), tuple(res[k][1] for k in extra_keys))


# ---------------------------------------------------------------------------
# the inequality chain
# ---------------------------------------------------------------------------

def sup_difference_quantity(f: SampledFunction, spec: NormSpec, global_range: bool = False) -> float:
    """Difference quantity with ``||D_h^L f||`` replaced by ``sup_{|rho| <= |h|} ||D_rho^L f||``.

    The sup runs over all lattice offsets and the sub-cell nodes; on the F side
    it is taken pointwise.  ``global_range`` extends ``|h|`` to the global cap.
    """
    v = NormVariant.B_DIFF_GLOBAL if global_range else NormVariant.B_DIFF_LOCAL
    if spec.side == "F":
        v = NormVariant.F_DIFF_GLOBAL if global_range else NormVariant.F_DIFF_LOCAL
    s = replace(spec, variant=v, dense_offsets=f.grid.N)
    grid = f.grid
    items = sorted(_diff_family(f, s, diff_cap(s, grid)), key=lambda it: it[0])
    lp = 0.0 if s.homogeneous else lp_norm_values(f.values, grid, s.p, s.effective_weight)

    groups = []
    for it in items:
        if groups and abs(it[0] - groups[-1][0][0]) <= 1e-12 * max(1.0, it[0]):
            groups[-1].append(it)
        else:
            groups.append([it])

    if s.side == "B":
        acc, best = 0.0, 0.0
        for group in groups:
            best = max([best] + [lp_norm_values(it[3], grid, s.p, s.effective_weight) for it in group])
            for _, mu, fac, _ in group:
                c = fac * best
                acc = max(acc, c) if s.q == INF else acc + mu * c ** s.q
        term = acc if s.q == INF else acc ** (1.0 / s.q)
        return float(lp + term)

    def running():
        best = np.zeros(grid.shape)
        for group in groups:
            best = np.maximum(best, np.max([np.abs(it[3]) for it in group], axis=0))
            for r, mu, fac, _ in group:
                yield r, mu, fac, best

    return float(lp + _aggregate(s, grid, running())[0])


@dataclass(frozen=True)
class LemmaReport:
    links: tuple      # names of the chain links
    constants: tuple  # empirical constant per link, base family
    extended: tuple   # same over the 2-octave extension
    by_construction: tuple
    tol: float = STABILITY_TOL

    @property
    def passed(self) -> tuple:
        out = []
        for c, e, exact in zip(self.constants, self.extended, self.by_construction):
            if exact:
                out.append(e <= 1.0 + 1e-9)
            else:
                out.append(math.isfinite(e) and e <= c * (1.0 + self.tol))
        return tuple(out)

    def to_dict(self) -> dict:
        return {"links": [{"link": n, "constant": c, "extended_constant": e,
                           "by_construction": b, "passed": ok}
                          for n, c, e, b, ok in zip(self.links, self.constants, self.extended,
                                                    self.by_construction, self.passed)]}


def lemma_inequality_suite(family: ProbeFamily, spec: NormSpec,
                           octaves: int = EXTENSION_OCTAVES) -> LemmaReport:
    """Empirical constants of ``X3 <~ ||f|| <~ X_0 <= X_1 <~ X5`` (difference-side
    quantities ``X_0``/``X_1`` carry the inner sup over ``|rho| <= |h|``)."""
    side = spec.side
    local = NormVariant.B_DIFF_LOCAL if side == "B" else NormVariant.F_DIFF_LOCAL
    # same (complete) offset set as the sup quantities, so the middle links are exact
    s_norm = spec.with_variant(local, dense_offsets=family.grid.N)
    s3 = spec.with_variant(NormVariant.Q3, side=side)
    s5 = spec.with_variant(NormVariant.Q5, side=side)

    def run(key):
        f = ext.make(key).function
        x3 = compute_norm(f, s3).total
        nm = compute_norm(f, s_norm).total
        c0 = sup_difference_quantity(f, s_norm, False)
        c1 = sup_difference_quantity(f, s_norm, True)
        x5 = compute_norm(f, s5).total
        return key, (x3 / nm, nm / c0, c0 / c1, c1 / x5)

    ext = family.extended(octaves)
    base_keys = sorted(family.keys())
    extra_keys = sorted(set(ext.keys()) - set(base_keys))
    res = dict(_pmap(run, base_keys + extra_keys))
    base = np.array([res[k] for k in base_keys])
    allr = np.array([res[k] for k in base_keys + extra_keys])
    names = ("X3 <~ norm", "norm <= X_0", "X_0 <= X_1", "X_1 <~ X5")
    return LemmaReport(names, tuple(float(c) for c in base.max(axis=0)),
                       tuple(float(c) for c in allr.max(axis=0)), (False, True, True, False))


# ---------------------------------------------------------------------------
# maximal-function bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeetreDominationReport:
    r: float
    js: tuple
    max_ratios: tuple
    tol: float = 0.20

    @property
    def finite(self) -> bool:
        return all(math.isfinite(m) for m in self.max_ratios)

    @property
    def stable(self) -> bool:
        mid = float(np.median(self.max_ratios))
        return all(abs(m / mid - 1.0) <= self.tol for m in self.max_ratios)

    def to_dict(self) -> dict:
        return {"r": self.r, "lambda": 1.0 / self.r, "js": list(self.js),
                "max_ratios": list(self.max_ratios), "finite": self.finite, "stable": self.stable}


def peetre_domination(probes: Sequence[SampledFunction], r: float, js: Sequence[int],
                      lattice=None) -> PeetreDominationReport:
    """``max_x M*_{j,d/r} f / (M(|Delta_j f|^r))^(1/r)`` per band ``j``, maximised over probes.

    Points where the band vanishes to round-off (below ``1e-12`` of its maximum
    in the denominator) are skipped.
    """
    out = []
    for j in js:
        best = 0.0
        for f in probes:
            dec = decompose(f)
            lam = f.grid.dim / r
            num = np.abs(peetre_maximal(dec, PeetreSpec(j, lam)).values)
            den = maximal_power_mean(dec.band(j).values, f.grid, r, lattice)
            ok = den > 1e-12 * den.max()
            best = max(best, float(np.max(num[ok] / den[ok])))
        out.append(best)
    return PeetreDominationReport(float(r), tuple(js), tuple(out))


@dataclass(frozen=True)
class ShiftedGrowthReport:
    zs: tuple
    probe_norms: tuple
    slope: float
    r: float
    s: float
    p: float
    dim: int
    slack: float = 0.3

    @property
    def bound(self) -> float:
        return self.dim / self.p * (self.p / self.r + 1.0 / self.s - 1.0)

    @property
    def passed(self) -> bool:
        return self.slope <= self.bound + self.slack

    def to_dict(self) -> dict:
        return {"z": list(self.zs), "probe_norms": list(self.probe_norms), "slope": self.slope,
                "r": self.r, "s": self.s, "bound": self.bound, "slack": self.slack,
                "passed": self.passed}


def shifted_growth(probes: Sequence[SampledFunction], w: Optional[Weight], p: float, r: float,
                   s: float, zs: Sequence[float] = (0, 1, 2, 4, 8, 16), lattice=None) -> ShiftedGrowthReport:
    """Fit ``log ||M^z||`` (probe lower bound) against ``log(1 + |z|)``."""
    dim = probes[0].grid.dim
    norms = tuple(shifted_operator_norm_probe((float(z),) * dim, w, p, probes, lattice) for z in zs)
    slope = _linear_fit(np.log1p(np.asarray(zs, dtype=float) * math.sqrt(dim)), np.log(norms))[0]
    return ShiftedGrowthReport(tuple(float(z) for z in zs), norms, slope, float(r), float(s),
                               float(p), dim)
