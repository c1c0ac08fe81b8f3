"""Variable smoothness scaling functions and their class diagnostics.

A scaling function ``phi`` is positive on ``(0, inf)``.  Its submultiplicative
envelope ``s_phi(lam) = sup_t phi(lam*t)/phi(t)`` decides membership in the
classes ``I(a, b)`` (``O``-bounds) and ``I_o(a, b)`` (``o``-bounds) at the two
ends ``lam -> 0`` and ``lam -> inf``.

Everything is evaluated in log space: a scaling function is represented by
``log phi`` as a function of ``log lam``, which keeps ``lam`` up to ``2**50``
free of overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

LN2 = math.log(2.0)

# probe range of the sup over t
T_OCTAVES = 20
# fit windows, in octaves, for the small- and large-lambda exponents
SMALL_WINDOW = (-20.0, -10.0)
LARGE_WINDOW = (10.0, 20.0)
CLASS_MARGIN = 0.05
EPS_STEP = 0.01


@dataclass(frozen=True)
class ScalingFunction:
    """A scaling function given through ``log phi(exp(u))``.

    Parameters
    ----------
    log_eval : callable
        Vectorised map ``u -> log phi(exp(u))``.
    family : str
        ``"power"``, ``"power_log"``, ``"table"`` or ``"custom"``.
    params : dict
        Family parameters, echoed into configs and reports.
    claimed_class : (a, b)
        The class the caller asserts ``phi`` belongs to.
    """

    log_eval: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    family: str
    params: dict
    claimed_class: tuple

    def __post_init__(self):
        a, b = self.claimed_class
        if a > b:
            raise ValueError(f"claimed class needs a <= b, got ({a}, {b})")

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(self.log_eval(np.log(lam)))

    def log(self, lam):
        return self.log_eval(np.log(np.asarray(lam, dtype=float)))

    # -- families ---------------------------------------------------------

    @classmethod
    def power(cls, s: float, claimed_class: Optional[tuple] = None) -> "ScalingFunction":
        s = float(s)
        return cls(lambda u: s * np.asarray(u, dtype=float), "power", {"s": s},
                   tuple(claimed_class) if claimed_class else (s, s))

    @classmethod
    def power_log(cls, s: float, b: float, claimed_class: Optional[tuple] = None) -> "ScalingFunction":
        """``lam**s * (1 + max(log lam, 0))**b``."""
        s, b = float(s), float(b)

        def log_eval(u):
            u = np.asarray(u, dtype=float)
            return s * u + b * np.log1p(np.maximum(u, 0.0))

        if claimed_class is None:
            claimed_class = (min(s, s + b), max(s, s + b))
        return cls(log_eval, "power_log", {"s": s, "b": b}, tuple(claimed_class))

    @classmethod
    def table(cls, lams: Sequence[float], values: Sequence[float],
              claimed_class: tuple = (0.0, 1.0)) -> "ScalingFunction":
        """Log-linear interpolation of ``(lam, phi(lam))`` pairs.

        Outside the table the end slopes are continued.
        """
        lu = np.log(np.asarray(lams, dtype=float))
        lv = np.log(np.asarray(values, dtype=float))
        order = np.argsort(lu)
        lu, lv = lu[order], lv[order]
        if lu.size < 2 or np.any(np.diff(lu) <= 0):
            raise ValueError("table needs at least two distinct lambda values")
        s_lo = (lv[1] - lv[0]) / (lu[1] - lu[0])
        s_hi = (lv[-1] - lv[-2]) / (lu[-1] - lu[-2])

        def log_eval(u):
            u = np.asarray(u, dtype=float)
            out = np.interp(u, lu, lv)
            out = np.where(u < lu[0], lv[0] + s_lo * (u - lu[0]), out)
            return np.where(u > lu[-1], lv[-1] + s_hi * (u - lu[-1]), out)

        return cls(log_eval, "table",
                   {"lambda": np.exp(lu).tolist(), "phi": np.exp(lv).tolist()},
                   tuple(claimed_class))

    @classmethod
    def custom(cls, fn: Callable, claimed_class: tuple, name: str = "custom") -> "ScalingFunction":
        def log_eval(u):
            return np.log(fn(np.exp(np.asarray(u, dtype=float))))

        return cls(log_eval, "custom", {"name": name}, tuple(claimed_class))

    # -- derived functions ---------------------------------------------------

    def times_power(self, alpha: float) -> "ScalingFunction":
        """``lam**alpha * phi(lam)``; the class shifts by ``alpha``."""
        a, b = self.claimed_class
        base = self.log_eval
        return ScalingFunction(lambda u: alpha * np.asarray(u, dtype=float) + base(u), "custom",
                               {"base": self.describe(), "times_power": alpha},
                               (a + alpha, b + alpha))

    def raised(self, alpha: float) -> "ScalingFunction":
        """``phi(lam)**alpha``; the class scales by ``alpha``."""
        a, b = self.claimed_class
        base = self.log_eval
        cc = (alpha * a, alpha * b) if alpha >= 0 else (alpha * b, alpha * a)
        return ScalingFunction(lambda u: alpha * base(u), "custom",
                               {"base": self.describe(), "raised": alpha}, cc)

    def composed_power(self, alpha: float) -> "ScalingFunction":
        """``phi(lam**alpha)``."""
        a, b = self.claimed_class
        base = self.log_eval
        cc = (alpha * a, alpha * b) if alpha >= 0 else (alpha * b, alpha * a)
        return ScalingFunction(lambda u: base(alpha * np.asarray(u, dtype=float)), "custom",
                               {"base": self.describe(), "composed_power": alpha}, cc)

    def sobolev_shift(self, d: int, p: float) -> "ScalingFunction":
        """``phi(lam) / lam**(d/p)``, the smoothness left after trading integrability."""
        return self.times_power(-d / p)

    def describe(self) -> dict:
        d = {"family": self.family, **self.params}
        d["claimed_class"] = list(self.claimed_class)
        return d


def scaling_from_config(cfg: dict) -> ScalingFunction:
    """Build a scaling function from ``{family: ..., params...}``."""
    fam = cfg.get("family", "power")
    claimed = cfg.get("claimed_class")
    if fam == "power":
        return ScalingFunction.power(cfg["s"], claimed)
    if fam == "power_log":
        return ScalingFunction.power_log(cfg["s"], cfg["b"], claimed)
    if fam == "table":
        return ScalingFunction.table(cfg["lambda"], cfg["phi"], tuple(claimed or (0.0, 1.0)))
    raise ValueError(f"unknown scaling family {fam!r}")


# ---------------------------------------------------------------------------
# envelope and class tests
# ---------------------------------------------------------------------------

def _t_grid(K: int) -> np.ndarray:
    """log t on ``K`` points per octave over ``[2^-20, 2^20]``."""
    return LN2 * np.arange(-T_OCTAVES * K, T_OCTAVES * K + 1) / K


def log_s_phi(phi: ScalingFunction, log_lam, K: int = 64) -> np.ndarray:
    """``log s_phi`` at ``log_lam`` (vectorised), lower-bound semantics."""
    if K < 64:
        raise ValueError("probe resolution K must be at least 64")
    lt = _t_grid(K)
    ll = np.atleast_1d(np.asarray(log_lam, dtype=float))
    base = phi.log_eval(lt)
    out = np.empty(ll.shape)
    for i, u in enumerate(ll.ravel()):
        out.flat[i] = np.max(phi.log_eval(u + lt) - base)
    return out


def s_phi(phi: ScalingFunction, lam, K: int = 64):
    """Submultiplicative envelope ``max_t phi(lam*t)/phi(t)``.

    The max runs over ``K`` log-spaced points per octave in ``[2^-20, 2^20]``
    so the result is a lower bound of the true supremum.  Overflow gives
    ``inf``.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0):
        raise ValueError("lambda must be positive")
    with np.errstate(over="ignore"):
        val = np.exp(log_s_phi(phi, np.log(lam_arr), K))
    if lam_arr.ndim == 0:
        return float(val[0])
    return val.reshape(lam_arr.shape)


@dataclass(frozen=True)
class ClassReport:
    verdict: str  # "consistent_I_o", "consistent_I" or "inconsistent"
    small_exponent: float
    large_exponent: float
    a: float
    b: float
    margin: float

    @property
    def consistent_I(self) -> bool:
        return self.verdict in ("consistent_I", "consistent_I_o")

    @property
    def consistent_I_o(self) -> bool:
        return self.verdict == "consistent_I_o"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "small_exponent": self.small_exponent,
                "large_exponent": self.large_exponent, "a": self.a, "b": self.b,
                "margin": self.margin}


def fitted_exponents(phi: ScalingFunction, K: int = 64, points: int = 41) -> tuple:
    """Least-squares slopes of ``log s_phi`` against ``log lam`` on both windows."""
    slopes = []
    for lo, hi in (SMALL_WINDOW, LARGE_WINDOW):
        ll = LN2 * np.linspace(lo, hi, points)
        ls = log_s_phi(phi, ll, K)
        if not np.all(np.isfinite(ls)):
            raise ValueError("s_phi is not finite on the probe range")
        slopes.append(float(np.polyfit(ll, ls, 1)[0]))
    return tuple(slopes)


def class_check(phi: ScalingFunction, a: float, b: float, K: int = 64,
                margin: float = CLASS_MARGIN) -> ClassReport:
    """Classify ``phi`` against ``I(a, b)`` / ``I_o(a, b)`` from fitted exponents."""
    if a > b:
        raise ValueError("need a <= b")
    a_hat, b_hat = fitted_exponents(phi, K)
    if a_hat > a + margin and b_hat < b - margin:
        verdict = "consistent_I_o"
    elif a_hat >= a - margin and b_hat <= b + margin:
        verdict = "consistent_I"
    else:
        verdict = "inconsistent"
    return ClassReport(verdict, a_hat, b_hat, float(a), float(b), margin)


@dataclass(frozen=True)
class Sandwich:
    epsilon: float
    lower_constant: float
    upper_constant: float


def ratio_envelopes(phi: ScalingFunction, K: int = 64, lam_per_octave: int = 8,
                    octaves: int = 20) -> tuple:
    """For ``lam = 2^(m/lam_per_octave) >= 1`` the min and max over ``t`` of ``log(phi(lam t)/phi(t))``."""
    lt = _t_grid(K)
    ll = LN2 * np.arange(octaves * lam_per_octave + 1) / lam_per_octave
    base = phi.log_eval(lt)
    lo = np.empty(ll.size)
    hi = np.empty(ll.size)
    for i, u in enumerate(ll):
        r = phi.log_eval(u + lt) - base
        lo[i] = r.min()
        hi[i] = r.max()
    return ll, lo, hi


def sandwich_constants(phi: ScalingFunction, a: float, b: float, K: int = 64,
                       rtol: float = 1e-9) -> Sandwich:
    """Largest ``eps`` on the 0.01 lattice with ``C1 lam^(a+eps) <= phi(lam t)/phi(t) <= C2 lam^(b-eps)``.

    A candidate ``eps`` is accepted when the optimal constants over
    ``lam in [1, 2^20]`` equal those over ``[1, 2^10]``: a bound that only holds
    through a constant still drifting at the end of the probe range is treated
    as failing.  ``eps = 0`` signals that no positive value passed.
    """
    ll, lo, hi = ratio_envelopes(phi, K)
    half = ll <= ll[-1] / 2 + 1e-12

    def constants(eps):
        lower = lo - (a + eps) * ll
        upper = hi - (b - eps) * ll
        return lower.min(), lower[half].min(), upper.max(), upper[half].max()

    def ok(eps):
        c1, c1h, c2, c2h = constants(eps)
        return abs(c1 - c1h) <= rtol * max(1.0, abs(c1)) and abs(c2 - c2h) <= rtol * max(1.0, abs(c2))

    best = 0
    k = 1
    while (k * EPS_STEP) <= (b - a) / 2 + 1e-12 and ok(k * EPS_STEP):
        best = k
        k += 1
    eps = round(best * EPS_STEP, 10)
    c1, _, c2, _ = constants(eps)
    return Sandwich(eps, float(math.exp(c1)), float(math.exp(c2)))
