"""Littlewood-Paley projections and continuous-scale kernels as Fourier multipliers.

``S_0`` has multiplier ``phi_hat(|xi|)`` and the band ``Delta_j`` has
``psi_hat(2^-j |xi|)`` with ``psi_hat(r) = phi_hat(r) - phi_hat(2r)``, so band
``j`` lives in ``2^(j-1) <= |xi| <= 2^(j+1)`` and the bands telescope to 1.
"""

from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import comb

from .grid import Grid, SampledFunction, apply_multiplier, forward_transform

LN2 = math.log(2.0)
DEFAULT_NODES_PER_OCTAVE = 16


def _smooth_step(t: np.ndarray, steepness: float) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-steepness / t[pos])
    return out


@dataclass(frozen=True)
class LPSymbol:
    """Radial low-pass profile equal to 1 on ``|xi| <= 1`` and 0 on ``|xi| >= 2``.

    On ``1 < r < 2`` the profile is ``h(2 - r) / (h(2 - r) + h(r - 1))`` with
    ``h(t) = exp(-steepness / t)``, which is smooth and strictly decreasing.
    """

    steepness: float = 1.0

    def phi_hat(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        a = _smooth_step(2.0 - r, self.steepness)
        b = _smooth_step(r - 1.0, self.steepness)
        out = np.where(r <= 1.0, 1.0, 0.0)
        mid = (r > 1.0) & (r < 2.0)
        out = out.astype(float)
        out[mid] = a[mid] / (a[mid] + b[mid])
        return out

    def psi_hat(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.phi_hat(r) - self.phi_hat(2.0 * r)

    def band(self, r, j: int) -> np.ndarray:
        """Multiplier of ``Delta_j`` at radial frequency ``r``."""
        return self.psi_hat(np.asarray(r, dtype=float) * 2.0 ** (-j))

    def psi_L(self, r, t: float, L: int) -> np.ndarray:
        """Multiplier of ``psi^L_{1/t}``: ``sum_k C(L,k)(-1)^(L-k) psi_hat(t k r)``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        for k in range(1, L + 1):
            out = out + comb(L, k, exact=True) * (-1) ** (L - k) * self.psi_hat(t * k * r)
        return out

    def Psi(self, r, j: int, nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE) -> np.ndarray:
        """Multiplier of ``Psi_j = sum_{i=-1}^{2} int_{2^(j-1)}^{2^j} psi_{2^i s} ds/s``.

        ``psi_s`` has multiplier ``psi_hat(xi/s)``.  Each octave integral is a
        trapezoid rule in ``log s`` with ``nodes_per_octave`` intervals.
        """
        r = np.asarray(r, dtype=float)
        K = int(nodes_per_octave)
        u = np.arange(K + 1) / K
        wts = np.full(K + 1, LN2 / K)
        wts[0] = wts[-1] = LN2 / (2 * K)
        out = np.zeros(r.shape)
        for i in range(-1, 3):
            for uk, wk in zip(u, wts):
                s = 2.0 ** (i + j - 1 + uk)
                out = out + wk * self.psi_hat(r / s)
        return out


def build_symbol(steepness: float = 1.0) -> LPSymbol:
    if not steepness > 0:
        raise ValueError("steepness must be positive")
    return LPSymbol(float(steepness))


def band_range(grid: Grid) -> tuple:
    """``(j_min, j_max)``: bands with lattice support, capped below the Nyquist guard.

    ``j_max`` is the largest ``j`` with ``2^(j+1) <= pi N / (2R)``; ``j_min`` the
    smallest ``j`` whose annulus contains a nonzero lattice frequency.
    """
    j_max = int(math.floor(math.log2(grid.nyquist))) - 1
    xi_min = math.pi / grid.R
    j_min = int(math.floor(math.log2(xi_min) - 1.0)) + 1
    return j_min, j_max


@dataclass(frozen=True)
class LPDecomposition:
    source: SampledFunction
    symbol: LPSymbol
    s0: SampledFunction
    bands: dict
    residual: SampledFunction
    j_min: int
    j_max: int

    def band(self, j: int) -> SampledFunction:
        if j not in self.bands:
            raise KeyError(f"band {j} outside the resolvable range [{self.j_min}, {self.j_max}]")
        return self.bands[j]

    def reconstruct(self) -> SampledFunction:
        """``S_0 f + sum_{j>=1} Delta_j f`` (without the residual above the guard)."""
        vals = self.s0.values.copy()
        for j, b in self.bands.items():
            if j >= 1:
                vals = vals + b.values
        return SampledFunction(self.source.grid, vals)

    def high_bands(self) -> list:
        return [j for j in sorted(self.bands) if j >= 1]


_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_cache_lock = threading.Lock()


def decompose(f: SampledFunction, symbol: Optional[LPSymbol] = None,
              use_cache: bool = True) -> LPDecomposition:
    """Split ``f`` into ``S_0 f`` and the bands ``Delta_j f``, ``j_min <= j <= j_max``.

    Frequencies above ``2^(j_max+1)`` are left in ``residual``; the bands are
    zero there by construction.
    """
    symbol = symbol or LPSymbol()
    if use_cache:
        with _cache_lock:
            hit = _cache.get(f, {}).get(symbol)
        if hit is not None:
            return hit
    grid = f.grid
    coeffs = forward_transform(f)
    r = grid.frequency_norm()
    j_min, j_max = band_range(grid)
    s0 = SampledFunction(grid, apply_multiplier(f, symbol.phi_hat(r), coeffs))
    bands = {}
    for j in range(j_min, j_max + 1):
        bands[j] = SampledFunction(grid, apply_multiplier(f, symbol.band(r, j), coeffs))
    top = symbol.phi_hat(r * 2.0 ** (-j_max))
    residual = SampledFunction(grid, apply_multiplier(f, 1.0 - top, coeffs))
    out = LPDecomposition(f, symbol, s0, bands, residual, j_min, j_max)
    if use_cache:
        with _cache_lock:
            _cache.setdefault(f, {})[symbol] = out
    return out


def _check_scale(grid: Grid, t: float):
    if not t > 0:
        raise ValueError("scale t must be positive")
    if 1.0 / (2.0 * t) > grid.nyquist:
        raise ValueError(f"scale t={t} resolves frequencies beyond the Nyquist limit")


def psi_kernel_apply(f: SampledFunction, t: float, symbol: Optional[LPSymbol] = None,
                     coeffs: Optional[np.ndarray] = None) -> SampledFunction:
    """``psi_{1/t} * f``: the multiplier ``psi_hat(t |xi|)``."""
    symbol = symbol or LPSymbol()
    _check_scale(f.grid, t)
    r = f.grid.frequency_norm()
    return SampledFunction(f.grid, apply_multiplier(f, symbol.psi_hat(t * r), coeffs))


def psi_L_kernel_apply(f: SampledFunction, t: float, L: int, symbol: Optional[LPSymbol] = None,
                       coeffs: Optional[np.ndarray] = None) -> SampledFunction:
    """``psi^L_{1/t} * f`` as one combined multiplier."""
    symbol = symbol or LPSymbol()
    if L < 1:
        raise ValueError("L must be a positive integer")
    _check_scale(f.grid, t)
    r = f.grid.frequency_norm()
    return SampledFunction(f.grid, apply_multiplier(f, symbol.psi_L(r, t, L), coeffs))


def Psi_j_apply(f: SampledFunction, j: int, symbol: Optional[LPSymbol] = None,
                nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE) -> SampledFunction:
    symbol = symbol or LPSymbol()
    # the widest kernel in Psi_j is psi_{2^(j+2)}, supported up to 2^(j+3)
    _check_scale(f.grid, 2.0 ** (-(j + 1)))
    r = f.grid.frequency_norm()
    return SampledFunction(f.grid, apply_multiplier(f, symbol.Psi(r, j, nodes_per_octave)))


def scale_nodes(grid: Grid, nodes_per_octave: int = DEFAULT_NODES_PER_OCTAVE) -> tuple:
    """Log-trapezoid nodes ``t`` and weights for ``int ... dt/t`` over the resolvable range.

    The range is ``t in [2^-(j_max+1), 2^-(j_min-1)]``, one octave past every
    resolvable band on each side.
    """
    j_min, j_max = band_range(grid)
    K = int(nodes_per_octave)
    u = np.arange((j_min - 1) * K, (j_max + 1) * K + 1) / K
    t = 2.0 ** (-u)
    wts = np.full(t.size, LN2 / K)
    wts[0] = wts[-1] = LN2 / (2 * K)
    return t, wts
