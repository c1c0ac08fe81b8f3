"""Muckenhoupt and reverse Hoelder constants over cube lattices.

Cubes are unions of whole grid cells.  Two families are available:

* ``dyadic``: side lengths ``N, N/2, ...`` down to ``min_side`` cells, each
  level in three copies shifted by ``0, 1/3, 2/3`` of the side (the one-third
  trick, so every cube sits in a lattice cube of comparable size);
* ``exhaustive``: every cell-aligned cube with at least ``min_side`` cells per
  side.  Quadratic cost in 1D, cubic in 2D; meant for small grids and oracles.

All constants are maxima over a finite family, hence lower bounds of the true
suprema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Iterator, Optional

import numpy as np

from .grid import INF, Grid, Weight

BLOWUP = 1e6
RESOLUTION = 0.01


@dataclass(frozen=True)
class CubeLattice:
    """A finite family of cell-aligned cubes on ``grid``.

    ``wrap`` lets cubes cross the periodic boundary (used by maximal
    functions); weight constants use non-wrapping cubes.
    """

    grid: Grid
    min_side: int = 4
    exhaustive: bool = False
    wrap: bool = False

    def __post_init__(self):
        if self.min_side < 1 or self.min_side > self.grid.N:
            raise ValueError(f"min_side must lie in [1, N], got {self.min_side}")

    @property
    def levels(self) -> list:
        """Cube side lengths in cells, coarsest first."""
        if self.exhaustive:
            return list(range(self.grid.N, self.min_side - 1, -1))
        out = []
        side = self.grid.N
        while side >= self.min_side:
            out.append(side)
            side //= 2
        return out

    def shifts(self, side: int) -> list:
        if self.exhaustive:
            return [0]
        return sorted({0, int(round(side / 3)) % side, int(round(2 * side / 3)) % side})

    def refined(self) -> "CubeLattice":
        """Same family with one more level of smaller cubes."""
        return CubeLattice(self.grid, max(1, self.min_side // 2), self.exhaustive, self.wrap)

    def with_wrap(self, wrap: bool = True) -> "CubeLattice":
        return CubeLattice(self.grid, self.min_side, self.exhaustive, wrap)

    def cube_sums(self, arr: np.ndarray) -> Iterator[tuple]:
        """Yield ``(side, shift, sums)`` for every cube family.

        For dyadic families ``sums`` has one entry per block of the shifted
        tiling; for exhaustive families one entry per start cell.
        """
        for side in self.levels:
            if self.exhaustive:
                yield side, 0, window_sums(arr, side, self.wrap)
            else:
                for shift in self.shifts(side):
                    yield side, shift, block_sums(arr, side, shift, self.wrap)


def block_sums(arr: np.ndarray, side: int, shift: int, wrap: bool) -> np.ndarray:
    """Sums over the tiling by cubes ``[shift + m*side, shift + (m+1)*side)`` per axis."""
    n = arr.shape[0]
    a = np.roll(arr, tuple([-shift] * arr.ndim), axis=tuple(range(arr.ndim)))
    m = n // side
    if arr.ndim == 1:
        sums = a.reshape(m, side).sum(axis=1)
    else:
        sums = a.reshape(m, side, m, side).sum(axis=(1, 3))
    if not wrap and shift:
        # the last block wraps around; drop it
        sums = sums[(slice(0, m - 1),) * arr.ndim]
    return sums


def window_sums(arr: np.ndarray, side: int, wrap: bool) -> np.ndarray:
    """Sums over all cubes of ``side`` cells, indexed by their first cell."""
    n = arr.shape[0]
    a = arr
    if wrap:
        a = np.pad(arr, [(0, side - 1)] * arr.ndim, mode="wrap")
    c = np.cumsum(a, axis=0)
    c = np.concatenate([np.zeros((1,) + c.shape[1:]), c], axis=0)
    s = c[side:] - c[:-side]
    if arr.ndim == 2:
        c = np.cumsum(s, axis=1)
        c = np.concatenate([np.zeros((c.shape[0], 1)), c], axis=1)
        s = c[:, side:] - c[:, :-side]
    if wrap:
        s = s[(slice(0, n),) * arr.ndim]
    return s


def _cube_volume(grid: Grid, side: int) -> float:
    return (side * grid.spacing) ** grid.dim


def ap_constant(w: Weight, p: float, lattice: Optional[CubeLattice] = None) -> float:
    """``max_Q avg_Q(w) * avg_Q(w^(-1/(p-1)))^(p-1)`` over the lattice.

    Returns ``inf`` when ``w^(-1/(p-1))`` is not integrable on some cube.
    """
    if not (1 < p < INF):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    lattice = lattice or CubeLattice(w.grid)
    if lattice.grid != w.grid:
        raise ValueError("weight and lattice live on different grids")
    dual = w.power_masses(-1.0 / (p - 1.0))
    if not np.all(np.isfinite(dual)):
        return INF
    best = 0.0
    m1 = np.asarray(w.cell_mass)
    it1 = lattice.cube_sums(m1)
    it2 = lattice.cube_sums(dual)
    with np.errstate(over="ignore"):
        for (side, _, s1), (_, _, s2) in zip(it1, it2):
            vol = _cube_volume(w.grid, side)
            val = (s1 / vol) * (s2 / vol) ** (p - 1.0)
            if val.size:
                best = max(best, float(val.max()))
    return best


def rh_constant(w: Weight, s: float, lattice: Optional[CubeLattice] = None) -> float:
    """``max_Q (avg_Q w^s)^(1/s) / avg_Q w`` over the lattice."""
    if not (1 < s < INF):
        raise ValueError(f"s must lie in (1, inf), got {s}")
    lattice = lattice or CubeLattice(w.grid)
    if lattice.grid != w.grid:
        raise ValueError("weight and lattice live on different grids")
    ms = w.power_masses(s)
    if not np.all(np.isfinite(ms)):
        return INF
    best = 0.0
    with np.errstate(over="ignore"):
        for (side, _, s1), (_, _, s2) in zip(lattice.cube_sums(np.asarray(w.cell_mass)),
                                             lattice.cube_sums(ms)):
            vol = _cube_volume(w.grid, side)
            val = (s2 / vol) ** (1.0 / s) / (s1 / vol)
            if val.size:
                best = max(best, float(val.max()))
    return best


def _bounded(const_fn, lattice: CubeLattice, threshold: float) -> bool:
    """Membership proxy: bounded on the lattice and stays so under one refinement."""
    coarse = const_fn(lattice)
    if not (coarse < threshold):
        return False
    fine = const_fn(lattice.refined())
    return fine < threshold and fine <= 2.0 * coarse


def _default_lattice(w: Weight) -> CubeLattice:
    return CubeLattice(w.grid, min_side=min(8, w.grid.N))


def estimate_r_w(w: Weight, lattice: Optional[CubeLattice] = None, p_max: float = 2.0,
                 resolution: float = RESOLUTION, threshold: float = BLOWUP,
                 with_flag: bool = False):
    """Estimate ``R_w = inf{q : w in A_q}`` by bisection on ``(1, p_max]``.

    ``q`` counts as admissible when ``ap_constant(w, q)`` is below ``threshold``
    on ``lattice`` and on its refinement, without more than doubling.  The
    result is rounded to ``resolution``.  If ``p_max`` itself fails, ``p_max``
    is returned and the flag (``with_flag=True``) is ``False``.
    """
    lattice = lattice or _default_lattice(w)

    def inside(q):
        return _bounded(lambda lat: ap_constant(w, q, lat), lattice, threshold)

    if not inside(p_max):
        return (float(p_max), False) if with_flag else float(p_max)
    lo, hi = 1.0, float(p_max)
    while hi - lo > resolution / 4:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    val = min(float(p_max), round(round(hi / resolution) * resolution, 10))
    return (val, True) if with_flag else val


def estimate_gamma_w(w: Weight, lattice: Optional[CubeLattice] = None, s_max: float = 64.0,
                     resolution: float = RESOLUTION, threshold: float = BLOWUP,
                     with_flag: bool = False):
    """Estimate ``Gamma_w = sup{s : w in RH_s}``; ``inf`` if bounded at ``s_max``.

    When even ``s`` just above 1 fails, ``1.0`` is returned with a ``False`` flag.
    """
    lattice = lattice or _default_lattice(w)

    def inside(s):
        return _bounded(lambda lat: rh_constant(w, s, lat), lattice, threshold)

    if inside(s_max):
        return (INF, True) if with_flag else INF
    lo, hi = 1.0, float(s_max)
    if not inside(1.0 + resolution):
        return (1.0, False) if with_flag else 1.0
    lo = 1.0 + resolution
    while hi - lo > resolution / 4:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    val = round(round(lo / resolution) * resolution, 10)
    return (val, True) if with_flag else val


def besov_threshold(r_w: float, gamma_w: float, p: float, dim: int = 1) -> float:
    """``(d/p)(R_w + 1/Gamma_w - 1)``: lower class exponent needed by the B-side equivalences."""
    inv = 0.0 if gamma_w == INF else 1.0 / gamma_w
    if p == INF:
        return 0.0
    return dim / p * (r_w + inv - 1.0)


def tl_threshold(r_w: float, p: float, dim: int = 1) -> float:
    """``d R_w / p``: lower class exponent needed by the F-side equivalences."""
    return dim * r_w / p


def default_exponent_pair(r_wp: float, gamma_w: float) -> tuple:
    """Strictly admissible ``(r, s)`` with ``r < R_{w,p}`` and ``s < Gamma_w``."""
    r = 0.5 * (1.0 + r_wp)
    s = 4.0 if gamma_w == INF else 0.5 * (1.0 + gamma_w)
    return r, s


def _json_real(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class WeightReport:
    p: float
    dim: int
    ap_constant: float
    rh_constant: float
    r_w: float
    gamma_w: float
    r_wp: float
    r: float
    s: float
    n_w: float
    r_w_found: bool = True
    weight: dict = field(default_factory=dict)

    @property
    def besov_threshold(self) -> float:
        return besov_threshold(self.r_w, self.gamma_w, self.p, self.dim)

    @property
    def tl_threshold(self) -> float:
        return tl_threshold(self.r_w, self.p, self.dim)

    def to_dict(self) -> dict:
        d = {k: _json_real(v) for k, v in asdict(self).items()}
        d["besov_threshold"] = self.besov_threshold
        d["tl_threshold"] = self.tl_threshold
        return d


def weight_report(w: Weight, p: float, lattice: Optional[CubeLattice] = None,
                  s_max: float = 64.0) -> WeightReport:
    """All weight exponents used by the equivalence theorems, for exponent ``p``.

    ``R_{w,p}`` is reported as ``p / R_w``.  ``r`` and ``s`` are the default
    strictly admissible pair and ``n_w`` the constant
    ``[w]_{A_p}^(1/(p-1)) [w]_{A_(p/r)}^(1/p) [w]_{RH_s}^(1/p)`` for that pair.
    """
    lattice = lattice or _default_lattice(w)
    r_w, found = estimate_r_w(w, lattice, p_max=p, with_flag=True)
    gamma_w = estimate_gamma_w(w, lattice, s_max=s_max)
    r_wp = p / r_w
    r, s = default_exponent_pair(r_wp, gamma_w)
    ap = ap_constant(w, p, lattice)
    rh = rh_constant(w, s, lattice)
    ap_r = ap_constant(w, p / r, lattice)
    n_w = ap ** (1.0 / (p - 1.0)) * ap_r ** (1.0 / p) * rh ** (1.0 / p)
    return WeightReport(float(p), w.grid.dim, ap, rh, r_w, gamma_w, r_wp, r, s, n_w,
                        found, w.describe())
