"""Weighted Besov and Triebel-Lizorkin norms with variable smoothness on periodic grids."""

__version__ = "0.1.0"

from .grid import (INF, Grid, SampledFunction, Weight, dilate, forward_transform, inverse_transform,
                   make_grid, translate, weighted_lp_norm)
from .scaling import ScalingFunction, class_check, s_phi, sandwich_constants
from .weights import CubeLattice, ap_constant, estimate_gamma_w, estimate_r_w, rh_constant, weight_report
from .lp_decomp import LPSymbol, build_symbol, decompose
from .maximal_ops import hl_maximal, peetre_maximal, shifted_maximal
from .norms import NormSpec, NormVariant, compute_norm, difference, poly_dichotomy, quantity

__all__ = [
    "INF", "Grid", "SampledFunction", "Weight", "dilate", "forward_transform", "inverse_transform",
    "make_grid", "translate", "weighted_lp_norm", "ScalingFunction", "class_check", "s_phi",
    "sandwich_constants", "CubeLattice", "ap_constant", "estimate_gamma_w", "estimate_r_w",
    "rh_constant", "weight_report", "LPSymbol", "build_symbol", "decompose", "hl_maximal",
    "peetre_maximal", "shifted_maximal", "NormSpec", "NormVariant", "compute_norm", "difference",
    "poly_dichotomy", "quantity", "__version__",
]
