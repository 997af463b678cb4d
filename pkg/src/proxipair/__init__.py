"""Coupled best proximity points of cyclic maps between convex sets.

A coupled pair (x, y) in A x B solves the problem when both residuals
||x - T(x, y)|| and ||y - T(y, x)|| equal the inter-set distance.  The
package computes such pairs for contraction-type and nonexpansive cyclic
maps, verifies the defining conditions empirically, checks perturbation
stability radii, and cross-validates every solve against a brute-force grid
oracle.
"""

from .core import Orientation, ProductPoint, euclidean_norm, product_distance, product_norm
from .geometry import Ball, Box, Polytope, ProximalPair, diameter_bound, gap
from .mappings import (
    AnchorBlend,
    AnchoredAffine,
    CompositeAffine,
    ConstantProximal,
    MapClass,
    SinePartner,
    check_cyclic,
    check_nonexpansive,
    estimate_lambda,
)
from .oracle import bisect_root, grid_search
from .solver import (
    iterate_once,
    solve_contraction,
    solve_nonexpansive,
    verify_limit,
)
from .stability import (
    bound_contraction,
    bound_nonexpansive,
    bound_strict_convex,
    make_bound,
    verify_stability,
)

__version__ = "0.1.0"

__all__ = [
    "Orientation", "ProductPoint", "euclidean_norm", "product_norm", "product_distance",
    "Box", "Ball", "Polytope", "ProximalPair", "gap", "diameter_bound",
    "MapClass", "AnchoredAffine", "SinePartner", "ConstantProximal",
    "CompositeAffine", "AnchorBlend",
    "check_cyclic", "estimate_lambda", "check_nonexpansive",
    "iterate_once", "solve_contraction", "solve_nonexpansive", "verify_limit",
    "bound_contraction", "bound_nonexpansive", "bound_strict_convex",
    "make_bound", "verify_stability",
    "grid_search", "bisect_root",
    "__version__",
]
