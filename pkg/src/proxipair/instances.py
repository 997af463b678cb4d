"""Canonical seeded problem instances used by tests and examples.

The stacked-box family puts A at the unit box and B at a unit box shifted by
2 along the last axis, so the inter-set distance is exactly 1 and proximal
points fill the facing facets.  An anchored affine contraction built on a
random proximal anchor with an axis-reflecting isometry then has a known
unique solution (the anchor pair), satisfies its contraction inequality for
same- and cross-orientation inputs alike, and certifies its range conditions
for every constant in (0, 1).

Start pairs are drawn near the far facets with a bounded transverse jitter;
this keeps the first-step pair distance dominant over the even-step Cauchy
constants, so solve iteration counts stay within the a-priori prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Orientation, ProductPoint
from .geometry import Box
from .mappings import AnchoredAffine

__all__ = ["AnchoredInstance", "stacked_box_instance", "overlapping_box_instance", "reference_suite"]


@dataclass(frozen=True)
class AnchoredInstance:
    a: Box
    b: Box
    map: AnchoredAffine
    a_star: np.ndarray
    b_star: np.ndarray
    d: float
    start: ProductPoint
    lam: float
    dim: int
    seed: int


def stacked_box_instance(dim: int, lam: float, seed: int) -> AnchoredInstance:
    """Anchored contraction between [0,1]^dim and its copy shifted by +2 on
    the last axis (gap exactly 1)."""
    if dim < 2:
        raise ValueError("stacked boxes need dim >= 2")
    rng = np.random.default_rng([seed, dim, int(round(lam * 1000))])
    a = Box(np.zeros(dim), np.ones(dim))
    lo_b = np.zeros(dim)
    hi_b = np.ones(dim)
    lo_b[-1], hi_b[-1] = 2.0, 3.0
    b = Box(lo_b, hi_b)

    perp = rng.uniform(0.1, 0.9, size=dim - 1)
    a_star = np.append(perp, 1.0)
    b_star = np.append(perp, 2.0)
    iso = np.diag(np.append(np.ones(dim - 1), -1.0))
    cmap = AnchoredAffine(a_star, b_star, lam, iso, iso, certify=(a, b))

    x_perp = np.clip(perp + rng.uniform(-0.3, 0.3, size=dim - 1), 0.02, 0.98)
    y_perp = np.clip(perp + rng.uniform(-0.3, 0.3, size=dim - 1), 0.02, 0.98)
    x0 = np.append(x_perp, rng.uniform(0.0, 0.15))
    y0 = np.append(y_perp, 3.0 - rng.uniform(0.0, 0.15))
    start = ProductPoint(x0, y0, Orientation.AB)
    return AnchoredInstance(a, b, cmap, a_star, b_star, 1.0, start, lam, dim, seed)


def overlapping_box_instance(lam: float, seed: int, dim: int = 2) -> AnchoredInstance:
    """Degenerate-gap case A = B = [0,1]^dim: the solver computes a coupled
    fixed point at the shared anchor."""
    rng = np.random.default_rng([seed, dim, int(round(lam * 1000)), 7])
    a = Box(np.zeros(dim), np.ones(dim))
    anchor = rng.uniform(0.3, 0.7, size=dim)
    iso = np.eye(dim)
    cmap = AnchoredAffine(anchor, anchor, lam, iso, iso, certify=(a, a))
    start = ProductPoint(rng.uniform(0, 1, size=dim), rng.uniform(0, 1, size=dim),
                         Orientation.AB)
    return AnchoredInstance(a, a, cmap, anchor, anchor, 0.0, start, lam, dim, seed)


def reference_suite() -> list[AnchoredInstance]:
    """The 20 seeded contraction instances used across the verification suite:
    every (lam, dim) combination twice, plus extra seeds at lam 0.5 and 0.9."""
    out = []
    for lam in (0.3, 0.5, 0.7, 0.9):
        for dim in (2, 3):
            for seed in (0, 1):
                out.append(stacked_box_instance(dim, lam, seed))
    for lam in (0.5, 0.9):
        for dim in (2, 3):
            out.append(stacked_box_instance(dim, lam, 2))
    return out
