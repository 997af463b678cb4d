"""Brute-force ground truth: grid search over pairs, and 1-D bisection.

The grid search enumerates cell midpoints over the bounding boxes of both
sets, keeps midpoints within half a cell of each set (solutions sit on set
boundaries when the sets are disjoint, so the membership filter must not
shave the boundary), and minimizes the worst coupled residual over all kept
pairs.  It is deliberately independent of the iterative solvers and serves to
validate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import Orientation, ProductPoint
from .geometry import ConvexSet
from .mappings import CyclicMap

__all__ = [
    "OracleResult",
    "GridTooLargeError",
    "grid_search",
    "bisect_root",
    "SCALAR_FAMILIES",
]

MAX_PAIRS = 10**8
CHUNK = 1 << 21


class GridTooLargeError(ValueError):
    """The requested resolution implies an unreasonable pair count."""


@dataclass(frozen=True)
class OracleResult:
    best: ProductPoint
    best_objective: float
    resolution: float
    candidates_below_threshold: list[ProductPoint]
    n_pairs: int


def _axis_counts(s: ConvexSet, resolution: float) -> list[int]:
    lo, hi = s.bounding_box()
    return [max(1, math.ceil((hi[i] - lo[i]) / resolution)) for i in range(s.dim)]


def _grid_points(s: ConvexSet, resolution: float) -> np.ndarray:
    """Cell midpoints of a regular grid over the bounding box, filtered to
    points within half a cell of the set."""
    lo, hi = s.bounding_box()
    counts = _axis_counts(s, resolution)
    axes = [lo[i] + (np.arange(counts[i]) + 0.5) * resolution for i in range(s.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = np.array([s.contains(p, tol=resolution / 2.0) for p in pts])
    return pts[keep]


def grid_search(t: CyclicMap, a: ConvexSet, b: ConvexSet, d: float,
                resolution: float, threshold: float) -> OracleResult:
    """Minimize max(||u - T(u, v)||, ||v - T(v, u)||) - d over a pair grid.

    Ties resolve to the first minimizer in row-major (A-index, B-index)
    order, making the result deterministic.  Pairs with objective at most
    ``threshold`` are also collected, exposing approximate non-uniqueness.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if a.dim > 3 or b.dim > 3:
        raise ValueError("grid search supports component dimension <= 3")
    raw_pairs = math.prod(_axis_counts(a, resolution)) * math.prod(
        _axis_counts(b, resolution))
    if raw_pairs > MAX_PAIRS:
        raise GridTooLargeError(
            f"grid would evaluate about {raw_pairs:.3e} midpoint pairs; "
            f"refusing above {MAX_PAIRS:.0e}"
        )
    pa = _grid_points(a, resolution)
    pb = _grid_points(b, resolution)
    n_pairs = pa.shape[0] * pb.shape[0]
    if n_pairs == 0:
        raise ValueError("empty grid: resolution too coarse for the sets")

    nb = pb.shape[0]
    best_val = math.inf
    best_idx = -1
    cand_idx: list[int] = []
    rows_per_chunk = max(1, CHUNK // nb)
    for start in range(0, pa.shape[0], rows_per_chunk):
        ua = pa[start:start + rows_per_chunk]
        u = np.repeat(ua, nb, axis=0)
        v = np.tile(pb, (ua.shape[0], 1))
        res_u = np.linalg.norm(u - t.apply_many(u, v, Orientation.AB), axis=1)
        res_v = np.linalg.norm(v - t.apply_many(v, u, Orientation.BA), axis=1)
        obj = np.maximum(res_u, res_v) - d
        k = int(np.argmin(obj))
        if obj[k] < best_val:
            best_val = float(obj[k])
            best_idx = start * nb + k
        hits = np.flatnonzero(obj <= threshold)
        cand_idx.extend((start * nb + hits).tolist())

    ia, ib = divmod(best_idx, nb)
    best = ProductPoint(pa[ia], pb[ib], Orientation.AB)
    candidates = [
        ProductPoint(pa[i // nb], pb[i % nb], Orientation.AB) for i in cand_idx
    ]
    return OracleResult(
        best=best,
        best_objective=best_val,
        resolution=resolution,
        candidates_below_threshold=candidates,
        n_pairs=n_pairs,
    )


def _sin_sin_minus_identity(x: float) -> float:
    return math.sin(math.sin(x)) - x


def _sin_minus_identity(x: float) -> float:
    return math.sin(x) - x


SCALAR_FAMILIES: dict[str, Callable[[float], float]] = {
    "sin_sin_minus_identity": _sin_sin_minus_identity,
    "sin_minus_identity": _sin_minus_identity,
}


def bisect_root(f: Union[str, Callable[[float], float]], lo: float, hi: float,
                tol: float = 1e-12) -> float:
    """Bisection on [lo, hi]; requires f(lo) * f(hi) <= 0.

    ``f`` may be a callable or the name of a registered scalar family.  Exact
    zeros at either endpoint are returned immediately, which matters for
    boundary roots.
    """
    if isinstance(f, str):
        try:
            f = SCALAR_FAMILIES[f]
        except KeyError:
            raise ValueError(
                f"unknown scalar family {f!r}; known: {sorted(SCALAR_FAMILIES)}"
            ) from None
    if not hi > lo:
        raise ValueError("need lo < hi")
    fa, fb = f(lo), f(hi)
    if fa == 0.0:
        return lo
    if fb == 0.0:
        return hi
    if fa * fb > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}] (f: {fa:.3e}, {fb:.3e})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            hi = mid
        else:
            lo, fa = mid, fm
    return 0.5 * (lo + hi)
