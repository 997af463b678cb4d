"""Convex set representations, metric projections, and the inter-set gap.

Three set variants are supported: axis-aligned boxes, Euclidean balls, and
bounded halfspace-intersection polytopes.  Boxes and balls project in closed
form; polytopes project through Dykstra's algorithm over their halfspaces,
which converges to the exact metric projection onto the intersection.

The gap between two sets is computed by alternating metric projections from a
documented deterministic start point, returning one proximal pair together
with the achieved distance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import as_vector

__all__ = [
    "ConvexSet",
    "Box",
    "Ball",
    "Polytope",
    "ProximalPair",
    "GeometryError",
    "ProjectionError",
    "SamplingError",
    "gap",
    "diameter_bound",
]

DYKSTRA_MAX_CYCLES = 10_000
DYKSTRA_TOL = 1e-10


class GeometryError(ValueError):
    """Invalid set description (empty, unbounded, malformed)."""


class ProjectionError(RuntimeError):
    """Iterative projection failed to converge; carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class SamplingError(RuntimeError):
    """Rejection sampling efficiency fell below the acceptable floor."""


class ConvexSet:
    """Common interface for the supported closed convex set variants."""

    dim: int

    def project(self, p) -> np.ndarray:
        """Nearest point of the set in Euclidean norm; identity on members."""
        raise NotImplementedError

    def contains(self, p, tol: float = 0.0) -> bool:
        """True iff ``p`` lies within Euclidean distance ``tol`` of the set."""
        p = self._check_dim(p)
        return float(np.linalg.norm(p - self.project(p))) <= tol

    def distance(self, p) -> float:
        p = self._check_dim(p)
        return float(np.linalg.norm(p - self.project(p)))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise (lo, hi) enclosing the set."""
        raise NotImplementedError

    def sup_norm_bound(self) -> float:
        """An upper bound for the norm of any member."""
        raise NotImplementedError

    def sample(self, n: int, seed: int) -> np.ndarray:
        """``n`` points of the set as an (n, dim) array, deterministic in seed."""
        raise NotImplementedError

    def project_many(self, pts: np.ndarray) -> np.ndarray:
        """Row-wise projection of an (n, dim) array."""
        return np.array([self.project(row) for row in pts])

    def distance_many(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.project_many(pts), axis=1)

    def member_mask(self, pts: np.ndarray) -> np.ndarray:
        """Boolean row mask of exact membership for an (n, dim) array."""
        return self.distance_many(pts) <= 0.0

    def _check_dim(self, p) -> np.ndarray:
        p = as_vector(p)
        if p.size != self.dim:
            raise ValueError(f"dimension mismatch ({p.size} vs set dim {self.dim})")
        return p


@dataclass(frozen=True)
class Box(ConvexSet):
    """Axis-aligned box { x : lo <= x <= hi componentwise }."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", as_vector(self.lo))
        object.__setattr__(self, "hi", as_vector(self.hi))
        if self.lo.shape != self.hi.shape:
            raise GeometryError("box bounds have mismatched dimensions")
        if np.any(self.lo > self.hi):
            raise GeometryError("box requires lo <= hi componentwise")

    @property
    def dim(self) -> int:
        return self.lo.size

    def project(self, p) -> np.ndarray:
        return np.clip(self._check_dim(p), self.lo, self.hi)

    def project_many(self, pts: np.ndarray) -> np.ndarray:
        return np.clip(pts, self.lo, self.hi)

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def sup_norm_bound(self) -> float:
        # the farthest corner picks the larger-magnitude bound per axis
        return float(np.sqrt(np.sum(np.maximum(self.lo**2, self.hi**2))))

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def member_mask(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def corners(self) -> np.ndarray:
        """All 2^dim corner points (dim is small by construction)."""
        cols = [(self.lo[i], self.hi[i]) for i in range(self.dim)]
        return np.array(list(itertools.product(*cols)))


@dataclass(frozen=True)
class Ball(ConvexSet):
    """Euclidean ball { x : ||x - center|| <= radius }."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, p) -> np.ndarray:
        p = self._check_dim(p)
        delta = p - self.center
        r = np.linalg.norm(delta)
        if r <= self.radius:
            return p.copy()
        return self.center + delta * (self.radius / r)

    def project_many(self, pts: np.ndarray) -> np.ndarray:
        delta = pts - self.center
        r = np.linalg.norm(delta, axis=1)
        scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
        return self.center + delta * scale[:, None]

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def sup_norm_bound(self) -> float:
        return float(np.linalg.norm(self.center)) + self.radius

    def member_mask(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius

    def sample(self, n: int, seed: int) -> np.ndarray:
        return _rejection_sample(self, n, seed)


@dataclass(frozen=True)
class Polytope(ConvexSet):
    """Bounded intersection of halfspaces { x : <normal_i, x> <= offset_i }.

    Nonemptiness and boundedness are certified at construction by linear
    programming probes, which also yield the bounding box reused by sampling
    and the fallback norm bound.
    """

    normals: np.ndarray
    offsets: np.ndarray
    _bbox: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if normals.ndim != 2 or normals.shape[0] != offsets.size:
            raise GeometryError("polytope needs one offset per normal")
        if normals.shape[0] < 1:
            raise GeometryError("polytope needs at least one halfspace")
        if not (np.all(np.isfinite(normals)) and np.all(np.isfinite(offsets))):
            raise GeometryError("polytope data must be finite")
        if np.any(np.linalg.norm(normals, axis=1) == 0.0):
            raise GeometryError("zero normal vector in polytope description")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "_bbox", self._probe_bounds())

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def _probe_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.normals.shape[1]
        lo = np.empty(d)
        hi = np.empty(d)
        for i in range(d):
            c = np.zeros(d)
            c[i] = 1.0
            for sign, out in ((1.0, lo), (-1.0, hi)):
                res = linprog(
                    sign * c,
                    A_ub=self.normals,
                    b_ub=self.offsets,
                    bounds=[(None, None)] * d,
                    method="highs",
                )
                if res.status == 2:
                    raise GeometryError("polytope is empty (infeasible halfspaces)")
                if res.status == 3:
                    raise GeometryError("polytope is unbounded")
                if not res.success:
                    raise GeometryError(f"polytope feasibility probe failed: {res.message}")
                out[i] = sign * res.fun
        return lo, hi

    def project(self, p) -> np.ndarray:
        # member fast path at the Dykstra residual tolerance: outputs of the
        # iterative projection are feasible to that tolerance, so re-projecting
        # one is the identity (exact idempotence)
        p = self._check_dim(p)
        if np.all(self.normals @ p <= self.offsets + DYKSTRA_TOL):
            return p.copy()
        return self._dykstra(p)

    def _dykstra(self, p: np.ndarray) -> np.ndarray:
        """Dykstra's algorithm over the halfspaces (exact in the limit)."""
        m = self.normals.shape[0]
        sq = np.sum(self.normals**2, axis=1)
        x = p.copy()
        corrections = np.zeros((m, p.size))
        for _ in range(DYKSTRA_MAX_CYCLES):
            shift = 0.0
            for i in range(m):
                y = x + corrections[i]
                excess = (self.normals[i] @ y - self.offsets[i]) / sq[i]
                xi = y - max(excess, 0.0) * self.normals[i]
                corrections[i] = y - xi
                shift = max(shift, float(np.linalg.norm(xi - x)))
                x = xi
            violation = float(np.max(self.normals @ x - self.offsets, initial=0.0))
            if shift <= DYKSTRA_TOL and violation <= DYKSTRA_TOL:
                return x
        residual = max(shift, violation)
        raise ProjectionError("Dykstra projection did not converge", residual)

    def bounding_box(self):
        lo, hi = self._bbox
        return lo.copy(), hi.copy()

    def sup_norm_bound(self) -> float:
        if self.dim <= 3:
            verts = self.vertices()
            if len(verts):
                return float(np.max(np.linalg.norm(verts, axis=1)))
        lo, hi = self._bbox
        return float(np.sqrt(np.sum(np.maximum(lo**2, hi**2))))

    def vertices(self) -> np.ndarray:
        """Vertex enumeration by basic feasible solutions (dim <= 3 only)."""
        d = self.dim
        if d > 3:
            raise GeometryError("vertex enumeration supported only up to dimension 3")
        verts = []
        for rows in itertools.combinations(range(self.normals.shape[0]), d):
            a = self.normals[list(rows)]
            if abs(np.linalg.det(a)) < 1e-12:
                continue
            v = np.linalg.solve(a, self.offsets[list(rows)])
            if np.all(self.normals @ v <= self.offsets + 1e-9):
                verts.append(v)
        return np.array(verts) if verts else np.empty((0, d))

    def member_mask(self, pts: np.ndarray) -> np.ndarray:
        return np.all(pts @ self.normals.T <= self.offsets + 1e-14, axis=1)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return _rejection_sample(self, n, seed)


def _rejection_sample(s: ConvexSet, n: int, seed: int) -> np.ndarray:
    """Uniform sampling by rejection from the bounding box."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = s.bounding_box()
    rng = np.random.default_rng(seed)
    out = np.empty((0, s.dim))
    attempted = 0
    while out.shape[0] < n:
        batch = max(4 * n, 256)
        pts = rng.uniform(lo, hi, size=(batch, s.dim))
        keep = s.member_mask(pts)
        attempted += batch
        out = np.vstack([out, pts[keep]])
        if attempted >= 10_000 and out.shape[0] / attempted < 1e-4:
            raise SamplingError(
                f"rejection efficiency {out.shape[0] / attempted:.2e} below 1e-4; "
                "set is too thin relative to its bounding box"
            )
    return out[:n]


@dataclass(frozen=True)
class ProximalPair:
    """A pair (a0, b0) realizing the achieved inter-set distance."""

    a0: np.ndarray
    b0: np.ndarray
    dist: float
    iterations: int
    converged: bool = True


def gap(a: ConvexSet, b: ConvexSet, tol: float = 1e-10, max_iter: int = 10_000) -> ProximalPair:
    """Inter-set distance and a proximal pair via alternating projections.

    The iteration starts from the projection onto ``b`` of the centroid of
    ``a``'s bounding box (a fixed, documented start: the achieved pair is
    deterministic even when the proximal pair is not unique) and alternates
    metric projections until the distance improvement per sweep falls below
    ``tol``.  The distance sequence is nonincreasing.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch ({a.dim} vs {b.dim})")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = a.bounding_box()
    pb = b.project((lo + hi) / 2.0)
    pa = a.project(pb)
    d_prev = float(np.linalg.norm(pa - pb))
    for k in range(1, max_iter + 1):
        pb = b.project(pa)
        pa = a.project(pb)
        d = float(np.linalg.norm(pa - pb))
        if d_prev - d <= tol:
            return ProximalPair(pa, pb, d, iterations=k, converged=True)
        d_prev = d
    return ProximalPair(pa, pb, d_prev, iterations=max_iter, converged=False)


def diameter_bound(a: ConvexSet, b: ConvexSet) -> float:
    """Upper bound on the diameter of the union, from the joint bounding box."""
    lo_a, hi_a = a.bounding_box()
    lo_b, hi_b = b.bounding_box()
    lo = np.minimum(lo_a, lo_b)
    hi = np.maximum(hi_a, hi_b)
    return float(np.linalg.norm(hi - lo))
