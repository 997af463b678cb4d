"""Parameterized cyclic mapping families and empirical condition checks.

A cyclic map sends pairs across two sets: pairs oriented AB (first component
in A, second in B) map into B, and BA pairs map into A.  Families here are
closed-form and vectorized; ``check_cyclic``, ``estimate_lambda`` and
``check_nonexpansive`` verify the defining range and Lipschitz-type
inequalities by seeded sampling, reporting violation counts and the worst
observed margin.

The contraction inequality in force, with pair distances taken in the
componentwise max-norm, is

    ||T(p) - T(q)|| <= lam * ||p - q|| + (1 - lam) * d,

``d`` being the inter-set gap; nonexpansive maps satisfy the same with the
right side replaced by ``||p - q||``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Orientation, ProductPoint, as_vector
from .geometry import Ball, Box, ConvexSet, Polytope

__all__ = [
    "MapClass",
    "CyclicMap",
    "AnchoredAffine",
    "SinePartner",
    "ConstantProximal",
    "CompositeAffine",
    "AnchorBlend",
    "ConditionReport",
    "NonexpansiveCheck",
    "CertificationError",
    "check_cyclic",
    "estimate_lambda",
    "check_nonexpansive",
]

ORTHOGONALITY_TOL = 1e-10


class CertificationError(ValueError):
    """Map construction rejected: images provably leave the target set."""


@dataclass(frozen=True)
class MapClass:
    """Declared class of a cyclic map: contraction with a constant, or nonexpansive."""

    kind: str  # "contraction" | "nonexpansive"
    lam: Optional[float] = None

    def __post_init__(self):
        if self.kind == "contraction":
            if self.lam is None or not (0.0 < self.lam < 1.0):
                raise ValueError("contraction constant must lie in (0, 1)")
        elif self.kind == "nonexpansive":
            if self.lam is not None:
                raise ValueError("nonexpansive class carries no constant")
        else:
            raise ValueError(f"unknown map class {self.kind!r}")

    @staticmethod
    def contraction(lam: float) -> "MapClass":
        return MapClass("contraction", float(lam))

    @staticmethod
    def nonexpansive() -> "MapClass":
        return MapClass("nonexpansive")


class CyclicMap:
    """Base class: a side-swapping map evaluated on oriented pairs."""

    declared_class: MapClass

    def apply_many(self, firsts: np.ndarray, seconds: np.ndarray,
                   orientation: Orientation) -> np.ndarray:
        """Vectorized evaluation on (n, dim) component arrays."""
        raise NotImplementedError

    def evaluate(self, p: ProductPoint) -> np.ndarray:
        """Image of one oriented pair; lands in the set opposite p.first."""
        return self.apply_many(p.first[None, :], p.second[None, :], p.orientation)[0]

    @property
    def lipschitz_slack(self) -> float:
        """Bound on the residual objective's Lipschitz constant (pair metric)."""
        if self.declared_class.kind == "contraction":
            return 1.0 + self.declared_class.lam
        return 2.0


def _check_orthogonal(q: np.ndarray, name: str) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if q.shape[0] != q.shape[1]:
        raise ValueError(f"{name} must be square")
    dev = np.max(np.abs(q.T @ q - np.eye(q.shape[0])))
    if dev > ORTHOGONALITY_TOL:
        raise ValueError(f"{name} is not orthogonal (deviation {dev:.2e})")
    return q


def _extreme_parts(s: ConvexSet, w: np.ndarray) -> tuple[np.ndarray, float]:
    """Linear image of a set as (extreme points, additive Euclidean radius).

    Boxes and low-dimensional polytopes contribute their mapped corners or
    vertices; balls contribute the mapped center plus an operator-norm radius
    term (exact when ``w`` is a scaled orthogonal matrix).  Polytopes above
    dimension 3 fall back to their bounding-box corners, a conservative
    superset.
    """
    if isinstance(s, Box):
        pts = s.corners()
    elif isinstance(s, Ball):
        return (s.center @ w.T)[None, :], s.radius * float(np.linalg.norm(w, 2))
    elif isinstance(s, Polytope):
        if s.dim <= 3:
            pts = s.vertices()
        else:
            lo, hi = s.bounding_box()
            pts = Box(lo, hi).corners()
    else:
        raise TypeError(f"unsupported set type {type(s).__name__}")
    return pts @ w.T, 0.0


def _containment_margin(points: np.ndarray, radius: float, target: ConvexSet) -> float:
    """Worst violation of 'ball(point, radius) inside target' over the points."""
    if isinstance(target, Box):
        lower = target.lo - (points - radius)
        upper = (points + radius) - target.hi
        return float(np.max(np.concatenate([lower, upper], axis=1)))
    if isinstance(target, Ball):
        return float(np.max(np.linalg.norm(points - target.center, axis=1)
                            + radius - target.radius))
    if isinstance(target, Polytope):
        norms = np.linalg.norm(target.normals, axis=1)
        slack = points @ target.normals.T + radius * norms - target.offsets
        return float(np.max(slack))
    raise TypeError(f"unsupported set type {type(target).__name__}")


def _certify_affine_range(offset: np.ndarray, parts: list[tuple[ConvexSet, np.ndarray]],
                          target: ConvexSet, label: str, slack: float = 1e-9) -> None:
    """Certify that offset + sum_i W_i(S_i) is contained in the target set."""
    point_sets = []
    radius = 0.0
    for s, w in parts:
        pts, r = _extreme_parts(s, w)
        point_sets.append(pts)
        radius += r
    combos = np.array([np.sum(c, axis=0) for c in itertools.product(*point_sets)])
    margin = _containment_margin(combos + offset, radius, target)
    if margin > slack:
        raise CertificationError(
            f"{label}: image leaves the target set by up to {margin:.3e}"
        )


class AnchoredAffine(CyclicMap):
    """Contraction anchored at a proximal pair: x maps to b* + lam * Q (x - a*).

    AB pairs map their first component toward ``b_star`` through ``iso_ab``;
    BA pairs map toward ``a_star`` through ``iso_ba``.  The anchors form a
    fixed cross-pair, so (a*, b*) is the map's unique coupled best proximity
    point whenever ||a* - b*|| realizes the inter-set gap.

    When ``certify`` is given as the pair of sets (A, B), construction proves
    the range conditions on set extreme points and rejects parameterizations
    whose images leave the target set.  The declared constant is valid for
    both same- and cross-orientation pair inequalities when the isometries
    reverse the anchor separation direction (e.g. a reflection of the axis
    along which the sets are stacked); ``estimate_lambda`` measures this.
    """

    def __init__(self, a_star, b_star, lam: float, iso_ab, iso_ba,
                 certify: Optional[tuple[ConvexSet, ConvexSet]] = None):
        self.a_star = as_vector(a_star)
        self.b_star = as_vector(b_star)
        if not (0.0 < float(lam) < 1.0):
            raise ValueError("lam must lie in (0, 1)")
        self.lam = float(lam)
        self.iso_ab = _check_orthogonal(iso_ab, "iso_ab")
        self.iso_ba = _check_orthogonal(iso_ba, "iso_ba")
        if not (self.a_star.size == self.b_star.size == self.iso_ab.shape[0]
                == self.iso_ba.shape[0]):
            raise ValueError("anchor and isometry dimensions disagree")
        self.declared_class = MapClass.contraction(self.lam)
        if certify is not None:
            a, b = certify
            _certify_affine_range(
                self.b_star - self.lam * (self.iso_ab @ self.a_star),
                [(a, self.lam * self.iso_ab)], b, "AB range")
            _certify_affine_range(
                self.a_star - self.lam * (self.iso_ba @ self.b_star),
                [(b, self.lam * self.iso_ba)], a, "BA range")

    def apply_many(self, firsts, seconds, orientation):
        if orientation is Orientation.AB:
            return self.b_star + self.lam * ((firsts - self.a_star) @ self.iso_ab.T)
        return self.a_star + self.lam * ((firsts - self.b_star) @ self.iso_ba.T)


class SinePartner(CyclicMap):
    """The nonexpansive worked example: a pair maps to (sin u, v), (u, v) its partner.

    Defined on the specific stacked unit boxes below; the image inherits the
    partner's second coordinate, so images stay in the partner's set.
    """

    DOMAIN_A = Box([0.0, 0.0], [1.0, 1.0])
    DOMAIN_B = Box([0.0, 2.0], [1.0, 3.0])

    def __init__(self):
        self.declared_class = MapClass.nonexpansive()

    def apply_many(self, firsts, seconds, orientation):
        out = np.array(seconds, dtype=float, copy=True)
        out[:, 0] = np.sin(seconds[:, 0])
        return out


class ConstantProximal(CyclicMap):
    """Maps every AB pair to b_star and every BA pair to a_star."""

    def __init__(self, a_star, b_star, declared_class: Optional[MapClass] = None):
        self.a_star = as_vector(a_star)
        self.b_star = as_vector(b_star)
        if self.a_star.size != self.b_star.size:
            raise ValueError("anchor dimensions disagree")
        self.declared_class = declared_class or MapClass.nonexpansive()

    def apply_many(self, firsts, seconds, orientation):
        tgt = self.b_star if orientation is Orientation.AB else self.a_star
        return np.broadcast_to(tgt, firsts.shape).copy()


class CompositeAffine(CyclicMap):
    """Affine in both components, with separate pieces per orientation.

    AB pairs map to ``bias_ab + w_first_ab @ first + w_second_ab @ second``
    and BA pairs analogously.  The declared class is supplied by the caller;
    when a contraction is declared, the summed operator norms of each
    orientation's weight matrices must not exceed the declared constant
    (this certifies the same-orientation inequality).
    """

    def __init__(self, bias_ab, w_first_ab, w_second_ab,
                 bias_ba, w_first_ba, w_second_ba,
                 declared_class: MapClass,
                 certify: Optional[tuple[ConvexSet, ConvexSet]] = None):
        self.bias_ab = as_vector(bias_ab)
        self.bias_ba = as_vector(bias_ba)
        self.w_first_ab = np.atleast_2d(np.asarray(w_first_ab, dtype=float))
        self.w_second_ab = np.atleast_2d(np.asarray(w_second_ab, dtype=float))
        self.w_first_ba = np.atleast_2d(np.asarray(w_first_ba, dtype=float))
        self.w_second_ba = np.atleast_2d(np.asarray(w_second_ba, dtype=float))
        self.declared_class = declared_class
        if declared_class.kind == "contraction":
            for label, wf, ws in (("AB", self.w_first_ab, self.w_second_ab),
                                  ("BA", self.w_first_ba, self.w_second_ba)):
                total = np.linalg.norm(wf, 2) + np.linalg.norm(ws, 2)
                if total > declared_class.lam + 1e-12:
                    raise CertificationError(
                        f"{label} weights have operator norm sum {total:.6f} "
                        f"exceeding the declared constant {declared_class.lam}"
                    )
        if certify is not None:
            a, b = certify
            _certify_affine_range(self.bias_ab, [(a, self.w_first_ab), (b, self.w_second_ab)],
                                  b, "AB range")
            _certify_affine_range(self.bias_ba, [(b, self.w_first_ba), (a, self.w_second_ba)],
                                  a, "BA range")

    def apply_many(self, firsts, seconds, orientation):
        if orientation is Orientation.AB:
            return self.bias_ab + firsts @ self.w_first_ab.T + seconds @ self.w_second_ab.T
        return self.bias_ba + firsts @ self.w_first_ba.T + seconds @ self.w_second_ba.T


class AnchorBlend(CyclicMap):
    """Convex blend of a base map with its value at a fixed proximal anchor.

    With weight w = 1/n the blend is ``(1/n) * base(anchor) + (1 - 1/n) *
    base(p)``, the anchor image chosen per orientation.  When the base map is
    nonexpansive and the anchor components realize the inter-set gap, the
    blend is a contraction with constant 1 - 1/n, which is how nonexpansive
    problems are reduced to a schedule of contraction solves.
    """

    def __init__(self, base: CyclicMap, anchor_first, anchor_second, weight: float):
        if not (0.0 < weight < 1.0):
            raise ValueError("blend weight must lie in (0, 1)")
        self.base = base
        self.weight = float(weight)
        anchor = ProductPoint(anchor_first, anchor_second, Orientation.AB)
        self._image_ab = base.evaluate(anchor)
        self._image_ba = base.evaluate(anchor.swapped)
        self.declared_class = MapClass.contraction(1.0 - self.weight)

    def apply_many(self, firsts, seconds, orientation):
        const = self._image_ab if orientation is Orientation.AB else self._image_ba
        base = self.base.apply_many(firsts, seconds, orientation)
        return self.weight * const + (1.0 - self.weight) * base


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a sampled inequality check."""

    checked_pairs: int
    violations: int
    worst_margin: float
    inferred_lambda: Optional[float] = None


@dataclass(frozen=True)
class NonexpansiveCheck:
    """Same- and cross-orientation results, reported separately.

    The defining inequality does not pin down whether the two input pairs may
    have different orientations, so both readings are measured.
    """

    same_orientation: ConditionReport
    cross_orientation: ConditionReport


def check_cyclic(t: CyclicMap, a: ConvexSet, b: ConvexSet, n_samples: int,
                 seed: int, tol: float = 1e-9) -> ConditionReport:
    """Sampled verification that AB images land in B and BA images in A."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    a1, a2, b1, b2 = (a.sample(n_samples, seed * 8 + 0),
                      a.sample(n_samples, seed * 8 + 1),
                      b.sample(n_samples, seed * 8 + 2),
                      b.sample(n_samples, seed * 8 + 3))
    img_ab = t.apply_many(a1, b1, Orientation.AB)
    img_ba = t.apply_many(b2, a2, Orientation.BA)
    dist_ab = b.distance_many(img_ab)
    dist_ba = a.distance_many(img_ba)
    dists = np.concatenate([dist_ab, dist_ba])
    return ConditionReport(
        checked_pairs=2 * n_samples,
        violations=int(np.sum(dists > tol)),
        worst_margin=float(np.max(dists)),
    )


def _product_dists(f1, s1, f2, s2) -> np.ndarray:
    return np.maximum(np.linalg.norm(f1 - f2, axis=1), np.linalg.norm(s1 - s2, axis=1))


def _condition_samples(t: CyclicMap, a: ConvexSet, b: ConvexSet, n: int, seed: int,
                       cross: bool):
    """Image and input pair distances for sampled (p, q) pairs.

    Returns (img_dists, pair_dists) for same-orientation pairs (both AB plus
    both BA) when ``cross`` is false, or for AB-versus-BA pairs otherwise.
    """
    base = seed * 32
    if not cross:
        a1, a2 = a.sample(n, base + 0), a.sample(n, base + 1)
        b1, b2 = b.sample(n, base + 2), b.sample(n, base + 3)
        a3, a4 = a.sample(n, base + 4), a.sample(n, base + 5)
        b3, b4 = b.sample(n, base + 6), b.sample(n, base + 7)
        img = np.vstack([
            t.apply_many(a1, b1, Orientation.AB) - t.apply_many(a2, b2, Orientation.AB),
            t.apply_many(b3, a3, Orientation.BA) - t.apply_many(b4, a4, Orientation.BA),
        ])
        img_d = np.linalg.norm(img, axis=1)
        pair_d = np.concatenate([
            _product_dists(a1, b1, a2, b2),
            _product_dists(b3, a3, b4, a4),
        ])
        return img_d, pair_d
    a1, b1 = a.sample(n, base + 8), b.sample(n, base + 9)
    b2, a2 = b.sample(n, base + 10), a.sample(n, base + 11)
    img = (t.apply_many(a1, b1, Orientation.AB)
           - t.apply_many(b2, a2, Orientation.BA))
    return np.linalg.norm(img, axis=1), _product_dists(a1, b1, b2, a2)


def estimate_lambda(t: CyclicMap, a: ConvexSet, b: ConvexSet, d: float,
                    n_pairs: int, seed: int) -> ConditionReport:
    """Certified lower bound on any valid contraction constant, by sampling.

    For each sampled input pair the minimal constant satisfying the
    contraction inequality is ``(||T(p) - T(q)|| - d) / (||p - q|| - d)``,
    clamped below at zero; pairs whose distance sits within 1e-9 of the gap
    are skipped (the inequality is vacuous there).  Pairs are drawn from both
    same- and cross-orientation combinations.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    n = max(1, n_pairs // 3)
    img_same, pair_same = _condition_samples(t, a, b, n, seed, cross=False)
    img_cross, pair_cross = _condition_samples(t, a, b, n, seed, cross=True)
    img_d = np.concatenate([img_same, img_cross])
    pair_d = np.concatenate([pair_same, pair_cross])

    denom = pair_d - d
    valid = denom > 1e-9
    inferred = None
    if np.any(valid):
        ell = np.clip((img_d[valid] - d) / denom[valid], 0.0, None)
        inferred = float(np.max(ell))

    decl = t.declared_class
    lam = decl.lam if decl.kind == "contraction" else 1.0
    rhs = lam * pair_d + (1.0 - lam) * d
    margins = img_d - rhs
    return ConditionReport(
        checked_pairs=int(img_d.size),
        violations=int(np.sum(margins > 1e-9)),
        worst_margin=float(np.max(margins)),
        inferred_lambda=inferred,
    )


def check_nonexpansive(s: CyclicMap, a: ConvexSet, b: ConvexSet, n_pairs: int,
                       seed: int, tol: float = 1e-9) -> NonexpansiveCheck:
    """Sampled nonexpansiveness check, same- and cross-orientation separately."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")

    def _report(cross: bool) -> ConditionReport:
        img_d, pair_d = _condition_samples(s, a, b, n_pairs, seed, cross=cross)
        margins = img_d - pair_d
        return ConditionReport(
            checked_pairs=int(img_d.size),
            violations=int(np.sum(margins > tol)),
            worst_margin=float(np.max(margins)),
        )

    return NonexpansiveCheck(_report(False), _report(True))
