"""Dense real vectors, Euclidean norms, and the pairwise max-norm.

Points of the ambient space are plain 1-D ``numpy`` float arrays.  Pairs of
points carry an orientation tag that records which of the two sets each
component is meant to live in; the pair norm is the maximum of the component
Euclidean norms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Orientation",
    "ProductPoint",
    "as_vector",
    "euclidean_norm",
    "product_norm",
    "product_distance",
]


def as_vector(x) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float array, rejecting NaN/inf."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got array of shape {v.shape}")
    if v.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


class Orientation(enum.Enum):
    """Side assignment of a pair: AB means first in A, second in B."""

    AB = "AB"
    BA = "BA"

    @property
    def flipped(self) -> "Orientation":
        return Orientation.BA if self is Orientation.AB else Orientation.AB


@dataclass(frozen=True)
class ProductPoint:
    """An ordered pair of equal-dimension points with an orientation tag.

    Membership of the components in their intended sets is a caller
    responsibility (checkable through the geometry module); this class only
    enforces dimensional consistency and finiteness.
    """

    first: np.ndarray
    second: np.ndarray
    orientation: Orientation = Orientation.AB

    def __post_init__(self):
        object.__setattr__(self, "first", as_vector(self.first))
        object.__setattr__(self, "second", as_vector(self.second))
        if self.first.shape != self.second.shape:
            raise ValueError(
                "pair components have mismatched dimensions "
                f"({self.first.size} vs {self.second.size})"
            )
        if not isinstance(self.orientation, Orientation):
            raise TypeError("orientation must be an Orientation")

    @property
    def dim(self) -> int:
        return self.first.size

    @property
    def swapped(self) -> "ProductPoint":
        """The pair with components exchanged and orientation flipped."""
        return ProductPoint(self.second, self.first, self.orientation.flipped)


def euclidean_norm(v) -> float:
    """Euclidean norm of a vector; zero iff the vector is zero."""
    return float(np.linalg.norm(as_vector(v)))


def product_norm(p: ProductPoint) -> float:
    """Pair norm: the larger of the two component Euclidean norms."""
    return max(float(np.linalg.norm(p.first)), float(np.linalg.norm(p.second)))


def product_distance(p: ProductPoint, q: ProductPoint) -> float:
    """Distance induced by the pair max-norm.

    Orientation tags are ignored; only the component dimensions must match.
    """
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch ({p.dim} vs {q.dim})")
    return max(
        float(np.linalg.norm(p.first - q.first)),
        float(np.linalg.norm(p.second - q.second)),
    )
