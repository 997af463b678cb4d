"""Closed-form perturbation-stability bounds and their empirical verifier.

A pair (u, v) in A x B is an eps-approximate solution when both of its
residuals stay within eps of the inter-set distance d.  Each bound kind gives
a radius within which some true solution must lie:

* ``contraction``: eps / (1 - lam) + ((3 - lam) / (1 - lam)) * d
* ``nonexpansive``: eps + d + M_A + M_B, the M's bounding member norms.
  (The product form d * (1 + (M_A + M_B) / d) is algebraically identical for
  d > 0 but undefined at d = 0, so the expanded sum is stored.)
* ``strict_convex``: 2 * eps + 2 * d, valid under an extra per-sample
  hypothesis that the verifier checks explicitly.

``verify_stability`` samples approximate pairs around a verified solution by
both local perturbation and global rejection, keeps those satisfying the
approximation inequalities, and checks the bound on every kept sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Orientation, ProductPoint
from .geometry import ConvexSet
from .mappings import CyclicMap

__all__ = [
    "StabilityBound",
    "StabilityReport",
    "StabilitySamplingError",
    "BOUND_KINDS",
    "bound_contraction",
    "bound_nonexpansive",
    "bound_strict_convex",
    "make_bound",
    "verify_stability",
]

BOUND_KINDS = ("contraction", "nonexpansive", "strict_convex")


class StabilitySamplingError(RuntimeError):
    """No approximate pair found within the draw budget (eps too small)."""


@dataclass(frozen=True)
class StabilityBound:
    kind: str
    epsilon: float
    d: float
    lam: Optional[float]
    m_a: Optional[float]
    m_b: Optional[float]
    bound: float


@dataclass(frozen=True)
class StabilityReport:
    """Verification outcome over kept eps-approximate samples."""

    n_samples: int          # kept and evaluated
    requested: int
    max_ratio: float        # max over samples of max(dev_x, dev_y) / bound
    violations: int         # samples with ratio > 1 + 1e-9
    hypothesis_checked: bool


def bound_contraction(epsilon: float, lam: float, d: float) -> StabilityBound:
    """Stability radius for a contraction with constant ``lam``.

    At d = 0 this reduces to the classical fixed-point constant
    eps / (1 - lam).
    """
    if not (0.0 < lam < 1.0):
        raise ValueError("lam must lie in (0, 1)")
    if epsilon < 0 or d < 0:
        raise ValueError("epsilon and d must be nonnegative")
    value = epsilon / (1.0 - lam) + ((3.0 - lam) / (1.0 - lam)) * d
    return StabilityBound("contraction", epsilon, d, lam, None, None, value)


def bound_nonexpansive(epsilon: float, d: float, m_a: float, m_b: float) -> StabilityBound:
    """Stability radius for nonexpansive maps on norm-bounded sets."""
    if m_a <= 0 or m_b <= 0:
        raise ValueError("set norm bounds must be positive")
    if epsilon < 0 or d < 0:
        raise ValueError("epsilon and d must be nonnegative")
    value = epsilon + d + m_a + m_b
    return StabilityBound("nonexpansive", epsilon, d, None, m_a, m_b, value)


def bound_strict_convex(epsilon: float, d: float) -> StabilityBound:
    """Conditional stability radius 2*eps + 2*d (extra hypothesis required)."""
    if epsilon < 0 or d < 0:
        raise ValueError("epsilon and d must be nonnegative")
    return StabilityBound("strict_convex", epsilon, d, None, None, None,
                          2.0 * epsilon + 2.0 * d)


def make_bound(kind: str, epsilon: float, d: float, lam: Optional[float] = None,
               m_a: Optional[float] = None, m_b: Optional[float] = None) -> StabilityBound:
    if kind == "contraction":
        if lam is None:
            raise ValueError("contraction bound needs the contraction constant")
        return bound_contraction(epsilon, lam, d)
    if kind == "nonexpansive":
        if m_a is None or m_b is None:
            raise ValueError("nonexpansive bound needs both set norm bounds")
        return bound_nonexpansive(epsilon, d, m_a, m_b)
    if kind == "strict_convex":
        return bound_strict_convex(epsilon, d)
    raise ValueError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")


def _candidate_batches(a: ConvexSet, b: ConvexSet, solution: ProductPoint,
                       epsilon: float, batch: int, rng: np.random.Generator):
    """One batch of candidate pairs from each of the two strategies.

    Local candidates perturb the solution by random directions with radii up
    to the search cap (the eps value itself) and re-project into the sets,
    covering the near field; rejection-sampled pairs cover approximate
    solutions far from the returned one.
    """
    dim = solution.dim
    dirs_u = rng.normal(size=(batch, dim))
    dirs_v = rng.normal(size=(batch, dim))
    dirs_u /= np.linalg.norm(dirs_u, axis=1, keepdims=True)
    dirs_v /= np.linalg.norm(dirs_v, axis=1, keepdims=True)
    radii_u = rng.uniform(0.0, epsilon, size=(batch, 1))
    radii_v = rng.uniform(0.0, epsilon, size=(batch, 1))
    local_u = a.project_many(solution.first + radii_u * dirs_u)
    local_v = b.project_many(solution.second + radii_v * dirs_v)

    seed_pair = rng.integers(0, 2**32 - 1, size=2)
    global_u = a.sample(batch, int(seed_pair[0]))
    global_v = b.sample(batch, int(seed_pair[1]))
    return (np.vstack([local_u, global_u]), np.vstack([local_v, global_v]))


def verify_stability(t: CyclicMap, a: ConvexSet, b: ConvexSet,
                     solution: ProductPoint, bound: StabilityBound,
                     n_samples: int, seed: int,
                     max_draw_factor: int = 500) -> StabilityReport:
    """Sample eps-approximate pairs and check the bound on each of them.

    Candidates must satisfy both approximation inequalities to be kept.  For
    the ``strict_convex`` kind the extra hypothesis (the solution's residual
    against a candidate's image never exceeds the candidate's own) is checked
    per sample, and only passing samples count.  Raises
    ``StabilitySamplingError`` if the draw budget produces no kept sample.
    """
    if bound.epsilon <= 0:
        raise ValueError("epsilon must be positive for the sampler")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng([seed, 0x5AB1])
    eps_d = bound.epsilon + bound.d + 1e-12

    kept_u = []
    kept_v = []
    drawn = 0
    budget = max_draw_factor * n_samples
    batch = max(256, n_samples)
    while sum(u.shape[0] for u in kept_u) < n_samples and drawn < budget:
        cand_u, cand_v = _candidate_batches(a, b, solution, bound.epsilon, batch, rng)
        drawn += cand_u.shape[0]
        img_u = t.apply_many(cand_u, cand_v, Orientation.AB)
        img_v = t.apply_many(cand_v, cand_u, Orientation.BA)
        res_u = np.linalg.norm(cand_u - img_u, axis=1)
        res_v = np.linalg.norm(cand_v - img_v, axis=1)
        keep = (res_u <= eps_d) & (res_v <= eps_d)
        if bound.kind == "strict_convex":
            hyp = (
                (np.linalg.norm(solution.first - img_u, axis=1) <= res_u + 1e-12)
                & (np.linalg.norm(solution.second - img_v, axis=1) <= res_v + 1e-12)
            )
            keep &= hyp
        kept_u.append(cand_u[keep])
        kept_v.append(cand_v[keep])

    u = np.vstack(kept_u) if kept_u else np.empty((0, solution.dim))
    v = np.vstack(kept_v) if kept_v else np.empty((0, solution.dim))
    if u.shape[0] == 0:
        raise StabilitySamplingError(
            f"no eps-approximate pair found in {drawn} draws; eps={bound.epsilon} "
            "is too small for the sampler on this instance"
        )
    u = u[:n_samples]
    v = v[:n_samples]

    dev = np.maximum(
        np.linalg.norm(u - solution.first, axis=1),
        np.linalg.norm(v - solution.second, axis=1),
    )
    ratios = dev / bound.bound if bound.bound > 0 else np.where(dev <= 1e-12, 0.0, np.inf)
    return StabilityReport(
        n_samples=int(u.shape[0]),
        requested=n_samples,
        max_ratio=float(np.max(ratios)),
        violations=int(np.sum(ratios > 1.0 + 1e-9)),
        hypothesis_checked=(bound.kind == "strict_convex"),
    )
