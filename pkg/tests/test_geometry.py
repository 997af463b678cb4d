import numpy as np
import pytest

from proxipair.geometry import (
    Ball,
    Box,
    GeometryError,
    Polytope,
    SamplingError,
    diameter_bound,
    gap,
)

UNIT_BOX = Box([0.0, 0.0], [1.0, 1.0])
SHIFTED_BOX = Box([0.0, 2.0], [1.0, 3.0])
UNIT_BOX_POLY = Polytope(
    [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [1.0, 0.0, 1.0, 0.0]
)


def all_variants():
    return [
        UNIT_BOX,
        Ball([0.5, 0.5], 0.75),
        Polytope([[1, 1], [-1, 0], [0, -1]], [1.5, 0, 0]),
    ]


class TestContains:
    def test_box_interior(self):
        assert UNIT_BOX.contains([0.5, 0.5], tol=0.0)

    def test_box_tolerance_band(self):
        assert UNIT_BOX.contains([1.0000005, 0.5], tol=1e-6)
        assert not UNIT_BOX.contains([1.0000005, 0.5], tol=0.0)

    def test_ball_outside(self):
        assert not Ball([0.0, 0.0], 1.0).contains([2.0, 0.0], tol=0.0)
        assert Ball([0.0, 0.0], 1.0).contains([2.0, 0.0], tol=1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            UNIT_BOX.contains([0.5, 0.5, 0.5])


class TestProject:
    def test_box_clamp(self):
        assert np.allclose(UNIT_BOX.project([2.0, 0.5]), [1.0, 0.5])

    def test_ball_radial(self):
        assert np.allclose(Ball([0.0, 0.0], 1.0).project([3.0, 4.0]), [0.6, 0.8])

    def test_member_fixed(self):
        p = np.array([0.25, 0.75])
        assert np.allclose(UNIT_BOX.project(p), p)

    def test_polytope_matches_box_closed_form(self):
        # independent oracle: the same region as an axis box projects by clamping
        rng = np.random.default_rng(10)
        for _ in range(200):
            p = rng.uniform(-2, 3, size=2)
            assert np.allclose(UNIT_BOX_POLY.project(p), UNIT_BOX.project(p),
                               atol=1e-8)

    def test_corner_case(self):
        assert np.allclose(UNIT_BOX_POLY.project([2.0, 2.0]), [1.0, 1.0], atol=1e-8)

    def test_idempotent_all_variants(self):
        rng = np.random.default_rng(11)
        for s in all_variants():
            for _ in range(1000):
                p = rng.uniform(-2, 3, size=s.dim)
                q = s.project(p)
                assert np.linalg.norm(s.project(q) - q) <= 1e-12

    def test_variational_inequality(self):
        # <p - proj(p), s - proj(p)> <= 0 characterizes the metric projection
        rng = np.random.default_rng(12)
        for s in all_variants():
            members = s.sample(50, seed=99)
            for _ in range(100):
                p = rng.uniform(-2, 3, size=s.dim)
                q = s.project(p)
                inner = (members - q) @ (p - q)
                assert np.max(inner) <= 1e-9


class TestPolytopeValidation:
    def test_empty_rejected(self):
        with pytest.raises(GeometryError):
            Polytope([[1.0, 0.0], [-1.0, 0.0]], [-1.0, -1.0])

    def test_unbounded_rejected(self):
        with pytest.raises(GeometryError):
            Polytope([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0])

    def test_needs_halfspaces(self):
        with pytest.raises(GeometryError):
            Polytope(np.empty((0, 2)), np.empty(0))

    def test_vertices_of_unit_box(self):
        verts = UNIT_BOX_POLY.vertices()
        expected = {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}
        assert {tuple(np.round(v, 12)) for v in verts} == expected


class TestGap:
    def test_stacked_boxes(self):
        pair = gap(UNIT_BOX, SHIFTED_BOX)
        assert pair.converged
        assert pair.dist == pytest.approx(1.0, abs=1e-8)
        assert np.allclose(pair.a0, [0.5, 1.0])
        assert np.allclose(pair.b0, [0.5, 2.0])

    def test_intersecting_sets(self):
        ball = Ball([0.0, 0.0], 1.0)
        pair = gap(ball, ball)
        assert pair.dist == pytest.approx(0.0, abs=1e-10)

    def test_collinear_balls(self):
        pair = gap(Ball([0.0, 0.0], 1.0), Ball([5.0, 0.0], 1.0))
        assert pair.dist == pytest.approx(3.0, abs=1e-8)
        assert np.allclose(pair.a0, [1.0, 0.0], atol=1e-8)
        assert np.allclose(pair.b0, [4.0, 0.0], atol=1e-8)

    def test_lower_bounds_cross_distances(self):
        for a, b in [(UNIT_BOX, SHIFTED_BOX),
                     (Ball([0, 0], 1.0), Ball([4, 1], 1.5)),
                     (UNIT_BOX_POLY, Ball([3, 3], 0.5))]:
            pair = gap(a, b)
            pts_a = a.sample(1000, seed=21)
            pts_b = b.sample(1000, seed=22)
            cross = np.linalg.norm(pts_a - pts_b, axis=1)
            assert pair.dist <= np.min(cross) + 1e-9

    def test_alternating_distances_nonincreasing(self):
        # replay the iteration and check monotonicity of the distance sequence
        a, b = Ball([0, 0], 1.0), Box([2.0, -3.0], [6.0, -1.5])
        lo, hi = a.bounding_box()
        pb = b.project((lo + hi) / 2)
        pa = a.project(pb)
        dists = [np.linalg.norm(pa - pb)]
        for _ in range(50):
            pb = b.project(pa)
            pa = a.project(pb)
            dists.append(np.linalg.norm(pa - pb))
        assert all(d2 <= d1 + 1e-12 for d1, d2 in zip(dists, dists[1:]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gap(UNIT_BOX, Box([0, 0, 0], [1, 1, 1]))


class TestSupNormBound:
    def test_unit_box(self):
        assert UNIT_BOX.sup_norm_bound() == pytest.approx(np.sqrt(2.0))

    def test_shifted_box(self):
        assert SHIFTED_BOX.sup_norm_bound() == pytest.approx(np.sqrt(10.0))

    def test_ball(self):
        assert Ball([3.0, 0.0], 1.0).sup_norm_bound() == pytest.approx(4.0)

    def test_polytope_exact_low_dim(self):
        assert UNIT_BOX_POLY.sup_norm_bound() == pytest.approx(np.sqrt(2.0))

    def test_bound_dominates_samples(self):
        for s in all_variants():
            bound = s.sup_norm_bound()
            pts = s.sample(1000, seed=31)
            assert np.max(np.linalg.norm(pts, axis=1)) <= bound + 1e-12


class TestSample:
    def test_membership_by_construction(self):
        pts = UNIT_BOX.sample(10, seed=42)
        assert pts.shape == (10, 2)
        assert all(UNIT_BOX.contains(p, tol=0.0) for p in pts)

    def test_determinism(self):
        for s in all_variants():
            assert np.array_equal(s.sample(64, seed=7), s.sample(64, seed=7))

    def test_disc_mean_norm(self):
        # uniform unit disc has mean radius 2/3; cross-check the sampler with
        # an independent polar-coordinates Monte Carlo draw
        disc = Ball([0.0, 0.0], 1.0)
        pts = disc.sample(4000, seed=8)
        mean = float(np.mean(np.linalg.norm(pts, axis=1)))
        assert abs(mean - 2.0 / 3.0) < 0.05
        rng = np.random.default_rng(9)
        r = np.sqrt(rng.uniform(0, 1, size=20000))
        assert abs(np.mean(r) - mean) < 0.02

    def test_membership_for_polytope(self):
        poly = all_variants()[2]
        pts = poly.sample(500, seed=13)
        assert all(poly.contains(p, tol=1e-12) for p in pts)

    def test_thin_set_efficiency_guard(self):
        # thin along the diagonal, so the bounding box cannot adapt
        thin = Polytope([[1, 1], [-1, -1], [1, -1], [-1, 1]],
                        [1e-6, 1e-6, 1.0, 1.0])
        with pytest.raises(SamplingError):
            thin.sample(2000, seed=14)

    def test_rejects_nonpositive_n(self):
        with pytest.raises(ValueError):
            UNIT_BOX.sample(0, seed=1)


def test_diameter_bound_dominates_samples():
    a, b = UNIT_BOX, SHIFTED_BOX
    diam = diameter_bound(a, b)
    pts = np.vstack([a.sample(300, seed=1), b.sample(300, seed=2)])
    dmax = max(np.linalg.norm(p - q) for p in pts[::25] for q in pts[::25])
    assert diam >= dmax - 1e-12
    assert diam == pytest.approx(np.sqrt(1 + 9))


def test_box_validation():
    with pytest.raises(GeometryError):
        Box([1.0, 0.0], [0.0, 1.0])


def test_ball_validation():
    with pytest.raises(GeometryError):
        Ball([0.0, 0.0], 0.0)
