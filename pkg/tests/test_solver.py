import warnings

import numpy as np
import pytest

from proxipair.core import Orientation, ProductPoint, product_distance
from proxipair.geometry import ProximalPair, diameter_bound, gap
from proxipair.instances import (
    overlapping_box_instance,
    reference_suite,
    stacked_box_instance,
)
from proxipair.mappings import AnchoredAffine, ConstantProximal, SinePartner
from proxipair.oracle import bisect_root, grid_search
from proxipair.solver import (
    check_tail_proximity,
    iterate_once,
    predict_iterations,
    residuals,
    solve_contraction,
    solve_nonexpansive,
    verify_limit,
)

A = SinePartner.DOMAIN_A
B = SinePartner.DOMAIN_B
REFLECT = np.diag([1.0, -1.0])


def pp(first, second, orientation=Orientation.AB):
    return ProductPoint(np.array(first, float), np.array(second, float), orientation)


def origin_anchored_map(lam=0.5):
    return AnchoredAffine(np.array([0.0, 1.0]), np.array([0.0, 2.0]), lam,
                          REFLECT, REFLECT, certify=(A, B))


class TestIterateOnce:
    def test_anchor_swaps(self):
        t = origin_anchored_map()
        out = iterate_once(t, pp([0, 1], [0, 2]))
        assert out.orientation is Orientation.BA
        assert np.allclose(out.first, [0, 2])
        assert np.allclose(out.second, [0, 1])

    def test_sine_at_known_pair(self):
        out = iterate_once(SinePartner(), pp([0, 1], [0, 2]))
        assert np.allclose(out.first, [0, 2])
        assert np.allclose(out.second, [0, 1])
        rx, ry = residuals(SinePartner(), pp([0, 1], [0, 2]))
        assert rx == pytest.approx(1.0) and ry == pytest.approx(1.0)

    def test_orientation_parity(self):
        t = origin_anchored_map()
        p = pp([0.3, 0.4], [0.7, 2.2])
        twice = iterate_once(t, iterate_once(t, p))
        assert twice.orientation is Orientation.AB


class TestSolveContraction:
    def test_known_solution_and_oracle_agreement(self):
        t = origin_anchored_map(0.5)
        rep = solve_contraction(t, A, B, pp([1, 0], [1, 3]), 1.0, 0.5, 1e-8)
        assert rep.converged
        target = pp([0, 1], [0, 2])
        assert product_distance(rep.solution, target) < 1e-7
        assert rep.residual_x == pytest.approx(1.0, abs=1e-7)
        assert rep.residual_y == pytest.approx(1.0, abs=1e-7)
        orc = grid_search(t, A, B, 1.0, 0.02, threshold=0.0)
        assert product_distance(rep.solution, orc.best) <= 0.02 * np.sqrt(2) + 1e-8

    def test_start_at_solution_converges_at_zero(self):
        t = origin_anchored_map(0.5)
        rep = solve_contraction(t, A, B, pp([0, 1], [0, 2]), 1.0, 0.5, 1e-8)
        assert rep.converged
        assert rep.iterations == 0
        assert rep.gaps[0] == pytest.approx(1.0)

    def test_iterations_within_prediction_slow_contraction(self):
        inst = stacked_box_instance(2, 0.9, 0)
        rep = solve_contraction(inst.map, inst.a, inst.b, inst.start, 1.0, 0.9, 1e-8)
        assert rep.converged
        assert rep.iterations <= rep.predicted_iterations
        assert rep.within_predicted

    def test_per_step_geometric_bound(self):
        for inst in [stacked_box_instance(2, lam, 0) for lam in (0.3, 0.7)]:
            rep = solve_contraction(inst.map, inst.a, inst.b, inst.start,
                                    1.0, inst.lam, 1e-8)
            delta0 = rep.gaps[0]
            for n, g in enumerate(rep.gaps):
                assert g - 1.0 <= inst.lam**n * delta0 + 1e-9

    def test_rejects_bad_lambda(self):
        t = origin_anchored_map(0.5)
        with pytest.raises(ValueError):
            solve_contraction(t, A, B, pp([1, 0], [1, 3]), 1.0, 1.0, 1e-8)
        with pytest.raises(ValueError):
            solve_contraction(t, A, B, pp([1, 0], [1, 3]), 1.0, 1.5, 1e-8)

    def test_rejects_start_outside_sets(self):
        t = origin_anchored_map(0.5)
        with pytest.raises(ValueError):
            solve_contraction(t, A, B, pp([5, 5], [1, 3]), 1.0, 0.5, 1e-8)

    def test_max_iter_exhaustion_flagged(self):
        inst = stacked_box_instance(2, 0.9, 1)
        rep = solve_contraction(inst.map, inst.a, inst.b, inst.start, 1.0, 0.9,
                                1e-12, max_iter=10)
        assert not rep.converged
        assert rep.iterations <= 10
        assert len(rep.gaps) == len(rep.iterates)

    def test_gaps_same_length_as_iterates(self):
        inst = stacked_box_instance(3, 0.5, 0)
        rep = solve_contraction(inst.map, inst.a, inst.b, inst.start, 1.0, 0.5, 1e-8)
        assert len(rep.gaps) == len(rep.iterates)

    def test_uniqueness_across_starts(self):
        inst = stacked_box_instance(2, 0.7, 0)
        rng = np.random.default_rng(123)
        sols = []
        for _ in range(10):
            start = pp(rng.uniform(0, 1, 2), rng.uniform([0, 2], [1, 3]))
            rep = solve_contraction(inst.map, inst.a, inst.b, start, 1.0, 0.7, 1e-8)
            assert rep.converged
            sols.append(rep.solution)
        worst = max(product_distance(p, q) for p in sols for q in sols)
        assert worst <= 1e-6

    def test_limit_identity_at_solution(self):
        for inst in [stacked_box_instance(2, 0.5, 0), stacked_box_instance(3, 0.9, 1)]:
            rep = solve_contraction(inst.map, inst.a, inst.b, inst.start, 1.0,
                                    inst.lam, 1e-8)
            back = iterate_once(inst.map, iterate_once(inst.map, rep.solution))
            assert np.linalg.norm(back.first - rep.solution.first) <= 10 * 1e-8
            assert np.linalg.norm(back.second - rep.solution.second) <= 10 * 1e-8

    def test_even_iterate_cauchy_property(self):
        # some even index exists from which gaps are settled and all later
        # even iterates lie within tol of each other
        inst = stacked_box_instance(2, 0.5, 1)
        tol = 1e-8
        rep = solve_contraction(inst.map, inst.a, inst.b, inst.start, 1.0, 0.5,
                                tol, max_iter=200)
        its, gaps = rep.iterates, rep.gaps
        found = None
        for start in range(0, len(its) - 1, 2):
            if gaps[start] - 1.0 > tol:
                continue
            pairwise = [
                product_distance(its[m], its[n])
                for m in range(start, len(its), 2)
                for n in range(start, len(its), 2)
            ]
            if max(pairwise) <= tol:
                found = start
                break
        assert found is not None

    def test_degenerate_gap_fixed_point(self):
        inst = overlapping_box_instance(0.5, 3)
        rep = solve_contraction(inst.map, inst.a, inst.b, inst.start, 0.0, 0.5, 1e-10)
        assert rep.converged
        assert product_distance(
            rep.solution, pp(inst.a_star, inst.b_star)) <= 1e-8
        assert rep.residual_x <= 1e-10


class TestVerifyLimit:
    def test_sine_known_pair(self):
        assert verify_limit(SinePartner(), pp([0, 1], [0, 2]), 1.0, 1e-9)

    def test_sine_off_pair_rejected(self):
        # residual_x = ||(0.5,1) - (sin 0.5, 2)|| = 1.000211... exceeds 1e-4
        cand = pp([0.5, 1], [0.5, 2])
        assert not verify_limit(SinePartner(), cand, 1.0, 1e-4)
        rx, _ = residuals(SinePartner(), cand)
        assert rx == pytest.approx(1.000211, abs=1e-5)

    def test_exact_residuals_accepted(self):
        t = ConstantProximal(np.array([0.5, 1.0]), np.array([0.5, 2.0]))
        assert verify_limit(t, pp([0.5, 1], [0.5, 2]), 1.0, 1e-12)


class TestSolveNonexpansive:
    def test_sine_example_reaches_known_pair(self):
        anchor = ProximalPair(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 1.0, 0, True)
        schedule = [2**k for k in range(1, 11)]
        rep = solve_nonexpansive(SinePartner(), A, B, anchor, schedule,
                                 inner_tol=1e-8, outer_tol=1e-6)
        assert rep.converged
        assert product_distance(rep.solution, pp([0, 1], [0, 2])) < 1e-4
        assert abs(rep.residual_x - 1.0) < 1e-4
        assert abs(rep.residual_y - 1.0) < 1e-4
        # the coupled conditions force x = sin(sin(x)); bisection pins the root
        root = bisect_root("sin_sin_minus_identity", 0.0, 1.0, 1e-12)
        assert abs(rep.solution.first[0] - root) < 1e-4

    def test_constant_map_converges_at_first_entry(self):
        g = gap(A, B)
        anchor = ProximalPair(g.a0, g.b0, g.dist, g.iterations, True)
        t = ConstantProximal(g.a0, g.b0)
        rep = solve_nonexpansive(t, A, B, anchor, [2, 4, 8], 1e-8, 1e-6)
        assert rep.converged
        assert rep.schedule == [2]
        assert np.allclose(rep.solution.first, g.a0)
        assert np.allclose(rep.solution.second, g.b0)

    def test_residual_decay_law_full_schedule(self):
        g = gap(A, B)
        anchor = ProximalPair(g.a0, g.b0, g.dist, g.iterations, True)
        schedule = [2**k for k in range(1, 11)]
        rep = solve_nonexpansive(SinePartner(), A, B, anchor, schedule,
                                 inner_tol=1e-8, outer_tol=1e-6, early_stop=False)
        diam = diameter_bound(A, B)
        assert rep.schedule == schedule
        for n, sub in zip(rep.schedule, rep.subproblem_reports):
            rx, ry = residuals(SinePartner(), sub.solution)
            assert max(rx, ry) - 1.0 <= diam / n + 1e-8
        # each subproblem's effective constant is 1 - 1/n
        for n, sub in zip(rep.schedule, rep.subproblem_reports):
            assert sub.predicted_iterations == predict_iterations(
                sub.gaps[0], 1e-8, 1.0 - 1.0 / n)

    def test_invalid_anchor_rejected(self):
        anchor = ProximalPair(np.array([0.0, 0.5]), np.array([0.0, 2.0]),
                              1.0, 0, True)
        with pytest.raises(ValueError):
            solve_nonexpansive(SinePartner(), A, B, anchor, [2, 4], 1e-8, 1e-6)

    def test_requires_nonexpansive_declaration(self):
        anchor = ProximalPair(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 1.0, 0, True)
        with pytest.raises(ValueError):
            solve_nonexpansive(origin_anchored_map(0.5), A, B, anchor, [2, 4], 1e-8, 1e-6)

    def test_bad_schedule_rejected(self):
        anchor = ProximalPair(np.array([0.0, 1.0]), np.array([0.0, 2.0]), 1.0, 0, True)
        for sched in ([], [1, 2], [4, 2], [2, 2]):
            with pytest.raises(ValueError):
                solve_nonexpansive(SinePartner(), A, B, anchor, sched, 1e-8, 1e-6)

    def test_schedule_exhaustion_returns_unconverged(self):
        g = gap(A, B)
        anchor = ProximalPair(g.a0, g.b0, g.dist, g.iterations, True)
        rep = solve_nonexpansive(SinePartner(), A, B, anchor, [2, 4], 1e-8, 1e-9)
        assert not rep.converged


class TestTailProximity:
    def test_aligned_runs_clean(self):
        inst = stacked_box_instance(2, 0.9, 0)
        r1 = solve_contraction(inst.map, inst.a, inst.b, inst.start, 1.0, 0.9, 1e-8)
        r2 = solve_contraction(inst.map, inst.a, inst.b,
                               pp([0.2, 0.05], [0.8, 2.9]), 1.0, 0.9, 1e-8)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert check_tail_proximity(r1, r2, 1.0, 1e-8) == []

    def test_transverse_runs_warn_without_failing(self):
        # starts on the proximal facets with opposite transverse offsets: the
        # gaps settle while the iterates still differ, so the diagnostic fires
        inst = stacked_box_instance(2, 0.9, 0)
        r1 = solve_contraction(inst.map, inst.a, inst.b,
                               pp([0.05, 1.0], [0.9, 2.0]), 1.0, 0.9, 1e-8)
        r2 = solve_contraction(inst.map, inst.a, inst.b,
                               pp([0.95, 1.0], [0.1, 2.0]), 1.0, 0.9, 1e-8)
        with pytest.warns(RuntimeWarning):
            violations = check_tail_proximity(r1, r2, 1.0, 1e-8)
        assert violations


def test_reference_suite_shape():
    suite = reference_suite()
    assert len(suite) == 20
    assert {(i.lam, i.dim) for i in suite} == {
        (lam, dim) for lam in (0.3, 0.5, 0.7, 0.9) for dim in (2, 3)
    }
