import numpy as np
import pytest

from schedfront.domain import dominates, get_frontier
from schedfront.pareto import RefPoint, clamp_to_box, compute_ref_point, hvi, hypervolume


def mc_dominated_area(points, ref, samples, seed):
    """Monte-Carlo estimate of the area dominated by ``points`` inside the
    reference box (independent of the sweep implementation)."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, ref.time_ms, samples)
    ys = rng.uniform(0.0, ref.energy_j, samples)
    pts = sorted(points)
    t = np.array([p[0] for p in pts])
    e = np.array([p[1] for p in pts])
    # Dominated iff some point has time <= x and energy <= y; with time
    # ascending/energy descending, the binding point is the last with t <= x.
    idx = np.searchsorted(t, xs, side="right") - 1
    dominated = (idx >= 0) & (e[np.clip(idx, 0, None)] <= ys)
    return dominated.mean() * ref.time_ms * ref.energy_j


def rectangle_union_area(points, ref):
    """Inclusion-free union-of-rectangles oracle via x-sweep over slabs."""
    xs = sorted({p[0] for p in points} | {ref.time_ms})
    area = 0.0
    for x0, x1 in zip(xs, xs[1:]):
        heights = [ref.energy_j - e for t, e in points if t <= x0]
        if heights:
            area += max(heights) * (x1 - x0)
    return area


class TestHypervolume:
    def test_unit_square(self):
        assert hypervolume(get_frontier([(1.0, 1.0)]), RefPoint(2.0, 2.0)) == 1.0

    def test_two_point_example_vs_rectangle_union_oracle(self):
        pts = [(1.0, 3.0), (2.0, 1.0)]
        ref = RefPoint(4.0, 4.0)
        assert rectangle_union_area(pts, ref) == 7.0
        assert hypervolume(get_frontier(pts), ref) == 7.0

    def test_empty_frontier(self):
        assert hypervolume(get_frontier([]), RefPoint(1.0, 1.0)) == 0.0

    def test_point_outside_box_rejected(self):
        with pytest.raises(ValueError):
            hypervolume(get_frontier([(3.0, 1.0)]), RefPoint(2.0, 2.0))

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(99)
        for trial in range(20):
            pts = [tuple(map(float, p)) for p in rng.random((12, 2))]
            front = get_frontier(pts)
            ref = RefPoint(1.2, 1.2)
            hv = hypervolume(front, ref)
            mc = mc_dominated_area(front.objectives(), ref, 400_000, seed=trial)
            assert hv == pytest.approx(mc, rel=0.01)

    def test_monotone_under_union(self):
        rng = np.random.default_rng(5)
        pts = [tuple(map(float, p)) for p in rng.random((30, 2))]
        ref = RefPoint(1.1, 1.1)
        hv = 0.0
        for k in range(1, len(pts) + 1):
            nxt = hypervolume(get_frontier(pts[:k]), ref)
            assert nxt >= hv - 1e-12
            hv = nxt

    def test_input_order_invariant(self):
        rng = np.random.default_rng(17)
        pts = [tuple(map(float, p)) for p in rng.random((40, 2))]
        ref = RefPoint(1.1, 1.1)
        hv = hypervolume(get_frontier(pts), ref)
        for _ in range(5):
            rng.shuffle(pts)
            assert hypervolume(get_frontier(pts), ref) == hv


class TestRefPoint:
    def test_formula(self):
        r = compute_ref_point([(10.0, 100.0), (20.0, 50.0)])
        assert (r.time_ms, r.energy_j) == pytest.approx((22.0, 110.0), rel=1e-12)

    def test_singleton(self):
        r = compute_ref_point([(1.0, 1.0)])
        assert (r.time_ms, r.energy_j) == (1.1, 1.1)

    def test_all_equal(self):
        r = compute_ref_point([(5.0, 5.0)] * 3)
        assert (r.time_ms, r.energy_j) == pytest.approx((5.5, 5.5))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_ref_point([])


class TestHvi:
    def test_example_vs_rectangle_union_oracle(self):
        front_pts = [(1.0, 3.0), (2.0, 1.0)]
        ref = RefPoint(4.0, 4.0)
        cand = (1.5, 0.5)
        expected = rectangle_union_area(front_pts + [cand], ref) - rectangle_union_area(front_pts, ref)
        assert expected == 2.25
        assert hvi(get_frontier(front_pts), cand, ref) == 2.25

    def test_dominated_candidate_zero(self):
        front = get_frontier([(1.0, 3.0), (2.0, 1.0)])
        assert hvi(front, (3.0, 3.5), RefPoint(4.0, 4.0)) == 0.0

    def test_empty_frontier_equals_hypervolume(self):
        assert hvi(get_frontier([]), (1.0, 1.0), RefPoint(2.0, 2.0)) == 1.0

    def test_candidate_beyond_box_clamped_to_zero(self):
        front = get_frontier([(1.0, 3.0), (2.0, 1.0)])
        assert hvi(front, (9.0, 9.0), RefPoint(4.0, 4.0)) == 0.0
        assert clamp_to_box((9.0, 0.5), RefPoint(4.0, 4.0)) == (4.0, 0.5)

    def test_zero_iff_weakly_dominated(self):
        rng = np.random.default_rng(31)
        pts = [tuple(map(float, p)) for p in rng.random((15, 2))]
        front = get_frontier(pts)
        ref = RefPoint(1.1, 1.1)
        for _ in range(300):
            cand = tuple(rng.uniform(0.0, 1.1, 2))
            score = hvi(front, cand, ref)
            weakly_dominated = any(
                dominates(p, cand) or p == cand for p in front.objectives()
            )
            assert (score == 0.0) == weakly_dominated

    def test_non_negative_fuzz(self):
        rng = np.random.default_rng(44)
        pts = [tuple(map(float, p)) for p in rng.random((10, 2))]
        front = get_frontier(pts)
        ref = RefPoint(1.1, 1.1)
        for _ in range(500):
            assert hvi(front, tuple(rng.uniform(-0.5, 2.0, 2)), ref) >= 0.0
