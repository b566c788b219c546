import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleflow.geometry import (CircleTuple, CoincidentCenters,
                                 CoincidentCircles, IntersectionKind,
                                 NoSolution, NotACircle, PlanePoint,
                                 choose_pq_solution, choose_pv_solution,
                                 intersect_circles, orthogonal_circle,
                                 radical_line, real_power_circle,
                                 reactive_power_circle, tuple_center_radius,
                                 voltage_circle)
from circleflow.netmodel import TCoefficients

T_EXAMPLE = TCoefficients(t1=-2.0, t2=2.0, t3=-3.0, t4=-3.0)


def circle_from_center_radius(cx, cy, r):
    return CircleTuple(1.0, -2.0 * cx, -2.0 * cy, cx * cx + cy * cy - r * r)


class TestConstructors:
    def test_real_power_circle_example(self):
        c = real_power_circle(T_EXAMPLE, 0.0)
        assert (c.a, c.bx, c.by, c.c) == (1.0, -1.0, 1.5, 0.0)
        center, r_sq = tuple_center_radius(c)
        assert center == PlanePoint(0.5, -0.75)
        assert r_sq == pytest.approx(13.0 / 16.0, rel=1e-15)

    def test_real_power_circle_origin_degenerate(self):
        t = TCoefficients(-2.0, 0.0, 0.0, -3.0)
        c = real_power_circle(t, 0.0)
        assert (c.bx, c.by, c.c) == (0.0, 0.0, 0.0)
        _, r_sq = tuple_center_radius(c)
        assert r_sq == 0.0

    def test_real_power_circle_non_real_when_power_too_large(self):
        c = real_power_circle(T_EXAMPLE, 100.0)
        assert not c.is_real_circle()

    def test_reactive_power_circle_example(self):
        c = reactive_power_circle(T_EXAMPLE, 0.0)
        assert c.bx == pytest.approx(-1.0)
        assert c.by == pytest.approx(-2.0 / 3.0)
        assert c.c == 0.0

    def test_reactive_circle_matches_factored_form(self):
        # alternative parameterization via per-neighbor conductance /
        # susceptance fractions must produce the identical tuple
        rng = np.random.default_rng(7)
        for _ in range(50):
            g = rng.uniform(0.1, 3.0, size=3)
            b = -rng.uniform(0.1, 3.0, size=3)
            vr = rng.uniform(0.8, 1.2, size=3)
            vi = rng.uniform(-0.2, 0.2, size=3)
            q_d = rng.uniform(-1.0, 1.0)
            t2 = float(np.sum(vr * g - vi * b))
            t3 = float(np.sum(vr * b + vi * g))
            t = TCoefficients(-float(np.sum(g)), t2, t3, float(np.sum(b)))
            c = reactive_power_circle(t, q_d)
            beta = b / np.sum(b)
            gamma = g / np.sum(b)
            bx = float(-beta @ vr - gamma @ vi)
            by = float(gamma @ vr - beta @ vi)
            assert c.bx == pytest.approx(bx, abs=1e-14)
            assert c.by == pytest.approx(by, abs=1e-14)
            assert c.c == pytest.approx(-q_d / np.sum(b), abs=1e-14)

    def test_reactive_circle_q_sign_flip_mirrors_c(self):
        cp = reactive_power_circle(T_EXAMPLE, 0.7)
        cm = reactive_power_circle(T_EXAMPLE, -0.7)
        assert cp.c == -cm.c

    def test_voltage_circle(self):
        assert voltage_circle(1.0) == CircleTuple(1.0, 0.0, 0.0, -1.0)
        _, r_sq = tuple_center_radius(voltage_circle(1.05))
        assert math.sqrt(r_sq) == pytest.approx(1.05, rel=1e-15)
        assert voltage_circle(1.05).residual(PlanePoint(1.05, 0.0)) == 0.0


class TestCenterRadius:
    def test_simple(self):
        center, r_sq = tuple_center_radius(CircleTuple(1.0, -2.0, 0.0, 0.0))
        assert center == PlanePoint(1.0, 0.0)
        assert r_sq == 1.0

    def test_scale_equivalence(self):
        center, r_sq = tuple_center_radius(CircleTuple(2.0, -4.0, 0.0, 0.0))
        assert center == PlanePoint(1.0, 0.0)
        assert r_sq == 1.0

    def test_line_rejected(self):
        with pytest.raises(NotACircle):
            tuple_center_radius(CircleTuple(0.0, 1.0, 0.0, -0.5))

    def test_all_zero_tuple_rejected(self):
        with pytest.raises(Exception):
            CircleTuple(0.0, 0.0, 0.0, 0.0)


class TestRadicalLine:
    def test_unit_circle_pair(self):
        line = radical_line(CircleTuple(1, 0, 0, -1), CircleTuple(1, -2, 0, 0))
        assert (line.a, line.bx, line.by, line.c) == (0.0, 2.0, 0.0, -1.0)

    def test_concentric(self):
        line = radical_line(CircleTuple(1, 0, 0, -1), CircleTuple(1, 0, 0, -4))
        assert (line.bx, line.by) == (0.0, 0.0)
        assert line.c == 3.0

    def test_coincident(self):
        c = CircleTuple(1, -2, 0, 0)
        with pytest.raises(CoincidentCircles):
            radical_line(c, c)


class TestOrthogonalCircle:
    def test_unit_circle_pair(self):
        c1 = CircleTuple(1, 0, 0, -1)
        c2 = CircleTuple(1, -2, 0, 0)
        perp = orthogonal_circle(c1, c2)
        assert (perp.a, perp.bx, perp.by, perp.c) == (1.0, -1.0, 0.0, -0.5)
        center, r_sq = tuple_center_radius(perp)
        assert center == PlanePoint(0.5, 0.0)
        assert r_sq == pytest.approx(0.75, rel=1e-15)

    def test_symmetric_in_arguments(self):
        c1 = circle_from_center_radius(0.3, -0.4, 1.2)
        c2 = circle_from_center_radius(1.0, 0.2, 0.9)
        p12, p21 = orthogonal_circle(c1, c2), orthogonal_circle(c2, c1)
        assert p12.bx == pytest.approx(p21.bx, abs=1e-14)
        assert p12.by == pytest.approx(p21.by, abs=1e-14)
        assert p12.c == pytest.approx(p21.c, abs=1e-14)

    def test_equal_k_gives_midpoint(self):
        c1 = circle_from_center_radius(0.0, 0.0, 1.0)
        c2 = circle_from_center_radius(1.0, 0.0, 1.0)
        perp = orthogonal_circle(c1, c2)
        assert perp.bx == pytest.approx((c1.bx + c2.bx) / 2)
        assert perp.c == pytest.approx((c1.c + c2.c) / 2)

    def test_concentric_rejected(self):
        with pytest.raises(CoincidentCenters):
            orthogonal_circle(CircleTuple(1, 0, 0, -1), CircleTuple(1, 0, 0, -4))


class TestIntersect:
    def test_two_unit_circles(self):
        res = intersect_circles(CircleTuple(1, 0, 0, -1), CircleTuple(1, -2, 0, 0))
        assert res.kind is IntersectionKind.TWO_POINTS
        pts = sorted(res.points, key=lambda p: p.y)
        assert pts[1].x == pytest.approx(0.5, abs=1e-14)
        assert pts[1].y == pytest.approx(math.sqrt(3) / 2, abs=1e-14)
        assert pts[0].y == pytest.approx(-math.sqrt(3) / 2, abs=1e-14)

    def test_external_tangency(self):
        res = intersect_circles(circle_from_center_radius(0, 0, 1),
                                circle_from_center_radius(2, 0, 1))
        assert res.kind is IntersectionKind.TANGENT
        assert res.points[0].x == pytest.approx(1.0, abs=1e-12)
        assert res.points[0].y == pytest.approx(0.0, abs=1e-12)

    def test_disjoint(self):
        res = intersect_circles(circle_from_center_radius(0, 0, 1),
                                circle_from_center_radius(3, 0, 1))
        assert res.kind is IntersectionKind.NO_INTERSECTION
        assert res.points == ()

    def test_identical_circles_raise(self):
        c = circle_from_center_radius(0.5, 0.5, 1.0)
        with pytest.raises(CoincidentCircles):
            intersect_circles(c, c)

    def test_concentric_distinct_no_intersection(self):
        res = intersect_circles(circle_from_center_radius(0, 0, 1),
                                circle_from_center_radius(0, 0, 2))
        assert res.kind is IntersectionKind.NO_INTERSECTION

    def test_matches_naive_center_radius_oracle(self):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(1000):
            r1, r2 = 10.0 ** rng.uniform(-3, 3, size=2)
            c1x, c1y = rng.uniform(-2, 2, size=2)
            lo, hi = abs(r1 - r2), r1 + r2
            dist = lo + rng.uniform(0.05, 0.95) * (hi - lo)
            ang = rng.uniform(0, 2 * math.pi)
            c2x, c2y = c1x + dist * math.cos(ang), c1y + dist * math.sin(ang)
            # naive oracle: distance decomposition along the center line
            a = (dist * dist + r1 * r1 - r2 * r2) / (2 * dist)
            h_sq = r1 * r1 - a * a
            res = intersect_circles(circle_from_center_radius(c1x, c1y, r1),
                                    circle_from_center_radius(c2x, c2y, r2))
            if h_sq < 1e-6 * r1 * r1:
                continue  # oracle ill-conditioned near tangency
            checked += 1
            assert res.kind is IntersectionKind.TWO_POINTS
            h = math.sqrt(h_sq)
            ux, uy = (c2x - c1x) / dist, (c2y - c1y) / dist
            mx, my = c1x + a * ux, c1y + a * uy
            expect = {(mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux)}
            for p in res.points:
                err = min(math.hypot(p.x - ex, p.y - ey) for ex, ey in expect)
                assert err < 1e-8 * max(1.0, r1, r2)
        assert checked > 500

    @given(st.sampled_from([1e-6, 1.0, 1e6]), st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_scale_invariance(self, k, seed):
        rng = np.random.default_rng(seed)
        c1 = circle_from_center_radius(*rng.uniform(-1, 1, size=2),
                                       rng.uniform(0.5, 2.0))
        c2 = circle_from_center_radius(*rng.uniform(-1, 1, size=2),
                                       rng.uniform(0.5, 2.0))
        base = intersect_circles(c1, c2)
        scaled = intersect_circles(
            CircleTuple(k * c1.a, k * c1.bx, k * c1.by, k * c1.c), c2)
        assert scaled.kind is base.kind
        for p, q in zip(base.points, scaled.points):
            assert math.hypot(p.x - q.x, p.y - q.y) < 1e-10


class TestSelectionRules:
    def test_pq_higher_magnitude(self):
        res = intersect_circles(circle_from_center_radius(0.5, 0, 0.5),
                                circle_from_center_radius(0.55, 0.1, 0.45))
        pick = choose_pq_solution(res)
        other = next(p for p in res.points if p != pick)
        assert pick.norm_sq() >= other.norm_sq()

    def test_pq_tie_break_positive(self):
        res = intersect_circles(CircleTuple(1, 0, 0, -1), CircleTuple(1, -2, 0, 0))
        pick = choose_pq_solution(res)
        assert pick.y == pytest.approx(math.sqrt(3) / 2, abs=1e-14)

    def test_pq_larger_norm_simple(self):
        from circleflow.geometry import IntersectionResult
        res = IntersectionResult(IntersectionKind.TWO_POINTS,
                                 (PlanePoint(0.9, 0.1), PlanePoint(0.2, 0.1)))
        assert choose_pq_solution(res) == PlanePoint(0.9, 0.1)

    def test_pq_tangent_passthrough(self):
        from circleflow.geometry import IntersectionResult
        res = IntersectionResult(IntersectionKind.TANGENT, (PlanePoint(1, 0),))
        assert choose_pq_solution(res) == PlanePoint(1, 0)

    def test_pq_no_intersection_raises(self):
        from circleflow.geometry import IntersectionResult
        with pytest.raises(NoSolution):
            choose_pq_solution(
                IntersectionResult(IntersectionKind.NO_INTERSECTION, ()))

    def test_pv_smaller_angle(self):
        from circleflow.geometry import IntersectionResult
        res = IntersectionResult(IntersectionKind.TWO_POINTS,
                                 (PlanePoint(1.0, 0.0), PlanePoint(0.0, 1.0)))
        assert choose_pv_solution(res) == PlanePoint(1.0, 0.0)

    def test_pv_tie_break_positive_imag(self):
        from circleflow.geometry import IntersectionResult
        res = IntersectionResult(IntersectionKind.TWO_POINTS,
                                 (PlanePoint(0.98, -0.199), PlanePoint(0.98, 0.199)))
        assert choose_pv_solution(res) == PlanePoint(0.98, 0.199)

    def test_pv_no_intersection_raises(self):
        from circleflow.geometry import IntersectionResult
        with pytest.raises(NoSolution):
            choose_pv_solution(
                IntersectionResult(IntersectionKind.NO_INTERSECTION, ()))


class TestProperties:
    @given(st.integers(0, 500))
    @settings(max_examples=120, deadline=None)
    def test_membership_and_line_and_chord(self, seed):
        rng = np.random.default_rng(seed)
        r1, r2 = 10.0 ** rng.uniform(-3, 3, size=2)
        c1x, c1y = rng.uniform(-2, 2, size=2)
        dist = rng.uniform(0.2, 0.98) * (r1 + r2)
        ang = rng.uniform(0, 2 * math.pi)
        c1 = circle_from_center_radius(c1x, c1y, r1)
        c2 = circle_from_center_radius(c1x + dist * math.cos(ang),
                                       c1y + dist * math.sin(ang), r2)
        res = intersect_circles(c1, c2)
        if res.kind is IntersectionKind.NO_INTERSECTION:
            return
        line = radical_line(c1, c2)
        for p in res.points:
            assert c1.rel_residual(p) < 1e-10
            assert c2.rel_residual(p) < 1e-10
            assert line.rel_residual(p) < 1e-10
        if res.kind is IntersectionKind.TWO_POINTS:
            p, q = res.points
            chord = math.hypot(p.x - q.x, p.y - q.y)
            _, r_sq = tuple_center_radius(orthogonal_circle(c1, c2))
            assert math.sqrt(r_sq) == pytest.approx(chord / 2, rel=1e-9, abs=1e-12)
