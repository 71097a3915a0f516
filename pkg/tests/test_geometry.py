import numpy as np
import pytest

from exitmeasure import geometry
from exitmeasure.errors import ValidationError
from exitmeasure.geometry import (GAMMA0, GAMMA1, Ball, bauer_spiral,
                                  boundary_points, catalog, circle_points,
                                  classify_shell, concat_point_sets,
                                  dist_to_boundary, make_domain, side_points,
                                  square_points, surface_measure)
from oracles import nearest_index_scan


class TestDistance:
    def test_square_center(self):
        assert dist_to_boundary(catalog("square"), [0.0, 0.0]) == 1.0

    def test_annulus_radial_midpoint(self, annulus):
        assert dist_to_boundary(annulus, [0.75, 0.0]) == pytest.approx(0.25, abs=1e-15)

    def test_square_hole_hand_value(self, square_hole):
        # min(distance to the walls, distance to the hole circle)
        expected = min(0.5, np.hypot(0.0, 0.5) - 0.2)
        assert dist_to_boundary(square_hole, [0.5, 0.5]) == pytest.approx(expected, abs=1e-15)

    def test_signed_outside(self, disc):
        assert dist_to_boundary(disc, [2.0, 0.0]) == pytest.approx(-1.0)
        assert dist_to_boundary(catalog("square"), [2.0, 2.0]) < 0.0

    def test_lower_bound_property(self, five_holes, rng):
        samples = np.concatenate([boundary_points(five_holes, c, 200).points
                                  for c in range(five_holes.n_components)])
        hits = 0
        while hits < 10_000:
            x = rng.uniform(-1, 1, size=2)
            if dist_to_boundary(five_holes, x) <= 0:
                continue
            hits += 1
            d = dist_to_boundary(five_holes, x)
            assert d <= np.min(np.linalg.norm(samples - x, axis=1)) + 1e-12


class TestClassifyShell:
    def test_annulus_inner(self, annulus):
        c = classify_shell(annulus, [0.501, 0.0], eps=1e-2)
        assert c.on_shell and c.side == GAMMA1 and c.component == 1
        assert np.allclose(c.projected_point, [0.5, 0.0], atol=1e-12)

    def test_annulus_outer(self, annulus):
        c = classify_shell(annulus, [0.999, 0.0], eps=1e-2)
        assert c.on_shell and c.side == GAMMA0 and c.component == 0
        assert np.allclose(c.projected_point, [1.0, 0.0], atol=1e-12)

    def test_five_holes_matches_exhaustive_scan(self, five_holes, rng):
        for _ in range(200):
            x = rng.uniform(-1, 1, size=2)
            if dist_to_boundary(five_holes, x) < 0:
                continue
            dists = geometry.component_distances(five_holes, x)
            c = classify_shell(five_holes, x, eps=np.inf)
            assert c.component == int(np.argmin(dists))

    def test_tie_flag(self, annulus):
        c = classify_shell(annulus, [0.75, 0.0], eps=1.0)
        assert c.tie and c.component == 0  # exact midpoint: lowest id wins

    def test_projection_distance_consistency(self, five_holes, rng):
        for _ in range(100):
            x = rng.uniform(-1, 1, size=2)
            if dist_to_boundary(five_holes, x) <= 0:
                continue
            c = classify_shell(five_holes, x, eps=np.inf)
            assert np.linalg.norm(x - c.projected_point) == pytest.approx(
                c.distance, abs=1e-12)


class TestBoundaryPoints:
    def test_circle_quarters(self):
        pts = circle_points(np.zeros(2), 1.0, 4)
        expect = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
        assert np.allclose(pts.points, expect, atol=1e-15)

    def test_bauer_first_point_n1(self):
        pts = bauer_spiral(np.zeros(3), 1.0, 1)
        # phi = arccos(1 - 1) = pi/2 puts the single point on the equator
        assert pts.points[0, 2] == pytest.approx(0.0, abs=1e-15)
        assert np.linalg.norm(pts.points[0]) == pytest.approx(1.0)

    def test_bauer_n4_formulas(self):
        pts = bauer_spiral(np.zeros(3), 1.0, 4)
        phi = np.arccos(1.0 - 1.0 / 4.0)
        theta = np.sqrt(4.0 * np.pi) * phi
        expect = [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
        assert np.allclose(pts.points[0], expect, atol=1e-14)

    def test_square_starts_bottom_right_counterclockwise(self):
        pts = square_points(np.zeros(2), 1.0, 8)
        assert np.allclose(pts.points[0], [1.0, -1.0])
        assert np.allclose(pts.points[1], [1.0, 0.0])  # moving up the right edge
        assert np.allclose(pts.points[3], [0.0, 1.0])  # then leftwards on top
        # equal arc spacing
        assert np.allclose(np.diff(pts.params), 1.0)

    def test_points_satisfy_shape_equation(self, five_holes):
        for comp in range(five_holes.n_components):
            pts = boundary_points(five_holes, comp, 37)
            shape = five_holes.outer if comp == 0 else five_holes.holes[comp - 1]
            r = np.linalg.norm(pts.points - shape.center, axis=1)
            assert np.max(np.abs(r - shape.radius)) <= 1e-12

    def test_classify_of_boundary_points_is_identity(self, five_holes):
        for comp in range(five_holes.n_components):
            pts = boundary_points(five_holes, comp, 11)
            for p in pts.points:
                assert classify_shell(five_holes, p, eps=1e-9).component == comp

    def test_zero_count_rejected(self, annulus):
        with pytest.raises(ValidationError):
            boundary_points(annulus, 0, 0)

    def test_side_points_concatenation_order(self, five_holes):
        pts = side_points(five_holes, GAMMA1, [10] * 5)
        assert len(pts) == 50
        assert list(np.unique(pts.component_ids)) == [1, 2, 3, 4, 5]
        assert np.all(np.diff(pts.component_ids) >= 0)  # hole blocks in order


class TestSurfaceMeasure:
    def test_circle(self, annulus):
        assert surface_measure(annulus, 1) == pytest.approx(np.pi)

    def test_square(self):
        assert surface_measure(catalog("square"), 0) == 8.0

    def test_five_circles_total(self, five_holes):
        total = sum(surface_measure(five_holes, c) for c in sorted(five_holes.gamma1))
        assert total == pytest.approx(2.0 * np.pi)

    def test_sphere(self):
        assert surface_measure(catalog("ball3d"), 0) == pytest.approx(4.0 * np.pi)


class TestDomainValidation:
    def test_hole_outside_outer_rejected(self):
        with pytest.raises(ValidationError):
            make_domain(Ball(np.zeros(2), 1.0), [Ball(np.array([0.9, 0.0]), 0.2)])

    def test_overlapping_holes_rejected(self):
        with pytest.raises(ValidationError):
            make_domain(Ball(np.zeros(2), 1.0),
                        [Ball(np.array([0.3, 0.0]), 0.2), Ball(np.array([0.5, 0.0]), 0.2)])

    def test_gamma_partition(self, five_holes):
        assert five_holes.gamma0 == {0}
        assert five_holes.gamma1 == {1, 2, 3, 4, 5}
        assert five_holes.gamma0 | five_holes.gamma1 == set(range(6))

    def test_unknown_key(self):
        with pytest.raises(ValidationError):
            catalog("torus")

    def test_unused_params_rejected(self):
        with pytest.raises(ValidationError):
            catalog("disc", hole_radius=0.1)


def test_nearest_anchor_reference_matches_scan(rng):
    pts = circle_points(np.zeros(2), 1.0, 17).points
    from exitmeasure.weights import nearest_anchor

    for _ in range(50):
        x = rng.normal(size=2)
        assert nearest_anchor(pts, x[None, :])[0] == nearest_index_scan(pts, x)


def test_concat_point_sets_offsets():
    a = circle_points(np.zeros(2), 1.0, 5, component=0)
    b = circle_points(np.array([3.0, 0.0]), 0.5, 7, component=1)
    both = concat_point_sets([a, b])
    assert len(both) == 12
    assert both.blocks[1].start == 5
    assert both.blocks[1].count == 7
