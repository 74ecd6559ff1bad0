"""Distances, geodesics, thin triangles and polar data along rays."""

from __future__ import annotations

import math

import numpy as np
import pytest

from belab.errors import DomainError, HypothesisViolation
from belab.geodesics import (
    GeodesicPath,
    busemann_standin,
    distance,
    distances_from,
    distances_with_bounds,
    excess,
    geodesic,
    line_integral_X,
    metric_graph,
    polar_ball_volumes,
    radial_polar_data,
    riccati_residual,
    TriangleConfig,
)
from belab.geodesics.polar import integrate_rays, unit_directions
from belab.geometry.catalog import flat_torus


class TestDistance:
    def test_flat_torus_shortest_image(self, torus):
        assert distance(torus, np.zeros(2), np.array([math.pi, math.pi])) == pytest.approx(math.pi * math.sqrt(2),
                                                                                            abs=1e-5)

    def test_wraps_around(self, torus):
        assert distance(torus, np.array([0.2, 0.0]), np.array([6.0, 0.0])) == pytest.approx(
            2 * math.pi - 5.8, abs=1e-5)

    def test_sphere_meridian(self, sphere):
        x = np.array([math.pi / 4, 1.0])
        y = np.array([3 * math.pi / 4, 1.0])
        assert distance(sphere, x, y) == pytest.approx(math.pi / 2, abs=1e-5)

    def test_cylinder_unrolled(self, long_cylinder):
        d = distance(long_cylinder, np.zeros(2), np.array([3.0, math.pi]))
        assert d == pytest.approx(math.sqrt(9 + math.pi**2), abs=1e-5)

    def test_symmetry_and_triangle_inequality(self, torus, rng):
        x, y, z = torus.random_points(rng, 3)
        dxy, dyx = distance(torus, x, y), distance(torus, y, x)
        assert dxy == pytest.approx(dyx, abs=1e-6)
        assert dxy <= distance(torus, x, z) + distance(torus, z, y) + 1e-6

    def test_never_exceeds_graph_bound(self, long_cylinder, rng):
        x = np.array([0.0, 1.0])
        targets = np.column_stack([rng.uniform(-5, 5, 6), rng.uniform(0, 2 * math.pi, 6)])
        graph = metric_graph(long_cylinder)
        refined = distances_from(long_cylinder, x, targets)
        for y, d in zip(targets, refined):
            assert d <= graph.upper_bound(x[None], y[None]) + 1e-9

    def test_unrefined_targets_are_flagged(self, long_cylinder):
        x = np.array([0.0, 1.0])
        targets = np.array([[0.5, 1.2], [8.0, 1.0], [0.0, 1.0]])
        batch = distances_with_bounds(long_cylinder, x, targets, refine_below=2.0)
        assert batch.graph_bound.tolist() == [False, True, False]
        assert batch.refined == 2
        assert batch.values[0] == pytest.approx(math.hypot(0.5, 0.2), abs=1e-5)
        assert batch.values[1] >= 8.0 - 1e-9
        assert batch.values[2] == 0.0
        assert np.array_equal(distances_from(long_cylinder, x, targets, refine_below=2.0), batch.values)

    def test_same_point(self, torus):
        assert distance(torus, np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0


class TestGeodesic:
    def test_unit_speed(self, torus):
        path = geodesic(torus, np.array([1.0, 1.0]), np.array([2.0, 1.5]))
        assert path.unit_speed
        speeds = path.chord_speeds(torus)
        assert np.max(np.abs(speeds - 1.0)) < 1e-2
        assert path.length == pytest.approx(math.sqrt(1.25), abs=1e-6)


class TestLineIntegral:
    def test_no_field(self, torus):
        assert line_integral_X(torus, geodesic(torus, np.array([1.0, 1.0]), np.array([2.0, 2.0]))) == 0.0

    def test_constant_field_along_straight_segment(self, torus_with_drift):
        path = geodesic(torus_with_drift, np.array([1.0, 1.0]), np.array([2.0, 1.5]))
        # l |X| cos(alpha) = <X, y - x> for a straight chord
        assert line_integral_X(torus_with_drift, path) == pytest.approx(0.5, abs=1e-6)

    def test_closed_loop_is_not_exact(self):
        M = flat_torus(X=(0.0, 1.0))
        t = np.linspace(0.0, 2 * math.pi, 129)
        samples = np.column_stack([np.full_like(t, 1.0), np.mod(t, 2 * math.pi)])
        velocities = np.tile([0.0, 1.0], (len(t), 1))
        loop = GeodesicPath(samples, t, 2 * math.pi, True, 0.0, velocities)
        assert line_integral_X(M, loop) == pytest.approx(2 * math.pi, abs=1e-10)


class TestTriangle:
    @pytest.fixture
    def triangle(self, long_cylinder):
        return TriangleConfig.on(long_cylinder, [0.0, 0.0], [10.0, 0.0], [-10.0, 0.0], L=9.0, epsilon=0.01)

    def test_excess_on_the_axis(self, long_cylinder, triangle):
        assert excess(long_cylinder, triangle, [0.0, 0.0]) == pytest.approx(0.0, abs=1e-6)

    def test_excess_across_the_circle(self, long_cylinder, triangle):
        expected = 2 * math.sqrt(100 + math.pi**2) - 20
        assert excess(long_cylinder, triangle, [0.0, math.pi]) == pytest.approx(expected, abs=1e-5)

    def test_excess_vanishes_at_q_plus(self, long_cylinder, triangle):
        assert excess(long_cylinder, triangle, triangle.q_plus) == pytest.approx(0.0, abs=1e-6)

    def test_busemann_standins(self, long_cylinder, triangle):
        assert busemann_standin(long_cylinder, triangle, 1, triangle.p) == pytest.approx(0.0, abs=1e-6)
        assert busemann_standin(long_cylinder, triangle, 1, [1.0, 0.0]) == pytest.approx(-1.0, abs=1e-5)

    def test_busemann_sum_is_excess_shift(self, long_cylinder, triangle, rng):
        for x in np.column_stack([rng.uniform(-3, 3, 5), rng.uniform(0, 2 * math.pi, 5)]):
            total = busemann_standin(long_cylinder, triangle, 1, x) + busemann_standin(long_cylinder, triangle, -1, x)
            assert total == pytest.approx(excess(long_cylinder, triangle, x) - triangle.excess_at_p, abs=1e-5)

    def test_short_sides_rejected(self, long_cylinder):
        with pytest.raises(HypothesisViolation):
            TriangleConfig.on(long_cylinder, [0.0, 0.0], [5.0, 0.0], [-5.0, 0.0], L=9.0, epsilon=0.01)

    def test_fat_triangle_rejected(self, long_cylinder):
        with pytest.raises(HypothesisViolation):
            TriangleConfig.on(long_cylinder, [0.0, math.pi], [10.0, 0.0], [-10.0, 0.0], L=9.0, epsilon=0.01)


class TestPolarData:
    def test_flat_torus_cone_data(self, torus_with_drift):
        alpha = 0.4
        data = radial_polar_data(torus_with_drift, [1.0, 1.0], [math.cos(alpha), math.sin(alpha)], 2.0, 200)
        assert data.reason is None
        np.testing.assert_allclose(data.area, data.rho, rtol=1e-8)
        np.testing.assert_allclose(data.H, 1.0 / data.rho, rtol=1e-8)
        np.testing.assert_allclose(data.H_X, 1.0 / data.rho - 0.5 * math.cos(alpha), rtol=1e-8)

    def test_round_sphere_along_equator(self, sphere):
        data = radial_polar_data(sphere, [math.pi / 2, 1.0], [0.0, 1.0], 2.5, 500)
        keep = data.rho > 0.1
        np.testing.assert_allclose(data.H[keep], 1.0 / np.tan(data.rho[keep]), atol=1e-5)

    def test_log_area_derivative_is_H(self, sphere):
        data = radial_polar_data(sphere, [math.pi / 2, 1.0], [0.0, 1.0], 2.0, 800)
        dlog = np.gradient(np.log(data.area), data.rho, edge_order=2)
        keep = data.rho > 0.5
        np.testing.assert_allclose(dlog[keep], data.H[keep], atol=1e-4)

    def test_riccati_identity_with_constant_field(self, torus_with_drift):
        directions, _ = unit_directions(torus_with_drift, [1.0, 1.0], 6)
        for ray in integrate_rays(torus_with_drift, [1.0, 1.0], directions, 3.0, 800):
            assert np.max(np.abs(riccati_residual(torus_with_drift, 2.0, ray))) <= 1e-4

    def test_non_unit_direction_rejected(self, torus):
        with pytest.raises(DomainError):
            radial_polar_data(torus, [1.0, 1.0], [2.0, 0.0], 1.0, 10)

    def test_flat_ball_volumes(self, torus):
        radii = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(polar_ball_volumes(torus, [1.0, 1.0], radii, rays=32), math.pi * radii**2,
                                   rtol=1e-6)
