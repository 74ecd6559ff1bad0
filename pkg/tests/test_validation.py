"""Verification reports, hypothesis guards and the theorem checks on exact geometries."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from belab.config import REPORT_TOL
from belab.errors import DomainError, HypothesisViolation, PreconditionError
from belab.geodesics import TriangleConfig
from belab.geodesics.distance import distance, distances_from
from belab.geometry.catalog import perturbed_cylinder
from belab.geometry.params import BakryEmeryParams
from belab.pde import MeshField, box_grid, x_harmonic_replacement
from belab.validation.comparison import (
    check_area_volume_comparison,
    check_mean_curvature_comparison,
    check_mean_curvature_difference,
)
from belab.validation.excess import check_abresch_gromoll
from belab.validation.hessian import check_hessian_estimates
from belab.validation.hypotheses import require_curvature_bound, require_field_bound, validation_points
from belab.validation.ladder import (
    perturbed_cylinder_ladder,
    recheck_at_double_resolution,
    run_ladder,
)
from belab.validation.report import Verdict, VerificationReport, report_from_samples
from belab.validation.segment import (
    area_ratio_constant,
    check_segment_inequality,
    segment_constant,
    select_segment_points,
)
from belab.validation.splitting import (
    check_almost_splitting,
    check_projection_smallness,
    level_set_triples,
    projection_integrals,
    pythagoras_defect,
    splitting_distortion,
    zero_level_set,
)

CENTER = np.array([math.pi, math.pi])


def toy_report(margin: float, name: str = "toy", lhs: float = 0.0) -> VerificationReport:
    return VerificationReport(check_name=name, inputs={}, lhs=lhs, rhs=lhs + margin, margin=margin)


class TestReport:
    def test_passes_within_tolerance(self):
        assert toy_report(0.0).passed
        assert toy_report(-REPORT_TOL).passed
        assert not toy_report(-2 * REPORT_TOL).passed
        assert toy_report(-1.0).verdict is Verdict.FAIL

    def test_json_is_plain_and_sorted(self):
        report = VerificationReport(
            check_name="toy",
            inputs={"p": np.array([0.5, 1.5]), "rays": np.int64(8)},
            lhs=np.float64(1.0),
            rhs=2.0,
            margin=1.0,
            resolution={"truncated": {"conjugate": 2}, "bad": float("nan")},
        )
        doc = json.loads(report.to_json())
        assert list(doc) == sorted(doc)
        assert set(doc) == {"check_name", "inputs", "lhs", "rhs", "margin", "tolerance", "passed", "resolution",
                            "notes"}
        assert doc["inputs"] == {"p": [0.5, 1.5], "rays": 8}
        assert doc["resolution"]["bad"] == "nan"
        assert doc["passed"] is True

    def test_from_samples_keeps_the_worst_pair(self):
        report = report_from_samples("toy", {}, [1.0, 2.0, 3.0], [4.0, 2.5, 3.2])
        assert (report.lhs, report.rhs) == (3.0, 3.2)
        assert report.margin == pytest.approx(0.2)

    def test_from_no_samples(self):
        with pytest.raises(ValueError, match="no samples"):
            report_from_samples("toy", {}, [], [])

    def test_non_finite_samples_are_a_domain_error(self):
        with pytest.raises(DomainError, match="non-finite"):
            report_from_samples("toy", {}, [1.0, np.nan], [2.0, 2.0])


class TestHypotheses:
    def test_drift_torus_meets_its_bound(self, torus_with_drift, drift_params):
        points = validation_points(torus_with_drift)
        assert require_curvature_bound(torus_with_drift, drift_params, points) == pytest.approx(0.0, abs=1e-9)
        assert require_field_bound(torus_with_drift, drift_params, points) == pytest.approx(0.5)

    def test_curvature_violation_names_the_hypothesis(self, torus_with_drift):
        points = validation_points(torus_with_drift)
        with pytest.raises(HypothesisViolation, match="Ric_X"):
            require_curvature_bound(torus_with_drift, BakryEmeryParams(m=2.0, delta=0.1), points)

    def test_field_violation(self, torus_with_drift):
        points = validation_points(torus_with_drift)
        with pytest.raises(HypothesisViolation, match=r"\|X\| <= C"):
            require_field_bound(torus_with_drift, BakryEmeryParams(m=2.0, delta=0.125, C=0.4), points)

    def test_extra_points_are_appended(self, torus):
        points = validation_points(torus, per_axis=3, extra=[1.0, 2.0])
        assert points.shape == (10, 2)


class TestComparison:
    def test_flat_mean_curvature(self, torus):
        report = check_mean_curvature_comparison(torus, BakryEmeryParams(m=1.0), [0.5, 0.5], rays=8, rho_max=1.0)
        assert report.check_name == "mean-curvature"
        assert report.passed
        # 1/rho against 2/rho: the worst sample is the far end
        assert report.margin == pytest.approx(1.0, rel=1e-2)

    def test_drift_mean_curvature_difference(self, torus_with_drift):
        params = BakryEmeryParams(m=2.0, delta=0.125, C=0.6)
        report = check_mean_curvature_difference(torus_with_drift, params, [0.5, 0.5], rays=8, rho_max=1.0)
        assert report.passed
        # the ray closest to -dx0 sits pi/8 off it
        assert report.margin == pytest.approx(0.6 - 0.5 * math.cos(math.pi / 8), abs=1e-3)

    def test_area_volume_on_flat_torus(self, torus):
        report = check_area_volume_comparison(torus, BakryEmeryParams(m=1.0), [0.5, 0.5],
                                              [0.2, 0.4, 0.6, 0.8, 1.0], rays=16)
        assert report.check_name == "area-volume"
        assert report.passed

    def test_needs_two_radii(self, torus):
        with pytest.raises(DomainError):
            check_area_volume_comparison(torus, BakryEmeryParams(m=1.0), [0.5, 0.5], [1.0])

    def test_violated_bound_stops_the_check(self, torus_with_drift):
        with pytest.raises(HypothesisViolation):
            check_mean_curvature_comparison(torus_with_drift, BakryEmeryParams(m=1.0), [0.5, 0.5], rays=4)


@pytest.fixture(scope="module")
def short_triangle(long_cylinder):
    return TriangleConfig.on(long_cylinder, [0.0, 0.0], [10.0, 0.0], [-10.0, 0.0], L=9.0, epsilon=0.01)


@pytest.fixture(scope="module")
def long_triangle(long_cylinder):
    return TriangleConfig.on(long_cylinder, [0.0, 0.0], [20.0, 0.0], [-20.0, 0.0], L=19.0, epsilon=0.01)


@pytest.fixture(scope="module")
def cylinder_h_plus(long_cylinder, long_triangle):
    return x_harmonic_replacement(long_cylinder, long_triangle, 1, long_triangle.p, 2.0, spacing=0.1)


class TestExcess:
    def test_cylinder_excess(self, long_cylinder, short_triangle, rng):
        samples = rng.uniform(-0.7, 0.7, size=(40, 2))
        report = check_abresch_gromoll(long_cylinder, BakryEmeryParams(m=1.0), short_triangle, 1.0, samples)
        assert report.check_name == "abresch-gromoll"
        assert report.resolution["graph_bound_distances"] == 0
        assert report.passed

    def test_short_triangle_is_rejected(self, long_cylinder, short_triangle):
        with pytest.raises(HypothesisViolation, match="L > 2r"):
            check_abresch_gromoll(long_cylinder, BakryEmeryParams(m=1.0), short_triangle, 4.5, [[0.0, 0.0]])

    def test_samples_outside_the_ball(self, long_cylinder, short_triangle):
        with pytest.raises(DomainError):
            check_abresch_gromoll(long_cylinder, BakryEmeryParams(m=1.0), short_triangle, 1.0, [[3.0, 0.0]])


class TestHessian:
    @pytest.mark.slow
    def test_cylinder_quantities_are_small(self, long_cylinder, long_triangle):
        report = check_hessian_estimates(long_cylinder, BakryEmeryParams(m=1.0), long_triangle, 1.0, spacing=0.1)
        assert report.check_name == "hessian-estimates"
        assert len(report.lhs) == 3
        assert report.passed

    def test_thresholds_need_three_values(self, long_cylinder, long_triangle):
        with pytest.raises(ValueError, match="three thresholds"):
            check_hessian_estimates(long_cylinder, BakryEmeryParams(m=1.0), long_triangle, 1.0, spacing=0.2,
                                    thresholds=[1.0, 1.0])


class TestSegment:
    def test_flat_area_ratio_constant(self):
        # Abar = rho^2 in the flat three-dimensional model, so the ratio tops out at 2^2
        assert area_ratio_constant(2, 1.0, 0.0, 0.5) == pytest.approx(4.0)
        assert segment_constant(2, BakryEmeryParams(m=1.0), 0.5) == pytest.approx(4.0)

    def test_field_bound_enters_exponentially(self):
        plain = segment_constant(2, BakryEmeryParams(m=1.0), 0.5)
        drift = segment_constant(2, BakryEmeryParams(m=1.0, C=0.5), 0.5)
        assert drift == pytest.approx(plain * math.e**0.5)

    def test_sides_scale_with_f(self, torus):
        grid = box_grid(torus, 0.1)
        one = MeshField.from_function(grid, lambda p: np.ones(len(p)), name="one")
        two = one.with_values(2.0 * one.values, name="two")
        params = BakryEmeryParams(m=1.0)
        first = check_segment_inequality(torus, params, CENTER, 0.5, one, trials=36, rng=np.random.default_rng(3))
        second = check_segment_inequality(torus, params, CENTER, 0.5, two, trials=36, rng=np.random.default_rng(3))
        assert first.passed
        assert second.lhs == pytest.approx(2.0 * first.lhs, rel=1e-9)
        assert second.rhs == pytest.approx(2.0 * first.rhs, rel=1e-9)

    def test_negative_f_is_rejected(self, torus):
        f = MeshField.from_function(box_grid(torus, 0.2), lambda p: -np.ones(len(p)))
        with pytest.raises(PreconditionError):
            check_segment_inequality(torus, BakryEmeryParams(m=1.0), CENTER, 0.5, f, trials=4)

    def test_witness_stays_near_the_anchors(self, long_cylinder, cylinder_h_plus):
        params = BakryEmeryParams(m=1.0)
        x, y, z = np.array([0.0, 0.3]), np.array([0.2, -0.1]), np.array([-0.2, 0.0])
        anchor = select_segment_points(long_cylinder, params, cylinder_h_plus, x, y, z, 1e-30, k=1, samples=9)
        best = select_segment_points(long_cylinder, params, cylinder_h_plus, x, y, z, 1e-30, k=6,
                                     rng=np.random.default_rng(7), samples=9)
        assert np.allclose(anchor.y_star, long_cylinder.wrap(y))
        assert best.varsigma == pytest.approx(1.0 / 135.0)
        assert best.varrho == pytest.approx(1e-30 ** (3.0 / 135.0))
        for a, star in ((x, best.x_star), (y, best.y_star), (z, best.z_star)):
            assert distance(long_cylinder, a, star) <= best.varrho + 1e-9
        score = best.gradient_integral + best.hessian_integral
        assert score <= anchor.gradient_integral + anchor.hessian_integral
        assert best.to_report().check_name == "segment-witness"

    def test_witness_needs_psi_below_one(self, long_cylinder, cylinder_h_plus):
        with pytest.raises(DomainError, match="psi"):
            select_segment_points(long_cylinder, BakryEmeryParams(m=1.0), cylinder_h_plus,
                                  [0.0, 0.0], [0.1, 0.0], [0.0, 0.1], 1.0, k=2)


class TestSplitting:
    def test_flat_pythagoras(self, torus):
        x, y, z = CENTER, CENTER + [0.3, 0.0], CENTER + [0.3, 0.4]
        assert pythagoras_defect(torus, x, y, z) == pytest.approx(0.0, abs=1e-6)

    def test_obtuse_triple_has_positive_defect(self, torus):
        x, y, z = CENTER, CENTER + [0.3, 0.0], CENTER + [0.0, 0.4]
        assert pythagoras_defect(torus, x, y, z) > 0.1

    def test_cylinder_zero_set_is_connected(self, long_cylinder, cylinder_h_plus):
        level = zero_level_set(long_cylinder, cylinder_h_plus)
        assert level.components == 1
        assert len(level) == level.path_metric.shape[0]
        assert np.all(np.isfinite(level.path_metric))

    def test_triples_stay_in_the_quarter_ball(self, long_cylinder, long_triangle, cylinder_h_plus, rng):
        triples = level_set_triples(long_cylinder, long_triangle, cylinder_h_plus, 4, rng)
        assert len(triples) == 4
        for x, y, z in triples:
            assert np.all(distances_from(long_cylinder, long_triangle.p, np.stack([x, y, z])) < 0.5 + 1e-6)

    @pytest.mark.slow
    def test_exact_cylinder_splits(self, long_cylinder, long_triangle, cylinder_h_plus):
        report = check_almost_splitting(long_cylinder, BakryEmeryParams(m=1.0), long_triangle, 2.0,
                                        rng=np.random.default_rng(5), h=cylinder_h_plus)
        assert report.check_name == "almost-split"
        assert report.resolution["level_components"] == 1
        assert report.rhs == pytest.approx(0.3)
        assert report.lhs < 0.05
        assert report.passed

    @pytest.mark.slow
    def test_warping_raises_the_distortion(self, long_cylinder, cylinder_h_plus):
        exact = splitting_distortion(long_cylinder, cylinder_h_plus, rng=np.random.default_rng(5))
        M = perturbed_cylinder(amplitude=0.3)
        T = TriangleConfig.on(M, [0.0, 0.0], [10.0, 0.0], [-10.0, 0.0], L=9.0, epsilon=0.01)
        h = x_harmonic_replacement(M, T, 1, T.p, 2.0, spacing=0.1)
        warped = splitting_distortion(M, h, rng=np.random.default_rng(5))
        assert warped.distortion > 2.0 * exact.distortion
        assert warped.gh_bound == pytest.approx(1.5 * warped.distortion)

    def test_flat_cylinder_projection_vanishes(self, long_cylinder, long_triangle, cylinder_h_plus):
        params = BakryEmeryParams(m=1.0)
        assert projection_integrals(long_cylinder, params, cylinder_h_plus) == pytest.approx((0.0, 0.0), abs=1e-12)
        report = check_projection_smallness(long_cylinder, params, long_triangle, 2.0, h=cylinder_h_plus)
        assert report.check_name == "projection-smallness"
        assert report.margin == pytest.approx(0.05)
        assert report.passed


class TestLadder:
    def test_halving_quantity_passes(self):
        result = run_ladder(lambda k: toy_report(1.0, lhs=0.5**k), [0, 1, 2], name="toy")
        assert result.report.check_name == "toy-ladder"
        assert result.passed
        assert len(result.rungs) == 3

    def test_flat_quantity_fails(self):
        result = run_ladder(lambda k: toy_report(1.0, lhs=1.0), [0, 1, 2, 3])
        assert not result.passed

    def test_needs_three_rungs(self):
        with pytest.raises(DomainError):
            run_ladder(lambda k: toy_report(1.0), [0, 1])

    def test_perturbed_cylinder_rungs(self):
        rungs = perturbed_cylinder_ladder(L=10.0, epsilon=0.1, amplitude=0.01, rungs=3)
        assert [r.L for r in rungs] == [10.0, 20.0, 40.0]
        assert [r.epsilon for r in rungs] == pytest.approx([0.1, 0.05, 0.025])
        M = rungs[0].manifold()
        assert rungs[0].params(M).delta == pytest.approx(0.01 / 0.99)

    @pytest.mark.slow
    def test_excess_shrinks_along_the_perturbed_cylinder(self):
        samples = np.array([[0.3 * np.cos(t), 0.6 * np.sin(t)] for t in np.linspace(0.0, 2 * np.pi, 12)])

        def on_rung(rung):
            M, params, T = rung.build()
            return check_abresch_gromoll(M, params, T, 1.0, samples)

        result = run_ladder(on_rung, perturbed_cylinder_ladder(L=10.0, epsilon=0.1, amplitude=0.01))
        assert result.report.check_name == "abresch-gromoll-ladder"
        assert all(r.passed for r in result.rungs)
        assert result.passed

    def test_recheck_with_stable_margin(self):
        report = recheck_at_double_resolution(lambda s: toy_report(0.5, name="grid"), 0.1)
        assert report.check_name == "grid-resolution"
        assert report.passed
        assert report.inputs["spacing"] == 0.1

    def test_recheck_flags_a_moving_margin(self):
        report = recheck_at_double_resolution(lambda s: toy_report(s, name="grid"), 0.1)
        assert not report.passed
