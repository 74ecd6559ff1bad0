"""Mesh operators, harmonic replacements, the principal eigenfunction and the PDE estimates."""

from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest
from scipy import sparse

from belab.errors import DomainError, HypothesisViolation, MultiplicityError, PreconditionError, SolverError
from belab.geodesics import TriangleConfig
from belab.geometry.catalog import cylinder, flat_torus, flat_torus_with_field
from belab.geometry.params import BakryEmeryParams
from belab.pde import (
    LINEAR,
    MeshField,
    ball_mesh,
    bochner_residual,
    box_grid,
    cheng_yau_check,
    cheng_yau_constant,
    cutoff_profile,
    drift_laplacian,
    eigenfunction_cheng_yau_check,
    flux_defect,
    hessian_quantities,
    patch_grid,
    principal_eigenfunction,
    quantitative_max_principle_check,
    replacement_pair,
    x_harmonic_replacement,
)
from belab.pde.eigen import certify_simple_kernel, weak_form_defects
from belab.pde.harmonic import drift_harmonic_extension, grid_peclet
from belab.pde.operators import bochner_residual_field, covariant_hessian, drift_laplacian_matrix, drift_laplacian_values

CENTER = np.array([math.pi, math.pi])


class TestMesh:
    def test_box_grid_wraps_the_torus(self, torus):
        grid = box_grid(torus, 0.1)
        assert grid.wraps == (True, True)
        assert grid.full_stencil.all()
        assert grid.weights.sum() == pytest.approx(4 * math.pi**2)

    def test_patch_grid_outside_chart_is_a_precondition_failure(self, long_cylinder):
        with pytest.raises(PreconditionError):
            patch_grid(long_cylinder, [29.5, 0.0], 1.0, 0.1)

    def test_ball_mesh_band_surrounds_interior(self, torus):
        ball = ball_mesh(torus, CENTER, 1.0, 0.1)
        assert np.all(ball.rho[ball.interior] < 1.0)
        assert np.all(ball.rho[ball.band] >= 1.0)
        assert not np.any(ball.interior & ball.band)
        area = ball.grid.weights[ball.interior].sum()
        assert area == pytest.approx(math.pi, rel=0.1)

    def test_sample_interpolates_linear_fields(self, torus):
        grid = patch_grid(torus, CENTER, 0.5, 0.1)
        field = MeshField.from_function(grid, lambda p: 2.0 * p[:, 0] - p[:, 1])
        point = CENTER + np.array([0.033, -0.071])
        assert field.sample(point)[0] == pytest.approx(2.0 * point[0] - point[1])
        assert np.isnan(field.sample(CENTER + 2.0)[0])

    def test_to_csv_writes_coordinates_and_values(self, torus, tmp_path):
        grid = patch_grid(torus, CENTER, 0.3, 0.1)
        field = MeshField.from_function(grid, lambda p: p[:, 0], name="height")
        path = field.to_csv(tmp_path / "fields" / "height.csv")
        df = pd.read_csv(path)
        assert list(df.columns) == ["x0", "x1", "height", "boundary"]
        assert len(df) == grid.size
        assert np.allclose(df["height"], df["x0"])

    def test_rejects_non_finite_values(self, torus):
        grid = patch_grid(torus, CENTER, 0.3, 0.1)
        with pytest.raises(ValueError, match="finite"):
            MeshField(grid, np.full(grid.size, np.nan), np.zeros(grid.size, dtype=bool))


class TestOperators:
    def test_flat_laplacian_of_square(self, torus):
        grid = patch_grid(torus, CENTER, 0.5, 0.1)
        field = MeshField.from_function(grid, lambda p: (p[:, 0] - math.pi) ** 2)
        node = grid.nearest(CENTER)
        assert drift_laplacian(torus, field, node) == pytest.approx(2.0, abs=1e-9)

    def test_exponential_is_drift_harmonic(self):
        c = 0.7
        M = flat_torus(X=(c, 0.0))
        grid = patch_grid(M, CENTER, 0.5, 0.02)
        field = MeshField.from_function(grid, lambda p: np.exp(c * (p[:, 0] - math.pi)))
        values = drift_laplacian_values(M, field)
        assert np.nanmax(np.abs(values)) < 1e-3

    def test_edge_node_is_rejected(self, torus):
        grid = patch_grid(torus, CENTER, 0.5, 0.1)
        field = MeshField.from_function(grid, lambda p: p[:, 0])
        with pytest.raises(DomainError):
            drift_laplacian(torus, field, 0)

    def test_sphere_laplacian_of_cos_theta(self, sphere):
        center = np.array([math.pi / 3, 1.0])
        grid = patch_grid(sphere, center, 0.3, 0.01)
        field = MeshField.from_function(grid, lambda p: np.cos(p[:, 0]))
        node = grid.nearest(center)
        theta = grid.points[node, 0]
        assert drift_laplacian(sphere, field, node) == pytest.approx(-2.0 * math.cos(theta), abs=1e-3)

    def test_hessian_of_quadratic(self, torus):
        grid = patch_grid(torus, CENTER, 0.5, 0.1)
        field = MeshField.from_function(grid, lambda p: (p[:, 0] - 1.0) * (p[:, 1] + 2.0))
        hess = covariant_hessian(torus, field)[grid.nearest(CENTER)]
        assert np.allclose(hess, [[0.0, 1.0], [1.0, 0.0]], atol=1e-9)


class TestBochner:
    def test_linear_function_with_constant_drift(self, torus_with_drift):
        grid = patch_grid(torus_with_drift, CENTER, 0.5, 0.1)
        field = MeshField.from_function(grid, lambda p: p[:, 0])
        node = grid.nearest(CENTER)
        assert bochner_residual(torus_with_drift, 2.0, field, node) == pytest.approx(0.0, abs=1e-9)

    def test_sine_on_flat_torus(self, torus):
        field = MeshField.from_function(box_grid(torus, 0.05), lambda p: np.sin(p[:, 0]))
        residual = bochner_residual_field(torus, 1.0, field)
        assert np.isfinite(residual).all()
        assert np.max(np.abs(residual)) < 0.05

    def test_near_edge_is_a_domain_error(self, torus):
        grid = patch_grid(torus, CENTER, 0.5, 0.1)
        field = MeshField.from_function(grid, lambda p: p[:, 0])
        edge = grid.neighbor((1, 0))[0]
        with pytest.raises(DomainError):
            bochner_residual(torus, 1.0, field, edge)

    @staticmethod
    def _errors(M, m, fn, center, spacings):
        errors = []
        for h in spacings:
            grid = patch_grid(M, center, 0.2, h)
            errors.append(abs(bochner_residual(M, m, MeshField.from_function(grid, fn), grid.nearest(center))))
        return np.array(errors)

    def test_second_order_with_constant_drift(self, torus_with_drift):
        errors = self._errors(torus_with_drift, 2.0, lambda p: np.sin(p[:, 0]) * np.cos(p[:, 1]),
                              np.array([1.0, 2.0]), [0.04, 0.02, 0.01])
        assert np.all(np.log2(errors[:-1] / errors[1:]) >= 1.8)
        assert errors[-1] <= 1e-3

    def test_second_order_on_sphere(self, sphere):
        errors = self._errors(sphere, 1.0, lambda p: np.cos(p[:, 0]), np.array([math.pi / 3, 1.0]),
                              [0.04, 0.02, 0.01])
        assert np.all(np.log2(errors[:-1] / errors[1:]) >= 1.8)
        assert errors[-1] <= 1e-3

    def test_sine_at_fine_spacing(self, torus):
        grid = patch_grid(torus, [0.5, math.pi], 0.1, 0.01)
        field = MeshField.from_function(grid, lambda p: np.sin(p[:, 0]))
        assert abs(bochner_residual(torus, 1.0, field, grid.nearest([0.5, math.pi]))) <= 1e-3


class TestHarmonic:
    def test_cutoff_profile(self):
        psi = cutoff_profile(2.0)
        assert psi(0.0) == 1.0
        assert psi(1.0) == 1.0
        assert psi(1.5) == pytest.approx(0.5)
        assert psi(2.0) == 0.0
        assert psi.derivative(1.0) == 0.0
        assert psi.derivative(2.0) == 0.0
        assert psi.derivative(1.5) < 0

    def test_linear_boundary_data_is_reproduced(self, torus):
        ball = ball_mesh(torus, CENTER, 1.0, 0.1)
        h = drift_harmonic_extension(torus, ball, lambda p: 3.0 * p[:, 0] - p[:, 1])
        expected = 3.0 * ball.grid.points[:, 0] - ball.grid.points[:, 1]
        assert np.allclose(h.values[ball.interior], expected[ball.interior], atol=1e-8)

    def test_drift_harmonic_exponential(self):
        c = 0.5
        M = flat_torus(X=(c, 0.0))
        ball = ball_mesh(M, CENTER, 1.0, 0.05)
        h = drift_harmonic_extension(M, ball, lambda p: np.exp(c * (p[:, 0] - math.pi)))
        expected = np.exp(c * (ball.grid.points[:, 0] - math.pi))
        assert np.max(np.abs(h.values - expected)[ball.interior]) < 1e-3

    @pytest.fixture(scope="class")
    def triangle(self, long_cylinder):
        return TriangleConfig.on(long_cylinder, [0.0, 0.0], [20.0, 0.0], [-20.0, 0.0], L=19.0, epsilon=0.01)

    def test_replacement_stays_close_to_busemann(self, long_cylinder, triangle):
        h = x_harmonic_replacement(long_cylinder, triangle, 1, [0.0, 0.0], 1.0, spacing=0.1)
        assert h.name == "h_plus"
        assert h.residual < 1e-10
        quantities = hessian_quantities(long_cylinder, h)
        assert quantities.sup_difference < 0.03
        assert quantities.cutoff_hessian >= quantities.mean_hessian

    def test_maximum_principle(self, long_cylinder, triangle):
        h = x_harmonic_replacement(long_cylinder, triangle, -1, [0.0, 0.0], 1.0, spacing=0.1)
        band = h.values[h.ball.band]
        assert h.interior_values.min() >= band.min() - 1e-9
        assert h.interior_values.max() <= band.max() + 1e-9

    def test_pair_shares_one_mesh(self, long_cylinder, triangle):
        plus, minus = replacement_pair(long_cylinder, triangle, [0.0, 0.0], 1.0, spacing=0.1)
        assert (plus.sign, minus.sign) == (1, -1)
        assert plus.ball is minus.ball
        # b+ + b- vanishes along the axis, so does h+ + h-
        assert np.max(np.abs(plus.interior_values + minus.interior_values)) < 0.1

    def test_drift_dominated_stencil_is_a_solver_error(self):
        M = cylinder(half_length=30.0, X=(60.0, 0.0))
        T = TriangleConfig.on(M, [0.0, 0.0], [20.0, 0.0], [-20.0, 0.0], L=19.0, epsilon=0.01)
        assert grid_peclet(M, ball_mesh(M, [0.0, 0.0], 1.0, 0.1)) == pytest.approx(3.0)
        with pytest.raises(SolverError, match="Peclet"):
            x_harmonic_replacement(M, T, 1, [0.0, 0.0], 1.0, spacing=0.1)

    def test_no_drift_has_zero_peclet_number(self, long_cylinder):
        assert grid_peclet(long_cylinder, ball_mesh(long_cylinder, [0.0, 0.0], 1.0, 0.1)) == pytest.approx(0.0)


class TestPrincipalEigenfunction:
    def test_constant_drift_gives_constant_kernel(self, torus_with_drift):
        eig = principal_eigenfunction(torus_with_drift, spacing=0.2)
        assert eig.certified_by == "perron-frobenius"
        assert np.allclose(eig.u0.values, 1.0, atol=1e-8)
        assert np.allclose(eig.f.values, 0.0, atol=1e-8)

    def test_gradient_drift_recovers_potential(self):
        M = flat_torus_with_field(["cos(x0)", "0"])
        eig = principal_eigenfunction(M, spacing=0.1)
        expected = np.sin(eig.f.grid.points[:, 0])
        assert np.max(np.abs(eig.f.values - expected)) < 1e-2
        assert flux_defect(M, eig) < 1e-2

    def test_weak_form_holds_for_any_test_function(self, torus_with_drift, rng):
        eig = principal_eigenfunction(torus_with_drift, spacing=0.2)
        tests = rng.standard_normal((5, eig.u0.grid.size))
        assert np.max(np.abs(weak_form_defects(torus_with_drift, eig, tests))) < 1e-10

    def test_needs_a_compact_chart(self, long_cylinder):
        with pytest.raises(PreconditionError):
            principal_eigenfunction(long_cylinder)

    def test_unpacks_to_u0_and_f(self, torus):
        u0, f = principal_eigenfunction(torus, spacing=0.3)
        assert u0.name == "u0"
        assert f.name == "f"

    @pytest.fixture(scope="class")
    def strong_drift(self):
        return flat_torus(X=(30.0, 0.0))

    def test_large_lattice_with_strong_drift_is_certified(self, strong_drift):
        eig = principal_eigenfunction(strong_drift, spacing=0.1)
        assert eig.u0.grid.size > 2500
        assert eig.certified_by == "bordered-lu"
        assert np.allclose(eig.u0.values, 1.0, atol=1e-8)

    def test_two_decoupled_copies_are_a_multiplicity_error(self, strong_drift):
        A, _ = drift_laplacian_matrix(strong_drift, box_grid(strong_drift, 0.1))
        with pytest.raises(MultiplicityError):
            certify_simple_kernel(sparse.block_diag([A, A]).tocsr())


class TestChengYau:
    def test_constant_is_at_least_one(self):
        assert cheng_yau_constant(2, 1.0, 0.0, 0.5, 1.0) >= 1.0

    def test_narrow_annulus_costs_more(self):
        wide = cheng_yau_constant(3, 1.0, 0.1, 0.5, 2.0)
        narrow = cheng_yau_constant(3, 1.0, 0.1, 0.5, 0.6)
        assert narrow > wide

    def test_radii_must_be_ordered(self):
        with pytest.raises(DomainError):
            cheng_yau_constant(2, 1.0, 0.0, 1.0, 0.5)

    def test_linear_equation(self, torus):
        grid = patch_grid(torus, CENTER, 1.3, 0.05)
        u = MeshField.from_function(grid, lambda p: np.exp(p[:, 0] - math.pi))
        report = cheng_yau_check(torus, BakryEmeryParams(m=1.0), u, 1.0, LINEAR, 0.5, 1.0, CENTER)
        assert report.check_name == "cheng-yau"
        assert report.lhs == pytest.approx(1.0, abs=1e-2)
        assert report.passed

    def test_wrong_equation_is_a_hypothesis_violation(self, torus):
        grid = patch_grid(torus, CENTER, 1.3, 0.05)
        u = MeshField.from_function(grid, lambda p: np.exp(p[:, 0] - math.pi))
        with pytest.raises(HypothesisViolation):
            cheng_yau_check(torus, BakryEmeryParams(m=1.0), u, 3.0, LINEAR, 0.5, 1.0, CENTER)

    def test_principal_eigenfunction_under_reversed_drift(self, torus_with_drift, drift_params):
        eig = principal_eigenfunction(torus_with_drift, spacing=0.1)
        report = eigenfunction_cheng_yau_check(torus_with_drift, drift_params, eig, 0.5, 1.0, CENTER)
        assert report.inputs["field"] == "u0, X reversed"
        assert report.lhs == pytest.approx(0.0, abs=1e-12)
        assert report.margin >= 0
        assert report.passed


class TestQuantitativeMaxPrinciple:
    def test_zero_function(self, torus):
        U = MeshField.from_function(box_grid(torus, 0.1), lambda p: np.zeros(len(p)))
        report = quantitative_max_principle_check(
            torus, BakryEmeryParams(m=1.0), U, CENTER, CENTER + [0.5, 0.0], 1.0, 1.0, 1.0,
            np.linspace(0.05, 1.0, 20),
        )
        assert report.check_name == "quantitative-max-principle"
        assert report.passed

    def test_positive_start_is_a_precondition_failure(self, torus):
        U = MeshField.from_function(box_grid(torus, 0.1), lambda p: np.ones(len(p)))
        with pytest.raises(PreconditionError):
            quantitative_max_principle_check(
                torus, BakryEmeryParams(m=1.0), U, CENTER, CENTER + [0.5, 0.0], 1.0, 1.0, 1.0, [0.1, 0.2],
            )
