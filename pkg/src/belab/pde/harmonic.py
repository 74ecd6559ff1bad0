"""X-harmonic replacements of the Busemann stand-ins and their Hessian quantities."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import spsolve

from belab.config import LINEAR_RESIDUAL_TOL, MESH_SPACING
from belab.errors import SolverError
from belab.geodesics.triangle import TriangleConfig, busemann_many
from belab.geometry.manifold import ChartManifold
from belab.pde.mesh import BallMesh, MeshField, ball_mesh
from belab.pde.operators import coordinate_gradient, drift_coefficients, drift_laplacian_matrix, hessian_norm_sq

log = logging.getLogger(__name__)

MAX_REFINEMENTS = 2


@dataclass(frozen=True)
class CutoffProfile:
    """Quintic step psi with psi = 1 on [0, inner], psi = 0 on [outer, inf), C^2 at both joins."""
    inner: float
    outer: float

    def __post_init__(self) -> None:
        if not 0 <= self.inner < self.outer:
            raise ValueError(f"need 0 <= inner < outer, got {self.inner}, {self.outer}")

    def _t(self, rho):
        return np.clip((np.asarray(rho, dtype=float) - self.inner) / (self.outer - self.inner), 0.0, 1.0)

    def __call__(self, rho):
        t = self._t(rho)
        return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)

    def derivative(self, rho):
        t = self._t(rho)
        return -30.0 * t**2 * (1.0 - t) ** 2 / (self.outer - self.inner)

    def second_derivative(self, rho):
        t = self._t(rho)
        return -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (self.outer - self.inner) ** 2


def cutoff_profile(r: float) -> CutoffProfile:
    """psi = 1 on B_{r/2}, 0 outside B_r."""
    return CutoffProfile(inner=0.5 * r, outer=r)


@dataclass(frozen=True, eq=False, kw_only=True)
class HarmonicReplacement(MeshField):
    """h with Delta_X h = 0 on the ball interior and h = b on its Dirichlet band."""
    b: np.ndarray
    ball: BallMesh
    sign: int
    residual: float = 0.0

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.ball.interior]

    def to_dict(self) -> dict:
        return {"sign": self.sign, "residual": self.residual, **self.ball.to_dict()}


def _solve_dirichlet(M: ChartManifold, ball: BallMesh, boundary_values: np.ndarray) -> tuple[np.ndarray, float]:
    """Interior values with Delta_X h = 0 and h = boundary_values on the band; returns (h_I, relative residual)."""
    grid = ball.grid
    interior = np.flatnonzero(ball.interior)
    band = np.flatnonzero(ball.band)
    matrix, _ = drift_laplacian_matrix(M, grid, rows=ball.interior)
    rows = matrix[interior]
    A_II = rows[:, interior].tocsc()
    rhs = -(rows[:, band] @ boundary_values[band])
    scale = max(float(np.max(np.abs(rhs))), float(np.max(np.abs(boundary_values[band]))), 1.0)

    h = spsolve(A_II, rhs)
    residual = float(np.max(np.abs(A_II @ h - rhs))) / scale
    refinements = 0
    while residual > LINEAR_RESIDUAL_TOL and refinements < MAX_REFINEMENTS:
        h = h + spsolve(A_II, rhs - A_II @ h)
        residual = float(np.max(np.abs(A_II @ h - rhs))) / scale
        refinements += 1
    if not np.all(np.isfinite(h)) or residual > LINEAR_RESIDUAL_TOL:
        raise SolverError(
            f"Dirichlet solve for Delta_X on {len(interior)} nodes of {M.name} missed the residual target",
            residual=residual,
            iterations=refinements + 1,
        )
    log.debug("Dirichlet solve on %s: %d unknowns, residual %.2e after %d refinements",
              M.name, len(interior), residual, refinements)
    return h, residual


def grid_peclet(M: ChartManifold, ball: BallMesh) -> float:
    """max over interior nodes and axes of |b^k| h_k / (2 g^kk).

    Above 1 the central drift stencil has negative couplings and the discrete maximum principle fails.
    """
    grid = ball.grid
    ginv, drift = drift_coefficients(M, grid.points[ball.interior])
    diagonal = np.einsum("sii->si", ginv)
    return float(np.max(np.abs(drift) * grid.spacing / (2.0 * diagonal)))


def drift_harmonic_extension(M: ChartManifold, ball: BallMesh, boundary_fn, name: str = "u") -> MeshField:
    """Drift-harmonic function on the ball with boundary values ``boundary_fn`` on the band."""
    grid = ball.grid
    values = np.zeros(grid.size)
    values[ball.domain] = np.asarray(boundary_fn(grid.points[ball.domain]), dtype=float)
    values[ball.interior], _ = _solve_dirichlet(M, ball, values)
    return MeshField(grid=grid, values=values, boundary_mask=ball.band, domain_mask=ball.domain, name=name)


def x_harmonic_replacement(M: ChartManifold, T: TriangleConfig, sign: int, center, radius: float,
                           spacing: float = MESH_SPACING, ball: BallMesh | None = None) -> HarmonicReplacement:
    """Solve Delta_X h = 0 on B_radius(center) with h = b_sign on the boundary band."""
    ball = ball_mesh(M, center, radius, spacing) if ball is None else ball
    grid = ball.grid
    domain = ball.domain
    b = np.zeros(grid.size)
    b[domain] = busemann_many(M, T, sign, grid.points[domain])

    h_interior, residual = _solve_dirichlet(M, ball, b)
    values = b.copy()
    values[ball.interior] = h_interior

    band_values = b[ball.band]
    slack = LINEAR_RESIDUAL_TOL * max(1.0, float(np.max(np.abs(band_values))))
    low, high = band_values.min() - slack, band_values.max() + slack
    if h_interior.min() < low or h_interior.max() > high:
        overshoot = max(low - h_interior.min(), h_interior.max() - high)
        raise SolverError(
            f"h{'+' if sign > 0 else '-'} on {M.name} leaves the boundary range [{low:.6g}, {high:.6g}] "
            f"by {overshoot:.3g}; grid Peclet number {grid_peclet(M, ball):.3g} at spacing {ball.spacing:.3g} "
            f"(the maximum principle needs it below 1, refine the mesh)",
            residual=residual,
        )
    return HarmonicReplacement(
        grid=grid,
        values=values,
        boundary_mask=ball.band,
        domain_mask=domain,
        name="h_plus" if sign > 0 else "h_minus",
        b=b,
        ball=ball,
        sign=sign,
        residual=residual,
    )


def replacement_pair(M: ChartManifold, T: TriangleConfig, center, radius: float,
                     spacing: float = MESH_SPACING) -> tuple[HarmonicReplacement, HarmonicReplacement]:
    """(h+, h-) on one shared ball mesh; the two solves run concurrently."""
    ball = ball_mesh(M, center, radius, spacing)
    with ThreadPoolExecutor(max_workers=2) as pool:
        plus = pool.submit(x_harmonic_replacement, M, T, 1, center, radius, spacing, ball)
        minus = pool.submit(x_harmonic_replacement, M, T, -1, center, radius, spacing, ball)
        return plus.result(), minus.result()


@dataclass(frozen=True)
class HessianQuantities:
    """sup |h - b| on B_r, mean |grad(h - b)|^2 on B_r, and the Hessian averages on B_{r/2}."""
    sup_difference: float
    mean_gradient_difference: float
    mean_hessian: float
    cutoff_hessian: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.sup_difference, self.mean_gradient_difference, self.mean_hessian

    def to_dict(self) -> dict:
        return {
            "sup_difference": self.sup_difference,
            "mean_gradient_difference": self.mean_gradient_difference,
            "mean_hessian": self.mean_hessian,
            "cutoff_hessian": self.cutoff_hessian,
        }


def hessian_quantities(M: ChartManifold, h: HarmonicReplacement) -> HessianQuantities:
    """The three Hessian-estimate quantities of one replacement.

    ``cutoff_hessian`` integrates psi(rho) |Hess h|^2 over B_r with the quintic cut-off and
    normalizes by |B_{r/2}|; it dominates ``mean_hessian``.
    """
    ball = h.ball
    grid = ball.grid
    inside = ball.interior
    weights = grid.weights
    diff = np.where(h.domain, h.values - h.b, 0.0)

    du = coordinate_gradient(grid, diff)
    ginv = M.inverse_metric(grid.points)
    grad_sq = np.einsum("si,sij,sj->s", np.nan_to_num(du), ginv, np.nan_to_num(du))

    hess_sq = hessian_norm_sq(M, h)
    half = inside & (ball.rho < 0.5 * ball.radius)
    usable = inside & np.isfinite(hess_sq)
    half &= usable
    if not half.any():
        raise ValueError(f"B_{{r/2}} holds no interior nodes at spacing {ball.spacing}; refine the mesh")
    half_volume = float(weights[half].sum())
    psi = cutoff_profile(ball.radius)(ball.rho)
    return HessianQuantities(
        sup_difference=float(np.max(np.abs(diff[inside]))),
        mean_gradient_difference=float(np.sum(weights[inside] * grad_sq[inside]) / weights[inside].sum()),
        mean_hessian=float(np.sum(weights[half] * hess_sq[half]) / half_volume),
        cutoff_hessian=float(np.sum((weights * psi * np.nan_to_num(hess_sq))[usable]) / half_volume),
    )
