"""Positive kernel of L u = Delta u + div(u X) on compact periodic charts.

L is the L^2(dV) adjoint of Delta_X. On the lattice we take L_h = W^-1 A^T W with A the
assembled drift Laplacian and W the Riemannian node weights, so that the discrete weak
form sum_i W_i phi_i (L_h u)_i = (A phi)^T W u mirrors the continuous one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator, onenormest, splu, spsolve
from scipy.sparse.linalg import norm as sparse_norm

from belab.config import KERNEL_RESIDUAL_TOL, MESH_SPACING
from belab.errors import MultiplicityError, PreconditionError, SolverError
from belab.geometry.manifold import ChartManifold
from belab.pde.mesh import MeshField, MeshGrid, box_grid
from belab.pde.operators import drift_laplacian_matrix, unit_offset

log = logging.getLogger(__name__)

DENSE_CERTIFY_LIMIT = 2500
NULLITY_RTOL = 1e-9
BORDERED_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class PrincipalEigenfunction:
    """u0 > 0 with L u0 = 0, scaled so u0 = 1 at ``base``, and f = -log u0."""
    u0: MeshField
    f: MeshField
    residual: float
    certified_by: str
    base: int

    def __iter__(self):
        yield self.u0
        yield self.f

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "certified_by": self.certified_by,
            "nodes": self.u0.grid.size,
            "u0_min": float(self.u0.values.min()),
            "u0_max": float(self.u0.values.max()),
        }


def adjoint_matrix(M: ChartManifold, grid: MeshGrid) -> sparse.csr_matrix:
    """L_h = W^-1 A^T W on a fully wrapping lattice."""
    A, _ = drift_laplacian_matrix(M, grid)
    weights = grid.weights
    return (sparse.diags(1.0 / weights) @ A.T @ sparse.diags(weights)).tocsr()


def certify_simple_kernel(A: sparse.csr_matrix) -> str:
    """Show the kernel of A is one-dimensional, or raise MultiplicityError."""
    off = A - sparse.diags(A.diagonal())
    if off.min() >= 0:
        count, _ = csgraph.connected_components(off > 0, directed=True, connection="strong")
        if count == 1:
            return "perron-frobenius"
        raise MultiplicityError(f"the drift Laplacian splits the lattice into {count} closed classes")
    if A.shape[0] <= DENSE_CERTIFY_LIMIT:
        singular = np.linalg.svd(A.toarray(), compute_uv=False)
        if singular[-2] <= NULLITY_RTOL * singular[0]:
            raise MultiplicityError(
                f"near-null space has dimension >= 2 (second smallest singular value {singular[-2]:.3g})"
            )
        return "dense-svd"
    return _certify_by_bordering(A)


def _certify_by_bordering(A: sparse.csr_matrix) -> str:
    """Condition of the bordered matrix [[A, 1], [1^T, 0]] by sparse LU.

    Rows of the drift Laplacian sum to zero, so 1 spans part of ker A. The border is nonsingular
    exactly when ker A is one-dimensional and the left kernel vector has nonzero mean.
    """
    n = A.shape[0]
    ones = sparse.csr_matrix(np.ones((n, 1)))
    bordered = sparse.bmat([[A, ones], [ones.T, None]], format="csc")
    try:
        lu = splu(bordered)
    except RuntimeError as exc:
        raise MultiplicityError(f"bordered drift Laplacian on {n} nodes is exactly singular") from exc
    inverse = LinearOperator(bordered.shape, matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="T"), dtype=float)
    condition = float(sparse_norm(bordered, 1)) * float(onenormest(inverse))
    log.debug("bordered drift Laplacian on %d nodes: 1-norm condition %.3g", n, condition)
    if not np.isfinite(condition) or condition > BORDERED_COND_LIMIT:
        raise MultiplicityError(f"near-null space has dimension >= 2 (bordered condition number {condition:.3g})")
    return "bordered-lu"


def principal_eigenfunction(M: ChartManifold, spacing: float = MESH_SPACING, base=None) -> PrincipalEigenfunction:
    """Discrete positive kernel u0 of L and f = -log u0, with u0(base) = 1.

    ``base`` defaults to the lower corner of the chart.
    """
    if not all(M.periodic):
        raise PreconditionError("M compact", detail=f"{M.name} needs every chart axis periodic for the kernel solve")
    grid = box_grid(M, spacing)
    A, _ = drift_laplacian_matrix(M, grid)
    certified_by = certify_simple_kernel(A)
    base_node = 0 if base is None else grid.nearest(base)

    weights = grid.weights
    system = A.T.tolil()
    system[base_node, :] = 0.0
    system[base_node, base_node] = 1.0
    rhs = np.zeros(grid.size)
    rhs[base_node] = 1.0
    w = spsolve(system.tocsc(), rhs)
    if not np.all(np.isfinite(w)):
        raise SolverError(f"kernel solve for L on {M.name} produced non-finite values", residual=float("inf"))
    u0 = w / weights
    u0 /= u0[base_node]
    if np.any(u0 <= 0):
        raise MultiplicityError(f"kernel vector of L on {M.name} changes sign (min {u0.min():.3g})")

    residual = float(np.max(np.abs(A.T @ (weights * u0)) / weights))
    scale = float(np.max(u0))
    if residual > KERNEL_RESIDUAL_TOL * scale:
        raise SolverError(f"kernel residual {residual:.3g} on {M.name} exceeds {KERNEL_RESIDUAL_TOL:g} * max u0",
                          residual=residual, iterations=1)
    log.info("principal eigenfunction on %s: %d nodes, u0 in [%.4g, %.4g], residual %.2e (%s)",
             M.name, grid.size, u0.min(), u0.max(), residual, certified_by)
    boundary = np.zeros(grid.size, dtype=bool)
    return PrincipalEigenfunction(
        u0=MeshField(grid=grid, values=u0, boundary_mask=boundary, name="u0"),
        f=MeshField(grid=grid, values=-np.log(u0), boundary_mask=boundary, name="f"),
        residual=residual,
        certified_by=certified_by,
        base=base_node,
    )


def weak_form_defects(M: ChartManifold, eig: PrincipalEigenfunction, tests: np.ndarray) -> np.ndarray:
    """sum_i W_i phi_i (L_h u0)_i for each row phi of ``tests``, relative to |phi| |u0| |W|."""
    grid = eig.u0.grid
    A, _ = drift_laplacian_matrix(M, grid)
    weights = grid.weights
    w = weights * eig.u0.values
    tests = np.atleast_2d(tests)
    values = (A @ tests.T).T @ w
    scale = np.max(np.abs(tests), axis=1) * np.max(np.abs(w)) * np.abs(A).sum(axis=1).max()
    return values / scale


def flux_defect(M: ChartManifold, eig: PrincipalEigenfunction) -> float:
    """max |div(e^{-f} (X - df))| = max |div(u0 X + du0)| relative to max u0.

    The field is divergence free when f comes from the kernel of L; the defect is the
    discretization error of the check.
    """
    u0 = eig.u0
    grid = u0.grid
    pts = grid.points
    n = M.n
    values = u0.values
    density = M.volume_density(pts)
    ginv = M.inverse_metric(pts)
    du = np.empty((grid.size, n))
    for k in range(n):
        plus, minus = grid.neighbor(unit_offset(n, k, 1)), grid.neighbor(unit_offset(n, k, -1))
        du[:, k] = (values[plus] - values[minus]) / (2.0 * grid.spacing[k])
    flux = density[:, None] * np.einsum("sij,sj->si", ginv, values[:, None] * M.X(pts) + du)
    div = np.zeros(grid.size)
    for k in range(n):
        plus, minus = grid.neighbor(unit_offset(n, k, 1)), grid.neighbor(unit_offset(n, k, -1))
        div += (flux[plus, k] - flux[minus, k]) / (2.0 * grid.spacing[k])
    return float(np.max(np.abs(div / density)) / np.max(values))
