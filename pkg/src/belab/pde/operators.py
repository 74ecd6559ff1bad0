"""Finite-difference drift Laplacian, gradients, Hessians and the Bochner residual on mesh fields.

Second-order central differences throughout, so every operator is exact on quadratic
polynomials in flat charts.
"""

from __future__ import annotations

from itertools import combinations, product

import numpy as np
from scipy import sparse

from belab.errors import DomainError
from belab.geometry.manifold import ChartManifold
from belab.geometry.tensors import bakry_emery_tensor, christoffel
from belab.pde.mesh import MeshField, MeshGrid


def unit_offset(n: int, k: int, sign: int = 1) -> tuple[int, ...]:
    e = [0] * n
    e[k] = sign
    return tuple(e)


def _pair(n: int, j: int, k: int, sj: int, sk: int) -> tuple[int, ...]:
    e = [0] * n
    e[j], e[k] = sj, sk
    return tuple(e)


def drift_coefficients(M: ChartManifold, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(g^ij, b^k) with Delta_X u = g^ij d_ij u + b^k d_k u, b^k = -g^ij Gamma^k_ij - g^kj X_j."""
    ginv = M.inverse_metric(points)
    gamma = christoffel(M, points)
    drift = -np.einsum("...ij,...kij->...k", ginv, gamma) - np.einsum("...kj,...j->...k", ginv, M.X(points))
    return ginv, drift


def drift_laplacian_matrix(M: ChartManifold, grid: MeshGrid,
                           rows: np.ndarray | None = None) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Sparse Delta_X on the lattice, restricted to ``rows`` that have their full stencil.

    Returns the matrix (zero outside the assembled rows) and the mask of assembled rows.
    """
    n = M.n
    mask = grid.full_stencil.copy() if rows is None else np.asarray(rows, dtype=bool) & grid.full_stencil
    idx = np.flatnonzero(mask)
    pts = grid.points[idx]
    ginv, drift = drift_coefficients(M, pts)
    h = grid.spacing
    entries_r, entries_c, entries_v = [], [], []

    def put(offset, coeff):
        entries_r.append(idx)
        entries_c.append(grid.neighbor(offset)[idx])
        entries_v.append(coeff)

    centre = np.zeros(len(idx))
    for k in range(n):
        diffusion = ginv[:, k, k] / h[k] ** 2
        put(unit_offset(n, k, 1), diffusion + drift[:, k] / (2.0 * h[k]))
        put(unit_offset(n, k, -1), diffusion - drift[:, k] / (2.0 * h[k]))
        centre -= 2.0 * diffusion
    for j, k in combinations(range(n), 2):
        mixed = ginv[:, j, k]
        if not np.any(mixed):
            continue
        coeff = 2.0 * mixed / (4.0 * h[j] * h[k])
        put(_pair(n, j, k, 1, 1), coeff)
        put(_pair(n, j, k, -1, -1), coeff)
        put(_pair(n, j, k, 1, -1), -coeff)
        put(_pair(n, j, k, -1, 1), -coeff)
    entries_r.append(idx)
    entries_c.append(idx)
    entries_v.append(centre)
    matrix = sparse.csr_matrix(
        (np.concatenate(entries_v), (np.concatenate(entries_r), np.concatenate(entries_c))),
        shape=(grid.size, grid.size),
    )
    return matrix, mask


def drift_laplacian_values(M: ChartManifold, field: MeshField) -> np.ndarray:
    """Delta_X u at every node with a full stencil, NaN elsewhere."""
    matrix, mask = drift_laplacian_matrix(M, field.grid)
    out = np.full(field.grid.size, np.nan)
    out[mask] = (matrix @ field.values)[mask]
    return out


def drift_laplacian(M: ChartManifold, field: MeshField, node: int) -> float:
    """Delta_X u = Delta u - X(u) at an interior node."""
    grid = field.grid
    if not grid.full_stencil[node]:
        raise DomainError(f"node {node} is not an interior node")
    rows = np.zeros(grid.size, dtype=bool)
    rows[node] = True
    matrix, _ = drift_laplacian_matrix(M, grid, rows)
    return float(matrix.getrow(node) @ field.values)


def coordinate_gradient(grid: MeshGrid, values: np.ndarray) -> np.ndarray:
    """Central-difference partials d_k u, NaN where a neighbor is missing."""
    n = grid.manifold.n
    out = np.full((grid.size, n), np.nan)
    for k in range(n):
        plus, minus = grid.neighbor(unit_offset(n, k, 1)), grid.neighbor(unit_offset(n, k, -1))
        ok = (plus >= 0) & (minus >= 0)
        out[ok, k] = (values[plus[ok]] - values[minus[ok]]) / (2.0 * grid.spacing[k])
    return out


def coordinate_hessian(grid: MeshGrid, values: np.ndarray) -> np.ndarray:
    """Central-difference second partials d_j d_k u, NaN where a neighbor is missing."""
    n = grid.manifold.n
    h = grid.spacing
    out = np.full((grid.size, n, n), np.nan)
    for k in range(n):
        plus, minus = grid.neighbor(unit_offset(n, k, 1)), grid.neighbor(unit_offset(n, k, -1))
        ok = (plus >= 0) & (minus >= 0)
        out[ok, k, k] = (values[plus[ok]] - 2.0 * values[ok] + values[minus[ok]]) / h[k] ** 2
    for j, k in combinations(range(n), 2):
        corners = [grid.neighbor(_pair(n, j, k, a, b)) for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
        ok = np.all([c >= 0 for c in corners], axis=0)
        pp, pm, mp, mm = (c[ok] for c in corners)
        mixed = (values[pp] - values[pm] - values[mp] + values[mm]) / (4.0 * h[j] * h[k])
        out[ok, j, k] = mixed
        out[ok, k, j] = mixed
    return out


def gradient(M: ChartManifold, field: MeshField) -> np.ndarray:
    """du as coordinate components, per node."""
    return coordinate_gradient(field.grid, field.values)


def gradient_norm_sq(M: ChartManifold, field: MeshField, du: np.ndarray | None = None) -> np.ndarray:
    du = gradient(M, field) if du is None else du
    return np.einsum("si,sij,sj->s", du, M.inverse_metric(field.grid.points), du)


def covariant_hessian(M: ChartManifold, field: MeshField) -> np.ndarray:
    """Hess u_ij = d_i d_j u - Gamma^k_ij d_k u."""
    grid = field.grid
    du = coordinate_gradient(grid, field.values)
    gamma = christoffel(M, grid.points)
    return coordinate_hessian(grid, field.values) - np.einsum("skij,sk->sij", gamma, du)


def hessian_norm_sq(M: ChartManifold, field: MeshField) -> np.ndarray:
    hess = covariant_hessian(M, field)
    ginv = M.inverse_metric(field.grid.points)
    return np.einsum("sia,sjb,sij,sab->s", ginv, ginv, hess, hess)


def bochner_residual_field(M: ChartManifold, m: float, field: MeshField) -> np.ndarray:
    """Delta_X|du|^2 - 2|Hess u|^2 - 2<du, d Delta_X u> - 2 Ric_X^m(du, du) - (2/m) X(u)^2 per node.

    NaN at nodes closer than two cells to the lattice edge.
    """
    grid = field.grid
    pts = grid.points
    ginv = M.inverse_metric(pts)
    du = coordinate_gradient(grid, field.values)
    grad_sq = np.einsum("si,sij,sj->s", du, ginv, du)
    matrix, mask = drift_laplacian_matrix(M, grid)
    lap = np.full(grid.size, np.nan)
    lap[mask] = (matrix @ field.values)[mask]

    valid = np.isfinite(grad_sq)
    usable = mask.copy()
    for offset in product((-1, 0, 1), repeat=M.n):
        nb = grid.neighbor(offset)
        usable &= (nb >= 0) & valid[np.maximum(nb, 0)]
    lap_grad_sq = np.full(grid.size, np.nan)
    lap_grad_sq[usable] = (matrix @ np.where(valid, grad_sq, 0.0))[usable]

    d_lap = coordinate_gradient(grid, lap)
    hess_sq = hessian_norm_sq(M, field)
    raised = np.einsum("sij,sj->si", ginv, du)
    ric = np.einsum("si,sij,sj->s", raised, bakry_emery_tensor(M, m, pts), raised)
    x_u = np.einsum("si,si->s", M.X(pts), raised)
    return (
        lap_grad_sq
        - 2.0 * hess_sq
        - 2.0 * np.einsum("si,si->s", raised, d_lap)
        - 2.0 * ric
        - 2.0 / m * x_u**2
    )


def bochner_residual(M: ChartManifold, m: float, field: MeshField, node: int) -> float:
    """Bochner identity residual at a node at least two cells from the lattice edge."""
    value = bochner_residual_field(M, m, field)[node]
    if not np.isfinite(value):
        raise DomainError(f"node {node} is within two cells of the mesh edge")
    return float(value)
