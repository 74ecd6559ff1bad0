"""Levi-Civita connection, curvature and the generalized Bakry-Emery tensor on chart manifolds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from belab.errors import SingularMetricError
from belab.geometry.manifold import ChartManifold


def _inverse(g: np.ndarray) -> np.ndarray:
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is singular or indefinite at the requested point") from exc
    return np.linalg.inv(g)


def _connection(M: ChartManifold, x: np.ndarray):
    """Returns (g, ginv, Gamma, dGamma) with Gamma[..., k, i, j] and dGamma[..., m, k, i, j] = d_m Gamma^k_ij."""
    g, dg, ddg = M.metric_jets(x)
    ginv = _inverse(g)
    # first-kind symbols Gamma_{lij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    first = 0.5 * (
        np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
    )
    gamma = np.einsum("...kl,...lij->...kij", ginv, first)
    d_first = 0.5 * (
        np.einsum("...mijl->...mlij", ddg) + np.einsum("...mjil->...mlij", ddg) - ddg
    )
    d_ginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    d_gamma = np.einsum("...mkl,...lij->...mkij", d_ginv, first) + np.einsum(
        "...kl,...mlij->...mkij", ginv, d_first
    )
    return g, ginv, gamma, d_gamma


def christoffel(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """Gamma^k_ij at x (batch allowed), indexed [..., k, i, j]."""
    g, dg, _ = M.metric_jets(np.asarray(x, dtype=float))
    ginv = _inverse(g)
    first = 0.5 * (np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg)
    return np.einsum("...kl,...lij->...kij", ginv, first)


def riemann(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """Fully covariant curvature Rm[..., a, b, c, d] = <R(d_c, d_d) d_b, d_a>.

    Rm(X, Y, X, Y) is the sectional numerator.
    """
    g, _ginv, gamma, d_gamma = _connection(M, np.asarray(x, dtype=float))
    # R^r_{s m n} = d_m Gamma^r_{n s} - d_n Gamma^r_{m s} + Gamma^r_{m l} Gamma^l_{n s} - Gamma^r_{n l} Gamma^l_{m s}
    R = (
        np.einsum("...mrns->...rsmn", d_gamma)
        - np.einsum("...nrms->...rsmn", d_gamma)
        + np.einsum("...rml,...lns->...rsmn", gamma, gamma)
        - np.einsum("...rnl,...lms->...rsmn", gamma, gamma)
    )
    return np.einsum("...ar,...rsmn->...asmn", g, R)


def ricci(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """Ric_ij by contracting the curvature of the Levi-Civita connection."""
    _g, _ginv, gamma, d_gamma = _connection(M, np.asarray(x, dtype=float))
    ric = (
        np.einsum("...rrij->...ij", d_gamma)
        - np.einsum("...jrri->...ij", d_gamma)
        + np.einsum("...rrl,...lji->...ij", gamma, gamma)
        - np.einsum("...rjl,...lri->...ij", gamma, gamma)
    )
    return 0.5 * (ric + np.swapaxes(ric, -1, -2))


def covariant_derivative_X(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """(nabla X)[..., i, j] = d_i X_j - Gamma^k_ij X_k."""
    x = np.asarray(x, dtype=float)
    return M.X_jacobian(x) - np.einsum("...kij,...k->...ij", christoffel(M, x), M.X(x))


def lie_derivative_metric(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """(L_X g)_ij = nabla_i X_j + nabla_j X_i."""
    nabla = covariant_derivative_X(M, x)
    return nabla + np.swapaxes(nabla, -1, -2)


def divergence_X(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """div X = g^{ij} nabla_i X_j."""
    x = np.asarray(x, dtype=float)
    return np.einsum("...ij,...ij->...", _inverse(M.metric(x)), covariant_derivative_X(M, x))


def bakry_emery_tensor(M: ChartManifold, m: float, x: np.ndarray) -> np.ndarray:
    """Ric + 1/2 L_X g - (1/m) X (x) X."""
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    x = np.asarray(x, dtype=float)
    X = M.X(x)
    return ricci(M, x) + 0.5 * lie_derivative_metric(M, x) - np.einsum("...i,...j->...ij", X, X) / m


def relative_eigenvalues(tensor: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 2-tensor relative to g (generalized problem T v = mu g v)."""
    chol = np.linalg.cholesky(g)
    inv_chol = np.linalg.inv(chol)
    reduced = np.einsum("...ia,...ab,...jb->...ij", inv_chol, tensor, inv_chol)
    return np.linalg.eigvalsh(0.5 * (reduced + np.swapaxes(reduced, -1, -2)))


def curvature_bound_deficit(M: ChartManifold, m: float, delta: float, grid: np.ndarray) -> float:
    """min over the grid of the smallest eigenvalue of Ric_X^m + (n-1) delta g relative to g."""
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("curvature_bound_deficit needs a nonempty grid")
    g = M.metric(pts)
    shifted = bakry_emery_tensor(M, m, pts) + (M.n - 1) * delta * g
    return float(np.min(relative_eigenvalues(shifted, g)))


def gradient_case_tensor(M: ChartManifold, m: float, f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                         step: float = 1e-3) -> np.ndarray:
    """Ric + Hess f - df (x) df / m, with Hess f from central differences of f."""
    x = np.asarray(x, dtype=float)
    n = M.n
    grad = np.empty(x.shape[:-1] + (n,))
    hess = np.empty(x.shape[:-1] + (n, n))
    centre = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = step
        grad[..., i] = (f(x + ei) - f(x - ei)) / (2 * step)
        hess[..., i, i] = (f(x + ei) - 2 * centre + f(x - ei)) / step**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = step
            mixed = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * step**2)
            hess[..., i, j] = mixed
            hess[..., j, i] = mixed
    covariant_hess = hess - np.einsum("...kij,...k->...ij", christoffel(M, x), grad)
    return ricci(M, x) + covariant_hess - np.einsum("...i,...j->...ij", grad, grad) / m


@dataclass(frozen=True)
class FieldBounds:
    """Sup norms of X, div X and grad div X over a sample grid."""
    sup_X: float
    sup_div: float
    sup_grad_div: float

    @property
    def C(self) -> float:
        return max(self.sup_X, self.sup_div, self.sup_grad_div)

    def to_dict(self) -> dict:
        return {"sup_X": self.sup_X, "sup_div": self.sup_div, "sup_grad_div": self.sup_grad_div}


def field_bounds(M: ChartManifold, grid: np.ndarray, step: float = 1e-4) -> FieldBounds:
    """Estimate sup |X|, sup |div X| and sup |grad div X| on the grid."""
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    div = divergence_X(M, pts)
    grad = np.empty(pts.shape)
    for k in range(M.n):
        e = np.zeros(M.n)
        e[k] = step
        grad[:, k] = (divergence_X(M, pts + e) - divergence_X(M, pts - e)) / (2 * step)
    grad_norm = np.sqrt(np.einsum("...i,...ij,...j->...", grad, _inverse(M.metric(pts)), grad))
    return FieldBounds(
        sup_X=float(np.max(M.X_norm(pts))),
        sup_div=float(np.max(np.abs(div))),
        sup_grad_div=float(np.max(grad_norm)),
    )
