"""Cheng-Yau type gradient estimate and the quantitative maximum principle, evaluated on mesh fields."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from belab.config import EQUATION_RESIDUAL_TOL, LAPLACIAN_BOUND_TOL, REPORT_TOL
from belab.errors import DomainError, HypothesisViolation, PreconditionError
from belab.geodesics.distance import distance
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.geometry.tensors import divergence_X
from belab.modelspace import ModelSpace, green_barrier, model_mean_curvature
from belab.pde.eigen import PrincipalEigenfunction
from belab.pde.harmonic import CutoffProfile
from belab.pde.mesh import MeshField, ball_masks
from belab.pde.operators import drift_laplacian_values, gradient_norm_sq, unit_offset
from belab.validation.hypotheses import require_curvature_bound, require_field_bound
from belab.validation.report import VerificationReport, report_from_samples

log = logging.getLogger(__name__)

CUTOFF_SAMPLES = 2000


@dataclass(frozen=True)
class Nonlinearity:
    """F and F' of the right side a F(u)."""
    name: str
    F: Callable[[np.ndarray], np.ndarray]
    dF: Callable[[np.ndarray], np.ndarray]


LINEAR = Nonlinearity("u", lambda u: u, np.ones_like)
ZERO = Nonlinearity("0", np.zeros_like, np.zeros_like)


def power_nonlinearity(k: float) -> Nonlinearity:
    return Nonlinearity(f"u^{k:g}", lambda u: u**k, lambda u: k * u ** (k - 1.0))


def cheng_yau_constant(n: int, m: float, delta: float, r1: float, r2: float) -> float:
    """C0 >= 1 from the radial cut-off psi running from 1 at r1 down to 0 at r2.

    At the maximum of phi |grad log u|^2 the estimate needs
    4n sup [-Delta phi + (2+4n) |grad phi|^2 / phi + 2(n-1) delta phi], and
    Delta_X phi >= psi'' + H_{n+m} psi' for non-increasing radial phi.
    """
    if not 0 < r1 < r2:
        raise DomainError(f"need 0 < r1 < r2, got r1={r1}, r2={r2}")
    psi = CutoffProfile(inner=r1, outer=r2)
    rho = np.linspace(r1, r2, CUTOFF_SAMPLES + 2)[1:-1]
    value, slope, curve = psi(rho), psi.derivative(rho), psi.second_derivative(rho)
    mean_curvature = model_mean_curvature(ModelSpace.for_bound(n, m, delta), rho)
    bracket = -curve - mean_curvature * slope + (2.0 + 4.0 * n) * slope**2 / value + 2.0 * (n - 1) * delta * value
    plateau = 2.0 * (n - 1) * delta
    return max(1.0, 4.0 * n * max(float(bracket.max()), plateau))


def _as_field(template: MeshField, value, name: str) -> MeshField:
    if isinstance(value, MeshField):
        return value
    return template.with_values(np.full(template.grid.size, float(value)), name=name)


def _check_curvature(M: ChartManifold, params: BakryEmeryParams, points: np.ndarray) -> None:
    require_curvature_bound(M, params, points)
    require_field_bound(M, params, points)


def cheng_yau_check(M: ChartManifold, params: BakryEmeryParams, u: MeshField, a, F: Nonlinearity,
                    r1: float, r2: float, p) -> VerificationReport:
    """sup_{B_r1} |grad log u|^2 against C0 + sup_{B_r2} {8n[(|a| + |grad a|)|F|/u + |a F'|] + 4(C + sqrt(|F|/u))^2}.

    ``a`` is a MeshField on the grid of ``u`` or a constant.
    """
    if not 0 < r1 < r2:
        raise DomainError(f"need 0 < r1 < r2, got r1={r1}, r2={r2}")
    grid = u.grid
    n = M.n
    p = M.wrap(np.asarray(p, dtype=float))
    a_field = _as_field(u, a, "a")
    rho, outer, _band = ball_masks(M, grid, p, r2)
    inner = rho < r1
    if not inner.any():
        raise DomainError(f"no mesh nodes inside B_{r1:g}(p) at spacing {grid.spacing.tolist()}")

    values = u.values
    if np.any(values[outer] <= 0):
        raise HypothesisViolation("u > 0 on B_r2(p)", float(values[outer].min()))
    a_values = a_field.values
    F_u = F.F(values)
    lap = drift_laplacian_values(M, u)
    checked = outer & np.isfinite(lap)
    mismatch = lap[checked] - a_values[checked] * F_u[checked]
    scale = max(1.0, float(np.max(np.abs(lap[checked]))), float(np.max(np.abs(a_values[checked] * F_u[checked]))))
    relative = float(np.max(np.abs(mismatch))) / scale
    if relative > EQUATION_RESIDUAL_TOL:
        raise HypothesisViolation("Delta_X u = a F(u)", relative, f"relative residual above {EQUATION_RESIDUAL_TOL:g}")
    _check_curvature(M, params, grid.points[outer])

    positive = np.where(values > 0, values, 1.0)
    grad_log_sq = gradient_norm_sq(M, u.with_values(np.log(positive), name="log_u"))
    grad_a = np.sqrt(gradient_norm_sq(M, a_field))
    lhs_nodes = inner & np.isfinite(grad_log_sq)
    rhs_nodes = outer & np.isfinite(grad_a)
    ratio = np.abs(F_u) / positive
    term = (
        8.0 * n * ((np.abs(a_values) + grad_a) * ratio + np.abs(a_values * F.dF(values)))
        + 4.0 * (params.C + np.sqrt(ratio)) ** 2
    )
    C0 = cheng_yau_constant(n, params.m, params.delta, r1, r2)
    lhs = float(np.max(grad_log_sq[lhs_nodes]))
    rhs = C0 + float(np.max(term[rhs_nodes]))
    log.debug("cheng-yau on %s: lhs %.6g, C0 %.6g, rhs %.6g", M.name, lhs, C0, rhs)
    return VerificationReport(
        check_name="cheng-yau",
        inputs={"manifold": M.name, **params.to_dict(), "r1": r1, "r2": r2, "p": p, "F": F.name},
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        resolution={"spacing": grid.spacing, "nodes_r1": int(lhs_nodes.sum()), "nodes_r2": int(rhs_nodes.sum())},
        notes=f"C0 = {C0:.6g} from the quintic cut-off on [r1, r2]; equation residual {relative:.2e}",
    )


def eigenfunction_cheng_yau_check(M: ChartManifold, params: BakryEmeryParams, eig: PrincipalEigenfunction,
                                  r1: float, r2: float, p) -> VerificationReport:
    """Gradient estimate for u0: Delta_{-X} u0 = -(div X) u0, so F(u) = u and a = -div X with X reversed."""
    grid = eig.u0.grid
    a = eig.u0.with_values(-divergence_X(M, grid.points), name="a")
    report = cheng_yau_check(M.scaled_drift(-1.0), params, eig.u0, a, LINEAR, r1, r2, p)
    report.inputs["field"] = "u0, X reversed"
    return report


def discrete_lipschitz(M: ChartManifold, U: MeshField, mask: np.ndarray) -> float:
    """max |U(i) - U(j)| / |e| over lattice edges e = (i, j) with both ends in ``mask``."""
    grid = U.grid
    best = 0.0
    for k in range(M.n):
        nb = grid.neighbor(unit_offset(M.n, k, 1))
        ok = mask & (nb >= 0)
        ok[ok] &= mask[nb[ok]]
        if not ok.any():
            continue
        step = np.zeros(M.n)
        step[k] = grid.spacing[k]
        src = grid.points[ok]
        length = M.norm(src + 0.5 * step, np.broadcast_to(step, src.shape))
        best = max(best, float(np.max(np.abs(U.values[nb[ok]] - U.values[ok]) / length)))
    return best


def quantitative_max_principle_check(M: ChartManifold, params: BakryEmeryParams, U: MeshField, x, x0,
                                     r: float, b: float, c: float, r0_grid) -> VerificationReport:
    """U(x) <= b G_r(r0) + c r0 for each r0 in (0, d(x, x0)), with G_r of the (n+m, -delta) model."""
    grid = U.grid
    x = M.wrap(np.asarray(x, dtype=float))
    x0 = M.wrap(np.asarray(x0, dtype=float))
    rho, interior, band = ball_masks(M, grid, x, r)
    values = U.values

    lipschitz = discrete_lipschitz(M, U, interior | band)
    if lipschitz > c + REPORT_TOL:
        raise PreconditionError("U Lipschitz with constant c", lipschitz, f"c = {c}")
    start = grid.nearest(x0)
    if values[start] > REPORT_TOL:
        raise PreconditionError("U(x0) <= 0", float(values[start]))
    if values[band].min() < -REPORT_TOL:
        raise PreconditionError("U >= 0 on the boundary of B_r(x)", float(values[band].min()))
    lap = drift_laplacian_values(M, U)[interior]
    lap = lap[np.isfinite(lap)]
    if lap.max() > b + LAPLACIAN_BOUND_TOL * max(1.0, abs(b)):
        raise PreconditionError("Delta_X U <= b on B_r(x)", float(lap.max()), f"b = {b}")

    reach = distance(M, x, x0)
    if not 0 < reach < r:
        raise PreconditionError("x0 in B_r(x) minus {x}", reach, f"r = {r}")
    r0 = np.atleast_1d(np.asarray(r0_grid, dtype=float))
    r0 = r0[(r0 > 0) & (r0 < reach)]
    if len(r0) == 0:
        raise DomainError(f"no r0 in the grid lies in (0, d(x, x0)) = (0, {reach:.6g})")
    barrier = green_barrier(ModelSpace.for_bound(M.n, params.m, params.delta), r)
    rhs = b * np.asarray(barrier(r0)) + c * r0
    Ux = float(values[grid.nearest(x)])
    return report_from_samples(
        "quantitative-max-principle",
        {"manifold": M.name, **params.to_dict(), "x": x, "x0": x0, "r": r, "b": b, "c": c},
        np.full(len(r0), Ux),
        rhs,
        resolution={"spacing": grid.spacing, "r0_count": len(r0), "green_samples": len(barrier.rho)},
        notes=f"discrete Lipschitz constant {lipschitz:.6g}, sup Delta_X U {lap.max():.6g}",
    )
