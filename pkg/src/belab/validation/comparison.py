"""Mean curvature, area and volume comparison checks along fans of radial geodesics."""

from __future__ import annotations

import logging

import numpy as np

from belab.config import DEFAULT_RAYS
from belab.errors import DomainError
from belab.geodesics.polar import PolarData, integrate_rays, polar_ball_volumes, unit_directions
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.modelspace import ModelSpace, model_ball_volume, model_mean_curvature
from belab.modelspace.comparison import log_ell
from belab.validation.hypotheses import require_curvature_bound, require_field_bound, validation_points
from belab.validation.report import VerificationReport, report_from_samples

log = logging.getLogger(__name__)

RAY_STEPS = 400


def random_directions(M: ChartManifold, p, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` g-unit vectors at p, uniform on the unit sphere of T_pM."""
    p = np.asarray(p, dtype=float)
    unit = rng.normal(size=(count, M.n))
    unit /= np.linalg.norm(unit, axis=1, keepdims=True)
    chol = np.linalg.cholesky(M.metric(p[None])[0])
    return np.linalg.solve(chol.T, unit.T).T


def _fan(M: ChartManifold, p, rays: int, rho_max: float, steps: int,
         rng: np.random.Generator | None) -> tuple[np.ndarray, list[PolarData]]:
    if rho_max <= 0:
        raise DomainError(f"rho_max must be positive, got {rho_max}")
    p = M.wrap(np.asarray(p, dtype=float))
    if rng is None:
        directions, _ = unit_directions(M, p, rays)
    else:
        directions = random_directions(M, p, rays, rng)
    return p, integrate_rays(M, p, directions, rho_max, steps)


def _truncations(data: list[PolarData]) -> dict:
    reasons: dict[str, int] = {}
    for ray in data:
        if ray.reason:
            reasons[ray.reason] = reasons.get(ray.reason, 0) + 1
    return reasons


def check_mean_curvature_comparison(M: ChartManifold, params: BakryEmeryParams, p, rays: int = DEFAULT_RAYS,
                                    rho_max: float = 1.0, *, steps: int = RAY_STEPS,
                                    rng: np.random.Generator | None = None) -> VerificationReport:
    """H_X(rho) <= Hbar_{n+m}(rho) at every pre-cut sample of every ray from p."""
    p = M.wrap(np.asarray(p, dtype=float))
    require_curvature_bound(M, params, validation_points(M, extra=p))
    p, data = _fan(M, p, rays, rho_max, steps, rng)
    model = ModelSpace.for_bound(M.n, params.m, params.delta)
    lhs, rhs = [], []
    for ray in data:
        if len(ray) == 0:
            continue
        lhs.append(ray.H_X)
        rhs.append(model_mean_curvature(model, ray.rho))
    if not lhs:
        raise DomainError(f"every ray from {p} stopped before its first sample")
    samples = sum(len(v) for v in lhs)
    return report_from_samples(
        "mean-curvature",
        {"manifold": M.name, **params.to_dict(), "p": p, "rays": rays, "rho_max": rho_max},
        np.concatenate(lhs),
        np.concatenate(rhs),
        resolution={"steps": steps, "step": rho_max / steps, "samples": samples,
                    "derivative_mode": M.derivative_mode, "truncated": _truncations(data)},
        notes=f"model {model}",
    )


def check_mean_curvature_difference(M: ChartManifold, params: BakryEmeryParams, p, rays: int = DEFAULT_RAYS,
                                    rho_max: float = 1.0, *, steps: int = RAY_STEPS,
                                    rng: np.random.Generator | None = None) -> VerificationReport:
    """H_X(rho) - Hbar_n(rho) <= C along rays, comparing against the n-dimensional model."""
    p = M.wrap(np.asarray(p, dtype=float))
    points = validation_points(M, extra=p)
    require_curvature_bound(M, params, points)
    sup_X = require_field_bound(M, params, points)
    p, data = _fan(M, p, rays, rho_max, steps, rng)
    model = ModelSpace(d=float(M.n), lam=-params.delta)
    lhs = [ray.H_X - model_mean_curvature(model, ray.rho) for ray in data if len(ray)]
    if not lhs:
        raise DomainError(f"every ray from {p} stopped before its first sample")
    lhs = np.concatenate(lhs)
    return report_from_samples(
        "mean-curvature-difference",
        {"manifold": M.name, **params.to_dict(), "p": p, "rays": rays, "rho_max": rho_max},
        lhs,
        np.full(lhs.shape, params.C),
        resolution={"steps": steps, "step": rho_max / steps, "samples": len(lhs), "truncated": _truncations(data)},
        notes=f"sup |X| on the validation grid {sup_X:.6g}",
    )


def area_ratios(M: ChartManifold, params: BakryEmeryParams, ray: PolarData, rho_grid: np.ndarray) -> np.ndarray:
    """log(e^{-C rho} A / Abar) on the part of ``rho_grid`` the ray reaches, Abar = l^{n+m-1}."""
    model = ModelSpace.for_bound(M.n, params.m, params.delta)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(ray.area) - params.C * ray.rho - (model.d - 1) * log_ell(model, ray.rho)
    reach = rho_grid[(rho_grid >= ray.rho[0]) & (rho_grid <= ray.rho[-1])]
    return np.interp(reach, ray.rho, log_ratio)


def volume_ratios(M: ChartManifold, params: BakryEmeryParams, p, rho_grid: np.ndarray, rays: int) -> np.ndarray:
    """log(Vol B_rho(p) / weighted model volume of B_rho) on ``rho_grid``."""
    model = ModelSpace.for_bound(M.n, params.m, params.delta, C=params.C)
    volumes = polar_ball_volumes(M, p, rho_grid, rays=rays)
    model_volumes = np.array([model_ball_volume(model, float(r), weighted=True) for r in rho_grid])
    return np.log(volumes) - np.log(model_volumes)


def check_area_volume_comparison(M: ChartManifold, params: BakryEmeryParams, p, rho_grid,
                                 rays: int = DEFAULT_RAYS) -> VerificationReport:
    """e^{-C rho} A / Abar non-increasing on each ray, and Vol(B_rho) / Vbar^C_{n+m}(B_rho) non-increasing.

    Both ratios are compared in log form, so the margin is a relative violation.
    """
    rho_grid = np.sort(np.atleast_1d(np.asarray(rho_grid, dtype=float)))
    if len(rho_grid) < 2 or rho_grid[0] <= 0:
        raise DomainError("rho_grid needs at least two positive radii")
    p = M.wrap(np.asarray(p, dtype=float))
    points = validation_points(M, extra=p)
    require_curvature_bound(M, params, points)
    require_field_bound(M, params, points)

    steps = max(RAY_STEPS, 8 * len(rho_grid))
    directions, _ = unit_directions(M, p, rays)
    data = integrate_rays(M, p, directions, float(rho_grid[-1]), steps)
    lhs, rhs = [], []
    for ray in data:
        if len(ray) < 2:
            continue
        ratio = area_ratios(M, params, ray, rho_grid)
        lhs.append(ratio[1:])
        rhs.append(ratio[:-1])
    area_pairs = sum(len(v) for v in lhs)

    volume = volume_ratios(M, params, p, rho_grid, rays)
    lhs.append(volume[1:])
    rhs.append(volume[:-1])
    lhs, rhs = np.concatenate(lhs), np.concatenate(rhs)
    worst_volume = float(np.min(volume[:-1] - volume[1:]))
    log.debug("area/volume monotonicity on %s: %d area pairs, worst volume step %.3g", M.name, area_pairs, worst_volume)
    return report_from_samples(
        "area-volume",
        {"manifold": M.name, **params.to_dict(), "p": p, "rho_grid": rho_grid, "rays": rays},
        lhs,
        rhs,
        resolution={"steps": steps, "rays": rays, "area_pairs": area_pairs, "volume_pairs": len(rho_grid) - 1,
                    "truncated": _truncations(data)},
        notes=f"log ratios; worst volume step {worst_volume:.3e}",
    )
