"""Shared hypothesis checks: the curvature bound Ric_X^m >= -(n-1) delta g and |X| <= C."""

from __future__ import annotations

import logging

import numpy as np

from belab.config import DEFAULT_GRID_PER_AXIS, REPORT_TOL
from belab.errors import HypothesisViolation
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.geometry.tensors import curvature_bound_deficit

log = logging.getLogger(__name__)


def validation_points(M: ChartManifold, per_axis: int = DEFAULT_GRID_PER_AXIS, extra=None) -> np.ndarray:
    """The chart sampling grid, plus any extra points the caller cares about."""
    pts = M.grid(per_axis)
    if extra is not None:
        pts = np.concatenate([pts, np.atleast_2d(np.asarray(extra, dtype=float))])
    return pts


def require_curvature_bound(M: ChartManifold, params: BakryEmeryParams, points: np.ndarray,
                            tolerance: float = REPORT_TOL) -> float:
    deficit = curvature_bound_deficit(M, params.m, params.delta, points)
    if deficit < -tolerance:
        raise HypothesisViolation("Ric_X^m >= -(n-1) delta g", deficit, f"m = {params.m}, delta = {params.delta}")
    log.debug("curvature bound on %s holds on %d points (deficit %.3g)", M.name, len(points), deficit)
    return deficit


def require_field_bound(M: ChartManifold, params: BakryEmeryParams, points: np.ndarray,
                        tolerance: float = REPORT_TOL) -> float:
    sup_X = float(np.max(M.X_norm(points)))
    if sup_X > params.C + tolerance:
        raise HypothesisViolation("|X| <= C", sup_X, f"C = {params.C}")
    return sup_X
