"""Excess estimate for thin triangles: sup E over B_r(p) against the explicit maximum-principle chain."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from belab.errors import DomainError, HypothesisViolation
from belab.geodesics.distance import distances_with_bounds
from belab.geodesics.triangle import TriangleConfig, excess_many
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.modelspace import ModelSpace, green_barrier, model_mean_curvature
from belab.pde.harmonic import CutoffProfile
from belab.validation.hypotheses import require_curvature_bound
from belab.validation.report import VerificationReport, report_from_samples

log = logging.getLogger(__name__)

R0_SAMPLES = 200
PROFILE_SAMPLES = 2000
EXCESS_LIPSCHITZ = 3.0


@dataclass(frozen=True)
class ExcessBound:
    """Pieces of the bound: Psi bounds Delta_X E on B_{2r+1}(p), a bounds -Delta_X f for the bump f."""
    psi: float
    a: float
    bump_slope: float
    r0: np.ndarray
    green: np.ndarray

    def __call__(self, epsilon: float, f_x: float, distance_to_p: float) -> float:
        """min over r0 of the maximum-principle bound when r0 < d(x, p), else epsilon + 3 r0."""
        root = math.sqrt(epsilon)
        far = root * f_x + (self.psi + self.a * root) * self.green + EXCESS_LIPSCHITZ * self.r0
        near = epsilon + EXCESS_LIPSCHITZ * self.r0
        return float(np.min(np.where(self.r0 < distance_to_p, far, near)))

    def to_dict(self) -> dict:
        return {"psi": self.psi, "a": self.a, "bump_slope": self.bump_slope, "r0_samples": len(self.r0)}


def excess_bound(n: int, params: BakryEmeryParams, T: TriangleConfig, r: float) -> ExcessBound:
    """Assemble the bound for x in B_r(p) with the bump f(y) = psi(d(y, x)), psi = 1 on [0, r], 0 past r+1.

    On B_{2r+1}(p) both d(., q+-) exceed L - (2r+1), so Delta_X E <= 2 Hbar_{n+m}(L - 2r - 1).
    For radial non-increasing f, -Delta_X f <= -psi'' - Hbar_{n+m} psi'.
    """
    if not T.L > 2 * r + 1:
        raise HypothesisViolation("L > 2r+1", T.L, f"r = {r}")
    model = ModelSpace.for_bound(n, params.m, params.delta)
    psi = 2.0 * model_mean_curvature(model, T.L - (2 * r + 1))

    bump = CutoffProfile(inner=r, outer=r + 1.0)
    rho = np.linspace(r, r + 1.0, PROFILE_SAMPLES + 2)[1:-1]
    a = max(0.0, float(np.max(-bump.second_derivative(rho) - model_mean_curvature(model, rho) * bump.derivative(rho))))
    slope = float(np.max(np.abs(bump.derivative(rho))))
    if 2.0 + math.sqrt(T.epsilon) * slope > EXCESS_LIPSCHITZ:
        raise HypothesisViolation("epsilon small enough that E - sqrt(epsilon) f is 3-Lipschitz", T.epsilon)

    r0 = np.geomspace(1e-4 * r, r, R0_SAMPLES, endpoint=False)
    barrier = green_barrier(model, r + 1.0)
    return ExcessBound(psi=psi, a=a, bump_slope=slope, r0=r0, green=np.asarray(barrier(r0), dtype=float))


def check_abresch_gromoll(M: ChartManifold, params: BakryEmeryParams, T: TriangleConfig, r: float,
                          x_samples) -> VerificationReport:
    """E(x) at each sample of B_r(p) against the maximum-principle bound for that x."""
    if r <= 0:
        raise DomainError(f"r must be positive, got {r}")
    bound = excess_bound(M.n, params, T, r)
    x_samples = M.wrap(np.atleast_2d(np.asarray(x_samples, dtype=float)))
    batch = distances_with_bounds(M, T.p, x_samples)
    to_p = batch.values
    inside = to_p < r
    if not inside.any():
        raise DomainError(f"none of the {len(x_samples)} samples lies in B_{r:g}(p)")
    xs, to_p = x_samples[inside], to_p[inside]
    require_curvature_bound(M, params, np.concatenate([xs, T.p[None]]))

    E = excess_many(M, T, xs)
    # f = psi(d(., x)) equals 1 at x
    rhs = np.array([bound(T.epsilon, 1.0, d) for d in to_p])
    log.info("abresch-gromoll on %s: sup E %.3g over %d samples, Psi %.3g, a %.3g",
             M.name, E.max(), len(xs), bound.psi, bound.a)
    return report_from_samples(
        "abresch-gromoll",
        {**T.to_dict(), **params.to_dict(), "r": r, "samples": len(xs)},
        E,
        rhs,
        resolution={"r0_samples": R0_SAMPLES, "green_samples": len(bound.green), "x_samples": len(xs),
                    "graph_bound_distances": int(np.count_nonzero(batch.graph_bound[inside]))},
        notes=f"sup E = {E.max():.6g}; {bound.to_dict()}",
    )
