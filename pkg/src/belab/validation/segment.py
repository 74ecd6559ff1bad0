"""Segment inequality by Monte Carlo over geodesic segments, and witness points for the segment estimates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from belab.config import (
    DEFAULT_SEED,
    DEFAULT_SEGMENT_PAIRS,
    MC_CONFIDENCE_Z,
    REPORT_TOL,
    SEGMENT_PATH_SAMPLES,
)
from belab.errors import DomainError, PreconditionError
from belab.geodesics.distance import GeodesicPath, geodesic, geodesics_from
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.modelspace import ModelSpace
from belab.modelspace.comparison import log_ell
from belab.pde.harmonic import HarmonicReplacement
from belab.pde.mesh import MeshField, ball_masks
from belab.pde.operators import coordinate_gradient, hessian_norm_sq
from belab.validation.hypotheses import require_curvature_bound, require_field_bound
from belab.validation.report import VerificationReport

log = logging.getLogger(__name__)

C1_SAMPLES = 400


def area_ratio_constant(n: int, m: float, delta: float, r: float) -> float:
    """c1 = sup over rho <= 2r and t in [rho/2, rho] of Abar(rho) / Abar(t), Abar = l^{n+m-1}."""
    model = ModelSpace.for_bound(n, m, delta)
    rho = np.linspace(2.0 * r / C1_SAMPLES, 2.0 * r, C1_SAMPLES)
    return float(np.exp(np.max((model.d - 1) * (log_ell(model, rho) - log_ell(model, 0.5 * rho)))))


def segment_constant(n: int, params: BakryEmeryParams, r: float) -> float:
    """c = 2r c1 e^{2rC}."""
    return 2.0 * r * area_ratio_constant(n, params.m, params.delta, r) * math.exp(2.0 * r * params.C)


def path_integral(field: MeshField, path: GeodesicPath) -> float:
    """Integral of the field along a unit-speed path; NaN when the path leaves the field's domain."""
    if path.length == 0.0:
        return 0.0
    return float(simpson(field.sample(path.samples), x=path.params))


@dataclass(frozen=True)
class SegmentEstimate:
    """Monte Carlo estimate of the double integral of F_f over Omega x Omega."""
    mean: float
    stderr: float
    volume: float
    pairs: int
    dropped: int

    @property
    def estimate(self) -> float:
        return self.volume**2 * self.mean

    def upper(self, z: float = MC_CONFIDENCE_Z) -> float:
        return self.volume**2 * (self.mean + z * self.stderr)

    def lower(self, z: float = MC_CONFIDENCE_Z) -> float:
        return self.volume**2 * (self.mean - z * self.stderr)


def estimate_segment_integral(M: ChartManifold, f: MeshField, omega: np.ndarray, trials: int,
                              rng: np.random.Generator, samples: int = SEGMENT_PATH_SAMPLES) -> SegmentEstimate:
    """Pairs drawn by node volume from ``omega``: a block of y's per x, batch means give the error bar."""
    grid = f.grid
    nodes = np.flatnonzero(omega)
    weights = grid.weights[nodes]
    volume = float(weights.sum())
    prob = weights / volume
    blocks = max(2, math.ceil(math.sqrt(trials)))
    per_block = max(1, math.ceil(trials / blocks))
    means, dropped = [], 0
    for _ in range(blocks):
        x = grid.points[rng.choice(nodes, p=prob)]
        ys = grid.points[rng.choice(nodes, size=per_block, p=prob)]
        values = np.array([np.nan if path is None else path_integral(f, path)
                           for path in geodesics_from(M, x, ys, samples)])
        finite = np.isfinite(values)
        dropped += int((~finite).sum())
        if finite.any():
            means.append(float(values[finite].mean()))
    if len(means) < 2:
        raise DomainError("too few segments stayed inside the field's domain")
    if dropped:
        log.warning("%d of %d segments on %s left the domain of %s or failed to converge",
                    dropped, blocks * per_block, M.name, f.name)
    means = np.asarray(means)
    return SegmentEstimate(
        mean=float(means.mean()),
        stderr=float(means.std(ddof=1) / math.sqrt(len(means))),
        volume=volume,
        pairs=blocks * per_block,
        dropped=dropped,
    )


def check_segment_inequality(M: ChartManifold, params: BakryEmeryParams, p, r: float, f: MeshField,
                             trials: int = DEFAULT_SEGMENT_PAIRS, *, rng: np.random.Generator | None = None,
                             samples: int = SEGMENT_PATH_SAMPLES) -> VerificationReport:
    """Double integral of F_f over B_r(p) x B_r(p) against c (|Omega1| + |Omega2|) int_{B_2r(p)} f.

    The reported left side is the upper end of the 99% confidence interval.
    """
    if r <= 0:
        raise DomainError(f"r must be positive, got {r}")
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    p = M.wrap(np.asarray(p, dtype=float))
    grid = f.grid
    rho, big, _band = ball_masks(M, grid, p, 2.0 * r)
    big &= f.domain
    if f.values[big].min() < -REPORT_TOL:
        raise PreconditionError("f >= 0 on B_2r(p)", float(f.values[big].min()))
    pts = grid.points[big]
    require_curvature_bound(M, params, pts)
    require_field_bound(M, params, pts)

    omega = big & (rho < r)
    estimate = estimate_segment_integral(M, f, omega, trials, rng, samples)
    c = segment_constant(M.n, params, r)
    total_f = float(np.sum(grid.weights[big] * f.values[big]))
    rhs = c * 2.0 * estimate.volume * total_f
    upper = estimate.upper()
    if estimate.lower() <= rhs < upper:
        log.warning("segment inequality on %s: the 99%% interval [%.4g, %.4g] straddles %.4g; raise the trials",
                    M.name, estimate.lower(), upper, rhs)
    return VerificationReport(
        check_name="segment-inequality",
        inputs={"manifold": M.name, **params.to_dict(), "p": p, "r": r, "f": f.name, "trials": trials},
        lhs=upper,
        rhs=rhs,
        margin=rhs - upper,
        resolution={"spacing": grid.spacing, "pairs": estimate.pairs, "dropped": estimate.dropped,
                    "path_samples": samples},
        notes=f"estimate {estimate.estimate:.6g} +- {estimate.volume**2 * estimate.stderr:.3g}; c = {c:.6g}",
    )


# ── Witness points ───────────────────────────────────────────────────────────
@dataclass(frozen=True)
class SegmentWitness:
    """x*, y*, z* within varrho of x, y, z and the two segment integrals they achieve."""
    x_star: np.ndarray
    y_star: np.ndarray
    z_star: np.ndarray
    gradient_integral: float
    hessian_integral: float
    varrho: float
    varsigma: float
    psi: float

    @property
    def threshold(self) -> float:
        return self.psi**self.varsigma

    def to_report(self) -> VerificationReport:
        lhs = [self.gradient_integral, self.hessian_integral]
        return VerificationReport(
            check_name="segment-witness",
            inputs={"x_star": self.x_star, "y_star": self.y_star, "z_star": self.z_star, "psi": self.psi},
            lhs=lhs,
            rhs=[self.threshold, self.threshold],
            margin=self.threshold - max(lhs),
            resolution={"varrho": self.varrho, "varsigma": self.varsigma},
            notes="threshold Psi^varsigma is asserted only for Psi small",
        )


def _jitter(M: ChartManifold, center: np.ndarray, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points within g-radius ``radius`` of center, using the metric frozen at center."""
    unit = rng.normal(size=(count, M.n))
    unit /= np.linalg.norm(unit, axis=1, keepdims=True)
    unit *= rng.random((count, 1)) ** (1.0 / M.n) * radius
    chol = np.linalg.cholesky(M.metric(center[None])[0])
    out = M.wrap(center + np.linalg.solve(chol.T, unit.T).T)
    out[0] = center
    return out


def _derived_fields(M: ChartManifold, h: HarmonicReplacement) -> tuple[list[MeshField], MeshField]:
    """Coordinate partials of h and |Hess h| as mesh fields, restricted to nodes where the stencils exist."""
    grid = h.grid
    du = coordinate_gradient(grid, h.values)
    hess = np.sqrt(np.maximum(hessian_norm_sq(M, h), 0.0))
    grad_ok = h.domain & np.all(np.isfinite(du), axis=1)
    hess_ok = h.domain & np.isfinite(hess)
    partials = [MeshField(grid, np.nan_to_num(du[:, k]), h.boundary_mask, grad_ok, f"d{k}_{h.name}")
                for k in range(M.n)]
    return partials, MeshField(grid, np.nan_to_num(hess), h.boundary_mask, hess_ok, f"hess_{h.name}")


def segment_integrals(M: ChartManifold, partials: list[MeshField], hess: MeshField,
                      x: np.ndarray, y: np.ndarray, z: np.ndarray,
                      samples: int = SEGMENT_PATH_SAMPLES) -> tuple[float, float]:
    """(int_sigma |grad h - sigma'| ds, int_sigma int_tau_s |Hess h| dt ds) with sigma from z to y, tau_s from x."""
    sigma = geodesic(M, z, y, samples)
    if sigma.length == 0.0:
        return 0.0, 0.0
    du = np.stack([g.sample(sigma.samples) for g in partials], axis=-1)
    grad_h = np.einsum("sij,sj->si", M.inverse_metric(sigma.samples), du)
    mismatch = M.norm(sigma.samples, grad_h - sigma.velocities)
    inner = np.array([np.nan if tau is None else path_integral(hess, tau)
                      for tau in geodesics_from(M, x, sigma.samples, samples)])
    return float(simpson(mismatch, x=sigma.params)), float(simpson(inner, x=sigma.params))


def select_segment_points(M: ChartManifold, params: BakryEmeryParams, h: HarmonicReplacement, x, y, z,
                          psi: float, k: int = 8, *, rng: np.random.Generator | None = None,
                          samples: int = SEGMENT_PATH_SAMPLES) -> SegmentWitness:
    """Best of k candidate triples within varrho = psi^{3 varsigma} of (x, y, z), varsigma = 1/(45(n+m)).

    The first candidate is (x, y, z) itself. Candidates whose paths leave the mesh of h score NaN
    and are skipped; DomainError when none survives.
    """
    if not 0 < psi < 1:
        raise DomainError(f"psi must lie in (0, 1), got {psi}")
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    varsigma = 1.0 / (45.0 * (M.n + params.m))
    varrho = psi ** (3.0 * varsigma)
    anchors = [M.wrap(np.asarray(v, dtype=float)) for v in (x, y, z)]
    xs, ys, zs = (_jitter(M, a, varrho, k, rng) for a in anchors)
    partials, hess = _derived_fields(M, h)

    best, best_score = None, np.inf
    for i in range(k):
        first, second = segment_integrals(M, partials, hess, xs[i], ys[i], zs[i], samples)
        score = first + second
        if np.isfinite(score) and score < best_score:
            best, best_score = (i, first, second), score
    if best is None:
        raise DomainError(f"all {k} candidate triples left the mesh of {h.name}; shrink psi or enlarge the ball")
    i, first, second = best
    log.info("segment witness on %s: candidate %d of %d, integrals %.3g and %.3g (varrho %.3g)",
             M.name, i, k, first, second, varrho)
    return SegmentWitness(
        x_star=xs[i], y_star=ys[i], z_star=zs[i],
        gradient_integral=first, hessian_integral=second,
        varrho=varrho, varsigma=varsigma, psi=psi,
    )
