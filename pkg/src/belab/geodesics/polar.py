"""Polar data along radial geodesics: area element, mean curvature and its drift version.

Each ray carries a parallel orthonormal frame of v-perp and the Jacobi matrix J with
J(0) = 0, J'(0) = I, so that the area element is det J, the shape operator of the
distance sphere is A = J' J^-1 and H = tr A.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline

from belab.config import CUT_SLACK, DEFAULT_RAYS
from belab.errors import DomainError
from belab.geodesics.distance import GeodesicPath, metric_graph
from belab.geodesics.flow import ALT, MAIN, chart_of, switch_charts, to_main_chart
from belab.geometry.manifold import ChartManifold
from belab.geometry.tensors import bakry_emery_tensor, christoffel, riemann
from belab.modelspace import ModelSpace

log = logging.getLogger(__name__)

CONJUGATE_H = -1e6
CONJUGATE_AREA = 1e-12


@dataclass
class PolarData:
    """Samples along one ray from p; ``reason`` says why the ray stopped early, if it did."""
    rho: np.ndarray
    area: np.ndarray
    H: np.ndarray
    H_X: np.ndarray
    A_sq: np.ndarray
    ric_vv: np.ndarray
    x_dot_v: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    n: int
    mode: str
    reason: str | None = None
    truncated_at: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def traceless_sq(self) -> np.ndarray:
        """|A|^2 - H^2/(n-1), the squared traceless part."""
        return np.maximum(self.A_sq - self.H**2 / (self.n - 1), 0.0)

    def __len__(self) -> int:
        return len(self.rho)

    def head(self, count: int) -> PolarData:
        return PolarData(
            rho=self.rho[:count], area=self.area[:count], H=self.H[:count], H_X=self.H_X[:count],
            A_sq=self.A_sq[:count], ric_vv=self.ric_vv[:count], x_dot_v=self.x_dot_v[:count],
            points=self.points[:count], velocities=self.velocities[:count], n=self.n, mode=self.mode,
            reason=self.reason, truncated_at=self.truncated_at,
        )

    def to_dict(self) -> dict:
        return {
            "samples": len(self.rho),
            "rho_end": float(self.rho[-1]) if len(self.rho) else 0.0,
            "reason": self.reason,
            "truncated_at": self.truncated_at,
            "mode": self.mode,
        }


def orthonormal_frame(M: ChartManifold, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Columns completing the unit vector v to a g(p)-orthonormal basis, shape (n, n-1)."""
    g = M.metric(p[None])[0]
    basis = [v / math.sqrt(v @ g @ v)]
    for k in range(M.n):
        e = np.zeros(M.n)
        e[k] = 1.0
        for b in basis:
            e = e - (b @ g @ e) * b
        size = math.sqrt(max(e @ g @ e, 0.0))
        if size > 1e-8:
            basis.append(e / size)
        if len(basis) == M.n:
            break
    return np.stack(basis[1:], axis=-1)


def _rhs(M: ChartManifold, chart: np.ndarray, x, v, E, J, P):
    dv = np.empty_like(v)
    dE = np.empty_like(E)
    K = np.empty_like(J)
    for ident in (MAIN, ALT):
        rows = chart == ident
        if not rows.any():
            continue
        c = chart_of(M, ident)
        gamma = christoffel(c, x[rows])
        dv[rows] = -np.einsum("bkij,bi,bj->bk", gamma, v[rows], v[rows])
        dE[rows] = -np.einsum("bkij,bi,bja->bka", gamma, v[rows], E[rows])
        Rm = riemann(c, x[rows])
        K[rows] = np.einsum("bksmn,bka,bs,bmc,bn->bac", Rm, E[rows], v[rows], E[rows], v[rows])
    return v, dv, dE, P, -np.einsum("bac,bcd->bad", K, J), K


def _rk4(M, chart, state, h):
    def add(s, k, f):
        return tuple(a + f * b for a, b in zip(s, k))

    k1 = _rhs(M, chart, *state)[:5]
    k2 = _rhs(M, chart, *add(state, k1, 0.5 * h))[:5]
    k3 = _rhs(M, chart, *add(state, k2, 0.5 * h))[:5]
    k4 = _rhs(M, chart, *add(state, k3, h))[:5]
    return tuple(s + h / 6.0 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4))


def integrate_rays(M: ChartManifold, p, directions: np.ndarray, rho_max: float, steps: int, *,
                   detect_cut: bool = True) -> list[PolarData]:
    """Integrate geodesic, parallel frame and Jacobi fields along every direction from p."""
    p = M.wrap(np.asarray(p, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    g = M.metric(p[None])[0]
    norms = np.sqrt(np.einsum("bi,ij,bj->b", directions, g, directions))
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise DomainError(f"ray directions must be unit vectors at p, got norms {norms}")
    if rho_max <= 0 or steps < 2:
        raise DomainError("need rho_max > 0 and at least two steps")
    B, n = directions.shape
    E0 = np.stack([orthonormal_frame(M, p, d) for d in directions])
    x = np.tile(p, (B, 1))
    chart = np.full(B, MAIN)
    x, chart, (v, E) = switch_charts(M, x, chart, [directions.copy(), E0])
    J = np.zeros((B, n - 1, n - 1))
    P = np.tile(np.eye(n - 1), (B, 1, 1))
    h = rho_max / steps

    if detect_cut:
        graph = metric_graph(M)
        p_node = graph.nearest_node(p)
        tree, _ = graph.from_node(int(p_node[0]))
        p_snap = float(graph.snap_length(p[None], p_node)[0])

    samples = {key: np.full((steps, B), np.nan) for key in ("area", "H", "A_sq", "ric")}
    pts_out = np.full((steps, B, n), np.nan)
    vel_out = np.full((steps, B, n), np.nan)
    alive = np.ones(B, dtype=bool)
    stop = np.full(B, steps)
    reason: list[str | None] = [None] * B

    for k in range(steps):
        x, chart, (v, E) = switch_charts(M, x, chart, [v, E])
        x, v, E, J, P = _rk4(M, chart, (x, v, E, J, P), h)
        rho = (k + 1) * h
        main_x, (main_v,) = to_main_chart(M, x, chart, [v])
        *_, K = _rhs(M, chart, x, v, E, J, P)
        area = np.linalg.det(J)
        with np.errstate(all="ignore"):
            A = np.einsum("bij,bjk->bik", P, np.linalg.pinv(J))
        H = np.einsum("bii->b", A)
        ended = alive & ((area <= CONJUGATE_AREA * rho ** (n - 1)) | (H < CONJUGATE_H))
        for b in np.flatnonzero(ended):
            reason[b] = "conjugate"
        left = alive & ~ended & ~M.contains(main_x)
        for b in np.flatnonzero(left):
            reason[b] = "chart"
        cut = np.zeros(B, dtype=bool)
        if detect_cut:
            nodes = graph.nearest_node(main_x)
            bound = p_snap + tree[nodes] + graph.snap_length(main_x, nodes)
            cut = alive & ~ended & ~left & (rho > bound * (1.0 + CUT_SLACK))
            for b in np.flatnonzero(cut):
                reason[b] = "cut"
        stopping = ended | left | cut
        stop[stopping] = k
        alive &= ~stopping
        if not alive.any():
            break
        live = np.flatnonzero(alive)
        samples["area"][k, live] = area[live]
        samples["H"][k, live] = H[live]
        samples["A_sq"][k, live] = np.einsum("bij,bij->b", A, A)[live]
        samples["ric"][k, live] = np.einsum("bii->b", K)[live]
        pts_out[k, live] = main_x[live]
        vel_out[k, live] = main_v[live]

    rho_grid = h * np.arange(1, steps + 1)
    results = []
    for b in range(B):
        count = int(stop[b])
        pts = pts_out[:count, b]
        vel = vel_out[:count, b]
        x_dot_v = np.einsum("si,si->s", M.X(pts), vel) if count else np.zeros(0)
        H = samples["H"][:count, b]
        results.append(PolarData(
            rho=rho_grid[:count],
            area=samples["area"][:count, b],
            H=H,
            H_X=H - x_dot_v,
            A_sq=samples["A_sq"][:count, b],
            ric_vv=samples["ric"][:count, b],
            x_dot_v=x_dot_v,
            points=pts,
            velocities=vel,
            n=n,
            mode=M.derivative_mode,
            reason=reason[b],
            truncated_at=float((count + 1) * h) if reason[b] else None,
        ))
    truncated = sum(r.reason is not None for r in results)
    if truncated:
        log.debug("%d of %d rays from %s truncated before rho = %.3g", truncated, B, p, rho_max)
    return results


def radial_polar_data(M: ChartManifold, p, direction, rho_max: float, steps: int) -> PolarData:
    """(rho, area element, H, H_X) along the ray exp_p(rho * direction), truncated at conjugate or cut points."""
    return integrate_rays(M, p, np.asarray(direction, dtype=float)[None], rho_max, steps)[0]


def line_integral_X(M: ChartManifold, gamma: GeodesicPath) -> float:
    """Integral of X along gamma, by Simpson quadrature over the sample parameters."""
    if len(gamma.params) < 2:
        return 0.0
    velocities = gamma.velocities
    if velocities is None:
        unwrapped = gamma.samples[0] + np.concatenate(
            [np.zeros((1, M.n)), np.cumsum(M.difference(gamma.samples[1:], gamma.samples[:-1]), axis=0)]
        )
        velocities = np.gradient(unwrapped, gamma.params, axis=0)
    integrand = np.einsum("si,si->s", M.X(gamma.samples), velocities)
    return float(simpson(integrand, x=gamma.params))


def riccati_residual(M: ChartManifold, m: float, data: PolarData, rho_min: float = 1.0) -> np.ndarray:
    """H_X' minus the right side of the drift Riccati identity, on samples with rho >= rho_min.

    H_X' = -|A0|^2 - H_X^2/(n-1) - Ric_X^m(v, v) - 2 H_X X(v)/(n-1) - (n+m-1) X(v)^2 / (m(n-1))
    """
    n = data.n
    keep = data.rho >= rho_min
    if keep.sum() < 3:
        raise DomainError(f"need at least three samples with rho >= {rho_min}")
    rho = data.rho[keep]
    H_X = data.H_X[keep]
    a = data.x_dot_v[keep]
    pts = data.points[keep]
    v = data.velocities[keep]
    ric_X = np.einsum("si,sij,sj->s", v, bakry_emery_tensor(M, m, pts), v)
    rhs = (
        -data.traceless_sq[keep]
        - H_X**2 / (n - 1)
        - ric_X
        - 2.0 * H_X * a / (n - 1)
        - (n + m - 1) * a**2 / (m * (n - 1))
    )
    return np.gradient(H_X, rho, edge_order=2) - rhs


def unit_directions(M: ChartManifold, p, count: int = DEFAULT_RAYS) -> tuple[np.ndarray, float]:
    """Evenly spread unit vectors at p and the solid angle each represents."""
    p = np.asarray(p, dtype=float)
    n = M.n
    g = M.metric(p[None])[0]
    chol = np.linalg.cholesky(g)
    if n == 2:
        angles = 2 * np.pi * (np.arange(count) + 0.5) / count
        unit = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    elif n == 3:
        # Fibonacci lattice on the sphere
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (1 + 5**0.5) * i
        r = np.sqrt(1 - z**2)
        unit = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    else:
        unit = np.random.default_rng(count).normal(size=(count, n))
        unit /= np.linalg.norm(unit, axis=1, keepdims=True)
    # g = L L^T, so w = L^-T u has |w|_g = |u|
    directions = np.linalg.solve(chol.T, unit.T).T
    sphere = ModelSpace(float(n)).sphere_area
    return directions, sphere / count


def polar_ball_volumes(M: ChartManifold, p, radii, rays: int = DEFAULT_RAYS, steps: int = 400) -> np.ndarray:
    """|B_r(p)| for each r by integrating the area element over a fan of rays, each cut at its cut point."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    directions, weight = unit_directions(M, p, rays)
    data = integrate_rays(M, p, directions, float(radii.max()), steps)
    n = M.n
    volumes = np.zeros(len(radii))
    for ray in data:
        if len(ray) < 2:
            continue
        rho = np.concatenate([[0.0], ray.rho])
        area = np.concatenate([[0.0], ray.area])
        slope = np.concatenate([[1.0 if n == 2 else 0.0], ray.H * ray.area])
        antiderivative = CubicHermiteSpline(rho, area, slope).antiderivative()
        volumes += weight * antiderivative(np.minimum(radii, rho[-1]))
    return volumes
