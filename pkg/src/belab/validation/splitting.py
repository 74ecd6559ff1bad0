"""Almost splitting: Pythagoras defect on level sets of h+, the map Xi into R x N, and the projection integral."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from belab.config import (
    DEFAULT_SEED,
    MESH_SPACING,
    PROJECTION_THRESHOLD,
    PYTHAGORAS_THRESHOLD,
    SPLIT_DISTORTION_CELLS,
    SPLIT_SAMPLE_POINTS,
)
from belab.errors import LevelSetError
from belab.geodesics.distance import distance, distances_from, geodesic
from belab.geodesics.flow import exp_map
from belab.geodesics.triangle import TriangleConfig
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.geometry.tensors import bakry_emery_tensor
from belab.pde.harmonic import HarmonicReplacement, x_harmonic_replacement
from belab.pde.operators import coordinate_gradient, unit_offset
from belab.validation.report import VerificationReport, report_from_samples

log = logging.getLogger(__name__)

TRIPLE_ATTEMPTS = 20


def local_increment(h: HarmonicReplacement) -> np.ndarray:
    """Largest change of h to an axis neighbor inside the domain, per node."""
    grid = h.grid
    domain = h.domain
    out = np.zeros(grid.size)
    for k in range(grid.manifold.n):
        for sign in (1, -1):
            nb = grid.neighbor(unit_offset(grid.manifold.n, k, sign))
            ok = domain & (nb >= 0)
            ok[ok] &= domain[nb[ok]]
            out[ok] = np.maximum(out[ok], np.abs(h.values[nb[ok]] - h.values[ok]))
    return out


def _quarter_nodes(h: HarmonicReplacement) -> np.ndarray:
    ball = h.ball
    nodes = np.flatnonzero(ball.interior & (ball.rho < 0.25 * ball.radius))
    if len(nodes) < 2:
        raise LevelSetError(f"B_r/4(p) holds {len(nodes)} mesh nodes at spacing {ball.spacing}; refine the mesh")
    return nodes


# ── Pythagoras defect ────────────────────────────────────────────────────────
def pythagoras_defect(M: ChartManifold, x, y, z) -> float:
    """d(x, y)^2 + d(y, z)^2 - d(x, z)^2."""
    d_xy, d_xz = distances_from(M, x, np.stack([np.asarray(y, dtype=float), np.asarray(z, dtype=float)]),
                                strict=True)
    d_yz = distance(M, y, z)
    return float(d_xy**2 + d_yz**2 - d_xz**2)


def level_set_triples(M: ChartManifold, T: TriangleConfig, h: HarmonicReplacement, count: int,
                      rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Triples in B_r/4(p): x, y on one discrete level set of h+ and z on the geodesic from y toward q+."""
    ball = h.ball
    grid = h.grid
    nodes = _quarter_nodes(h)
    increment = local_increment(h)
    triples = []
    for _ in range(TRIPLE_ATTEMPTS * count):
        if len(triples) == count:
            break
        i = int(rng.choice(nodes))
        gap = np.abs(h.values[nodes] - h.values[i])
        apart = np.max(np.abs(M.difference(grid.points[nodes], grid.points[i]) / grid.spacing), axis=1) >= 1.0
        partners = nodes[(gap <= 0.5 * increment[i]) & apart]
        if len(partners) == 0:
            continue
        j = int(rng.choice(partners))
        room = 0.25 * ball.radius - ball.rho[j]
        if room <= 0:
            continue
        y = grid.points[j]
        toward = geodesic(M, y, T.q_plus, samples=3).velocities[0]
        step = rng.uniform(0.2, 0.9) * room
        z = exp_map(M, y[None], (step * toward)[None])[0]
        triples.append((grid.points[i], y, z))
    if not triples:
        raise LevelSetError(f"no pair of B_r/4(p) nodes shares a level of h+ on {M.name}")
    return triples


def check_pythagoras_defect(M: ChartManifold, params: BakryEmeryParams, T: TriangleConfig, r: float,
                            triple_samples: int = 8, *, spacing: float = MESH_SPACING,
                            threshold: float = PYTHAGORAS_THRESHOLD, rng: np.random.Generator | None = None,
                            h: HarmonicReplacement | None = None) -> VerificationReport:
    """Defect per level-set triple against a calibrated threshold."""
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    h = x_harmonic_replacement(M, T, 1, T.p, r, spacing) if h is None else h
    triples = level_set_triples(M, T, h, triple_samples, rng)
    defects = np.array([pythagoras_defect(M, x, y, z) for x, y, z in triples])
    log.info("pythagoras defect on %s: %d triples, max %.3g", M.name, len(defects), defects.max())
    return report_from_samples(
        "pythagoras-defect",
        {**T.to_dict(), **params.to_dict(), "r": r, "triples": triple_samples},
        defects,
        np.full(len(defects), threshold),
        resolution={**h.ball.to_dict(), "triples_found": len(triples)},
        notes=f"calibrated threshold {threshold:g}; max defect {defects.max():.6g}",
    )


# ── Almost splitting ─────────────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class LevelSet:
    """Nodes of the discrete zero set of h+ with the path metric of its lattice graph."""
    nodes: np.ndarray
    points: np.ndarray
    path_metric: np.ndarray
    components: int

    def __len__(self) -> int:
        return len(self.nodes)


def zero_level_set(M: ChartManifold, h: HarmonicReplacement) -> LevelSet:
    """Interior nodes with |h+| below half the local increment, joined by lattice edges of ambient length."""
    grid = h.grid
    member = h.ball.interior & (np.abs(h.values) < 0.5 * local_increment(h))
    nodes = np.flatnonzero(member)
    if len(nodes) == 0:
        raise LevelSetError(f"the zero set of h+ on {M.name} contains no mesh node")
    position = np.full(grid.size, -1)
    position[nodes] = np.arange(len(nodes))
    rows, cols, lengths = [], [], []
    for offset in product((-1, 0, 1), repeat=M.n):
        if not any(offset):
            continue
        nb = grid.neighbor(offset)[nodes]
        ok = nb >= 0
        ok[ok] &= member[nb[ok]]
        if not ok.any():
            continue
        step = np.asarray(offset) * grid.spacing
        src = grid.points[nodes[ok]]
        rows.append(np.flatnonzero(ok))
        cols.append(position[nb[ok]])
        lengths.append(M.norm(src + 0.5 * step, np.broadcast_to(step, src.shape)))
    if rows:
        graph = sparse.csr_matrix(
            (np.concatenate(lengths), (np.concatenate(rows), np.concatenate(cols))), shape=(len(nodes), len(nodes))
        )
    else:
        graph = sparse.csr_matrix((len(nodes), len(nodes)))
    metric = csgraph.shortest_path(graph, directed=False)
    components, _ = csgraph.connected_components(graph, directed=False)
    if components > 1:
        log.warning("zero set of h+ on %s splits into %d lattice components", M.name, components)
    return LevelSet(nodes=nodes, points=grid.points[nodes], path_metric=metric, components=int(components))


@dataclass(frozen=True)
class SplittingDistortion:
    """Distortion of Xi(x) = (h+(x), x_hat) on sampled pairs of B_r/4(p)."""
    distortion: float
    pairs: int
    level_nodes: int
    components: int

    @property
    def gh_bound(self) -> float:
        return 1.5 * self.distortion


def splitting_distortion(M: ChartManifold, h: HarmonicReplacement, samples: int = SPLIT_SAMPLE_POINTS,
                         rng: np.random.Generator | None = None) -> SplittingDistortion:
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    level = zero_level_set(M, h)
    nodes = _quarter_nodes(h)
    chosen = rng.choice(nodes, size=min(samples, len(nodes)), replace=False)
    pts = h.grid.points[chosen]
    k = len(chosen)
    targets = np.concatenate([pts, level.points])
    rows = np.stack([distances_from(M, x, targets) for x in pts])
    d_samples = 0.5 * (rows[:, :k] + rows[:, :k].T)
    projection = np.argmin(rows[:, k:], axis=1)
    heights = h.values[chosen]

    i, j = np.triu_indices(k, 1)
    transverse = level.path_metric[projection[i], projection[j]]
    product_distance = np.sqrt((heights[i] - heights[j]) ** 2 + transverse**2)
    distortion = float(np.max(np.abs(d_samples[i, j] - product_distance)))
    return SplittingDistortion(distortion=distortion, pairs=len(i), level_nodes=len(level), components=level.components)


def check_almost_splitting(M: ChartManifold, params: BakryEmeryParams, T: TriangleConfig, r: float, *,
                           spacing: float = MESH_SPACING, threshold: float | None = None,
                           samples: int = SPLIT_SAMPLE_POINTS, rng: np.random.Generator | None = None,
                           h: HarmonicReplacement | None = None) -> VerificationReport:
    """GH upper bound 3/2 * distortion between B_r/4(p) and R x N, N = h+^{-1}(0) with its path metric."""
    h = x_harmonic_replacement(M, T, 1, T.p, r, spacing) if h is None else h
    result = splitting_distortion(M, h, samples, rng)
    rhs = 1.5 * SPLIT_DISTORTION_CELLS * h.ball.spacing if threshold is None else threshold
    log.info("almost splitting on %s: distortion %.3g over %d pairs, |N| = %d",
             M.name, result.distortion, result.pairs, result.level_nodes)
    return VerificationReport(
        check_name="almost-split",
        inputs={**T.to_dict(), **params.to_dict(), "r": r, "samples": samples},
        lhs=result.gh_bound,
        rhs=rhs,
        margin=rhs - result.gh_bound,
        resolution={**h.ball.to_dict(), "pairs": result.pairs, "level_nodes": result.level_nodes,
                    "level_components": result.components},
        notes=f"distortion {result.distortion:.6g}; GH bound is 3/2 of it",
    )


# ── Projection integral ──────────────────────────────────────────────────────
def projection_integrals(M: ChartManifold, params: BakryEmeryParams, h: HarmonicReplacement) -> tuple[float, float]:
    """(integral of <grad h, X>^2, integral of (Ric_X^m + (n-1) delta g)(grad h, grad h)) over B_r(p)."""
    grid = h.grid
    du = coordinate_gradient(grid, h.values)
    usable = h.ball.interior & np.all(np.isfinite(du), axis=1)
    pts = grid.points[usable]
    g = M.metric(pts)
    grad = np.einsum("sij,sj->si", M.inverse_metric(pts), du[usable])
    along_X = np.einsum("si,si->s", M.X(pts), grad)
    shifted = bakry_emery_tensor(M, params.m, pts) + (M.n - 1) * params.delta * g
    curvature = np.einsum("si,sij,sj->s", grad, shifted, grad)
    weights = grid.weights[usable]
    return float(np.sum(weights * along_X**2)), float(np.sum(weights * curvature))


def check_projection_smallness(M: ChartManifold, params: BakryEmeryParams, T: TriangleConfig, r: float, *,
                               spacing: float = MESH_SPACING, threshold: float = PROJECTION_THRESHOLD,
                               h: HarmonicReplacement | None = None) -> VerificationReport:
    h = x_harmonic_replacement(M, T, 1, T.p, r, spacing) if h is None else h
    drift, curvature = projection_integrals(M, params, h)
    total = drift + curvature
    return VerificationReport(
        check_name="projection-smallness",
        inputs={**T.to_dict(), **params.to_dict(), "r": r},
        lhs=total,
        rhs=threshold,
        margin=threshold - total,
        resolution=h.ball.to_dict(),
        notes=f"calibrated threshold; <grad h, X>^2 part {drift:.6g}, curvature part {curvature:.6g}",
    )
