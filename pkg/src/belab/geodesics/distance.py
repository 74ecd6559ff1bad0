"""Riemannian distance: a Dijkstra seed on a metric lattice refined by two-point shooting.

The lattice graph gives an upper bound for d(x, y) (length of an actual piecewise-straight
coordinate path). Shooting then solves exp_x(v) = y by Newton iteration from a few
candidate initial velocities; the shortest converged solution that does not exceed the
graph bound is reported.
"""

from __future__ import annotations

import logging
import math
import threading
import weakref
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from belab.config import (
    DISTANCE_TOL,
    LATTICE_CELLS,
    LATTICE_MAX_NODES,
    LATTICE_MAX_SPACING,
    SHOOT_MAX_ITER,
    SHOOT_TOL,
)
from belab.errors import ConvergenceError
from belab.geodesics.flow import ALT, MAIN, chart_of, exp_map, flow, speeds, to_chart, trace_geodesic
from belab.geometry.manifold import ChartManifold

log = logging.getLogger(__name__)

PATH_SEED_FRACTION = 0.25
LINE_SEARCH_HALVINGS = 6


# ── Lattice graph ────────────────────────────────────────────────────────────
def _stencil(n: int) -> np.ndarray:
    """Half of the primitive offsets in {-r..r}^n (r = 2 in the plane, 1 above), one per +/- pair."""
    radius = 2 if n == 2 else 1
    offsets = []
    for o in product(range(-radius, radius + 1), repeat=n):
        if not any(o) or math.gcd(*o) != 1:
            continue
        first = next(c for c in o if c != 0)
        if first > 0:
            offsets.append(o)
    return np.array(offsets, dtype=int)


@dataclass(eq=False)
class MetricGraph:
    """Lattice over a chart's sampling box with Riemannian edge lengths.

    Holds its manifold weakly so that the module-level graph cache can drop it.
    """
    manifold_ref: weakref.ReferenceType
    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple[int, ...]
    adjacency: sparse.csr_matrix
    _cache: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def manifold(self) -> ChartManifold:
        return self.manifold_ref()

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    def node_points(self, nodes: np.ndarray) -> np.ndarray:
        idx = np.stack(np.unravel_index(np.asarray(nodes), self.shape), axis=-1)
        return self.origin + idx * self.spacing

    def nearest_node(self, points: np.ndarray) -> np.ndarray:
        M = self.manifold
        pts = M.wrap(np.atleast_2d(points))
        idx = np.rint((pts - self.origin) / self.spacing).astype(int)
        for k, count in enumerate(self.shape):
            if M.periodic[k]:
                idx[:, k] = np.mod(idx[:, k], count)
            else:
                idx[:, k] = np.clip(idx[:, k], 0, count - 1)
        return np.ravel_multi_index(tuple(idx.T), self.shape)

    def snap_length(self, points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        """Length of the straight coordinate segment from each point to its node."""
        M = self.manifold
        pts = np.atleast_2d(points)
        delta = M.difference(self.node_points(nodes), pts)
        mid = pts + 0.5 * delta
        return (M.norm(pts, delta) + 4.0 * M.norm(mid, delta) + M.norm(pts + delta, delta)) / 6.0

    def from_node(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Dijkstra distances and predecessors from a node; computed once per node."""
        with self._lock:
            hit = self._cache.get(node)
        if hit is not None:
            return hit
        dist, pred = csgraph.dijkstra(self.adjacency, directed=False, indices=node, return_predecessors=True)
        with self._lock:
            self._cache.setdefault(node, (dist, pred))
            return self._cache[node]

    def upper_bound(self, x: np.ndarray, y: np.ndarray) -> float:
        """Graph distance plus snapping segments: the length of an explicit path from x to y."""
        nx, ny = self.nearest_node(x), self.nearest_node(y)
        dist, _ = self.from_node(int(nx[0]))
        return float(self.snap_length(x, nx)[0] + dist[ny[0]] + self.snap_length(y, ny)[0])

    def path_nodes(self, source: int, target: int) -> list[int]:
        _, pred = self.from_node(source)
        path = [target]
        while path[-1] != source and pred[path[-1]] >= 0:
            path.append(int(pred[path[-1]]))
        return path[::-1]


def _lattice_shape(M: ChartManifold) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    lo, hi = M.sampling_box
    extent = hi - lo
    cells = np.maximum(LATTICE_CELLS, np.ceil(extent / LATTICE_MAX_SPACING)).astype(int)
    counts = np.where(M.periodic_mask, cells, cells + 1)
    total = float(np.prod(counts))
    if total > LATTICE_MAX_NODES:
        scale = (LATTICE_MAX_NODES / total) ** (1.0 / M.n)
        cells = np.maximum(8, np.floor(cells * scale)).astype(int)
        counts = np.where(M.periodic_mask, cells, cells + 1)
    return lo, extent / cells, tuple(int(c) for c in counts)


def build_graph(M: ChartManifold) -> MetricGraph:
    origin, spacing, shape = _lattice_shape(M)
    total = int(np.prod(shape))
    idx = np.stack(np.unravel_index(np.arange(total), shape), axis=-1)
    points = origin + idx * spacing
    rows, cols, weights = [], [], []
    for offset in _stencil(M.n):
        target = idx + offset
        valid = np.ones(total, dtype=bool)
        for k, count in enumerate(shape):
            if M.periodic[k]:
                target[:, k] = np.mod(target[:, k], count)
            else:
                valid &= (target[:, k] >= 0) & (target[:, k] < count)
        src = np.flatnonzero(valid)
        dst = np.ravel_multi_index(tuple(target[valid].T), shape)
        delta = np.broadcast_to(offset * spacing, (len(src), M.n))
        a = points[src]
        length = (M.norm(a, delta) + 4.0 * M.norm(a + 0.5 * delta, delta) + M.norm(a + delta, delta)) / 6.0
        rows.append(src)
        cols.append(dst)
        weights.append(length)
    adjacency = sparse.csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(total, total)
    )
    log.debug("built %s lattice %s with %d edges", M.name, shape, adjacency.nnz)
    return MetricGraph(manifold_ref=weakref.ref(M), origin=origin, spacing=spacing, shape=shape, adjacency=adjacency)


_GRAPHS: "weakref.WeakKeyDictionary[ChartManifold, MetricGraph]" = weakref.WeakKeyDictionary()
_GRAPHS_LOCK = threading.Lock()


def metric_graph(M: ChartManifold) -> MetricGraph:
    """The memoized lattice graph of M; concurrent callers share one build."""
    with _GRAPHS_LOCK:
        graph = _GRAPHS.get(M)
        if graph is None:
            graph = build_graph(M)
            _GRAPHS[M] = graph
    return graph


# ── Shooting ─────────────────────────────────────────────────────────────────
@dataclass
class GeodesicPath:
    """A sampled geodesic segment; ``params`` are arc-length values when ``unit_speed``."""
    samples: np.ndarray
    params: np.ndarray
    length: float
    unit_speed: bool
    endpoint_residual: float
    velocities: np.ndarray | None = None

    def chord_speeds(self, manifold: ChartManifold) -> np.ndarray:
        delta = manifold.difference(self.samples[1:], self.samples[:-1])
        mid = self.samples[:-1] + 0.5 * delta
        return manifold.norm(mid, delta) / np.diff(self.params)

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "unit_speed": self.unit_speed,
            "endpoint_residual": self.endpoint_residual,
            "samples": len(self.params),
        }


@dataclass
class _Shot:
    start: np.ndarray
    chart: int
    velocity: np.ndarray
    length: float
    residual: float
    converged: bool


def _start_chart(M: ChartManifold, x: np.ndarray) -> int:
    if M.seam is not None and bool(M.seam.near_pole(x[None])[0]):
        return ALT
    return MAIN


def _residual(M: ChartManifold, endpoints: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Endpoint mismatch, measured in a chart regular at the target."""
    if M.seam is not None:
        alt_rows = M.seam.near_pole(targets)
        if alt_rows.any():
            out = M.difference(endpoints, targets)
            alt = M.seam.alt
            out[alt_rows] = alt.difference(M.seam.to_alt(endpoints[alt_rows]), M.seam.to_alt(targets[alt_rows]))
            return out
    return M.difference(endpoints, targets)


def _newton(M: ChartManifold, start: np.ndarray, chart: np.ndarray, v0: np.ndarray,
            targets: np.ndarray, max_length: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched Newton solve of exp_start(v) = target; returns (velocities, residual norms)."""
    n = M.n
    v = v0.copy()
    F = _residual(M, exp_map(M, start, v, chart), targets)
    norm = np.max(np.abs(F), axis=1)
    for _ in range(SHOOT_MAX_ITER):
        active = norm > SHOOT_TOL
        if not active.any():
            break
        rows = np.flatnonzero(active)
        h = 1e-6 * np.maximum(1.0, np.max(np.abs(v[rows]), axis=1))
        bundle = [v[rows]]
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            bundle.append(v[rows] + h[:, None] * e)
            bundle.append(v[rows] - h[:, None] * e)
        vs = np.concatenate(bundle)
        reps = 2 * n + 1
        ends = exp_map(M, np.tile(start[rows], (reps, 1)), vs, np.tile(chart[rows], reps))
        F_all = _residual(M, ends, np.tile(targets[rows], (reps, 1))).reshape(reps, len(rows), n)
        J = np.empty((len(rows), n, n))
        for j in range(n):
            J[:, :, j] = (F_all[1 + 2 * j] - F_all[2 + 2 * j]) / (2.0 * h[:, None])
        try:
            step = np.linalg.solve(J, -F_all[0][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.einsum("bij,bj->bi", np.linalg.pinv(J), -F_all[0])
        factor = np.ones(len(rows))
        pending = np.ones(len(rows), dtype=bool)
        best_v = v[rows].copy()
        best_norm = norm[rows].copy()
        for _halving in range(LINE_SEARCH_HALVINGS):
            trial = v[rows][pending] + factor[pending, None] * step[pending]
            speed = speeds(M, start[rows][pending], trial, chart[rows][pending])
            too_long = speed > max_length[rows][pending]
            F_trial = _residual(M, exp_map(M, start[rows][pending], trial, chart[rows][pending]),
                                targets[rows][pending])
            trial_norm = np.where(too_long, np.inf, np.max(np.abs(F_trial), axis=1))
            idx = np.flatnonzero(pending)
            better = trial_norm < best_norm[idx]
            best_v[idx[better]] = trial[better]
            best_norm[idx[better]] = trial_norm[better]
            pending[idx[better]] = False
            factor[pending] *= 0.5
            if not pending.any():
                break
        stalled = best_norm >= norm[rows]
        v[rows] = best_v
        norm[rows] = best_norm
        if stalled.all():
            break
    return v, norm


def _candidates(M: ChartManifold, graph: MetricGraph, x: np.ndarray, y: np.ndarray, ident: int,
                bound: float) -> list[np.ndarray]:
    """Initial velocities at x (in chart ``ident``): the coordinate chord and a graph-path direction."""
    chart = chart_of(M, ident)
    xs = to_chart(M, x[None], ident)[0]
    out = [chart.difference(to_chart(M, y[None], ident)[0], xs)]
    nx, ny = graph.nearest_node(x)[0], graph.nearest_node(y)[0]
    path = graph.path_nodes(int(nx), int(ny))
    if len(path) >= 3:
        node = graph.node_points(path[max(1, int(len(path) * PATH_SEED_FRACTION))])
        direction = chart.difference(to_chart(M, node[None], ident)[0], xs)
        length = float(chart.norm(xs[None], direction[None])[0])
        if length > 0:
            out.append(direction * (bound / length))
    return out


def _shoot(M: ChartManifold, x: np.ndarray, targets: np.ndarray, bounds: np.ndarray,
           graph: MetricGraph) -> list[_Shot | None]:
    """Best converged shot from x to each target, or None."""
    ident = _start_chart(M, x)
    start = to_chart(M, x[None], ident)[0]
    seeds, owner = [], []
    for i, y in enumerate(targets):
        for v0 in _candidates(M, graph, x, y, ident, bounds[i]):
            seeds.append(v0)
            owner.append(i)
    seeds = np.array(seeds)
    owner = np.array(owner)
    count = len(seeds)
    start_rows = np.tile(start, (count, 1))
    charts = np.full(count, ident)
    v, residual = _newton(M, start_rows, charts, seeds, targets[owner], 4.0 * bounds[owner] + 1.0)
    lengths = speeds(M, start_rows, v, charts)
    best: list[_Shot | None] = [None] * len(targets)
    for k in range(count):
        i = owner[k]
        converged = residual[k] <= SHOOT_TOL and lengths[k] <= bounds[i] + DISTANCE_TOL
        if not converged:
            continue
        if best[i] is None or lengths[k] < best[i].length:
            best[i] = _Shot(start, ident, v[k], float(lengths[k]), float(residual[k]), True)
    return best


@dataclass(frozen=True, eq=False)
class DistanceBatch:
    """d(x, y) per target; ``graph_bound`` marks entries that hold the graph upper bound, not a refined length."""
    values: np.ndarray
    graph_bound: np.ndarray

    @property
    def refined(self) -> int:
        return int(np.count_nonzero(~self.graph_bound))


def distances_with_bounds(M: ChartManifold, x: np.ndarray, points: np.ndarray, *, strict: bool = False,
                          refine_below: float | None = None) -> DistanceBatch:
    """d(x, y) for every row y of ``points``, sharing one Dijkstra tree.

    Targets whose shooting does not converge fall back to the graph bound and are flagged in
    ``graph_bound``, or raise ConvergenceError when ``strict``. With ``refine_below``, targets
    whose graph bound exceeds it keep the bound unrefined and are flagged too.
    """
    x = M.wrap(np.asarray(x, dtype=float))
    pts = M.wrap(np.atleast_2d(np.asarray(points, dtype=float)))
    graph = metric_graph(M)
    nx = graph.nearest_node(x)
    tree, _ = graph.from_node(int(nx[0]))
    ny = graph.nearest_node(pts)
    bounds = graph.snap_length(np.broadcast_to(x, pts.shape), nx.repeat(len(pts))) + tree[ny] + graph.snap_length(pts, ny)
    out = bounds.copy()
    same = np.max(np.abs(M.difference(pts, x)), axis=1) <= SHOOT_TOL
    out[same] = 0.0
    fallback = ~same
    todo = ~same
    if refine_below is not None:
        todo &= bounds <= refine_below
    todo = np.flatnonzero(todo)
    if len(todo) == 0:
        return DistanceBatch(values=out, graph_bound=fallback)
    shots = _shoot(M, x, pts[todo], bounds[todo], graph)
    misses = 0
    for i, shot in zip(todo, shots):
        if shot is None:
            if strict:
                raise ConvergenceError(f"shooting from {x} to {pts[i]} did not converge on {M.name}",
                                       upper_bound=float(bounds[i]), residual=float("nan"))
            misses += 1
        else:
            out[i] = shot.length
            fallback[i] = False
    if misses:
        log.warning("%d of %d distances on %s fell back to the graph bound", misses, len(todo), M.name)
    return DistanceBatch(values=out, graph_bound=fallback)


def distances_from(M: ChartManifold, x: np.ndarray, points: np.ndarray, *, strict: bool = False,
                   refine_below: float | None = None) -> np.ndarray:
    """Values of ``distances_with_bounds``, for callers that do not need the fallback mask."""
    return distances_with_bounds(M, x, points, strict=strict, refine_below=refine_below).values


def distance(M: ChartManifold, x: np.ndarray, y: np.ndarray) -> float:
    """d(x, y); ConvergenceError carries the graph upper bound when shooting fails."""
    return float(distances_from(M, x, np.asarray(y, dtype=float)[None], strict=True)[0])


def geodesic(M: ChartManifold, x: np.ndarray, y: np.ndarray, samples: int = 65) -> GeodesicPath:
    """Minimizing geodesic from x to y, sampled at unit speed."""
    x = M.wrap(np.asarray(x, dtype=float))
    y = M.wrap(np.asarray(y, dtype=float))
    if np.max(np.abs(M.difference(y, x))) <= SHOOT_TOL:
        return GeodesicPath(np.stack([x] * samples), np.zeros(samples), 0.0, False, 0.0, np.zeros((samples, M.n)))
    graph = metric_graph(M)
    bound = graph.upper_bound(x[None], y[None])
    shot = _shoot(M, x, y[None], np.array([bound]), graph)[0]
    if shot is None:
        raise ConvergenceError(f"no geodesic from {x} to {y} on {M.name}", upper_bound=bound, residual=float("nan"))
    t, points, velocities = trace_geodesic(M, shot.start, shot.velocity, samples=samples, chart=shot.chart)
    return GeodesicPath(
        samples=points,
        params=t * shot.length,
        length=shot.length,
        unit_speed=True,
        endpoint_residual=shot.residual,
        velocities=velocities / shot.length,
    )


def geodesics_from(M: ChartManifold, x: np.ndarray, targets: np.ndarray, samples: int = 33) -> list[GeodesicPath | None]:
    """Minimizing geodesics from x to every row of ``targets``; None where shooting fails."""
    x = M.wrap(np.asarray(x, dtype=float))
    targets = M.wrap(np.atleast_2d(np.asarray(targets, dtype=float)))
    graph = metric_graph(M)
    nx = graph.nearest_node(x)
    tree, _ = graph.from_node(int(nx[0]))
    ny = graph.nearest_node(targets)
    bounds = graph.snap_length(x[None], nx)[0] + tree[ny] + graph.snap_length(targets, ny)
    out: list[GeodesicPath | None] = [None] * len(targets)
    same = np.max(np.abs(M.difference(targets, x)), axis=1) <= SHOOT_TOL
    for i in np.flatnonzero(same):
        out[i] = GeodesicPath(np.stack([x] * samples), np.zeros(samples), 0.0, False, 0.0, np.zeros((samples, M.n)))
    todo = np.flatnonzero(~same)
    if len(todo) == 0:
        return out
    shots = _shoot(M, x, targets[todo], bounds[todo], graph)
    hits = [(i, s) for i, s in zip(todo, shots) if s is not None]
    if len(hits) < len(todo):
        log.warning("%d of %d geodesics from %s on %s did not converge", len(todo) - len(hits), len(todo), x, M.name)
    if not hits:
        return out
    starts = np.stack([s.start for _, s in hits])
    velocities = np.stack([s.velocity for _, s in hits])
    charts = np.array([s.chart for _, s in hits])
    points, tangents = flow(M, starts, velocities, chart=charts, record=samples)
    t = np.linspace(0.0, 1.0, samples)
    for k, (i, shot) in enumerate(hits):
        out[i] = GeodesicPath(
            samples=points[:, k],
            params=t * shot.length,
            length=shot.length,
            unit_speed=True,
            endpoint_residual=shot.residual,
            velocities=tangents[:, k] / shot.length,
        )
    return out
