"""Batched geodesic flow on chart manifolds, switching to the seam chart near coordinate poles."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from belab.config import FLOW_STEP
from belab.geometry.manifold import ChartManifold
from belab.geometry.tensors import christoffel

MIN_STEPS = 32
MAX_STEPS = 1000

MAIN, ALT = 0, 1


def chart_of(M: ChartManifold, ident: int) -> ChartManifold:
    return M if ident == MAIN else M.seam.alt


def per_chart(M: ChartManifold, chart: np.ndarray, x: np.ndarray,
              fn: Callable[[ChartManifold, np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate fn row-wise, each row in the chart it currently lives in."""
    if M.seam is None or not np.any(chart == ALT):
        return fn(M, x)
    out = None
    for ident in (MAIN, ALT):
        rows = chart == ident
        if not rows.any():
            continue
        values = fn(chart_of(M, ident), x[rows])
        if out is None:
            out = np.empty((x.shape[0],) + values.shape[1:])
        out[rows] = values
    return out


def _transform(jac: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return np.einsum("bij,bj...->bi...", jac, vec)


def switch_charts(M: ChartManifold, x: np.ndarray, chart: np.ndarray,
                  vectors: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Move rows approaching a pole of their chart into the other chart.

    ``vectors`` carry tangent components along axis 1 and are pushed forward with the
    transition Jacobian.
    """
    seam = M.seam
    if seam is None:
        return x, chart, vectors
    near = seam.near_pole(x)
    moves = ((near & (chart == MAIN), seam.to_alt, seam.jac_to_alt, ALT),
             (near & (chart == ALT), seam.to_main, seam.jac_to_main, MAIN))
    if not any(rows.any() for rows, *_ in moves):
        return x, chart, vectors
    x, chart = x.copy(), chart.copy()
    vectors = [v.copy() for v in vectors]
    for rows, fmap, jac, target in moves:
        if not rows.any():
            continue
        J = jac(x[rows])
        for vec in vectors:
            vec[rows] = _transform(J, vec[rows])
        x[rows] = fmap(x[rows])
        chart[rows] = target
    return x, chart, vectors


def to_main_chart(M: ChartManifold, x: np.ndarray, chart: np.ndarray,
                  vectors: list[np.ndarray] = ()) -> tuple[np.ndarray, list[np.ndarray]]:
    """Express rows living in the seam chart in main-chart coordinates, wrapped."""
    vectors = [np.array(v, copy=True) for v in vectors]
    x = np.array(x, dtype=float, copy=True)
    rows = chart == ALT
    if M.seam is not None and rows.any():
        J = M.seam.jac_to_main(x[rows])
        for vec in vectors:
            vec[rows] = _transform(J, vec[rows])
        x[rows] = M.seam.to_main(x[rows])
    return M.wrap(x), vectors


def to_chart(M: ChartManifold, x: np.ndarray, ident: int) -> np.ndarray:
    """Main-chart points expressed in chart ``ident``."""
    if ident == MAIN or M.seam is None:
        return np.asarray(x, dtype=float)
    return M.seam.to_alt(np.asarray(x, dtype=float))


def geodesic_acceleration(M: ChartManifold, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """-Gamma^k_ij v^i v^j."""
    return -np.einsum("...kij,...i,...j->...k", christoffel(M, x), v, v)


def speeds(M: ChartManifold, x: np.ndarray, v: np.ndarray, chart: np.ndarray) -> np.ndarray:
    """|v|_g row-wise, each row in its own chart."""
    out = np.empty(len(x))
    for ident in (MAIN, ALT):
        rows = chart == ident
        if rows.any():
            out[rows] = chart_of(M, ident).norm(x[rows], v[rows])
    return out


def _rk4(M: ChartManifold, x: np.ndarray, v: np.ndarray, chart: np.ndarray, dt: float):
    def accel(pts, vel):
        out = np.empty_like(vel)
        for ident in (MAIN, ALT):
            rows = chart == ident
            if rows.any():
                out[rows] = geodesic_acceleration(chart_of(M, ident), pts[rows], vel[rows])
        return out

    k1x, k1v = v, accel(x, v)
    k2x, k2v = v + 0.5 * dt * k1v, accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
    k3x, k3v = v + 0.5 * dt * k2v, accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
    k4x, k4v = v + dt * k3v, accel(x + dt * k3x, v + dt * k3v)
    x_new = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x_new, v_new


def flow(M: ChartManifold, x: np.ndarray, v: np.ndarray, *, chart: np.ndarray | None = None,
         steps: int | None = None, record: int | None = None):
    """Integrate gamma'' = -Gamma(gamma', gamma') over t in [0, 1] from (x, v), rows batched.

    Returns (points, velocities) in main-chart coordinates: the endpoints, or, when
    ``record`` is given, arrays of shape (record, B, n) at equally spaced t.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float)).copy()
    v = np.atleast_2d(np.asarray(v, dtype=float)).copy()
    chart = np.zeros(len(x), dtype=int) if chart is None else np.asarray(chart, dtype=int).copy()
    if steps is None:
        longest = float(np.max(speeds(M, x, v, chart), initial=0.0))
        steps = int(np.clip(math.ceil(longest / FLOW_STEP), MIN_STEPS, MAX_STEPS))
    if record is not None:
        steps = max(steps, record - 1)
        steps = int(math.ceil(steps / (record - 1)) * (record - 1))
        every = steps // (record - 1)
        path_x = np.empty((record,) + x.shape)
        path_v = np.empty((record,) + v.shape)
        path_x[0], (path_v[0],) = to_main_chart(M, x, chart, [v])

    if M.flat_connection and M.seam is None:
        if record is None:
            return M.wrap(x + v), v
        ts = np.linspace(0.0, 1.0, record)
        return M.wrap(x[None] + ts[:, None, None] * v[None]), np.broadcast_to(v, (record,) + v.shape).copy()

    dt = 1.0 / steps
    for k in range(1, steps + 1):
        x, chart, (v,) = switch_charts(M, x, chart, [v])
        x, v = _rk4(M, x, v, chart, dt)
        if record is not None and k % every == 0:
            path_x[k // every], (path_v[k // every],) = to_main_chart(M, x, chart, [v])
    if record is not None:
        return path_x, path_v
    end_x, (end_v,) = to_main_chart(M, x, chart, [v])
    return end_x, end_v


def exp_map(M: ChartManifold, x: np.ndarray, v: np.ndarray, chart: np.ndarray | None = None) -> np.ndarray:
    """exp_x(v) in main-chart coordinates; x and v may live in the seam chart when ``chart`` says so."""
    endpoints, _ = flow(M, x, v, chart=chart)
    return endpoints


def trace_geodesic(M: ChartManifold, x: np.ndarray, v: np.ndarray, samples: int = 65,
                   chart: int = MAIN) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample the geodesic t -> exp_x(t v), t in [0, 1]; returns (t, points, velocities)."""
    x = np.asarray(x, dtype=float)[None]
    v = np.asarray(v, dtype=float)[None]
    points, velocities = flow(M, x, v, chart=np.array([chart]), record=samples)
    return np.linspace(0.0, 1.0, samples), points[:, 0], velocities[:, 0]
