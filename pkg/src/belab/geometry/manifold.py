"""Chart manifolds (M, g, X): a coordinate box, a metric and a 1-form, with metric jets."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from belab.config import FD_STEP_FRACTION, PERIODIC_FACE_TOL, SEAM_SWITCH
from belab.errors import SingularMetricError

log = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

DERIVATIVE_MODES = ("closed-form", "finite-difference")


def lambdify_array(coords: Sequence[sp.Symbol], exprs, shape: tuple[int, ...]) -> ArrayFn:
    """Vectorized numeric evaluation of a nested list of sympy expressions.

    The returned callable maps points of shape (..., n) to values of shape (..., *shape);
    constant entries are broadcast over the batch.
    """
    flat = list(sp.Array(exprs).reshape(int(np.prod(shape))) if shape else [exprs])
    fn = sp.lambdify(list(coords), flat, modules="numpy")
    n = len(coords)

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        batch = pts.shape[:-1]
        values = fn(*(pts[..., k] for k in range(n)))
        out = np.empty(batch + (len(flat),))
        for i, value in enumerate(values):
            out[..., i] = value
        return out.reshape(batch + shape)

    return evaluate


@dataclass(frozen=True, eq=False)
class ChartSeam:
    """A second chart covering the poles of a spherical coordinate pair.

    Rays are moved to ``alt`` once they come within ``switch`` of a pole of the main
    chart, and back once they approach a pole of ``alt``.
    """
    alt: ChartManifold
    to_alt: ArrayFn
    to_main: ArrayFn
    jac_to_alt: ArrayFn
    jac_to_main: ArrayFn
    pole_axis: int
    switch: float = SEAM_SWITCH

    def near_pole(self, points: np.ndarray) -> np.ndarray:
        angle = np.asarray(points, dtype=float)[..., self.pole_axis]
        return np.minimum(angle, np.pi - angle) < self.switch


@dataclass(frozen=True, eq=False)
class ChartManifold:
    """An explicit Riemannian metric on a coordinate box with a smooth covector field X.

    Metric jets (g, dg, ddg) with ``dg[..., k, i, j] = d_k g_ij`` come either from the
    closed-form callables or from central differences of ``metric_fn`` with step
    ``fd_step`` per axis (optionally Richardson-extrapolated).
    """
    name: str
    n: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: tuple[bool, ...]
    metric_fn: ArrayFn
    X_fn: ArrayFn
    metric_d1: ArrayFn | None = None
    metric_d2: ArrayFn | None = None
    X_jac_fn: ArrayFn | None = None
    derivative_mode: str = "closed-form"
    fd_step: tuple[float, ...] | None = None
    richardson: bool = False
    sample_lower: tuple[float, ...] | None = None
    sample_upper: tuple[float, ...] | None = None
    flat_connection: bool = False
    seam: ChartSeam | None = None
    ricci_exact: ArrayFn | None = None
    compact: bool = False
    coordinate_names: tuple[str, ...] = ()
    parameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"chart manifolds need n >= 2, got {self.n}")
        for name in ("lower", "upper", "periodic"):
            if len(getattr(self, name)) != self.n:
                raise ValueError(f"{name} must have {self.n} entries")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("chart box must have upper > lower on every axis")
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise ValueError(f"derivative_mode must be one of {DERIVATIVE_MODES}")
        if self.derivative_mode == "closed-form" and self.metric_d1 is None:
            raise ValueError("closed-form derivative mode needs metric derivative callables")

    def __str__(self) -> str:
        return f"{self.name} (n={self.n}, {self.derivative_mode})"

    # ── Box geometry ─────────────────────────────────────────────────────────
    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float) - np.asarray(self.lower, dtype=float)

    @property
    def periodic_mask(self) -> np.ndarray:
        return np.asarray(self.periodic, dtype=bool)

    @property
    def sampling_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.sample_lower if self.sample_lower is not None else self.lower, dtype=float)
        hi = np.asarray(self.sample_upper if self.sample_upper is not None else self.upper, dtype=float)
        return lo, hi

    @property
    def step(self) -> np.ndarray:
        if self.fd_step is not None:
            return np.asarray(self.fd_step, dtype=float)
        return FD_STEP_FRACTION * self.extent

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Map periodic coordinates into [lower, upper)."""
        pts = np.array(points, dtype=float, copy=True)
        lo = np.asarray(self.lower, dtype=float)
        span = self.extent
        for k in np.flatnonzero(self.periodic_mask):
            pts[..., k] = lo[k] + np.mod(pts[..., k] - lo[k], span[k])
        return pts

    def difference(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """a - b with periodic axes reduced to the shortest representative."""
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        span = self.extent
        for k in np.flatnonzero(self.periodic_mask):
            diff[..., k] = diff[..., k] - span[k] * np.round(diff[..., k] / span[k])
        return diff

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        inside = (pts >= lo) & (pts <= hi)
        inside |= self.periodic_mask
        return np.all(inside, axis=-1)

    def grid(self, per_axis: int | Sequence[int]) -> np.ndarray:
        """Tensor sample grid over the sampling box, shape (N, n)."""
        counts = [per_axis] * self.n if isinstance(per_axis, int) else list(per_axis)
        lo, hi = self.sampling_box
        axes = []
        for k, count in enumerate(counts):
            if self.periodic[k]:
                axes.append(np.linspace(lo[k], hi[k], count, endpoint=False))
            else:
                axes.append(np.linspace(lo[k], hi[k], count))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo, hi = self.sampling_box
        return lo + (hi - lo) * rng.random((count, self.n))

    # ── Fields ───────────────────────────────────────────────────────────────
    def metric(self, points: np.ndarray) -> np.ndarray:
        return self.metric_fn(np.asarray(points, dtype=float))

    def X(self, points: np.ndarray) -> np.ndarray:
        return self.X_fn(np.asarray(points, dtype=float))

    def inverse_metric(self, points: np.ndarray) -> np.ndarray:
        g = self.metric(points)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise SingularMetricError(f"metric of {self.name} is not positive definite at a sample point") from exc
        return np.linalg.inv(g)

    def volume_density(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.metric(points)))

    def norm(self, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        g = self.metric(points)
        return np.sqrt(np.einsum("...i,...ij,...j->...", vectors, g, vectors))

    def raise_index(self, points: np.ndarray, covectors: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.inverse_metric(points), covectors)

    def X_sharp(self, points: np.ndarray) -> np.ndarray:
        return self.raise_index(points, self.X(points))

    def X_norm(self, points: np.ndarray) -> np.ndarray:
        X = self.X(points)
        return np.sqrt(np.einsum("...i,...ij,...j->...", X, self.inverse_metric(points), X))

    # ── Jets ─────────────────────────────────────────────────────────────────
    def _central(self, fn: ArrayFn, points: np.ndarray, h: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        parts = []
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = h[k]
            parts.append((fn(pts + e) - fn(pts - e)) / (2.0 * h[k]))
        return np.stack(parts, axis=pts.ndim - 1)

    def _second(self, fn: ArrayFn, points: np.ndarray, h: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        centre = fn(pts)
        out = np.empty(pts.shape[:-1] + (self.n, self.n) + centre.shape[pts.ndim - 1:])
        for k in range(self.n):
            ek = np.zeros(self.n)
            ek[k] = h[k]
            out[..., k, k, :, :] = (fn(pts + ek) - 2.0 * centre + fn(pts - ek)) / h[k] ** 2
            for l in range(k + 1, self.n):
                el = np.zeros(self.n)
                el[l] = h[l]
                mixed = (
                    fn(pts + ek + el) - fn(pts + ek - el) - fn(pts - ek + el) + fn(pts - ek - el)
                ) / (4.0 * h[k] * h[l])
                out[..., k, l, :, :] = mixed
                out[..., l, k, :, :] = mixed
        return out

    def _extrapolated(self, op, fn: ArrayFn, points: np.ndarray) -> np.ndarray:
        h = self.step
        coarse = op(fn, points, h)
        if not self.richardson:
            return coarse
        fine = op(fn, points, h / 2.0)
        return (4.0 * fine - coarse) / 3.0

    def metric_jets(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(g, dg, ddg) with dg[..., k, i, j] = d_k g_ij and ddg[..., k, l, i, j] = d_k d_l g_ij."""
        pts = np.asarray(points, dtype=float)
        g = self.metric_fn(pts)
        if self.derivative_mode == "closed-form":
            return g, self.metric_d1(pts), self.metric_d2(pts)
        return g, self._extrapolated(self._central, self.metric_fn, pts), self._extrapolated(
            self._second, self.metric_fn, pts
        )

    def X_jacobian(self, points: np.ndarray) -> np.ndarray:
        """dX[..., i, j] = d_i X_j."""
        pts = np.asarray(points, dtype=float)
        if self.derivative_mode == "closed-form" and self.X_jac_fn is not None:
            return self.X_jac_fn(pts)
        return self._extrapolated(self._central, self.X_fn, pts)

    # ── Variants ─────────────────────────────────────────────────────────────
    def with_derivatives(self, mode: str, step: Sequence[float] | float | None = None, richardson: bool = False):
        """Copy of this manifold evaluated in another derivative mode."""
        if step is not None and np.isscalar(step):
            step = tuple(float(step) for _ in range(self.n))
        return replace(self, derivative_mode=mode, fd_step=tuple(step) if step is not None else None,
                       richardson=richardson)

    def scaled_drift(self, factor: float) -> ChartManifold:
        """Copy with X replaced by factor * X, on the seam chart as well."""
        X_fn, X_jac_fn = self.X_fn, self.X_jac_fn
        seam = self.seam
        if seam is not None:
            seam = replace(seam, alt=seam.alt.scaled_drift(factor))
        return replace(
            self,
            X_fn=lambda points: factor * X_fn(points),
            X_jac_fn=None if X_jac_fn is None else (lambda points: factor * X_jac_fn(points)),
            seam=seam,
        )

    def validate(self, per_axis: int = 5) -> None:
        """Check positive definiteness on a grid and agreement at identified faces."""
        pts = self.grid(per_axis)
        g = self.metric(pts)
        if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-12):
            raise SingularMetricError(f"metric of {self.name} is not symmetric")
        eig = np.linalg.eigvalsh(g)
        if np.any(eig <= 0):
            raise SingularMetricError(f"metric of {self.name} has min eigenvalue {eig.min():.3g} <= 0")
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        for k in np.flatnonzero(self.periodic_mask):
            a = pts.copy()
            b = pts.copy()
            a[:, k] = lo[k]
            b[:, k] = hi[k]
            gap = max(np.max(np.abs(self.metric(a) - self.metric(b))), np.max(np.abs(self.X(a) - self.X(b))))
            if gap > PERIODIC_FACE_TOL * max(1.0, float(np.max(np.abs(g)))):
                raise SingularMetricError(
                    f"{self.name}: metric or X differs across the periodic faces of axis {k} by {gap:.3g}"
                )


def compile_chart(
    name: str,
    coords: Sequence[sp.Symbol],
    metric: sp.Matrix,
    X: Sequence[sp.Expr],
    lower: Sequence[float],
    upper: Sequence[float],
    periodic: Sequence[bool],
    *,
    sample_lower: Sequence[float] | None = None,
    sample_upper: Sequence[float] | None = None,
    derivative_mode: str = "closed-form",
    fd_step: Sequence[float] | None = None,
    seam: ChartSeam | None = None,
    ricci_exact: ArrayFn | None = None,
    compact: bool = False,
    parameters: dict | None = None,
) -> ChartManifold:
    """Build a ChartManifold from sympy expressions, differentiating them symbolically."""
    n = len(coords)
    metric = sp.Matrix(metric)
    if metric.shape != (n, n):
        raise ValueError(f"metric must be {n}x{n}, got {metric.shape}")
    if metric != metric.T:
        raise SingularMetricError(f"metric of {name} is not symmetric")
    X = [sp.sympify(e) for e in X]
    if len(X) != n:
        raise ValueError(f"X must have {n} components, got {len(X)}")

    d1 = [[[sp.diff(metric[i, j], coords[k]) for j in range(n)] for i in range(n)] for k in range(n)]
    d2 = [
        [[[sp.diff(d1[l][i][j], coords[k]) for j in range(n)] for i in range(n)] for l in range(n)]
        for k in range(n)
    ]
    dX = [[sp.diff(X[j], coords[i]) for j in range(n)] for i in range(n)]
    flat = all(sp.simplify(e) == 0 for plane in d1 for row in plane for e in row)

    manifold = ChartManifold(
        name=name,
        n=n,
        lower=tuple(float(v) for v in lower),
        upper=tuple(float(v) for v in upper),
        periodic=tuple(bool(v) for v in periodic),
        metric_fn=lambdify_array(coords, metric.tolist(), (n, n)),
        X_fn=lambdify_array(coords, X, (n,)),
        metric_d1=lambdify_array(coords, d1, (n, n, n)),
        metric_d2=lambdify_array(coords, d2, (n, n, n, n)),
        X_jac_fn=lambdify_array(coords, dX, (n, n)),
        derivative_mode=derivative_mode,
        fd_step=tuple(fd_step) if fd_step is not None else None,
        sample_lower=tuple(sample_lower) if sample_lower is not None else None,
        sample_upper=tuple(sample_upper) if sample_upper is not None else None,
        flat_connection=flat,
        seam=seam,
        ricci_exact=ricci_exact,
        compact=compact,
        coordinate_names=tuple(str(c) for c in coords),
        parameters=dict(parameters or {}),
    )
    log.debug("compiled chart %s (flat connection: %s)", name, flat)
    return manifold
