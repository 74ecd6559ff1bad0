"""Named catalog manifolds built from closed-form sympy expressions."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from belab.config import CATALOG_NAMES, POLAR_CAP
from belab.errors import ConfigError
from belab.geometry.manifold import ChartManifold, ChartSeam, compile_chart, lambdify_array

TWO_PI = 2.0 * math.pi


def _zero_ricci(n: int) -> Callable[[np.ndarray], np.ndarray]:
    def ricci(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.zeros(pts.shape[:-1] + (n, n))

    return ricci


def flat_torus(n: int = 2, X: Sequence[float] | None = None, period: float = TWO_PI) -> ChartManifold:
    """[0, period)^n with the Euclidean metric and a constant covector X."""
    coords = sp.symbols(f"x0:{n}", real=True)
    X = tuple(X) if X is not None else (0.0,) * n
    return compile_chart(
        "flat-torus",
        coords,
        sp.eye(n),
        [sp.Float(c) for c in X],
        lower=(0.0,) * n,
        upper=(period,) * n,
        periodic=(True,) * n,
        ricci_exact=_zero_ricci(n),
        compact=True,
        parameters={"n": n, "X": list(X), "period": period},
    )


def flat_torus_with_field(expressions: Sequence[str], n: int = 2, period: float = TWO_PI,
                          name: str = "flat-torus") -> ChartManifold:
    """Flat torus carrying a non-constant periodic X given as expressions in x0..x{n-1}."""
    coords = sp.symbols(f"x0:{n}", real=True)
    local = {str(c): c for c in coords}
    X = [sp.sympify(e, locals=local) for e in expressions]
    return compile_chart(
        name,
        coords,
        sp.eye(n),
        X,
        lower=(0.0,) * n,
        upper=(period,) * n,
        periodic=(True,) * n,
        ricci_exact=_zero_ricci(n),
        compact=True,
        parameters={"n": n, "X": [str(e) for e in expressions], "period": period},
    )


def _rotated_sphere_maps(coords: Sequence[sp.Symbol], theta: int, phi: int):
    """Transition expressions between spherical coordinates and their copy rotated a quarter turn.

    The rotation sends the main chart's poles to the equator of the alternate chart.
    """
    th, ph = coords[theta], coords[phi]
    to_alt = list(coords)
    to_alt[theta] = sp.acos(-sp.sin(th) * sp.cos(ph))
    to_alt[phi] = sp.atan2(sp.sin(th) * sp.sin(ph), sp.cos(th))
    to_main = list(coords)
    to_main[theta] = sp.acos(sp.sin(th) * sp.cos(ph))
    to_main[phi] = sp.atan2(sp.sin(th) * sp.sin(ph), -sp.cos(th))
    return to_alt, to_main


def _seam(coords, theta: int, phi: int, metric: sp.Matrix, X: list, lower, upper, periodic,
          name: str) -> ChartSeam:
    n = len(coords)
    to_alt, to_main = _rotated_sphere_maps(coords, theta, phi)
    # X pulled back to the alternate chart: X_alt_a = sum_i X_i(to_main(y)) d to_main^i / d y^a
    jac_main = sp.Matrix(to_main).jacobian(sp.Matrix(coords))
    subs = dict(zip(coords, to_main))
    X_at = [sp.sympify(e).subs(subs, simultaneous=True) for e in X]
    X_alt = [sum(X_at[i] * jac_main[i, a] for i in range(n)) for a in range(n)]
    alt = compile_chart(
        f"{name}[alt]",
        coords,
        metric,
        X_alt,
        lower=lower,
        upper=upper,
        periodic=periodic,
    )
    jac_alt = sp.Matrix(to_alt).jacobian(sp.Matrix(coords))
    wrap_axis = phi

    def wrapped(fn):
        def evaluate(points: np.ndarray) -> np.ndarray:
            out = fn(points)
            out[..., wrap_axis] = np.mod(out[..., wrap_axis], TWO_PI)
            return out

        return evaluate

    return ChartSeam(
        alt=alt,
        to_alt=wrapped(lambdify_array(coords, to_alt, (n,))),
        to_main=wrapped(lambdify_array(coords, to_main, (n,))),
        jac_to_alt=lambdify_array(coords, jac_alt.tolist(), (n, n)),
        jac_to_main=lambdify_array(coords, jac_main.tolist(), (n, n)),
        pole_axis=theta,
    )


def round_sphere(radius: float = 1.0, rotation: float = 0.0) -> ChartManifold:
    """Round S^2 of the given radius in (theta, phi); X = rotation * (d/dphi)^flat, a Killing field."""
    theta, phi = sp.symbols("theta phi", real=True)
    R = sp.Float(radius)
    metric = sp.diag(R**2, R**2 * sp.sin(theta) ** 2)
    X = [sp.Integer(0), sp.Float(rotation) * R**2 * sp.sin(theta) ** 2]
    lower, upper, periodic = (0.0, 0.0), (math.pi, TWO_PI), (False, True)
    seam = _seam((theta, phi), 0, 1, metric, X, lower, upper, periodic, "round-sphere")

    def ricci_exact(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.sin(pts[..., 0]) ** 2
        return out

    return compile_chart(
        "round-sphere",
        (theta, phi),
        metric,
        X,
        lower=lower,
        upper=upper,
        periodic=periodic,
        sample_lower=(POLAR_CAP, 0.0),
        sample_upper=(math.pi - POLAR_CAP, TWO_PI),
        seam=seam,
        ricci_exact=ricci_exact,
        compact=True,
        parameters={"radius": radius, "rotation": rotation},
    )


def cylinder(radius: float = 1.0, half_length: float = 12.0, X: Sequence[float] = (0.0, 0.0)) -> ChartManifold:
    """R x S^1(radius) in (x, theta) with a constant covector X."""
    x, theta = sp.symbols("x theta", real=True)
    metric = sp.diag(1, sp.Float(radius) ** 2)
    return compile_chart(
        "cylinder",
        (x, theta),
        metric,
        [sp.Float(c) for c in X],
        lower=(-half_length, 0.0),
        upper=(half_length, TWO_PI),
        periodic=(False, True),
        ricci_exact=_zero_ricci(2),
        parameters={"radius": radius, "half_length": half_length, "X": list(X)},
    )


def perturbed_cylinder(amplitude: float = 0.01, wavenumber: float = 1.0, half_length: float = 12.0) -> ChartManifold:
    """Warped cylinder dx^2 + (1 + a sin(k x))^2 dtheta^2.

    Gauss curvature is a k^2 sin(kx) / (1 + a sin(kx)), so Ric >= -delta g with
    delta = a k^2 / (1 - a).
    """
    if not 0 <= amplitude < 1:
        raise ValueError(f"amplitude must lie in [0, 1), got {amplitude}")
    x, theta = sp.symbols("x theta", real=True)
    a, k = sp.Float(amplitude), sp.Float(wavenumber)
    warp = 1 + a * sp.sin(k * x)
    metric = sp.diag(1, warp**2)

    def ricci_exact(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        s = np.sin(wavenumber * pts[..., 0])
        f = 1.0 + amplitude * s
        K = amplitude * wavenumber**2 * s / f
        out = np.zeros(pts.shape[:-1] + (2, 2))
        out[..., 0, 0] = K
        out[..., 1, 1] = K * f**2
        return out

    return compile_chart(
        "perturbed-cylinder",
        (x, theta),
        metric,
        [0, 0],
        lower=(-half_length, 0.0),
        upper=(half_length, TWO_PI),
        periodic=(False, True),
        ricci_exact=ricci_exact,
        parameters={
            "amplitude": amplitude,
            "wavenumber": wavenumber,
            "half_length": half_length,
            "delta": amplitude * wavenumber**2 / (1.0 - amplitude),
        },
    )


def s1xs2(circle_radius: float = 1.0, circle_field: float = 0.0) -> ChartManifold:
    """S^1(circle_radius) x unit S^2 in (t, theta, phi) with X = circle_field * dt."""
    t, theta, phi = sp.symbols("t theta phi", real=True)
    Rc = sp.Float(circle_radius)
    metric = sp.diag(Rc**2, 1, sp.sin(theta) ** 2)
    X = [sp.Float(circle_field), sp.Integer(0), sp.Integer(0)]
    period_t = TWO_PI
    lower, upper, periodic = (0.0, 0.0, 0.0), (period_t, math.pi, TWO_PI), (True, False, True)
    seam = _seam((t, theta, phi), 1, 2, metric, X, lower, upper, periodic, "s1xs2")

    def ricci_exact(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1] + (3, 3))
        out[..., 1, 1] = 1.0
        out[..., 2, 2] = np.sin(pts[..., 1]) ** 2
        return out

    return compile_chart(
        "s1xs2",
        (t, theta, phi),
        metric,
        X,
        lower=lower,
        upper=upper,
        periodic=periodic,
        sample_lower=(0.0, POLAR_CAP, 0.0),
        sample_upper=(period_t, math.pi - POLAR_CAP, TWO_PI),
        seam=seam,
        ricci_exact=ricci_exact,
        compact=True,
        parameters={"circle_radius": circle_radius, "circle_field": circle_field},
    )


def warped_product(half_length: float = 3.0, X: Sequence[float] = (0.0, 0.0)) -> ChartManifold:
    """ds^2 + cosh(s)^2 dtheta^2 on R x S^1, constant curvature -1."""
    s, theta = sp.symbols("s theta", real=True)
    metric = sp.diag(1, sp.cosh(s) ** 2)

    def ricci_exact(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1] + (2, 2))
        out[..., 0, 0] = -1.0
        out[..., 1, 1] = -np.cosh(pts[..., 0]) ** 2
        return out

    return compile_chart(
        "warped-product",
        (s, theta),
        metric,
        [sp.Float(c) for c in X],
        lower=(-half_length, 0.0),
        upper=(half_length, TWO_PI),
        periodic=(False, True),
        ricci_exact=ricci_exact,
        parameters={"half_length": half_length, "X": list(X)},
    )


_BUILDERS: dict[str, Callable[..., ChartManifold]] = {
    "flat-torus": flat_torus,
    "round-sphere": round_sphere,
    "cylinder": cylinder,
    "s1xs2": s1xs2,
    "warped-product": warped_product,
    "perturbed-cylinder": perturbed_cylinder,
}


def catalog_manifold(name: str, **params) -> ChartManifold:
    """Look up a catalog manifold by name, passing builder keyword parameters."""
    if name not in _BUILDERS:
        raise ConfigError(f"unknown catalog manifold '{name}'; choose from {', '.join(CATALOG_NAMES)}", key="manifold")
    try:
        return _BUILDERS[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for '{name}': {exc}", key="manifold") from exc
