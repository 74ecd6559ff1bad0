"""Analytic growth function h and the weighted Bishop-Gromov ratio bound."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from belab.config import HBAR_SERIES_CUTOFF, QUAD_EPSREL, QUAD_LIMIT
from belab.errors import DomainError
from belab.modelspace.comparison import ModelSpace, log_ell


def hbar(t):
    """3 (sinh^2 t - t^2) / (t^2 sinh^2 t), extended by hbar(0) = 1."""
    arr = np.abs(np.asarray(t, dtype=float))
    small = arr < HBAR_SERIES_CUTOFF
    safe = np.where(small, 1.0, arr)
    with np.errstate(over="ignore"):
        # 3 (1/t^2 - 1/sinh^2 t); 1/sinh^2 underflows cleanly to 0 for large t
        far = 3.0 * (1.0 / safe**2 - 1.0 / np.sinh(safe) ** 2)
    s = arr * arr
    near = 1.0 - s / 5.0 + 2.0 * s * s / 63.0
    out = np.where(small, near, far)
    return float(out) if out.ndim == 0 else out


def _hbar_integral(x: float) -> float:
    if x <= 0:
        return 0.0
    value, _err = integrate.quad(hbar, 0.0, x, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return value


def growth_function_h(m: float, C: float, x: float) -> float:
    """h(x) = max{C/3, C^2/(9m)} * integral_0^x hbar."""
    if m <= 0:
        raise DomainError(f"m must be positive, got {m}")
    if C < 0:
        raise DomainError(f"C must be non-negative, got {C}")
    if x < 0:
        raise DomainError(f"x must be non-negative, got {x}")
    scale = max(C / 3.0, C * C / (9.0 * m))
    if scale == 0.0 or x == 0.0:
        return 0.0
    return scale * _hbar_integral(x)


def default_weight_rate(m: float, C0: float) -> float:
    """Invert the C0 = m log 2 + C convention, clamping at 0."""
    return max(0.0, C0 - m * math.log(2.0))


def _log_weighted_integral(n: int, m: float, delta: float, c: float, C: float, r: float) -> float:
    """log of integral_0^r (rho+1)^m exp(sqrt(delta)(rho^2+rho^3) h(sqrt(delta) rho) + c) l^{n-1} d rho."""
    model = ModelSpace(d=max(float(n), 1.0 + 1e-12), lam=-delta)
    root = math.sqrt(delta)

    def log_integrand(rho: float) -> float:
        value = m * math.log1p(rho) + c
        if root > 0:
            value += root * (rho**2 + rho**3) * growth_function_h(m, C, root * rho)
        if n > 1:
            value += (n - 1) * log_ell(model, rho)
        return value

    peak = log_integrand(r)

    def scaled(rho: float) -> float:
        if rho <= 0 and n > 1:
            return 0.0
        return math.exp(log_integrand(rho) - peak)

    value, _err = integrate.quad(scaled, 0.0, r, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return peak + math.log(value)


def log_bishop_gromov_ratio_bound(
    n: int, m: float, delta: float, C0: float, r1: float, r2: float, *, C: float | None = None
) -> float:
    """Natural log of the ratio returned by :func:`bishop_gromov_ratio_bound`."""
    if not 0 < r1 < r2:
        raise DomainError(f"need 0 < r1 < r2, got r1={r1}, r2={r2}")
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    rate = default_weight_rate(m, C0) if C is None else C
    top = _log_weighted_integral(n, m, delta, C0, rate, r2)
    bottom = _log_weighted_integral(n, m, delta, 0.0, rate, r1)
    return top - bottom


def bishop_gromov_ratio_bound(
    n: int, m: float, delta: float, C0: float, r1: float, r2: float, *, C: float | None = None
) -> float:
    """Right-hand side of the weighted Bishop-Gromov variant.

    Args:
        n: manifold dimension.
        m: the Bakry-Emery parameter (m > 0).
        delta: curvature bound parameter, lambda = -delta.
        C0: additive constant in the numerator exponent.
        r1, r2: radii with 0 < r1 < r2.
        C: weight rate entering h; defaults to max(0, C0 - m log 2).

    Returns:
        The ratio, ``inf`` when it overflows double precision.
    """
    value = log_bishop_gromov_ratio_bound(n, m, delta, C0, r1, r2, C=C)
    return math.exp(value) if value < 709.0 else math.inf
