"""Explicit volume, generator-length, growth and first Betti number bounds."""

from __future__ import annotations

import logging
import math

from belab.config import BETTI_MAX_R
from belab.errors import DomainError
from belab.modelspace import ModelSpace, growth_function_h, model_ball_volume
from belab.modelspace.growth import log_bishop_gromov_ratio_bound

log = logging.getLogger(__name__)


def _require(**values: float) -> None:
    for name, value in values.items():
        if value < 0:
            raise DomainError(f"{name} must be non-negative, got {value}")


def volume_estimate_bound(n: int, m: float, delta: float, C: float, r: float) -> float:
    """(r+1)^m exp[sqrt(delta)(r^2+r^3) h(sqrt(delta) r) + C] times the n-dimensional model volume of B_r."""
    _require(delta=delta, C=C, r=r)
    if r == 0:
        return 0.0
    root = math.sqrt(delta)
    exponent = root * (r**2 + r**3) * growth_function_h(m, C, root * r) + C
    return (r + 1.0) ** m * math.exp(exponent) * model_ball_volume(ModelSpace(d=float(n), lam=-delta), r)


def generator_bound_N(n: int, m: float, delta: float, C: float, D: float, V: float) -> float:
    """N with max generator length >= D / N; the volume estimate at radius 2D divided by V."""
    if not V > 0:
        raise DomainError(f"V must be positive, got {V}")
    if not D > 0:
        raise DomainError(f"D must be positive, got {D}")
    return volume_estimate_bound(n, m, delta, C, 2.0 * D) / V


def polynomial_growth_bound(n: int, m: float, C: float, D: float, s: float) -> float:
    """#Gamma(s) <= (4D)^{n+m} e^{C+1} |S^{n-1}| / n * s^{n+m}."""
    _require(C=C, D=D, s=s)
    sphere = ModelSpace(d=float(n)).sphere_area
    return (4.0 * D) ** (n + m) * math.exp(C + 1.0) * sphere / n * s ** (n + m)


def betti_display_bound(n: int, m: float, C0: float, r: float) -> float:
    """5^{n+m} e^{C0+1} r^{n+m}; only meaningful for large r and small delta."""
    _require(r=r)
    return 5.0 ** (n + m) * math.exp(C0 + 1.0) * r ** (n + m)


def weighted_volume_lower_bound(V: float, C1: float, D: float) -> float:
    """e^{-C1 D} V."""
    _require(V=V, C1=C1, D=D)
    return math.exp(-C1 * D) * V


def default_C0(m: float, C: float) -> float:
    """C0 = m log 2 + C, from splitting (rho+1)^m against the weight."""
    return m * math.log(2.0) + C


def betti_candidates(n: int, m: float, delta: float, C0: float, D: float,
                     max_r: int = BETTI_MAX_R) -> dict[int, int]:
    """floor(log R(r) / log(2r+1)) for r = 1..max_r, R(r) the ratio bound between radii D/2 and 2rD + D/2."""
    if not D > 0:
        raise DomainError(f"D must be positive, got {D}")
    out = {}
    for r in range(1, max_r + 1):
        log_ratio = log_bishop_gromov_ratio_bound(n, m, delta, C0, 0.5 * D, 2.0 * r * D + 0.5 * D)
        if not math.isfinite(log_ratio):
            continue
        out[r] = math.floor(log_ratio / math.log(2 * r + 1))
    return out


def betti_bound_B(n: int, m: float, delta: float, C0: float, D: float, max_r: int = BETTI_MAX_R) -> int:
    """Largest b1 with (2r+1)^{b1} <= R(r) for every r searched; the minimum over the candidates."""
    candidates = betti_candidates(n, m, delta, C0, D, max_r)
    if not candidates:
        raise DomainError(f"the ratio bound overflowed for every r <= {max_r}")
    r_best = min(candidates, key=lambda r: (candidates[r], r))
    log.debug("betti bound %d attained at r = %d (delta %g, C0 %g, D %g)", candidates[r_best], r_best, delta, C0, D)
    return candidates[r_best]
