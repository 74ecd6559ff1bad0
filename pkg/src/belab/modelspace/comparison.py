"""Constant-curvature comparison spaces of real dimension d: profiles, mean curvature, G_r, volumes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import integrate, special

from belab.config import GREEN_ATOL, GREEN_CUTOFF_FRACTION, GREEN_RTOL, QUAD_EPSREL, QUAD_LIMIT
from belab.errors import DomainError, IntegrationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelSpace:
    """The (d, lambda) comparison space, optionally weighted by e^{C rho}."""
    d: float
    lam: float = 0.0
    weight_rate: float = 0.0

    def __post_init__(self) -> None:
        if not self.d > 1:
            raise DomainError(f"model dimension must exceed 1, got d={self.d}")
        if self.weight_rate < 0:
            raise DomainError(f"weight rate must be non-negative, got {self.weight_rate}")

    @classmethod
    def for_bound(cls, n: int, m: float, delta: float, C: float = 0.0) -> ModelSpace:
        """Model of dimension n+m and curvature -delta, the comparison space of Ric_X^m >= -(n-1) delta g."""
        return cls(d=n + m, lam=-delta, weight_rate=C)

    @property
    def sphere_area(self) -> float:
        """|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2), valid for real d."""
        return 2.0 * math.pi ** (self.d / 2.0) / special.gamma(self.d / 2.0)

    def __str__(self) -> str:
        weight = f", weight e^({self.weight_rate:g} rho)" if self.weight_rate else ""
        return f"ModelSpace(d={self.d:g}, lambda={self.lam:g}{weight})"


def _radius_array(rho) -> tuple[np.ndarray, bool]:
    arr = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError("rho must be finite")
    return arr, arr.ndim == 0


def _unwrap(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


def _check_below_antipode(model: ModelSpace, r: np.ndarray) -> None:
    if model.lam > 0 and np.any(r >= math.pi / math.sqrt(model.lam)):
        raise DomainError(
            f"rho must stay below pi/sqrt(lambda) = {math.pi / math.sqrt(model.lam):.6g} for lambda > 0"
        )


def ell(model: ModelSpace, rho):
    """Radial profile l_lambda(rho): sin, identity or sinh depending on the sign of lambda."""
    r, scalar = _radius_array(rho)
    if np.any(r < 0):
        raise DomainError("rho must be non-negative")
    _check_below_antipode(model, r)
    if model.lam > 0:
        k = math.sqrt(model.lam)
        out = np.sin(k * r) / k
    elif model.lam < 0:
        k = math.sqrt(-model.lam)
        out = np.sinh(k * r) / k
    else:
        out = r.copy()
    return _unwrap(out, scalar)


def ell_prime(model: ModelSpace, rho):
    """Derivative of the radial profile."""
    r, scalar = _radius_array(rho)
    if np.any(r < 0):
        raise DomainError("rho must be non-negative")
    _check_below_antipode(model, r)
    if model.lam > 0:
        out = np.cos(math.sqrt(model.lam) * r)
    elif model.lam < 0:
        out = np.cosh(math.sqrt(-model.lam) * r)
    else:
        out = np.ones_like(r)
    return _unwrap(out, scalar)


def log_ell(model: ModelSpace, rho):
    """log l_lambda(rho), stable for large rho when lambda < 0."""
    r, scalar = _radius_array(rho)
    if model.lam < 0:
        k = math.sqrt(-model.lam)
        with np.errstate(divide="ignore"):
            out = k * r + np.log1p(-np.exp(-2.0 * k * r)) - math.log(2.0 * k)
    else:
        with np.errstate(divide="ignore"):
            out = np.log(ell(model, r))
    return _unwrap(np.asarray(out, dtype=float), scalar)


def model_mean_curvature(model: ModelSpace, rho):
    """Mean curvature (d-1) l'/l of the geodesic sphere of radius rho in the model."""
    r, scalar = _radius_array(rho)
    if np.any(r <= 0):
        raise DomainError("mean curvature of model spheres is undefined at the pole rho = 0")
    _check_below_antipode(model, r)
    if model.lam > 0:
        k = math.sqrt(model.lam)
        out = (model.d - 1) * k / np.tan(k * r)
    elif model.lam < 0:
        k = math.sqrt(-model.lam)
        out = (model.d - 1) * k / np.tanh(k * r)
    else:
        out = (model.d - 1) / r
    return _unwrap(out, scalar)


def model_sphere_area(model: ModelSpace, rho, weighted: bool = False):
    """Model area element |S^{d-1}| w(rho) l^{d-1}(rho), with w = e^{C rho} when weighted."""
    r, scalar = _radius_array(rho)
    out = model.sphere_area * np.asarray(ell(model, r), dtype=float) ** (model.d - 1)
    if weighted:
        out = out * np.exp(model.weight_rate * r)
    return _unwrap(out, scalar)


def model_ball_volume(model: ModelSpace, r: float, weighted: bool = False) -> float:
    """|S^{d-1}| * integral_0^r w(rho) l^{d-1}(rho) d rho."""
    if model.lam > 0:
        raise DomainError("model volumes are only defined here for lambda <= 0")
    if r < 0:
        raise DomainError(f"radius must be non-negative, got {r}")
    if r == 0:
        return 0.0
    rate = model.weight_rate if weighted else 0.0

    def integrand(s: float) -> float:
        return math.exp(rate * s) * ell(model, s) ** (model.d - 1)

    value, _err = integrate.quad(integrand, 0.0, r, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return model.sphere_area * value


# ── Green barrier G_r ────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class GreenBarrier:
    """Radial solution of l^{1-d} (l^{d-1} G')' = 1 with G(r) = G'(r) = 0.

    Samples are stored on an increasing grid over [rho_min, r]; evaluation inside
    that range uses the dense ODE solution and below it the blow-up asymptotic
    G ~ c rho^{2-d} (logarithmic when d = 2) matched to the last integrated point.
    """
    model: ModelSpace
    r: float
    rho: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    rho_min: float
    _solution: object = field(repr=False)

    def _flux(self, rho: np.ndarray) -> np.ndarray:
        return self._solution(np.atleast_1d(rho).ravel())[1]

    def __call__(self, rho):
        r, scalar = _radius_array(rho)
        if np.any(r <= 0) or np.any(r > self.r * (1 + 1e-12)):
            raise DomainError(f"G_r is defined on (0, {self.r}]")
        r_in = np.clip(r, self.rho_min, self.r)
        out = self._solution(np.atleast_1d(r_in).ravel())[0].reshape(r.shape)
        below = r < self.rho_min
        if np.any(below):
            g0, dg0 = self.G[0], self.dG[0]
            d = self.model.d
            if abs(d - 2.0) < 1e-12:
                c = dg0 * self.rho_min
                out = np.where(below, g0 + c * np.log(r / self.rho_min), out)
            else:
                c = dg0 / ((2.0 - d) * self.rho_min ** (1.0 - d))
                out = np.where(below, g0 + c * (r ** (2.0 - d) - self.rho_min ** (2.0 - d)), out)
        return _unwrap(out, scalar)

    def derivative(self, rho):
        r, scalar = _radius_array(rho)
        if np.any(r < self.rho_min) or np.any(r > self.r * (1 + 1e-12)):
            raise DomainError(f"G_r' is sampled on [{self.rho_min:.3g}, {self.r}]")
        flux = self._flux(r.reshape(-1)).reshape(r.shape)
        out = flux / np.asarray(ell(self.model, r), dtype=float) ** (self.model.d - 1)
        return _unwrap(out, scalar)

    def radial_laplacian(self, rho, step: float = 1e-4):
        """Discrete model radial operator l^{1-d} d/drho (l^{d-1} G') by central differences."""
        r, scalar = _radius_array(rho)
        flux_hi = self._flux(r.reshape(-1) + step)
        flux_lo = self._flux(r.reshape(-1) - step)
        weight = np.asarray(ell(self.model, r.reshape(-1)), dtype=float) ** (1.0 - self.model.d)
        out = (weight * (flux_hi - flux_lo) / (2.0 * step)).reshape(r.shape)
        return _unwrap(out, scalar)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"rho": self.rho, "G": self.G, "dG": self.dG})


def green_barrier(model: ModelSpace, r: float, samples: int = 400) -> GreenBarrier:
    """Integrate G_r backward from rho = r to GREEN_CUTOFF_FRACTION * r."""
    if model.lam > 0:
        raise DomainError("G_r is built for lambda <= 0 only")
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")

    d = model.d
    rho_min = GREEN_CUTOFF_FRACTION * r

    # state = (G, l^{d-1} G'); the flux form keeps the system non-stiff near the pole
    def rhs(s: float, state: np.ndarray) -> np.ndarray:
        l = ell(model, s)
        return np.array([state[1] * l ** (1.0 - d), l ** (d - 1.0)])

    grid = np.geomspace(rho_min, r, samples)
    sol = integrate.solve_ivp(
        rhs,
        (r, rho_min),
        np.zeros(2),
        method="DOP853",
        t_eval=grid[::-1],
        dense_output=True,
        rtol=GREEN_RTOL,
        atol=GREEN_ATOL,
    )
    if not sol.success:
        raise IntegrationError(f"G_r integration for {model} with r={r} failed: {sol.message}")

    rho = sol.t[::-1]
    G = sol.y[0][::-1]
    flux = sol.y[1][::-1]
    dG = flux / np.asarray(ell(model, rho), dtype=float) ** (d - 1.0)
    interior = rho < r * (1 - 1e-9)
    if np.any(G[interior] <= 0) or np.any(dG[interior] >= 0):
        raise IntegrationError(f"G_r for {model}, r={r} lost its sign structure")
    log.debug("G_r for %s, r=%g: %d samples, G(rho_min)=%.6g", model, r, len(rho), G[0])
    return GreenBarrier(model=model, r=float(r), rho=rho, G=G, dG=dG, rho_min=rho_min, _solution=sol.sol)
